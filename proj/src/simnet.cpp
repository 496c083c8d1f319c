#include "r2p2/simnet.hpp"

#include <cmath>
#include <ostream>

namespace r2p2 {

using nlohmann::json;

struct Simulator::NodeSlot
{
  std::unique_ptr<Forwarder> fwd;
  std::unique_ptr<ConsumerApp> app;
};

struct Simulator::Event
{
  enum class Kind { Arrival, Tick, Timer, Action };

  SimTime t{};
  std::uint64_t seq = 0;
  Kind kind = Kind::Tick;
  std::size_t node = 0;
  std::size_t from = 0;
  std::size_t link = 0;
  std::uint64_t token = 0; ///< packet id, timer token or schedule index
  std::shared_ptr<const Bytes> bytes;
};

bool
Simulator::EventOrder::operator()(const Event& x, const Event& y) const
{
  // min-heap on (t, seq)
  if (x.t != y.t)
    return x.t > y.t;
  return x.seq > y.seq;
}

Simulator::Simulator(Scenario scenario, SimOptions options)
  : sc_(std::move(scenario))
  , opts_(options)
  , seed_(options.seed.value_or(sc_.seed))
  , rng_(seed_)
{
  const auto& d = sc_.defaults;
  for (const auto& c : sc_.content)
    catalog_.emplace(c.prefix, c);

  for (const auto& n : sc_.nodes) {
    auto key = crypto::derive_keypair(seed_, n.addr);
    directory_.emplace(n.addr, key.public_key);
    ledger_.create_account(n.addr, key.public_key, d.account_balance);
    keys_.emplace(n.addr, key);
    initial_balance_[n.id] = d.account_balance;
  }
  initial_supply_ = ledger_.total_supply();

  NetworkServices svc;
  svc.ledger = &ledger_;
  svc.keys = &keys_;
  svc.directory = &directory_;
  svc.catalog = &catalog_;
  svc.payment_mode = d.payment_mode;
  svc.channel_deposit = d.channel_deposit;

  ForwarderConfig fcfg;
  fcfg.tables.window_capacity = d.window_capacity;
  fcfg.tables.keepalive.period = ms(d.keepalive_period_ms);
  fcfg.tables.keepalive.timeout = ms(d.keepalive_timeout_ms);
  fcfg.tables.cs_capacity_bytes = d.cs_capacity_bytes;
  fcfg.pof_mode = d.pof_mode;
  fcfg.interest_lifetime_ms = d.interest_lifetime_ms;

  ConsumerConfig ccfg;
  ccfg.discovery_wait = ms(3 * d.keepalive_period_ms);
  ccfg.nack_backoff = ms(d.keepalive_period_ms);

  for (std::size_t i = 0; i < sc_.nodes.size(); ++i) {
    fcfg.rng_seed = seed_ * 0x9e3779b97f4a7c15ULL + i;
    auto slot = std::make_unique<NodeSlot>();
    slot->fwd = std::make_unique<Forwarder>(sc_.nodes[i], fcfg, svc);
    slot->app = std::make_unique<ConsumerApp>(*slot->fwd, ccfg);
    slot->fwd->set_app(slot->app.get());
    by_addr_.emplace(sc_.nodes[i].addr, i);
    nodes_.push_back(std::move(slot));
  }

  adjacency_.resize(nodes_.size());
  for (const auto& l : sc_.links) {
    LinkState ls;
    ls.a = index_of(l.a);
    ls.b = index_of(l.b);
    ls.up = l.up;
    adjacency_[ls.a].push_back(links_.size());
    adjacency_[ls.b].push_back(links_.size());
    links_.push_back(ls);
  }
}

Simulator::~Simulator() = default;

std::size_t
Simulator::index_of(const std::string& id) const
{
  for (std::size_t i = 0; i < sc_.nodes.size(); ++i)
    if (sc_.nodes[i].id == id)
      return i;
  throw ScenarioError("unknown node '" + id + "'");
}

Forwarder&
Simulator::node(const std::string& id)
{
  return *nodes_.at(index_of(id))->fwd;
}

ConsumerApp&
Simulator::app(const std::string& id)
{
  return *nodes_.at(index_of(id))->app;
}

const std::string&
Simulator::id_of(const NodeAddr& addr) const
{
  auto it = by_addr_.find(addr);
  if (it == by_addr_.end())
    throw InvalidArgument("no node with address " + addr.to_string());
  return sc_.nodes[it->second].id;
}

Tokens
Simulator::initial_balance(const std::string& id) const
{
  return initial_balance_.at(id);
}

json
Simulator::route_ids(const std::vector<NodeAddr>& route) const
{
  json out = json::array();
  for (const auto& a : route) {
    auto it = by_addr_.find(a);
    out.push_back(it == by_addr_.end() ? a.to_string() : sc_.nodes[it->second].id);
  }
  return out;
}

void
Simulator::schedule(Event ev)
{
  ev.seq = next_seq_++;
  queue_.push(std::move(ev));
}

void
Simulator::record(json ev)
{
  trace_.push_back(std::move(ev));
}

void
Simulator::run()
{
  if (ran_)
    throw std::logic_error("simulator already ran");
  ran_ = true;

  const auto period = ms(sc_.defaults.keepalive_period_ms);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Event ev;
    ev.kind = Event::Kind::Tick;
    ev.node = i;
    ev.t = SimTime(period.count() * static_cast<std::int64_t>(i + 1) / static_cast<std::int64_t>(nodes_.size() + 1));
    schedule(ev);
  }
  for (std::size_t i = 0; i < sc_.schedule.size(); ++i) {
    Event ev;
    ev.kind = Event::Kind::Action;
    ev.t = sc_.schedule[i].at;
    ev.token = i;
    schedule(ev);
  }

  while (!queue_.empty()) {
    Event ev = queue_.top();
    if (ev.t > sc_.duration)
      break;
    queue_.pop();
    now_ = ev.t;
    ++events_;
    dispatch(ev);
  }
  now_ = sc_.duration;

  ledger_.set_time(now_);
  std::vector<payment::ChannelId> open;
  for (const auto& [id, ch] : ledger_.channels())
    if (ch.status == payment::ChannelStatus::Open)
      open.push_back(id);
  for (auto id : open)
    ledger_.settle(ledger_.channel(id));
  record({{"t", now_.count()}, {"ev", "settled"}, {"channels", open.size()}});
}

void
Simulator::dispatch(const Event& ev)
{
  auto& slot = *nodes_[ev.node];
  switch (ev.kind) {
  case Event::Kind::Tick: {
    apply(ev.node, slot.fwd->on_tick(ev.t), ev.t);
    Event next = ev;
    next.t = ev.t + ms(sc_.defaults.keepalive_period_ms);
    schedule(next);
    break;
  }
  case Event::Kind::Timer: {
    Outcome out;
    slot.app->on_timer(ev.token, ev.t, out);
    apply(ev.node, std::move(out), ev.t);
    break;
  }
  case Event::Kind::Action: {
    const auto& act = sc_.schedule[ev.token];
    if (const auto* f = std::get_if<FetchAction>(&act.action)) {
      auto n = index_of(f->node);
      record({{"t", ev.t.count()}, {"ev", "fetch"}, {"node", f->node}, {"name", f->name.to_uri()},
              {"margin", f->margin}});
      Outcome out;
      nodes_[n]->app->start_fetch(f->name, f->margin, ev.t, out);
      apply(n, std::move(out), ev.t);
    }
    else {
      const auto& la = std::get<LinkAction>(act.action);
      auto li = *sc_.link_between(la.a, la.b);
      links_[li].up = la.up;
      record({{"t", ev.t.count()}, {"ev", "link"}, {"a", sc_.links[li].a}, {"b", sc_.links[li].b}, {"up", la.up}});
    }
    break;
  }
  case Event::Kind::Arrival: {
    auto& link = links_[ev.link];
    bool keepalive_quiet = false;
    Packet pkt;
    try {
      pkt = decode(*ev.bytes);
    }
    catch (const DecodeError& e) {
      record({{"t", ev.t.count()}, {"ev", "decode_error"}, {"pid", ev.token}, {"node", sc_.nodes[ev.node].id},
              {"what", e.what()}});
      return;
    }
    keepalive_quiet = std::holds_alternative<KeepAlive>(pkt) && !opts_.trace_keepalives;
    if (!link.up) {
      if (!keepalive_quiet)
        record({{"t", ev.t.count()}, {"ev", "lost"}, {"pid", ev.token}, {"why", "link_down"}});
      return;
    }
    if (!keepalive_quiet)
      record({{"t", ev.t.count()}, {"ev", "rx"}, {"pid", ev.token}, {"node", sc_.nodes[ev.node].id},
              {"from", sc_.nodes[ev.from].id}});

    const auto& from = sc_.nodes[ev.from].addr;
    auto& fwd = *slot.fwd;
    Outcome out = std::visit(
      [&] (const auto& p) -> Outcome {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Interest>)
          return fwd.on_interest(p, from, ev.t);
        else if constexpr (std::is_same_v<T, Data>)
          return fwd.on_data(p, from, ev.t);
        else if constexpr (std::is_same_v<T, Nack>)
          return fwd.on_nack(p, from, ev.t);
        else
          return fwd.on_keepalive(p, from, ev.t);
      },
      pkt);
    if (out.decision) {
      if (const auto* interest = std::get_if<Interest>(&pkt)) {
        const auto& d = *out.decision;
        json rec{{"t", ev.t.count()},
                 {"ev", "decision"},
                 {"node", sc_.nodes[ev.node].id},
                 {"name", interest->name.to_uri()},
                 {"discovery", interest->is_discovery()},
                 {"action", std::string(to_string(d.action))},
                 {"named_next_alive", d.named_next_alive},
                 {"any_enabled_hop", d.any_enabled_hop}};
        if (d.mode)
          rec["mode"] = std::string(to_string(*d.mode));
        if (d.next)
          rec["next"] = route_ids({*d.next})[0];
        if (d.named_next)
          rec["named_next"] = route_ids({*d.named_next})[0];
        if (d.reason)
          rec["reason"] = std::string(to_string(*d.reason));
        if (!d.detail.empty())
          rec["detail"] = d.detail;
        record(std::move(rec));
      }
      out.decision.reset();
    }
    apply(ev.node, std::move(out), ev.t);
    break;
  }
  }
}

void
Simulator::apply(std::size_t node, Outcome&& out, SimTime now)
{
  for (auto& note : out.notes) {
    json rec{{"t", now.count()}, {"node", sc_.nodes[node].id}};
    for (auto& [k, v] : note.items())
      rec[k] = v;
    if (rec.contains("neighbor")) {
      auto addr = NodeAddr::parse(rec["neighbor"].get<std::string>());
      if (by_addr_.count(addr) != 0)
        rec["neighbor"] = id_of(addr);
    }
    if (rec.contains("route")) {
      std::vector<NodeAddr> r;
      for (const auto& a : rec["route"])
        r.push_back(NodeAddr::parse(a.get<std::string>()));
      rec["route"] = route_ids(r);
    }
    record(std::move(rec));
  }
  for (const auto& [delay, token] : out.timers) {
    Event ev;
    ev.kind = Event::Kind::Timer;
    ev.node = node;
    ev.t = now + delay;
    ev.token = token;
    schedule(ev);
  }
  for (const auto& em : out.emissions)
    transmit(node, em, now);
}

void
Simulator::transmit(std::size_t node, const Emission& em, SimTime now)
{
  Bytes bytes;
  try {
    bytes = encode(em.packet);
  }
  catch (const EncodeError& e) {
    record({{"t", now.count()}, {"ev", "encode_error"}, {"node", sc_.nodes[node].id}, {"what", e.what()}});
    return;
  }

  if (em.to) {
    for (auto li : adjacency_[node]) {
      const auto& l = links_[li];
      std::size_t other = l.a == node ? l.b : l.a;
      if (sc_.nodes[other].addr == *em.to) {
        send_on_link(node, li, em.packet, bytes, false, now);
        return;
      }
    }
    record({{"t", now.count()}, {"ev", "lost"}, {"node", sc_.nodes[node].id}, {"why", "no_link"},
            {"to", route_ids({*em.to})[0]}});
    return;
  }
  for (auto li : adjacency_[node])
    send_on_link(node, li, em.packet, bytes, true, now);
}

void
Simulator::send_on_link(std::size_t node, std::size_t li, const Packet& pkt, const Bytes& bytes, bool broadcast,
                        SimTime now)
{
  auto& l = links_[li];
  const auto& spec = sc_.links[li];
  std::size_t other = l.a == node ? l.b : l.a;
  int dir = l.a == node ? 0 : 1;
  std::uint64_t pid = next_pid_++;
  bool quiet = std::holds_alternative<KeepAlive>(pkt) && !opts_.trace_keepalives;

  // serialization at the link rate, then propagation
  auto bits = static_cast<double>(bytes.size()) * 8.0;
  auto tx_us = static_cast<std::int64_t>(std::ceil(bits / spec.bandwidth_mbps));
  SimTime start = std::max(now, l.busy_until[dir]);
  SimTime done = start + SimTime(tx_us);
  SimTime arrive = done + spec.latency;

  if (!quiet) {
    json rec{{"t", now.count()},
             {"ev", "tx"},
             {"pid", pid},
             {"node", sc_.nodes[node].id},
             {"to", sc_.nodes[other].id},
             {"bcast", broadcast},
             {"kind", std::string(packet_kind(pkt))},
             {"bytes", bytes.size()},
             {"arrive", arrive.count()}};
    std::visit(
      [&] (const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Interest>) {
          rec["name"] = p.name.to_uri();
          rec["nonce"] = p.nonce;
          rec["discovery"] = p.is_discovery();
          if (p.route)
            rec["route"] = route_ids(p.route->addrs);
          if (p.payment)
            rec["amount"] = p.payment->amount;
        }
        else if constexpr (std::is_same_v<T, Data>) {
          rec["name"] = p.name.to_uri();
          rec["discovery"] = p.is_discovery();
          if (p.route) {
            rec["route"] = route_ids(p.route->addrs);
            rec["price"] = *p.price;
            rec["breakdown"] = p.price_breakdown;
          }
          if (p.proof)
            rec["chain"] = p.proof->chain.size();
        }
        else if constexpr (std::is_same_v<T, Nack>) {
          rec["name"] = p.name.to_uri();
          rec["reason"] = std::string(to_string(p.reason));
        }
      },
      pkt);
    record(std::move(rec));
  }

  if (!l.up) {
    if (!quiet)
      record({{"t", now.count()}, {"ev", "lost"}, {"pid", pid}, {"why", "link_down"}});
    return;
  }
  l.busy_until[dir] = done;
  if (spec.drop > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) < spec.drop) {
      if (!quiet)
        record({{"t", now.count()}, {"ev", "lost"}, {"pid", pid}, {"why", "drop"}});
      return;
    }
  }

  Event ev;
  ev.kind = Event::Kind::Arrival;
  ev.t = arrive;
  ev.node = other;
  ev.from = node;
  ev.link = li;
  ev.token = pid;
  ev.bytes = std::make_shared<const Bytes>(bytes);
  schedule(ev);
}

void
Simulator::write_trace(std::ostream& os) const
{
  for (const auto& ev : trace_)
    os << ev.dump() << '\n';
}

json
Simulator::report() const
{
  json rep;
  rep["scenario"] = sc_.name;
  rep["seed"] = seed_;
  rep["duration_ms"] = sc_.duration.count() / 1000;
  rep["events"] = events_;
  rep["pof_mode"] = std::string(to_string(sc_.defaults.pof_mode));
  rep["payment_mode"] = std::string(to_string(sc_.defaults.payment_mode));

  json nodes = json::object();
  Counters totals;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = sc_.nodes[i];
    const auto& fwd = *nodes_[i]->fwd;
    const auto& app = *nodes_[i]->app;
    json node;
    node["addr"] = n.addr.to_string();
    node["cost"] = n.forwarding_cost;
    json counters = json::object();
    for (const auto& [k, v] : fwd.counters()) {
      counters[k] = v;
      totals[k] += v;
    }
    for (const auto& [k, v] : app.counters()) {
      counters[k] = v;
      totals[k] += v;
    }
    node["counters"] = counters;
    auto initial = initial_balance_.at(n.id);
    auto final = ledger_.account(n.addr).balance;
    node["tokens"] = {{"initial", initial},
                      {"final", final},
                      {"delta", static_cast<std::int64_t>(final) - static_cast<std::int64_t>(initial)}};
    const auto& rd = fwd.relay_delays();
    node["relay_delay_us"] = {{"packets", rd.packets},
                              {"max", rd.max_delay.count()},
                              {"max_nonfinal", rd.max_nonfinal_delay.count()},
                              {"max_first_packet", rd.max_first_packet_delay.count()}};

    json fib = json::object();
    for (const auto& [prefix, entry] : fwd.tables().fib.entries()) {
      json hops = json::array();
      for (const auto& [hop, nh] : entry.next_hops) {
        json h{{"next_hop", route_ids({hop})[0]}, {"enabled", nh.enabled}};
        if (!nh.window.empty())
          h["min_price"] = nh.window.min();
        hops.push_back(h);
      }
      fib[prefix.to_uri()] = hops;
    }
    node["fib"] = fib;

    json paths = json::object();
    for (const auto& [prefix, list] : app.paths()) {
      json arr = json::array();
      for (const auto& p : list)
        arr.push_back({{"route", route_ids(p.route)},
                       {"price", p.price},
                       {"hop_costs", p.hop_costs},
                       {"distrusted", p.distrusted}});
      paths[prefix.to_uri()] = arr;
    }
    if (!paths.empty())
      node["paths"] = paths;
    nodes[n.id] = node;
  }
  rep["nodes"] = nodes;

  json fetches = json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (const auto& r : nodes_[i]->app->results()) {
      json f{{"id", r.id},
             {"node", sc_.nodes[i].id},
             {"name", r.name.to_uri()},
             {"success", r.success},
             {"started_us", r.started.count()},
             {"chunks", r.chunks},
             {"chunks_done", r.chunks_done},
             {"attempts", r.attempts},
             {"discovery_rounds", r.discovery_rounds},
             {"paid", r.paid},
             {"route", route_ids(r.route)},
             {"pof_failures", r.pof_failures},
             {"rerouted_chunks", r.rerouted_chunks}};
      if (r.finished.count() > 0 || r.success || !r.failure.empty()) {
        f["finished_us"] = r.finished.count();
        f["latency_us"] = (r.finished - r.started).count();
      }
      if (!r.failure.empty())
        f["failure"] = r.failure;
      if (!r.success && r.failure.empty())
        f["failure"] = "incomplete";
      if (r.price)
        f["price"] = *r.price;
      fetches.push_back(f);
    }
  }
  rep["fetches"] = fetches;

  json total = json::object();
  for (const auto& [k, v] : totals)
    total[k] = v;
  rep["totals"] = total;

  rep["ledger"] = {{"channels_opened", ledger_.channels_opened()},
                   {"settlements", ledger_.settlements()},
                   {"records", ledger_.log().size()},
                   {"supply_initial", initial_supply_},
                   {"supply_final", ledger_.total_supply()}};

  auto violations = audit();
  rep["audit"] = {{"ok", violations.empty()}, {"violations", violations}};
  return rep;
}

std::vector<std::string>
Simulator::audit() const
{
  return audit_run(*this);
}

void
Simulator::write_state(std::ostream& os) const
{
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& id = sc_.nodes[i].id;
    const auto& t = nodes_[i]->fwd->tables();
    for (const auto& [name, entry] : t.pit.entries())
      for (const auto& d : entry.downstreams)
        os << json{{"node", id}, {"table", "pit"}, {"name", name.to_uri()}, {"downstream", route_ids({d.addr})[0]},
                   {"nonce", d.nonce}, {"expiry_us", d.expiry.count()}}
                .dump()
           << '\n';
    for (const auto& [prefix, entry] : t.fib.entries())
      for (const auto& [hop, nh] : entry.next_hops) {
        json samples = json::array();
        for (const auto& s : nh.window.samples())
          samples.push_back({{"price", s.price}, {"t_us", s.observed.count()}});
        json rec{{"node", id}, {"table", "fib"}, {"prefix", prefix.to_uri()}, {"next_hop", route_ids({hop})[0]},
                 {"enabled", nh.enabled}, {"samples", samples}};
        if (!nh.window.empty())
          rec["min_price"] = nh.window.min();
        os << rec.dump() << '\n';
      }
    for (const auto& [name, payload] : t.cs.entries())
      os << json{{"node", id}, {"table", "cs"}, {"name", name.to_uri()}, {"bytes", payload.size()}}.dump() << '\n';
    for (const auto& [addr, nl] : t.neighbors())
      os << json{{"node", id}, {"table", "neighbor"}, {"neighbor", route_ids({addr})[0]},
                 {"last_seen_us", nl.last_seen.count()}, {"alive", nl.alive}}
              .dump()
         << '\n';
    for (const auto& [prefix, list] : nodes_[i]->app->paths())
      for (const auto& p : list)
        os << json{{"node", id}, {"table", "path"}, {"prefix", prefix.to_uri()}, {"route", route_ids(p.route)},
                   {"price", p.price}, {"hop_costs", p.hop_costs}, {"distrusted", p.distrusted}}
                .dump()
           << '\n';
  }
}

} // namespace r2p2
