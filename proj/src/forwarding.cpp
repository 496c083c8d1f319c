#include "r2p2/forwarding.hpp"

#include <algorithm>
#include <charconv>

namespace r2p2 {

std::string_view
to_string(PaymentMode m)
{
  switch (m) {
  case PaymentMode::None:
    return "none";
  case PaymentMode::HopByHop:
    return "hop-by-hop";
  case PaymentMode::PayAll:
    return "pay-all";
  }
  return "unknown";
}

std::string_view
to_string(PofMode m)
{
  switch (m) {
  case PofMode::ChunkLevel:
    return "chunk";
  case PofMode::PacketLevel:
    return "packet";
  case PofMode::StoreAndForward:
    return "store-and-forward";
  }
  return "unknown";
}

std::string_view
to_string(StrategyMode m)
{
  switch (m) {
  case StrategyMode::SourceRouted:
    return "SourceRouted";
  case StrategyMode::MinCost:
    return "MinCost";
  case StrategyMode::Rediscovery:
    return "Rediscovery";
  }
  return "unknown";
}

std::string_view
to_string(StrategyDecision::Action a)
{
  using A = StrategyDecision::Action;
  switch (a) {
  case A::ForwardUnicast:
    return "forward";
  case A::Broadcast:
    return "broadcast";
  case A::Nack:
    return "nack";
  case A::Drop:
    return "drop";
  case A::Satisfy:
    return "satisfy";
  }
  return "unknown";
}

const ContentSpec*
find_content(const ContentCatalog& catalog, const Name& name)
{
  const ContentSpec* best = nullptr;
  for (const auto& [prefix, spec] : catalog) {
    if (!prefix.is_prefix_of(name))
      continue;
    if (best == nullptr || prefix.components().size() > best->prefix.components().size())
      best = &spec;
  }
  return best;
}

Bytes
generate_payload(const Name& packet_name, std::uint32_t size)
{
  // SHA-256 in counter mode over the packet name
  auto uri = packet_name.to_uri();
  Bytes out;
  out.reserve(size);
  for (std::uint32_t block = 0; out.size() < size; ++block) {
    Bytes seed(uri.begin(), uri.end());
    for (int s = 24; s >= 0; s -= 8)
      seed.push_back(static_cast<std::uint8_t>(block >> s));
    auto d = crypto::sha256(seed);
    for (auto b : d) {
      if (out.size() == size)
        break;
      out.push_back(b);
    }
  }
  return out;
}

void
Outcome::append(Outcome&& other)
{
  for (auto& e : other.emissions)
    emissions.push_back(std::move(e));
  for (auto& t : other.timers)
    timers.push_back(t);
  for (auto& n : other.notes)
    notes.push_back(std::move(n));
  if (other.decision)
    decision = std::move(other.decision);
}

// ---- broadcast policy ------------------------------------------------------

bool
NonceBudgetPolicy::admit(const Interest& interest, SimTime)
{
  auto& used = used_[interest.nonce];
  if (used >= budget_)
    return false;
  ++used;
  return true;
}

std::string
NonceBudgetPolicy::name() const
{
  return "nonce-budget:" + std::to_string(budget_);
}

std::unique_ptr<BroadcastPolicy>
make_broadcast_policy(std::string_view id)
{
  constexpr std::string_view base = "nonce-budget";
  if (id == base)
    return std::make_unique<NonceBudgetPolicy>(1);
  if (id.substr(0, base.size() + 1) == "nonce-budget:") {
    auto arg = id.substr(base.size() + 1);
    unsigned n = 0;
    auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), n);
    if (ec == std::errc() && ptr == arg.data() + arg.size() && n > 0)
      return std::make_unique<NonceBudgetPolicy>(n);
  }
  throw InvalidArgument("unknown broadcast policy '" + std::string(id) + "'");
}

std::optional<Name>
RoundRobinSelector::select(std::span<const Name> pending)
{
  std::erase_if(order_, [&] (const Name& n) {
    return std::find(pending.begin(), pending.end(), n) == pending.end();
  });
  for (const auto& n : pending)
    if (std::find(order_.begin(), order_.end(), n) == order_.end())
      order_.push_back(n);
  if (order_.empty())
    return std::nullopt;
  Name next = order_.front();
  order_.pop_front();
  order_.push_back(next);
  return next;
}

Data
producer_answer_discovery(const Interest& interest, Tokens cost, const NodeAddr& self,
                          const NodeAddr& downstream)
{
  Data d;
  d.name = interest.name;
  d.hop_info = HopInfo{self, downstream};
  d.route = RouteStack{{downstream, self}};
  d.price = cost;
  d.price_breakdown = {cost};
  return d;
}

// ---- forwarder -------------------------------------------------------------

Forwarder::Forwarder(NodeConfig cfg, const ForwarderConfig& fcfg, NetworkServices services)
  : cfg_(std::move(cfg))
  , svc_(services)
  , tables_(fcfg.tables)
  , pof_mode_(fcfg.pof_mode)
  , lifetime_ms_(fcfg.interest_lifetime_ms)
  , policy_(make_broadcast_policy(cfg_.broadcast_policy))
  , rng_(fcfg.rng_seed)
{
  if (cfg_.addr.is_broadcast())
    throw InvalidArgument("node " + cfg_.id + " uses the broadcast address");
}

const crypto::KeyPair&
Forwarder::key() const
{
  if (svc_.keys == nullptr)
    throw std::logic_error("node " + cfg_.id + " has no key ring");
  return svc_.keys->at(cfg_.addr);
}

bool
Forwarder::produces(const Name& name) const
{
  return std::any_of(cfg_.producer_prefixes.begin(), cfg_.producer_prefixes.end(),
                     [&] (const Name& p) { return p.is_prefix_of(name); });
}

Interest
Forwarder::make_discovery_interest(const Name& prefix)
{
  Interest i;
  i.name = prefix.group();
  i.nonce = next_nonce();
  i.hop_info = HopInfo{addr(), std::nullopt};
  i.lifetime_ms = lifetime_ms_;
  return i;
}

std::optional<payment::ChannelId>
Forwarder::ensure_channel(const NodeAddr& payee)
{
  if (svc_.ledger == nullptr)
    return std::nullopt;
  if (auto id = svc_.ledger->find_channel(addr(), payee))
    return id;
  try {
    auto ch = svc_.ledger->open_channel(addr(), payee, svc_.channel_deposit, 0);
    count("channels_opened");
    return ch.id;
  }
  catch (const payment::PaymentError&) {
    return std::nullopt;
  }
}

Name
Forwarder::flow_of(const Name& name) const
{
  if (auto p = tables_.fib.longest_prefix(name))
    return *p;
  return name.group();
}

void
Forwarder::record_mode(const Name& flow, StrategyMode mode)
{
  count("mode." + std::string(to_string(mode)));
  auto [it, fresh] = last_mode_.try_emplace(flow, mode);
  if (!fresh && it->second != mode) {
    count("mode_transitions");
    it->second = mode;
  }
}

Outcome
Forwarder::on_interest(const Interest& pkt, const NodeAddr& from, SimTime now)
{
  count("interests_in");
  if (pkt.hop_info.remote && *pkt.hop_info.remote != addr()) {
    count("drop.not_for_me");
    Outcome out;
    out.decision = StrategyDecision{};
    out.decision->detail = "not_for_me";
    return out;
  }
  return pkt.is_discovery() ? on_discovery_interest(pkt, from, now) : on_routed_interest(pkt, from, now);
}

Outcome
Forwarder::on_discovery_interest(const Interest& pkt, const NodeAddr& from, SimTime now)
{
  using A = StrategyDecision::Action;
  Outcome out;
  StrategyDecision d;

  auto r = tables_.pit.insert(pkt.name, from, pkt.nonce, now, ms(pkt.lifetime_ms));
  if (r == PitInsertResult::DuplicateNonce) {
    count("drop.duplicate_nonce");
    d.detail = "duplicate_nonce";
    out.decision = d;
    return out;
  }

  if (produces(pkt.name)) {
    out.emissions.push_back({producer_answer_discovery(pkt, cfg_.forwarding_cost, addr(), from), from});
    count("discovery.answered");
    count("data_out");
    d.action = A::Satisfy;
    d.next = from;
    out.decision = d;
    return out;
  }

  if (!policy_->admit(pkt, now)) {
    count("discovery.suppressed");
    d.detail = "broadcast_suppressed";
    out.decision = d;
    return out;
  }

  Interest fwd = pkt;
  fwd.hop_info = HopInfo{addr(), std::nullopt};
  out.emissions.push_back({fwd, std::nullopt});
  count("discovery.rebroadcast");
  count("interests_out");
  d.action = A::Broadcast;
  out.decision = d;
  return out;
}

Outcome
Forwarder::on_routed_interest(const Interest& pkt, const NodeAddr& from, SimTime now)
{
  using A = StrategyDecision::Action;
  Outcome out;
  StrategyDecision d;
  auto nack = [&] (NackReason reason, std::string detail) {
    out.emissions.push_back({Nack{pkt.name, pkt.nonce, reason}, from});
    count("nacks_out");
    d.action = A::Nack;
    d.reason = reason;
    d.detail = std::move(detail);
    out.decision = d;
    return out;
  };

  if (pkt.route->top() != addr()) {
    count("drop.malformed_route");
    d.detail = "malformed_route";
    out.decision = d;
    return out;
  }
  if (const auto* entry = tables_.pit.find(pkt.name)) {
    for (const auto& ds : entry->downstreams) {
      if (ds.nonce != pkt.nonce || ds.expiry <= now)
        continue;
      if (ds.addr == from) {
        count("drop.duplicate_nonce");
        d.detail = "duplicate_nonce";
        out.decision = d;
        return out;
      }
      // the same Interest came back through another neighbour: a forwarding loop
      count("loops_detected");
      return nack(NackReason::Duplicate, "loop");
    }
  }

  Interest fwd = pkt;
  fwd.route->pop();

  if (produces(pkt.name))
    return serve_content(pkt, from, now);

  if (!pkt.name.chunk_index()) {
    if (auto hit = tables_.cs.lookup(pkt.name)) {
      Data data;
      data.name = pkt.name;
      data.payload = std::move(*hit);
      data.hop_info = HopInfo{addr(), from};
      out.emissions.push_back({data, from});
      count("cs_hits");
      count("data_out");
      d.action = A::Satisfy;
      d.next = from;
      out.decision = d;
      return out;
    }
  }

  Name flow = flow_of(pkt.name);
  if (!fwd.route->empty()) {
    d.named_next = fwd.route->top();
    d.named_next_alive = tables_.is_alive(*d.named_next);
  }
  auto hop = tables_.fib.min_cost_hop(pkt.name, {from, addr()});
  d.any_enabled_hop = hop.has_value();

  NodeAddr next;
  if (d.named_next && d.named_next_alive) {
    d.mode = StrategyMode::SourceRouted;
    next = *d.named_next;
  }
  else if (hop) {
    d.mode = StrategyMode::MinCost;
    next = hop->first;
    std::vector<NodeAddr> rest;
    if (!fwd.route->empty())
      rest.assign(fwd.route->addrs.begin() + 1, fwd.route->addrs.end());
    auto pos = std::find(rest.begin(), rest.end(), next);
    std::vector<NodeAddr> rewritten;
    if (pos != rest.end()) {
      rewritten.assign(pos, rest.end());
    }
    else {
      rewritten.push_back(next);
      rewritten.insert(rewritten.end(), rest.begin(), rest.end());
    }
    fwd.route->addrs = std::move(rewritten);
  }
  else {
    d.mode = StrategyMode::Rediscovery;
    record_mode(flow, StrategyMode::Rediscovery);
    routeless_flows_.insert(flow);
    std::erase_if(routeless_flows_, [&] (const Name& f) {
      return f != flow && tables_.fib.min_cost_hop(f).has_value();
    });

    if (now >= next_rediscovery_slot_) {
      std::vector<Name> pending(routeless_flows_.begin(), routeless_flows_.end());
      if (auto sel = rediscovery_.select(pending)) {
        auto disc = make_discovery_interest(*sel);
        tables_.pit.insert(disc.name, addr(), disc.nonce, now, ms(disc.lifetime_ms));
        policy_->admit(disc, now);
        out.emissions.push_back({disc, std::nullopt});
        count("rediscovery.broadcasts");
        count("interests_out");
        next_rediscovery_slot_ = now + tables_.keepalive_config().period;
        out.notes.push_back({{"ev", "rediscovery"}, {"flow", sel->to_uri()}});
      }
    }
    else {
      count("rediscovery.deferred");
    }
    return nack(NackReason::NoRoute, "no_route");
  }

  record_mode(flow, *d.mode);
  fwd.hop_info = HopInfo{addr(), next};
  if (auto reason = process_payment(fwd, next, false, now))
    return nack(*reason, "payment");

  tables_.pit.insert(pkt.name, from, pkt.nonce, now, ms(pkt.lifetime_ms));
  out.emissions.push_back({fwd, next});
  count("interests_out");
  d.action = A::ForwardUnicast;
  d.next = next;
  out.decision = d;
  return out;
}

std::optional<NackReason>
Forwarder::process_payment(Interest& fwd, const NodeAddr& next, bool final_hop, SimTime now)
{
  if (svc_.payment_mode != PaymentMode::HopByHop)
    return std::nullopt;
  Tokens cost = cfg_.forwarding_cost;
  if (!fwd.payment) {
    if (cost == 0)
      return std::nullopt;
    count("payment.missing");
    return NackReason::InsufficientPayment;
  }
  if (svc_.ledger == nullptr || svc_.keys == nullptr)
    throw std::logic_error("hop-by-hop payment without a ledger");

  svc_.ledger->set_time(now);
  std::optional<payment::ChannelId> next_channel;
  if (!final_hop) {
    next_channel = ensure_channel(next);
    if (!next_channel) {
      count("payment.rejected");
      return NackReason::InsufficientPayment;
    }
  }

  using K = payment::RelayOutcome::Kind;
  auto res = payment::relay_process_payment(*svc_.ledger, addr(), *fwd.payment, cost,
                                            final_hop ? std::nullopt : next_channel, *svc_.keys);
  switch (res.kind) {
  case K::Forward:
    fwd.payment = res.outgoing;
    count("payment.accepted");
    count("tokens_earned", cost);
    return std::nullopt;
  case K::Final:
    fwd.payment.reset();
    count("payment.accepted");
    count("tokens_earned", cost);
    return std::nullopt;
  case K::InsufficientPayment:
    count("payment.insufficient");
    return NackReason::InsufficientPayment;
  case K::Rejected:
    break;
  }
  count("payment.rejected");
  return NackReason::InsufficientPayment;
}

Outcome
Forwarder::serve_content(const Interest& pkt, const NodeAddr& downstream, SimTime now)
{
  using A = StrategyDecision::Action;
  Outcome out;
  StrategyDecision d;
  auto nack = [&] (NackReason reason, std::string detail) {
    out.emissions.push_back({Nack{pkt.name, pkt.nonce, reason}, downstream});
    count("nacks_out");
    d.action = A::Nack;
    d.reason = reason;
    d.detail = std::move(detail);
    out.decision = d;
    return out;
  };

  Interest paid = pkt;
  if (auto reason = process_payment(paid, downstream, true, now))
    return nack(*reason, "payment");

  const ContentSpec* spec = svc_.catalog ? find_content(*svc_.catalog, pkt.name) : nullptr;
  auto idx = pkt.name.chunk_index();
  if (spec == nullptr || !idx || *idx >= spec->packet_count)
    return nack(NackReason::NoRoute, "no_content");

  Data data;
  data.name = pkt.name;
  data.payload = generate_payload(pkt.name, spec->packet_size);
  data.hop_info = HopInfo{addr(), downstream};
  data.proof = ProofFragment{spec->packet_count, spec->packet_size, std::nullopt, {}};

  bool final = *idx + 1 == spec->packet_count;
  if (pof_mode_ == PofMode::PacketLevel) {
    sign_for_relay(data, data.payload, pof::ChunkDescriptor{pkt.name, 1,
                                                            static_cast<std::uint32_t>(data.payload.size())});
  }
  else if (final) {
    Name group = pkt.name.group();
    Bytes whole;
    for (std::uint32_t i = 0; i < spec->packet_count; ++i) {
      auto p = generate_payload(group.with_chunk(i), spec->packet_size);
      whole.insert(whole.end(), p.begin(), p.end());
    }
    sign_for_relay(data, whole, pof::ChunkDescriptor{group, spec->packet_count, spec->packet_size});
  }

  out.emissions.push_back({data, downstream});
  count("content_served");
  count("data_out");
  d.action = A::Satisfy;
  d.next = downstream;
  out.decision = d;
  return out;
}

void
Forwarder::sign_for_relay(Data& data, const Bytes& payload, const pof::ChunkDescriptor& desc)
{
  auto& proof = *data.proof;
  pof::SignedChunk chunk{desc, payload, proof.digest, proof.chain};
  try {
    chunk = pof::sign_chunk(std::move(chunk), key());
  }
  catch (const std::invalid_argument&) {
    // upstream payload does not match its digest; pass it on unsigned for the consumer to reject
    count("pof.digest_mismatch");
    return;
  }
  proof.digest = chunk.digest;
  proof.chain = std::move(chunk.chain);
  count("signatures_produced");
}

Outcome
Forwarder::on_data(const Data& pkt, const NodeAddr& from, SimTime now)
{
  count("data_in");
  if (pkt.hop_info.remote && *pkt.hop_info.remote != addr()) {
    count("drop.not_for_me");
    return {};
  }
  return pkt.is_discovery() ? on_discovery_data(pkt, from, now) : on_content_data(pkt, from, now);
}

Outcome
Forwarder::on_discovery_data(const Data& pkt, const NodeAddr& from, SimTime now)
{
  Outcome out;
  tables_.fib.update(pkt.name.group(), from, *pkt.price, now);
  count("fib_updates");

  const auto& route = *pkt.route;
  if (route.top() != addr()) {
    count("drop.route_mismatch");
    return out;
  }
  auto downs = tables_.pit.downstreams(pkt.name, now);
  if (downs.empty()) {
    count("drop.unsolicited");
    return out;
  }

  for (const auto& [down, nonce] : downs) {
    if (down == addr()) {
      DiscoveredPath path;
      path.prefix = pkt.name.group();
      path.route = route.addrs;
      path.price = *pkt.price;
      path.hop_costs.assign(pkt.price_breakdown.rbegin(), pkt.price_breakdown.rend());
      path.last_seen = now;
      count("paths_discovered");
      if (app_ != nullptr)
        app_->on_path(path, now, out);
      continue;
    }
    if (route.contains(down))
      continue;
    Data fwd = pkt;
    fwd.route->push(down);
    *fwd.price += cfg_.forwarding_cost;
    fwd.price_breakdown.push_back(cfg_.forwarding_cost);
    fwd.hop_info = HopInfo{addr(), down};
    out.emissions.push_back({fwd, down});
    count("discovery.relayed");
    count("data_out");
  }
  return out;
}

Outcome
Forwarder::on_content_data(const Data& pkt, const NodeAddr&, SimTime now)
{
  Outcome out;
  auto downs = tables_.pit.consume(pkt.name, now);
  if (downs.empty()) {
    count("drop.unsolicited");
    return out;
  }
  auto self = std::find_if(downs.begin(), downs.end(), [&] (const auto& d) { return d.first == addr(); });
  if (self != downs.end()) {
    downs.erase(self);
    count("data_delivered");
    if (app_ != nullptr)
      app_->on_data(pkt, now, out);
  }
  if (!downs.empty())
    relay_content(out, pkt, downs, now, now);
  return out;
}

void
Forwarder::relay_content(Outcome& out, Data data, const std::vector<std::pair<NodeAddr, Nonce>>& downs,
                         SimTime arrived, SimTime now)
{
  auto emit = [&] (const Data& d, const std::vector<std::pair<NodeAddr, Nonce>>& targets, SimTime since) {
    auto idx = d.name.chunk_index();
    bool final = idx && d.proof && *idx + 1 == d.proof->packet_count;
    for (const auto& [down, nonce] : targets) {
      Data copy = d;
      copy.hop_info = HopInfo{addr(), down};
      out.emissions.push_back({std::move(copy), down});
      count("data_out");
    }
    if (!idx || !d.proof)
      return;
    auto delay = now - since;
    relay_delays_.packets += 1;
    relay_delays_.max_delay = std::max(relay_delays_.max_delay, delay);
    if (!final)
      relay_delays_.max_nonfinal_delay = std::max(relay_delays_.max_nonfinal_delay, delay);
    if (*idx == 0)
      relay_delays_.max_first_packet_delay = std::max(relay_delays_.max_first_packet_delay, delay);
  };

  auto idx = data.name.chunk_index();
  if (!data.proof || !idx) {
    if (!data.proof)
      tables_.cs.insert(data.name, data.payload);
    emit(data, downs, arrived);
    return;
  }

  const auto& proof = *data.proof;
  if (pof_mode_ == PofMode::PacketLevel) {
    sign_for_relay(data, data.payload,
                   pof::ChunkDescriptor{data.name, 1, static_cast<std::uint32_t>(data.payload.size())});
    emit(data, downs, arrived);
    return;
  }

  Name group = data.name.group();
  if (*idx >= proof.packet_count) {
    count("drop.bad_index");
    return;
  }
  auto it = assemblies_.find(group);
  if (it == assemblies_.end() || it->second.assembly.status(now) == pof::AssemblyStatus::Expired ||
      it->second.assembly.descriptor().packet_count != proof.packet_count) {
    if (it != assemblies_.end()) {
      count("drop.expired_chunk", it->second.held.size());
      assemblies_.erase(it);
    }
    pof::ChunkDescriptor desc{group, proof.packet_count, proof.packet_size};
    it = assemblies_.emplace(group, RelayAssembly{pof::ChunkAssembly(desc, now + ms(lifetime_ms_)), {}}).first;
  }
  auto& ra = it->second;
  auto status = ra.assembly.add(*idx, data.payload, now);

  bool final = *idx + 1 == proof.packet_count;
  if (pof_mode_ == PofMode::ChunkLevel && !final)
    emit(data, downs, arrived);
  else
    ra.held.push_back(HeldPacket{std::move(data), downs, arrived});

  if (status != pof::AssemblyStatus::Complete)
    return;

  auto held = std::move(ra.held);
  ra.held.clear();
  std::stable_sort(held.begin(), held.end(), [] (const HeldPacket& a, const HeldPacket& b) {
    return *a.data.name.chunk_index() < *b.data.name.chunk_index();
  });
  Bytes whole;
  for (auto& h : held) {
    if (*h.data.name.chunk_index() + 1 == h.data.proof->packet_count) {
      if (whole.empty())
        whole = ra.assembly.payload();
      sign_for_relay(h.data, whole, ra.assembly.descriptor());
    }
    emit(h.data, h.downstreams, h.arrived);
  }
}

Outcome
Forwarder::on_nack(const Nack& pkt, const NodeAddr&, SimTime now)
{
  Outcome out;
  count("nacks_in");
  auto downs = tables_.pit.consume(pkt.name, now);
  if (downs.empty()) {
    count("drop.unsolicited");
    return out;
  }
  for (const auto& [down, nonce] : downs) {
    if (down == addr()) {
      if (app_ != nullptr)
        app_->on_nack(pkt, now, out);
      continue;
    }
    out.emissions.push_back({Nack{pkt.name, nonce, pkt.reason}, down});
    count("nacks_out");
  }
  return out;
}

Outcome
Forwarder::on_keepalive(const KeepAlive& pkt, const NodeAddr&, SimTime now)
{
  Outcome out;
  count("keepalives_in");
  if (tables_.keepalive_heard(pkt.sender, now))
    out.notes.push_back({{"ev", "neighbor_up"}, {"neighbor", pkt.sender.to_string()}});
  return out;
}

Outcome
Forwarder::on_tick(SimTime now)
{
  Outcome out;
  out.emissions.push_back({KeepAlive{addr(), keepalive_seq_++}, std::nullopt});
  count("keepalives_out");

  for (const auto& dead : tables_.keepalive_sweep(now)) {
    count("neighbors_lost");
    out.notes.push_back({{"ev", "neighbor_down"},
                         {"neighbor", dead.to_string()},
                         {"last_seen_us", tables_.neighbors().at(dead).last_seen.count()}});
  }
  tables_.pit.expire(now);

  for (auto it = assemblies_.begin(); it != assemblies_.end();) {
    const auto& ra = it->second;
    if (now >= ra.assembly.deadline()) {
      if (!ra.assembly.complete())
        count("drop.expired_chunk", ra.held.size());
      it = assemblies_.erase(it);
    }
    else {
      ++it;
    }
  }
  return out;
}

Outcome
Forwarder::originate_interest(Interest interest, SimTime now)
{
  Outcome out;
  interest.hop_info.local = addr();
  tables_.pit.insert(interest.name, addr(), interest.nonce, now, ms(interest.lifetime_ms));
  if (interest.is_discovery()) {
    interest.hop_info.remote.reset();
    policy_->admit(interest, now);
    out.emissions.push_back({interest, std::nullopt});
    count("discovery.originated");
  }
  else {
    NodeAddr to = interest.route->top();
    interest.hop_info.remote = to;
    out.emissions.push_back({interest, to});
  }
  count("interests_out");
  return out;
}

} // namespace r2p2
