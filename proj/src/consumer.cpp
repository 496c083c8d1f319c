#include "r2p2/consumer.hpp"

#include <algorithm>

namespace r2p2 {

namespace {

constexpr unsigned generation_bits = 32;

std::uint64_t
timer_token(std::uint64_t id, std::uint32_t generation)
{
  return (id << generation_bits) | generation;
}

bool
path_less(const DiscoveredPath& a, const DiscoveredPath& b)
{
  if (a.price != b.price)
    return a.price < b.price;
  if (a.route.size() != b.route.size())
    return a.route.size() < b.route.size();
  return a.route < b.route;
}

std::vector<NodeAddr>
expected_signers(const std::vector<NodeAddr>& route)
{
  // producer signs first, the consumer's neighbour last
  return std::vector<NodeAddr>(route.rbegin(), route.rend() - 1);
}

} // namespace

ConsumerApp::ConsumerApp(Forwarder& fwd, ConsumerConfig cfg)
  : fwd_(fwd)
  , cfg_(cfg)
{
}

std::uint64_t
ConsumerApp::start_fetch(const Name& name, Tokens margin, SimTime now, Outcome& out)
{
  Fetch f;
  f.id = next_id_++;
  f.margin = margin;

  FetchResult res;
  res.id = f.id;
  res.consumer = fwd_.addr();
  res.name = name;
  res.started = now;
  f.result = results_.size();
  results_.push_back(res);

  const auto* catalog = fwd_.services().catalog;
  const ContentSpec* spec = catalog ? find_content(*catalog, name) : nullptr;
  if (spec == nullptr) {
    fetches_.emplace(f.id, f);
    finish(fetches_.at(f.id), false, "unknown_content", now);
    return res.id;
  }
  f.prefix = spec->prefix;
  f.packet_count = spec->packet_count;
  f.packet_size = spec->packet_size;
  if (name.group() == spec->prefix) {
    for (std::uint32_t k = 0; k < spec->chunks; ++k)
      f.groups.push_back(spec->prefix.append(std::to_string(k)));
  }
  else {
    f.groups.push_back(name.group());
  }
  results_.back().chunks = f.groups.size();

  auto& fetch = fetches_.emplace(f.id, std::move(f)).first->second;
  out.notes.push_back({{"ev", "fetch_start"}, {"fetch", fetch.id}, {"name", name.to_uri()}});

  if (fwd_.produces(name)) {
    results_[fetch.result].chunks_done = fetch.groups.size();
    finish(fetch, true, "", now);
    return res.id;
  }
  if (best_path(fetch.prefix) != nullptr)
    send_chunk(fetch, now, out);
  else
    discover(fetch, now, out);
  return res.id;
}

void
ConsumerApp::arm(Fetch& f, SimTime delay, Outcome& out)
{
  ++f.generation;
  out.timers.emplace_back(delay, timer_token(f.id, f.generation));
}

void
ConsumerApp::discover(Fetch& f, SimTime now, Outcome& out)
{
  auto& res = results_[f.result];
  if (f.rounds >= cfg_.max_discovery_rounds) {
    finish(f, false, "no_path", now);
    return;
  }
  ++f.rounds;
  ++res.discovery_rounds;
  f.phase = Phase::Discovering;
  out.append(fwd_.originate_interest(fwd_.make_discovery_interest(f.prefix), now));
  arm(f, cfg_.discovery_wait, out);
}

const DiscoveredPath*
ConsumerApp::best_path(const Name& prefix) const
{
  auto it = paths_.find(prefix);
  if (it == paths_.end())
    return nullptr;
  for (const auto& p : it->second) {
    if (p.distrusted || p.route.size() < 2)
      continue;
    if (auto st = stale_.find(prefix); st != stale_.end() && st->second.count(p.route) != 0)
      continue;
    const auto& neighbors = fwd_.tables().neighbors();
    if (neighbors.count(p.route[1]) != 0 && !fwd_.tables().is_alive(p.route[1]))
      continue;
    return &p;
  }
  return nullptr;
}

void
ConsumerApp::distrust(const Name& prefix, const std::vector<NodeAddr>& route)
{
  for (auto& p : paths_[prefix])
    if (p.route == route)
      p.distrusted = true;
}

ConsumerApp::Fetch*
ConsumerApp::fetch_for(const Name& name)
{
  Name group = name.group();
  for (auto& [id, f] : fetches_)
    if (f.phase != Phase::Discovering && f.next_group < f.groups.size() && f.groups[f.next_group] == group)
      return &f;
  return nullptr;
}

void
ConsumerApp::send_chunk(Fetch& f, SimTime now, Outcome& out)
{
  auto& res = results_[f.result];
  const auto* best = best_path(f.prefix);
  if (best == nullptr) {
    f.path.reset();
    discover(f, now, out);
    return;
  }
  f.path = *best;
  f.phase = Phase::Fetching;
  ++f.chunk_attempts;
  ++res.attempts;
  res.route = f.path->route;
  if (!res.price)
    res.price = f.path->price;

  const auto& svc = fwd_.services();
  auto plan = payment::plan_payment(*f.path);
  const auto& route = f.path->route;
  std::vector<NodeAddr> hops(route.begin() + 1, route.end());
  Name group = f.groups[f.next_group];
  f.nonces.clear();
  // relays sign whole chunks, so every attempt requests every packet
  f.received.clear();

  for (std::uint32_t i = 0; i < f.packet_count; ++i) {
    Interest interest;
    interest.name = group.with_chunk(i);
    interest.nonce = fwd_.next_nonce();
    interest.hop_info = HopInfo{fwd_.addr(), hops.front()};
    interest.route = RouteStack{hops};
    interest.lifetime_ms = fwd_.interest_lifetime_ms();

    if (svc.payment_mode == PaymentMode::HopByHop && plan.total + f.margin > 0) {
      svc.ledger->set_time(now);
      auto ch = fwd_.ensure_channel(hops.front());
      if (!ch) {
        finish(f, false, "cannot_open_channel", now);
        return;
      }
      const auto& state = svc.ledger->channel(*ch);
      if (state.balance_a < plan.total + f.margin) {
        finish(f, false, "insufficient_funds", now);
        return;
      }
      interest.payment = svc.ledger->issue_voucher(*ch, plan.total + f.margin, fwd_.key());
      res.paid += plan.total + f.margin;
    }
    else if (svc.payment_mode == PaymentMode::PayAll && plan.total > 0) {
      svc.ledger->set_time(now);
      std::vector<NodeAddr> payees;
      std::vector<Tokens> amounts;
      for (std::size_t h = 0; h < hops.size(); ++h) {
        fwd_.ensure_channel(hops[h]);
        payees.push_back(hops[h]);
        amounts.push_back(plan.per_hop_cost[h]);
      }
      try {
        payment::consumer_pay_all(*svc.ledger, fwd_.addr(), payees, amounts, *svc.keys);
      }
      catch (const payment::PaymentError& e) {
        finish(f, false, std::string("payment_failed:") + e.what(), now);
        return;
      }
      res.paid += plan.total;
    }
    f.nonces.insert(interest.nonce);
    out.append(fwd_.originate_interest(std::move(interest), now));
  }
  arm(f, ms(fwd_.interest_lifetime_ms()), out);
}

void
ConsumerApp::retry_chunk(Fetch& f, SimTime now, Outcome& out)
{
  if (f.chunk_attempts >= cfg_.max_attempts_per_chunk) {
    finish(f, false, "attempts_exhausted", now);
    return;
  }
  send_chunk(f, now, out);
}

bool
ConsumerApp::path_failed(Fetch& f, SimTime now, Outcome& out)
{
  if (!f.path || ++f.path_failures < cfg_.failures_before_refresh)
    return false;
  f.path_failures = 0;
  stale_[f.prefix].insert(f.path->route);
  out.notes.push_back({{"ev", "path_stale"}, {"fetch", f.id}, {"prefix", f.prefix.to_uri()}});
  if (f.chunk_attempts >= cfg_.max_attempts_per_chunk)
    finish(f, false, "attempts_exhausted", now);
  else
    discover(f, now, out);
  return true;
}

void
ConsumerApp::on_timer(std::uint64_t token, SimTime now, Outcome& out)
{
  auto it = fetches_.find(token >> generation_bits);
  if (it == fetches_.end())
    return;
  auto& f = it->second;
  if (static_cast<std::uint32_t>(token) != f.generation)
    return;

  switch (f.phase) {
  case Phase::Discovering:
    if (best_path(f.prefix) != nullptr) {
      f.chunk_attempts = 0;
      send_chunk(f, now, out);
    }
    else {
      discover(f, now, out);
    }
    break;
  case Phase::Fetching:
    out.notes.push_back({{"ev", "chunk_timeout"}, {"fetch", f.id}, {"group", f.groups[f.next_group].to_uri()}});
    if (!path_failed(f, now, out))
      retry_chunk(f, now, out);
    break;
  case Phase::Backoff:
    retry_chunk(f, now, out);
    break;
  }
}

void
ConsumerApp::on_path(const DiscoveredPath& path, SimTime, Outcome& out)
{
  stale_[path.prefix].erase(path.route);
  auto& list = paths_[path.prefix];
  auto same = std::find_if(list.begin(), list.end(), [&] (const auto& p) { return p.route == path.route; });
  if (same != list.end()) {
    bool distrusted = same->distrusted;
    *same = path;
    same->distrusted = distrusted;
  }
  else {
    list.push_back(path);
  }
  std::sort(list.begin(), list.end(), path_less);

  // keep the cheapest trusted paths plus every distrusted one so they stay excluded
  std::size_t trusted = 0;
  std::erase_if(list, [&] (const DiscoveredPath& p) {
    if (p.distrusted)
      return false;
    return ++trusted > cfg_.paths_kept;
  });

  nlohmann::json route = nlohmann::json::array();
  for (const auto& a : path.route)
    route.push_back(a.to_string());
  out.notes.push_back({{"ev", "path"}, {"prefix", path.prefix.to_uri()}, {"route", route}, {"price", path.price}});
}

void
ConsumerApp::on_data(const Data& data, SimTime now, Outcome& out)
{
  Fetch* f = fetch_for(data.name);
  if (f == nullptr || !data.name.chunk_index() || !f->path)
    return;
  auto idx = *data.name.chunk_index();
  if (idx >= f->packet_count)
    return;

  const auto& svc = fwd_.services();
  auto& res = results_[f->result];
  const auto& route = f->path->route;

  auto check = [&] (const pof::SignedChunk& chunk) {
    counters_["signatures_verified"] += chunk.chain.size();
    auto expected = expected_signers(route);
    auto verdict = pof::verify_chain(chunk, expected, *svc.directory);
    if (verdict.valid())
      return verdict;
    auto why = verdict.invalid->why;
    if ((why == pof::Failure::MissingSigner || why == pof::Failure::UnexpectedSigner) &&
        !chunk.chain.empty() && chunk.chain.back().signer == route[1]) {
      // the network re-routed around a failed hop; accept a chain that is internally valid
      std::vector<NodeAddr> signers;
      for (const auto& hs : chunk.chain)
        signers.push_back(hs.signer);
      std::vector<NodeAddr> sorted = signers;
      std::sort(sorted.begin(), sorted.end());
      bool simple = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end() &&
                    std::find(signers.begin(), signers.end(), fwd_.addr()) == signers.end();
      if (simple) {
        auto alt = pof::verify_chain(chunk, signers, *svc.directory);
        if (alt.valid())
          ++res.rerouted_chunks;
        return alt;
      }
    }
    return verdict;
  };

  auto reject = [&] (const pof::Invalid& bad) {
    std::string why = std::to_string(bad.index) + ":" + std::string(pof::to_string(bad.why));
    res.pof_failures.push_back(why);
    ++counters_["pof_rejections"];
    out.notes.push_back({{"ev", "pof_reject"}, {"fetch", f->id}, {"name", data.name.to_uri()}, {"why", why}});
    distrust(f->prefix, route);
    f->received.clear();
    retry_chunk(*f, now, out);
  };

  if (fwd_.pof_mode() == PofMode::PacketLevel) {
    if (!data.proof) {
      reject(pof::Invalid{0, pof::Failure::MissingSigner});
      return;
    }
    pof::SignedChunk chunk{{data.name, 1, static_cast<std::uint32_t>(data.payload.size())},
                           data.payload, data.proof->digest, data.proof->chain};
    auto verdict = check(chunk);
    if (!verdict.valid()) {
      reject(*verdict.invalid);
      return;
    }
  }

  f->received.try_emplace(idx, data);
  if (f->received.size() < f->packet_count)
    return;

  if (fwd_.pof_mode() != PofMode::PacketLevel) {
    const auto& last = f->received.at(f->packet_count - 1);
    pof::SignedChunk chunk;
    chunk.descriptor = {f->groups[f->next_group], f->packet_count, f->packet_size};
    for (const auto& [i, d] : f->received)
      chunk.payload.insert(chunk.payload.end(), d.payload.begin(), d.payload.end());
    if (last.proof) {
      chunk.digest = last.proof->digest;
      chunk.chain = last.proof->chain;
    }
    auto verdict = check(chunk);
    if (!verdict.valid()) {
      reject(*verdict.invalid);
      return;
    }
  }
  ++counters_["chunks_verified"];
  chunk_complete(*f, now, out);
}

void
ConsumerApp::chunk_complete(Fetch& f, SimTime now, Outcome& out)
{
  auto& res = results_[f.result];
  ++res.chunks_done;
  out.notes.push_back({{"ev", "chunk_done"}, {"fetch", f.id}, {"group", f.groups[f.next_group].to_uri()}});
  f.received.clear();
  f.chunk_attempts = 0;
  f.path_failures = 0;
  f.rounds = 0;
  ++f.next_group;
  ++f.generation; // cancel the pending timeout
  if (f.next_group == f.groups.size()) {
    finish(f, true, "", now);
    return;
  }
  send_chunk(f, now, out);
}

void
ConsumerApp::on_nack(const Nack& nack, SimTime now, Outcome& out)
{
  Fetch* f = fetch_for(nack.name);
  if (f == nullptr || f->nonces.count(nack.nonce) == 0)
    return;
  f->nonces.clear();
  out.notes.push_back({{"ev", "nack"}, {"fetch", f->id}, {"name", nack.name.to_uri()},
                       {"reason", std::string(to_string(nack.reason))}});
  if (nack.reason == NackReason::InsufficientPayment && f->path) {
    distrust(f->prefix, f->path->route);
    retry_chunk(*f, now, out);
    return;
  }
  if (path_failed(*f, now, out))
    return;
  // one back-off per attempt, however many packets were refused
  f->phase = Phase::Backoff;
  arm(*f, cfg_.nack_backoff, out);
}

void
ConsumerApp::finish(Fetch& f, bool success, std::string failure, SimTime now)
{
  auto& res = results_[f.result];
  res.success = success;
  res.failure = std::move(failure);
  res.finished = now;
  fetches_.erase(f.id);
}

} // namespace r2p2
