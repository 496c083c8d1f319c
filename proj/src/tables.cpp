#include "r2p2/tables.hpp"

#include <algorithm>

namespace r2p2 {

// ---- PIT -------------------------------------------------------------------

PitInsertResult
Pit::insert(const Name& name, const NodeAddr& downstream, Nonce nonce, SimTime now, SimTime lifetime)
{
  auto [it, created] = entries_.try_emplace(name);
  PitEntry& entry = it->second;
  if (created) {
    entry.name = name;
    entry.created = now;
    entry.downstreams.push_back({downstream, nonce, now + lifetime});
    return PitInsertResult::New;
  }

  // purge expired records first so a stale entry behaves like a fresh one
  std::erase_if(entry.downstreams, [now] (const auto& d) { return d.expiry <= now; });
  if (entry.downstreams.empty()) {
    entry.created = now;
    entry.downstreams.push_back({downstream, nonce, now + lifetime});
    return PitInsertResult::New;
  }

  auto same = std::find_if(entry.downstreams.begin(), entry.downstreams.end(),
                           [&] (const auto& d) { return d.addr == downstream; });
  if (same != entry.downstreams.end()) {
    if (same->nonce == nonce)
      return PitInsertResult::DuplicateNonce;
    same->nonce = nonce;
    same->expiry = now + lifetime;
    return PitInsertResult::Aggregated;
  }
  entry.downstreams.push_back({downstream, nonce, now + lifetime});
  return PitInsertResult::Aggregated;
}

std::vector<std::pair<NodeAddr, Nonce>>
Pit::downstreams(const Name& name, SimTime now) const
{
  std::vector<std::pair<NodeAddr, Nonce>> out;
  auto it = entries_.find(name);
  if (it == entries_.end())
    return out;
  for (const auto& d : it->second.downstreams)
    if (d.expiry > now)
      out.emplace_back(d.addr, d.nonce);
  return out;
}

std::vector<std::pair<NodeAddr, Nonce>>
Pit::consume(const Name& name, SimTime now)
{
  auto out = downstreams(name, now);
  entries_.erase(name);
  return out;
}

const PitEntry*
Pit::find(const Name& name) const
{
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

void
Pit::expire(SimTime now)
{
  for (auto it = entries_.begin(); it != entries_.end();) {
    std::erase_if(it->second.downstreams, [now] (const auto& d) { return d.expiry <= now; });
    if (it->second.downstreams.empty())
      it = entries_.erase(it);
    else
      ++it;
  }
}

// ---- PriceWindow -----------------------------------------------------------

PriceWindow::PriceWindow(std::size_t capacity)
  : capacity_(capacity)
{
  if (capacity_ == 0)
    throw InvalidArgument("price window capacity must be positive");
}

void
PriceWindow::push(Tokens price, SimTime observed)
{
  if (samples_.size() == capacity_) {
    samples_.pop_front();
    std::uint64_t oldest_kept = pushed_ - capacity_ + 1;
    while (!minima_.empty() && minima_.front().first < oldest_kept)
      minima_.pop_front();
  }
  samples_.push_back({price, observed});
  while (!minima_.empty() && minima_.back().second >= price)
    minima_.pop_back();
  minima_.emplace_back(pushed_, price);
  ++pushed_;
}

Tokens
PriceWindow::min() const
{
  if (minima_.empty())
    throw std::logic_error("min() of an empty price window");
  return minima_.front().second;
}

// ---- FIB -------------------------------------------------------------------

void
Fib::update(const Name& prefix, const NodeAddr& next_hop, Tokens price, SimTime now)
{
  Name key = prefix.group();
  auto [it, created] = entries_.try_emplace(key);
  if (created)
    it->second.prefix = key;
  auto hop = it->second.next_hops.try_emplace(next_hop, NextHop{PriceWindow(window_capacity_), true}).first;
  hop->second.window.push(price, now);
  hop->second.enabled = true;
}

std::optional<std::pair<NodeAddr, Tokens>>
Fib::min_cost_hop(const Name& name, const std::set<NodeAddr>& exclude) const
{
  const auto& components = name.components();
  for (std::size_t len = components.size(); len > 0; --len) {
    Name prefix(std::vector<std::string>(components.begin(), components.begin() + len));
    auto it = entries_.find(prefix);
    if (it == entries_.end())
      continue;

    std::optional<std::pair<NodeAddr, Tokens>> best;
    // map iteration is in ascending address order, so strict < keeps the lowest on ties
    for (const auto& [addr, hop] : it->second.next_hops) {
      if (!hop.enabled || hop.window.empty() || exclude.count(addr) != 0)
        continue;
      Tokens m = hop.window.min();
      if (!best || m < best->second)
        best = std::make_pair(addr, m);
    }
    if (best)
      return best;
  }
  return std::nullopt;
}

std::optional<Name>
Fib::longest_prefix(const Name& name) const
{
  const auto& components = name.components();
  for (std::size_t len = components.size(); len > 0; --len) {
    Name prefix(std::vector<std::string>(components.begin(), components.begin() + len));
    if (entries_.count(prefix) != 0)
      return prefix;
  }
  return std::nullopt;
}

void
Fib::set_enabled(const NodeAddr& neighbor, bool enabled)
{
  for (auto& [prefix, entry] : entries_) {
    auto it = entry.next_hops.find(neighbor);
    if (it != entry.next_hops.end())
      it->second.enabled = enabled;
  }
}

const FibEntry*
Fib::find_exact(const Name& prefix) const
{
  auto it = entries_.find(prefix);
  return it == entries_.end() ? nullptr : &it->second;
}

// ---- ContentStore ----------------------------------------------------------

std::optional<Bytes>
ContentStore::lookup(const Name& name)
{
  auto it = index_.find(name);
  if (it == index_.end())
    return std::nullopt;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->second;
}

void
ContentStore::insert(const Name& name, Bytes payload)
{
  if (payload.size() > capacity_)
    return;
  if (auto it = index_.find(name); it != index_.end())
    erase(it->second);
  while (used_ + payload.size() > capacity_)
    erase(std::prev(lru_.end()));
  used_ += payload.size();
  lru_.emplace_front(name, std::move(payload));
  index_[name] = lru_.begin();
}

void
ContentStore::erase(std::list<std::pair<Name, Bytes>>::iterator it)
{
  used_ -= it->second.size();
  index_.erase(it->first);
  lru_.erase(it);
}

// ---- NodeTables ------------------------------------------------------------

NodeTables::NodeTables(const TableConfig& cfg)
  : fib(cfg.window_capacity)
  , cs(cfg.cs_capacity_bytes)
  , keepalive_(cfg.keepalive)
{
}

bool
NodeTables::keepalive_heard(const NodeAddr& neighbor, SimTime now)
{
  auto [it, created] = neighbors_.try_emplace(neighbor, NeighborLiveness{neighbor, now, true});
  bool revived = created || !it->second.alive;
  it->second.last_seen = now;
  it->second.alive = true;
  fib.set_enabled(neighbor, true);
  return revived;
}

std::vector<NodeAddr>
NodeTables::keepalive_sweep(SimTime now)
{
  std::vector<NodeAddr> dead;
  for (auto& [addr, n] : neighbors_) {
    if (n.alive && now - n.last_seen >= keepalive_.timeout) {
      n.alive = false;
      fib.set_enabled(addr, false);
      dead.push_back(addr);
    }
  }
  return dead;
}

bool
NodeTables::is_alive(const NodeAddr& neighbor) const
{
  auto it = neighbors_.find(neighbor);
  return it != neighbors_.end() && it->second.alive;
}

} // namespace r2p2
