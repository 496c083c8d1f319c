#pragma once

#include "r2p2/wire.hpp"

#include <deque>
#include <list>
#include <map>
#include <set>

namespace r2p2 {

// ---- PIT -------------------------------------------------------------------

enum class PitInsertResult { New, Aggregated, DuplicateNonce };

struct PitDownstream
{
  NodeAddr addr;
  Nonce nonce = 0;
  SimTime expiry{};
};

struct PitEntry
{
  Name name;
  std::vector<PitDownstream> downstreams; ///< insertion order
  SimTime created{};
};

inline constexpr std::uint32_t default_interest_lifetime_ms = 4000;

class Pit
{
public:
  /// A repeated downstream with a fresh nonce (a retransmission) refreshes its record.
  PitInsertResult
  insert(const Name& name, const NodeAddr& downstream, Nonce nonce, SimTime now,
         SimTime lifetime = ms(default_interest_lifetime_ms));

  /// Returns the unexpired downstreams in insertion order and removes the entry.
  std::vector<std::pair<NodeAddr, Nonce>>
  consume(const Name& name, SimTime now);

  /// Like consume() but leaves the entry in place.
  std::vector<std::pair<NodeAddr, Nonce>>
  downstreams(const Name& name, SimTime now) const;

  const PitEntry*
  find(const Name& name) const;

  /// Drops expired downstreams and empty entries.
  void
  expire(SimTime now);

  const std::map<Name, PitEntry>&
  entries() const
  {
    return entries_;
  }

private:
  std::map<Name, PitEntry> entries_;
};

// ---- FIB -------------------------------------------------------------------

/// Bounded FIFO of observed prices with O(1) amortised minimum.
class PriceWindow
{
public:
  struct Sample
  {
    Tokens price = 0;
    SimTime observed{};
  };

  explicit PriceWindow(std::size_t capacity = 8);

  void
  push(Tokens price, SimTime observed);

  /// Minimum of the retained samples; requires !empty().
  Tokens
  min() const;

  bool
  empty() const
  {
    return samples_.empty();
  }

  std::size_t
  size() const
  {
    return samples_.size();
  }

  std::size_t
  capacity() const
  {
    return capacity_;
  }

  const std::deque<Sample>&
  samples() const
  {
    return samples_;
  }

private:
  std::size_t capacity_;
  std::deque<Sample> samples_;
  std::uint64_t pushed_ = 0;
  // (sequence number, price) pairs with strictly increasing prices
  std::deque<std::pair<std::uint64_t, Tokens>> minima_;
};

struct NextHop
{
  PriceWindow window;
  bool enabled = true;
};

struct FibEntry
{
  Name prefix;
  std::map<NodeAddr, NextHop> next_hops;
};

class Fib
{
public:
  explicit Fib(std::size_t window_capacity = 8)
    : window_capacity_(window_capacity)
  {
  }

  void
  update(const Name& prefix, const NodeAddr& next_hop, Tokens price, SimTime now);

  /// Longest-prefix match of `name` (chunk index ignored) among entries that have at least
  /// one enabled, sampled next hop; returns the hop with the smallest window minimum, ties
  /// to the lowest address.
  std::optional<std::pair<NodeAddr, Tokens>>
  min_cost_hop(const Name& name, const std::set<NodeAddr>& exclude = {}) const;

  /// Longest FIB prefix covering `name`, regardless of next-hop state.
  std::optional<Name>
  longest_prefix(const Name& name) const;

  /// Enables or disables `neighbor` as next hop in every entry.
  void
  set_enabled(const NodeAddr& neighbor, bool enabled);

  const FibEntry*
  find_exact(const Name& prefix) const;

  const std::map<Name, FibEntry>&
  entries() const
  {
    return entries_;
  }

private:
  std::size_t window_capacity_;
  std::map<Name, FibEntry> entries_;
};

// ---- keep-alive ------------------------------------------------------------

struct NeighborLiveness
{
  NodeAddr neighbor;
  SimTime last_seen{};
  bool alive = true;
};

struct KeepAliveConfig
{
  SimTime period = ms(100);
  SimTime timeout = ms(300);
};

// ---- content store ---------------------------------------------------------

class ContentStore
{
public:
  explicit ContentStore(std::size_t capacity_bytes = 1 << 20)
    : capacity_(capacity_bytes)
  {
  }

  std::optional<Bytes>
  lookup(const Name& name);

  /// LRU insert; a payload larger than the whole capacity is ignored.
  void
  insert(const Name& name, Bytes payload);

  std::size_t
  bytes_used() const
  {
    return used_;
  }

  std::size_t
  capacity() const
  {
    return capacity_;
  }

  std::size_t
  size() const
  {
    return index_.size();
  }

  /// Most recently used first.
  const std::list<std::pair<Name, Bytes>>&
  entries() const
  {
    return lru_;
  }

private:
  void
  erase(std::list<std::pair<Name, Bytes>>::iterator it);

  std::size_t capacity_;
  std::size_t used_ = 0;
  std::list<std::pair<Name, Bytes>> lru_;
  std::map<Name, std::list<std::pair<Name, Bytes>>::iterator> index_;
};

// ---- per-node bundle -------------------------------------------------------

struct TableConfig
{
  std::size_t window_capacity = 8;
  KeepAliveConfig keepalive;
  std::size_t cs_capacity_bytes = 1 << 20;
};

class NodeTables
{
public:
  explicit NodeTables(const TableConfig& cfg = {});

  Pit pit;
  Fib fib;
  ContentStore cs;

  /// Records a keep-alive from `neighbor`; re-enables its FIB next hops.
  /// Returns true if the neighbour was previously dead or unknown.
  bool
  keepalive_heard(const NodeAddr& neighbor, SimTime now);

  /// Disables every neighbour with now - last_seen >= timeout; returns the newly dead.
  std::vector<NodeAddr>
  keepalive_sweep(SimTime now);

  bool
  is_alive(const NodeAddr& neighbor) const;

  const std::map<NodeAddr, NeighborLiveness>&
  neighbors() const
  {
    return neighbors_;
  }

  const KeepAliveConfig&
  keepalive_config() const
  {
    return keepalive_;
  }

private:
  KeepAliveConfig keepalive_;
  std::map<NodeAddr, NeighborLiveness> neighbors_;
};

} // namespace r2p2
