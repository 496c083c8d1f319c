#pragma once

// Deterministic discrete-event simulator. Events run in (time, seq) order; time is integer
// microseconds. Packets cross links in their encoded form.

#include "r2p2/consumer.hpp"
#include "r2p2/scenario.hpp"

#include <iosfwd>
#include <queue>

namespace r2p2 {

struct SimOptions
{
  std::optional<std::uint64_t> seed; ///< overrides the scenario seed
  bool trace_keepalives = false;
};

class Simulator
{
public:
  explicit Simulator(Scenario scenario, SimOptions options = {});
  ~Simulator();

  Simulator(const Simulator&) = delete;
  Simulator&
  operator=(const Simulator&) = delete;

  /// Runs to the scenario duration, then settles every open channel.
  void
  run();

  const Scenario&
  scenario() const
  {
    return sc_;
  }

  std::uint64_t
  seed() const
  {
    return seed_;
  }

  const std::vector<nlohmann::json>&
  trace() const
  {
    return trace_;
  }

  const payment::Ledger&
  ledger() const
  {
    return ledger_;
  }

  Forwarder&
  node(const std::string& id);

  ConsumerApp&
  app(const std::string& id);

  const std::string&
  id_of(const NodeAddr& addr) const;

  Tokens
  initial_supply() const
  {
    return initial_supply_;
  }

  /// Token balance of a node's ledger account at the start of the run.
  Tokens
  initial_balance(const std::string& id) const;

  std::uint64_t
  events_processed() const
  {
    return events_;
  }

  nlohmann::json
  report() const;

  /// Post-run trace audit; empty when every invariant holds.
  std::vector<std::string>
  audit() const;

  void
  write_trace(std::ostream& os) const;

  /// One NDJSON record per table entry per node.
  void
  write_state(std::ostream& os) const;

private:
  struct NodeSlot;
  struct Event;
  struct EventOrder
  {
    bool
    operator()(const Event& x, const Event& y) const;
  };
  struct LinkState
  {
    std::size_t a = 0;
    std::size_t b = 0;
    bool up = true;
    SimTime busy_until[2]{}; ///< per direction: a->b, b->a
  };

  void
  schedule(Event ev);

  void
  dispatch(const Event& ev);

  void
  apply(std::size_t node, Outcome&& out, SimTime now);

  void
  transmit(std::size_t node, const Emission& em, SimTime now);

  void
  send_on_link(std::size_t node, std::size_t link, const Packet& pkt, const Bytes& bytes, bool broadcast,
               SimTime now);

  void
  record(nlohmann::json ev);

  nlohmann::json
  route_ids(const std::vector<NodeAddr>& route) const;

  std::size_t
  index_of(const std::string& id) const;

  Scenario sc_;
  SimOptions opts_;
  std::uint64_t seed_;
  ContentCatalog catalog_;
  payment::Ledger ledger_;
  payment::KeyRing keys_;
  pof::KeyDirectory directory_;
  std::vector<std::unique_ptr<NodeSlot>> nodes_;
  std::map<NodeAddr, std::size_t> by_addr_;
  std::vector<LinkState> links_;
  std::vector<std::vector<std::size_t>> adjacency_; ///< node -> link indices
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::mt19937_64 rng_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_pid_ = 0;
  std::uint64_t events_ = 0;
  SimTime now_{};
  Tokens initial_supply_ = 0;
  std::map<std::string, Tokens> initial_balance_;
  std::vector<nlohmann::json> trace_;
  bool ran_ = false;
};

/// Checks a finished run against the protocol's trace-level invariants.
std::vector<std::string>
audit_run(const Simulator& sim);

} // namespace r2p2
