#pragma once

// Per-node forwarding engine: route discovery, hybrid Interest forwarding
// (source routing -> minimum cost -> rediscovery), proof-of-forwarding at relays,
// and hop-by-hop payment processing.

#include "r2p2/path.hpp"
#include "r2p2/payment.hpp"
#include "r2p2/pof.hpp"
#include "r2p2/tables.hpp"

#include <json.hpp>

#include <deque>
#include <memory>
#include <random>
#include <set>

namespace r2p2 {

enum class PaymentMode { None, HopByHop, PayAll };
enum class PofMode { ChunkLevel, PacketLevel, StoreAndForward };

std::string_view
to_string(PaymentMode m);

std::string_view
to_string(PofMode m);

struct NodeConfig
{
  std::string id; ///< human label, e.g. "A"
  NodeAddr addr;
  Tokens forwarding_cost = 0;
  std::vector<Name> producer_prefixes;
  std::string broadcast_policy = "nonce-budget";
};

/// Published content: `chunks` groups named <prefix>/<k>, each of `packet_count` packets.
struct ContentSpec
{
  Name prefix;
  std::uint32_t chunks = 1;
  std::uint32_t packet_count = 16;
  std::uint32_t packet_size = 1500;
};

using ContentCatalog = std::map<Name, ContentSpec>;

/// Catalog entry whose prefix covers `name`, if any.
const ContentSpec*
find_content(const ContentCatalog& catalog, const Name& name);

/// Deterministic payload for one packet of published content.
Bytes
generate_payload(const Name& packet_name, std::uint32_t size);

enum class StrategyMode { SourceRouted, MinCost, Rediscovery };

std::string_view
to_string(StrategyMode m);

struct StrategyDecision
{
  enum class Action { ForwardUnicast, Broadcast, Nack, Drop, Satisfy };

  Action action = Action::Drop;
  std::optional<NodeAddr> next;
  std::optional<NackReason> reason;
  std::optional<StrategyMode> mode; ///< set for source-routed Interests
  std::string detail;               ///< drop / diagnostic reason

  // diagnostics consumed by the trace auditor
  std::optional<NodeAddr> named_next;
  bool named_next_alive = false;
  bool any_enabled_hop = false;
};

std::string_view
to_string(StrategyDecision::Action a);

/// A packet leaving a node; `to` empty means link-layer broadcast.
struct Emission
{
  Packet packet;
  std::optional<NodeAddr> to;
};

/// Everything a node handler produced.
struct Outcome
{
  std::vector<Emission> emissions;
  std::optional<StrategyDecision> decision;
  std::vector<std::pair<SimTime, std::uint64_t>> timers; ///< (delay, token) for the local app
  std::vector<nlohmann::json> notes;                     ///< trace annotations

  void
  append(Outcome&& other);
};

/// Rebroadcast admission for discovery Interests.
class BroadcastPolicy
{
public:
  virtual ~BroadcastPolicy() = default;

  /// Called once per received (or originated) discovery Interest that is not a duplicate
  /// of the same (downstream, nonce); returns whether it may be rebroadcast.
  virtual bool
  admit(const Interest& interest, SimTime now) = 0;

  virtual std::string
  name() const = 0;
};

/// Duplicate-nonce suppression with a per-nonce rebroadcast budget.
class NonceBudgetPolicy : public BroadcastPolicy
{
public:
  explicit NonceBudgetPolicy(unsigned budget = 1)
    : budget_(budget)
  {
  }

  bool
  admit(const Interest& interest, SimTime now) override;

  std::string
  name() const override;

private:
  unsigned budget_;
  std::map<Nonce, unsigned> used_;
};

/// "nonce-budget" or "nonce-budget:<n>". Throws InvalidArgument for unknown ids.
std::unique_ptr<BroadcastPolicy>
make_broadcast_policy(std::string_view id);

/// Strict round-robin over flows that lost their routes. New flows join at the tail.
class RoundRobinSelector
{
public:
  /// Picks the next flow among `pending`; flows absent from `pending` leave the rotation.
  std::optional<Name>
  select(std::span<const Name> pending);

  const std::deque<Name>&
  rotation() const
  {
    return order_;
  }

private:
  std::deque<Name> order_;
};

/// Discovery reply: route = [downstream (top), self], price = cost.
Data
producer_answer_discovery(const Interest& interest, Tokens cost, const NodeAddr& self,
                          const NodeAddr& downstream);

/// Shared, simulation-owned services.
struct NetworkServices
{
  payment::Ledger* ledger = nullptr;
  const payment::KeyRing* keys = nullptr;
  const pof::KeyDirectory* directory = nullptr;
  const ContentCatalog* catalog = nullptr;
  PaymentMode payment_mode = PaymentMode::None;
  Tokens channel_deposit = 1000;
};

struct ForwarderConfig
{
  TableConfig tables;
  PofMode pof_mode = PofMode::ChunkLevel;
  std::uint32_t interest_lifetime_ms = default_interest_lifetime_ms;
  std::uint64_t rng_seed = 0;
};

/// Hooks into the node's local application (consumer side).
class LocalApp
{
public:
  virtual ~LocalApp() = default;

  virtual void
  on_path(const DiscoveredPath& path, SimTime now, Outcome& out) = 0;

  virtual void
  on_data(const Data& data, SimTime now, Outcome& out) = 0;

  virtual void
  on_nack(const Nack& nack, SimTime now, Outcome& out) = 0;
};

using Counters = std::map<std::string, std::uint64_t>;

struct RelayDelayStats
{
  std::uint64_t packets = 0;
  SimTime max_delay{};           ///< over all forwarded content packets
  SimTime max_nonfinal_delay{};  ///< excluding final-index packets
  SimTime max_first_packet_delay{}; ///< index-0 packets
};

class Forwarder
{
public:
  Forwarder(NodeConfig cfg, const ForwarderConfig& fcfg, NetworkServices services);

  void
  set_app(LocalApp* app)
  {
    app_ = app;
  }

  Outcome
  on_interest(const Interest& pkt, const NodeAddr& from, SimTime now);

  Outcome
  on_data(const Data& pkt, const NodeAddr& from, SimTime now);

  Outcome
  on_nack(const Nack& pkt, const NodeAddr& from, SimTime now);

  Outcome
  on_keepalive(const KeepAlive& pkt, const NodeAddr& from, SimTime now);

  /// Periodic housekeeping: keep-alive beacon, liveness sweep, PIT and assembly expiry.
  Outcome
  on_tick(SimTime now);

  /// Sends an Interest originated by the local application (records the PIT entry).
  Outcome
  originate_interest(Interest interest, SimTime now);

  /// Starts a discovery round for `prefix` from this node.
  Interest
  make_discovery_interest(const Name& prefix);

  bool
  produces(const Name& name) const;

  Nonce
  next_nonce()
  {
    return rng_();
  }

  const NodeConfig&
  config() const
  {
    return cfg_;
  }

  const NodeAddr&
  addr() const
  {
    return cfg_.addr;
  }

  NodeTables&
  tables()
  {
    return tables_;
  }

  const NodeTables&
  tables() const
  {
    return tables_;
  }

  const Counters&
  counters() const
  {
    return counters_;
  }

  const RelayDelayStats&
  relay_delays() const
  {
    return relay_delays_;
  }

  const crypto::KeyPair&
  key() const;

  PofMode
  pof_mode() const
  {
    return pof_mode_;
  }

  const NetworkServices&
  services() const
  {
    return svc_;
  }

  std::uint32_t
  interest_lifetime_ms() const
  {
    return lifetime_ms_;
  }

  /// Opens this node's payment channel toward `payee` if none is open. Returns its id,
  /// or nothing when the account cannot fund the deposit.
  std::optional<payment::ChannelId>
  ensure_channel(const NodeAddr& payee);

private:
  struct HeldPacket
  {
    Data data;
    std::vector<std::pair<NodeAddr, Nonce>> downstreams;
    SimTime arrived{};
  };

  struct RelayAssembly
  {
    pof::ChunkAssembly assembly;
    std::vector<HeldPacket> held;
  };

  void
  count(const std::string& name, std::uint64_t n = 1)
  {
    counters_[name] += n;
  }

  Outcome
  on_discovery_interest(const Interest& pkt, const NodeAddr& from, SimTime now);

  Outcome
  on_routed_interest(const Interest& pkt, const NodeAddr& from, SimTime now);

  Outcome
  on_discovery_data(const Data& pkt, const NodeAddr& from, SimTime now);

  Outcome
  on_content_data(const Data& pkt, const NodeAddr& from, SimTime now);

  Outcome
  serve_content(const Interest& pkt, const NodeAddr& downstream, SimTime now);

  /// Applies the relay's share of a hop-by-hop payment; returns the Nack reason on failure.
  std::optional<NackReason>
  process_payment(Interest& fwd, const NodeAddr& next, bool final_hop, SimTime now);

  void
  relay_content(Outcome& out, Data data, const std::vector<std::pair<NodeAddr, Nonce>>& downs,
                SimTime arrived, SimTime now);

  void
  sign_for_relay(Data& data, const Bytes& payload, const pof::ChunkDescriptor& desc);

  void
  record_mode(const Name& flow, StrategyMode mode);

  Name
  flow_of(const Name& name) const;

  NodeConfig cfg_;
  NetworkServices svc_;
  NodeTables tables_;
  PofMode pof_mode_;
  std::uint32_t lifetime_ms_;
  std::unique_ptr<BroadcastPolicy> policy_;
  RoundRobinSelector rediscovery_;
  std::set<Name> routeless_flows_;
  SimTime next_rediscovery_slot_{};
  std::map<Name, RelayAssembly> assemblies_;
  std::map<Name, StrategyMode> last_mode_;
  Counters counters_;
  RelayDelayStats relay_delays_;
  std::mt19937_64 rng_;
  std::uint64_t keepalive_seq_ = 0;
  LocalApp* app_ = nullptr;
};

} // namespace r2p2
