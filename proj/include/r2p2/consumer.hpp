#pragma once

// Consumer application: path discovery, path selection, chunk fetching with payment,
// and proof-of-forwarding verification.

#include "r2p2/forwarding.hpp"

namespace r2p2 {

struct ConsumerConfig
{
  SimTime discovery_wait = ms(300);
  unsigned max_discovery_rounds = 5;
  unsigned max_attempts_per_chunk = 12;
  SimTime nack_backoff = ms(100);
  unsigned failures_before_refresh = 2; ///< failed attempts on one path before rediscovering
  std::size_t paths_kept = 4; ///< trusted paths remembered per prefix, cheapest first
};

struct FetchResult
{
  std::uint64_t id = 0;
  NodeAddr consumer;
  Name name;
  bool success = false;
  std::string failure;
  SimTime started{};
  SimTime finished{};
  std::size_t chunks = 0;
  std::size_t chunks_done = 0;
  unsigned attempts = 0;
  unsigned discovery_rounds = 0;
  Tokens paid = 0;                       ///< voucher / direct payment total
  std::optional<Tokens> price;           ///< advertised price of the first path used
  std::vector<NodeAddr> route;           ///< last path used, consumer first
  std::vector<std::string> pof_failures; ///< "<index>:<failure>" per rejected chunk
  std::size_t rerouted_chunks = 0;       ///< accepted with a chain that differs from the chosen path
};

class ConsumerApp : public LocalApp
{
public:
  ConsumerApp(Forwarder& fwd, ConsumerConfig cfg = {});

  /// Fetches every chunk group of a published prefix, or one group <prefix>/<k>.
  std::uint64_t
  start_fetch(const Name& name, Tokens margin, SimTime now, Outcome& out);

  void
  on_timer(std::uint64_t token, SimTime now, Outcome& out);

  void
  on_path(const DiscoveredPath& path, SimTime now, Outcome& out) override;

  void
  on_data(const Data& data, SimTime now, Outcome& out) override;

  void
  on_nack(const Nack& nack, SimTime now, Outcome& out) override;

  const std::vector<FetchResult>&
  results() const
  {
    return results_;
  }

  /// Paths learned so far, cheapest first.
  const std::map<Name, std::vector<DiscoveredPath>>&
  paths() const
  {
    return paths_;
  }

  /// signatures_verified, chunks_verified, pof_rejections
  const Counters&
  counters() const
  {
    return counters_;
  }

  bool
  idle() const
  {
    return fetches_.empty();
  }

private:
  enum class Phase { Discovering, Fetching, Backoff };

  struct Fetch
  {
    std::uint64_t id = 0;
    Name prefix;                ///< discovery prefix
    std::vector<Name> groups;
    std::size_t next_group = 0;
    std::uint32_t packet_count = 1;
    std::uint32_t packet_size = 0;
    Tokens margin = 0;
    Phase phase = Phase::Discovering;
    std::uint32_t generation = 0;
    unsigned rounds = 0;
    unsigned chunk_attempts = 0;
    unsigned path_failures = 0;
    std::optional<DiscoveredPath> path;
    std::map<std::uint64_t, Data> received;
    std::set<Nonce> nonces; ///< Interests of the current attempt
    std::size_t result = 0; ///< index into results_
  };

  void
  discover(Fetch& f, SimTime now, Outcome& out);

  void
  send_chunk(Fetch& f, SimTime now, Outcome& out);

  void
  retry_chunk(Fetch& f, SimTime now, Outcome& out);

  bool
  path_failed(Fetch& f, SimTime now, Outcome& out);

  void
  chunk_complete(Fetch& f, SimTime now, Outcome& out);

  void
  finish(Fetch& f, bool success, std::string failure, SimTime now);

  void
  distrust(const Name& prefix, const std::vector<NodeAddr>& route);

  void
  arm(Fetch& f, SimTime delay, Outcome& out);

  const DiscoveredPath*
  best_path(const Name& prefix) const;

  Fetch*
  fetch_for(const Name& name);

  Forwarder& fwd_;
  ConsumerConfig cfg_;
  std::map<Name, std::vector<DiscoveredPath>> paths_;
  std::map<Name, std::set<std::vector<NodeAddr>>> stale_; ///< failing routes, cleared when rediscovered
  std::map<std::uint64_t, Fetch> fetches_;
  std::vector<FetchResult> results_;
  Counters counters_;
  std::uint64_t next_id_ = 1;
};

} // namespace r2p2
