#pragma once

// Scenario files: topology, content catalog, defaults and a timed schedule.

#include "r2p2/forwarding.hpp"

#include <filesystem>
#include <variant>

namespace r2p2 {

class ScenarioError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ScenarioDefaults
{
  std::uint32_t keepalive_period_ms = 100;
  std::uint32_t keepalive_timeout_ms = 300;
  std::size_t window_capacity = 8;
  std::uint32_t interest_lifetime_ms = default_interest_lifetime_ms;
  std::uint32_t chunk_packets = 16;
  std::uint32_t packet_size = 1500;
  PofMode pof_mode = PofMode::ChunkLevel;
  PaymentMode payment_mode = PaymentMode::HopByHop;
  Tokens account_balance = 1'000'000;
  Tokens channel_deposit = 100'000;
  double link_bandwidth_mbps = 10.0;
  std::size_t cs_capacity_bytes = 1 << 20;
};

struct LinkSpec
{
  std::string a;
  std::string b;
  SimTime latency = ms(1);
  bool up = true;
  double drop = 0.0;
  double bandwidth_mbps = 10.0;
};

struct FetchAction
{
  std::string node;
  Name name;
  Tokens margin = 0;
};

struct LinkAction
{
  std::string a;
  std::string b;
  bool up = true;
};

struct ScheduledAction
{
  SimTime at{};
  std::variant<FetchAction, LinkAction> action;
};

struct Scenario
{
  std::string name;
  std::uint64_t seed = 1;
  SimTime duration = ms(10'000);
  ScenarioDefaults defaults;
  std::vector<NodeConfig> nodes;
  std::vector<LinkSpec> links;
  std::vector<ContentSpec> content;
  std::vector<ScheduledAction> schedule; ///< sorted by time, stable

  const NodeConfig&
  node(const std::string& id) const;

  /// Index of the link joining two node ids, either orientation.
  std::optional<std::size_t>
  link_between(const std::string& a, const std::string& b) const;
};

/// Parses and validates scenario text. Throws ScenarioError with a readable reason.
Scenario
parse_scenario(const std::string& text, const std::string& name = "scenario");

Scenario
load_scenario(const std::filesystem::path& path);

/// Resolves a scenario argument: an existing path, or a file in $R2P2_SCENARIO_DIR.
std::filesystem::path
resolve_scenario_path(const std::string& arg);

PofMode
parse_pof_mode(std::string_view s);

PaymentMode
parse_payment_mode(std::string_view s);

} // namespace r2p2
