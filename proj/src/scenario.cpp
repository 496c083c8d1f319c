#include "r2p2/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace r2p2 {

namespace {

[[noreturn]] void
fail(const YAML::Node& node, const std::string& what)
{
  auto mark = node.Mark();
  if (mark.line >= 0)
    throw ScenarioError("line " + std::to_string(mark.line + 1) + ": " + what);
  throw ScenarioError(what);
}

void
check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<std::string_view> allowed)
{
  if (!node.IsMap())
    fail(node, where + " must be a mapping");
  for (const auto& kv : node) {
    auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail(kv.first, "unknown field '" + key + "' in " + where);
  }
}

template<typename T>
T
scalar(const YAML::Node& node, const std::string& what)
{
  if (!node.IsScalar())
    fail(node, what + " must be a scalar");
  try {
    return node.as<T>();
  }
  catch (const YAML::Exception&) {
    fail(node, "invalid value '" + node.Scalar() + "' for " + what);
  }
}

template<typename T>
T
get(const YAML::Node& map, const std::string& key, T fallback, const std::string& where)
{
  auto n = map[key];
  if (!n)
    return fallback;
  return scalar<T>(n, where + "." + key);
}

template<typename T>
T
require(const YAML::Node& map, const std::string& key, const std::string& where)
{
  auto n = map[key];
  if (!n)
    fail(map, "missing field '" + key + "' in " + where);
  return scalar<T>(n, where + "." + key);
}

/// Non-negative integer; rejects the wrap-around yaml-cpp allows for "-1".
std::uint64_t
unsigned_field(const YAML::Node& map, const std::string& key, std::uint64_t fallback, const std::string& where,
               bool required = false)
{
  auto n = map[key];
  if (!n) {
    if (required)
      fail(map, "missing field '" + key + "' in " + where);
    return fallback;
  }
  auto text = scalar<std::string>(n, where + "." + key);
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    fail(n, where + "." + key + " must be a non-negative integer, got '" + text + "'");
  try {
    return std::stoull(text);
  }
  catch (const std::exception&) {
    fail(n, where + "." + key + " is out of range");
  }
}

Name
parse_name(const YAML::Node& n, const std::string& what)
{
  try {
    return Name::parse(scalar<std::string>(n, what));
  }
  catch (const InvalidArgument& e) {
    fail(n, what + ": " + e.what());
  }
}

} // namespace

PofMode
parse_pof_mode(std::string_view s)
{
  if (s == "chunk")
    return PofMode::ChunkLevel;
  if (s == "packet")
    return PofMode::PacketLevel;
  if (s == "store-and-forward")
    return PofMode::StoreAndForward;
  throw ScenarioError("unknown pof_mode '" + std::string(s) + "' (chunk, packet, store-and-forward)");
}

PaymentMode
parse_payment_mode(std::string_view s)
{
  if (s == "none")
    return PaymentMode::None;
  if (s == "hop-by-hop")
    return PaymentMode::HopByHop;
  if (s == "pay-all")
    return PaymentMode::PayAll;
  throw ScenarioError("unknown payment_mode '" + std::string(s) + "' (none, hop-by-hop, pay-all)");
}

const NodeConfig&
Scenario::node(const std::string& id) const
{
  for (const auto& n : nodes)
    if (n.id == id)
      return n;
  throw ScenarioError("unknown node '" + id + "'");
}

std::optional<std::size_t>
Scenario::link_between(const std::string& a, const std::string& b) const
{
  for (std::size_t i = 0; i < links.size(); ++i)
    if ((links[i].a == a && links[i].b == b) || (links[i].a == b && links[i].b == a))
      return i;
  return std::nullopt;
}

Scenario
parse_scenario(const std::string& text, const std::string& name)
{
  YAML::Node root;
  try {
    root = YAML::Load(text);
  }
  catch (const YAML::Exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  if (!root || !root.IsMap())
    throw ScenarioError("scenario must be a mapping");
  check_keys(root, "scenario", {"version", "seed", "duration_ms", "defaults", "nodes", "links", "content", "schedule"});

  Scenario sc;
  sc.name = name;
  auto version = unsigned_field(root, "version", 0, "scenario", true);
  if (version != 1)
    fail(root["version"], "unsupported scenario version " + std::to_string(version));
  sc.seed = unsigned_field(root, "seed", 1, "scenario");
  auto duration_ms = unsigned_field(root, "duration_ms", 10'000, "scenario");
  if (duration_ms == 0)
    fail(root["duration_ms"], "duration_ms must be positive");
  sc.duration = ms(static_cast<std::int64_t>(duration_ms));

  auto& d = sc.defaults;
  if (auto dn = root["defaults"]) {
    const std::string w = "defaults";
    check_keys(dn, w, {"keepalive_period_ms", "keepalive_timeout_ms", "window_capacity", "interest_lifetime_ms",
                       "chunk_packets", "packet_size", "pof_mode", "payment_mode", "account_balance",
                       "channel_deposit", "link_bandwidth_mbps", "cs_capacity_bytes"});
    d.keepalive_period_ms = static_cast<std::uint32_t>(unsigned_field(dn, "keepalive_period_ms", d.keepalive_period_ms, w));
    d.keepalive_timeout_ms =
      static_cast<std::uint32_t>(unsigned_field(dn, "keepalive_timeout_ms", d.keepalive_timeout_ms, w));
    d.window_capacity = unsigned_field(dn, "window_capacity", d.window_capacity, w);
    d.interest_lifetime_ms =
      static_cast<std::uint32_t>(unsigned_field(dn, "interest_lifetime_ms", d.interest_lifetime_ms, w));
    d.chunk_packets = static_cast<std::uint32_t>(unsigned_field(dn, "chunk_packets", d.chunk_packets, w));
    d.packet_size = static_cast<std::uint32_t>(unsigned_field(dn, "packet_size", d.packet_size, w));
    d.account_balance = unsigned_field(dn, "account_balance", d.account_balance, w);
    d.channel_deposit = unsigned_field(dn, "channel_deposit", d.channel_deposit, w);
    d.cs_capacity_bytes = unsigned_field(dn, "cs_capacity_bytes", d.cs_capacity_bytes, w);
    d.link_bandwidth_mbps = get<double>(dn, "link_bandwidth_mbps", d.link_bandwidth_mbps, w);
    try {
      if (dn["pof_mode"])
        d.pof_mode = parse_pof_mode(scalar<std::string>(dn["pof_mode"], "defaults.pof_mode"));
      if (dn["payment_mode"])
        d.payment_mode = parse_payment_mode(scalar<std::string>(dn["payment_mode"], "defaults.payment_mode"));
    }
    catch (const ScenarioError& e) {
      fail(dn, e.what());
    }
  }
  if (d.keepalive_period_ms == 0)
    throw ScenarioError("keepalive_period_ms must be positive");
  if (d.keepalive_timeout_ms < d.keepalive_period_ms)
    throw ScenarioError("keepalive_timeout_ms must be at least one period");
  if (d.window_capacity == 0)
    throw ScenarioError("window_capacity must be positive");
  if (d.interest_lifetime_ms == 0)
    throw ScenarioError("interest_lifetime_ms must be positive");
  if (d.chunk_packets == 0)
    throw ScenarioError("chunk_packets must be positive");
  if (d.packet_size == 0 || d.packet_size > max_overlay_payload)
    throw ScenarioError("packet_size must be in 1.." + std::to_string(max_overlay_payload));
  if (!(d.link_bandwidth_mbps > 0))
    throw ScenarioError("link_bandwidth_mbps must be positive");

  // nodes
  auto nodes = root["nodes"];
  if (!nodes || !nodes.IsSequence() || nodes.size() == 0)
    throw ScenarioError("scenario needs a non-empty 'nodes' list");
  std::set<std::string> ids;
  std::set<NodeAddr> addrs;
  for (const auto& n : nodes) {
    const std::string w = "node";
    check_keys(n, w, {"id", "addr", "cost", "produces", "broadcast_policy"});
    NodeConfig nc;
    nc.id = require<std::string>(n, "id", w);
    if (nc.id.empty())
      fail(n, "node id must not be empty");
    try {
      nc.addr = NodeAddr::parse(require<std::string>(n, "addr", "node " + nc.id));
    }
    catch (const InvalidArgument& e) {
      fail(n["addr"], "node " + nc.id + ": " + e.what());
    }
    if (nc.addr.is_broadcast())
      fail(n["addr"], "node " + nc.id + " uses the broadcast address");
    nc.forwarding_cost = unsigned_field(n, "cost", 0, "node " + nc.id);
    if (auto p = n["produces"]) {
      if (p.IsScalar())
        nc.producer_prefixes.push_back(parse_name(p, "node " + nc.id + ".produces"));
      else if (p.IsSequence())
        for (const auto& e : p)
          nc.producer_prefixes.push_back(parse_name(e, "node " + nc.id + ".produces"));
      else
        fail(p, "node " + nc.id + ".produces must be a name or a list of names");
    }
    nc.broadcast_policy = get<std::string>(n, "broadcast_policy", nc.broadcast_policy, "node " + nc.id);
    try {
      make_broadcast_policy(nc.broadcast_policy);
    }
    catch (const InvalidArgument& e) {
      fail(n, e.what());
    }
    if (!ids.insert(nc.id).second)
      fail(n, "duplicate node id '" + nc.id + "'");
    if (!addrs.insert(nc.addr).second)
      fail(n, "duplicate node address " + nc.addr.to_string());
    sc.nodes.push_back(std::move(nc));
  }

  // links
  if (auto links = root["links"]) {
    if (!links.IsSequence())
      fail(links, "'links' must be a list");
    for (const auto& l : links) {
      const std::string w = "link";
      check_keys(l, w, {"a", "b", "latency_ms", "up", "drop", "bandwidth_mbps"});
      LinkSpec ls;
      ls.a = require<std::string>(l, "a", w);
      ls.b = require<std::string>(l, "b", w);
      for (const auto& end : {ls.a, ls.b})
        if (ids.count(end) == 0)
          fail(l, "link references unknown node '" + end + "'");
      if (ls.a == ls.b)
        fail(l, "self-link on node '" + ls.a + "'");
      if (sc.link_between(ls.a, ls.b))
        fail(l, "duplicate link " + ls.a + "-" + ls.b);
      auto latency = unsigned_field(l, "latency_ms", 1, w);
      if (latency == 0)
        fail(l, "link " + ls.a + "-" + ls.b + " needs a positive latency_ms");
      ls.latency = ms(static_cast<std::int64_t>(latency));
      ls.up = get<bool>(l, "up", true, w);
      ls.drop = get<double>(l, "drop", 0.0, w);
      if (!(ls.drop >= 0.0 && ls.drop < 1.0))
        fail(l, "link drop probability must be in [0, 1)");
      ls.bandwidth_mbps = get<double>(l, "bandwidth_mbps", d.link_bandwidth_mbps, w);
      if (!(ls.bandwidth_mbps > 0))
        fail(l, "link bandwidth_mbps must be positive");
      sc.links.push_back(ls);
    }
  }

  // content
  if (auto content = root["content"]) {
    if (!content.IsSequence())
      fail(content, "'content' must be a list");
    std::set<Name> prefixes;
    for (const auto& c : content) {
      const std::string w = "content";
      check_keys(c, w, {"prefix", "chunks", "packets", "packet_size"});
      ContentSpec cs;
      cs.prefix = parse_name(c["prefix"] ? c["prefix"] : c, "content.prefix").group();
      cs.chunks = static_cast<std::uint32_t>(unsigned_field(c, "chunks", 1, w));
      cs.packet_count = static_cast<std::uint32_t>(unsigned_field(c, "packets", d.chunk_packets, w));
      cs.packet_size = static_cast<std::uint32_t>(unsigned_field(c, "packet_size", d.packet_size, w));
      if (cs.chunks == 0 || cs.packet_count == 0)
        fail(c, "content " + cs.prefix.to_uri() + " needs positive chunks and packets");
      if (cs.packet_size == 0 || cs.packet_size > max_overlay_payload)
        fail(c, "content " + cs.prefix.to_uri() + " packet_size out of range");
      bool produced = std::any_of(sc.nodes.begin(), sc.nodes.end(), [&] (const NodeConfig& n) {
        return std::any_of(n.producer_prefixes.begin(), n.producer_prefixes.end(),
                           [&] (const Name& p) { return p.is_prefix_of(cs.prefix); });
      });
      if (!produced)
        fail(c, "no node produces content " + cs.prefix.to_uri());
      if (!prefixes.insert(cs.prefix).second)
        fail(c, "duplicate content prefix " + cs.prefix.to_uri());
      sc.content.push_back(cs);
    }
  }

  // schedule
  if (auto schedule = root["schedule"]) {
    if (!schedule.IsSequence())
      fail(schedule, "'schedule' must be a list");
    for (const auto& s : schedule) {
      const std::string w = "schedule entry";
      check_keys(s, w, {"at_ms", "fetch", "link", "up"});
      ScheduledAction act;
      auto at = unsigned_field(s, "at_ms", 0, w, true);
      if (at > duration_ms)
        fail(s, "schedule time " + std::to_string(at) + " ms is beyond duration_ms");
      act.at = ms(static_cast<std::int64_t>(at));
      if (auto f = s["fetch"]) {
        if (s["link"] || s["up"])
          fail(s, "schedule entry mixes fetch and link actions");
        check_keys(f, "fetch", {"node", "name", "margin"});
        FetchAction fa;
        fa.node = require<std::string>(f, "node", "fetch");
        if (ids.count(fa.node) == 0)
          fail(f, "fetch references unknown node '" + fa.node + "'");
        if (!f["name"])
          fail(f, "missing field 'name' in fetch");
        fa.name = parse_name(f["name"], "fetch.name");
        fa.margin = unsigned_field(f, "margin", 0, "fetch");
        act.action = fa;
      }
      else if (auto l = s["link"]) {
        if (!l.IsSequence() || l.size() != 2)
          fail(l, "link action needs [a, b]");
        LinkAction la;
        la.a = scalar<std::string>(l[0], "link end");
        la.b = scalar<std::string>(l[1], "link end");
        for (const auto& end : {la.a, la.b})
          if (ids.count(end) == 0)
            fail(l, "link action references unknown node '" + end + "'");
        if (!sc.link_between(la.a, la.b))
          fail(l, "link action on non-existent link " + la.a + "-" + la.b);
        if (!s["up"])
          fail(s, "link action needs 'up: true|false'");
        la.up = scalar<bool>(s["up"], "up");
        act.action = la;
      }
      else {
        fail(s, "schedule entry needs 'fetch' or 'link'");
      }
      sc.schedule.push_back(std::move(act));
    }
    std::stable_sort(sc.schedule.begin(), sc.schedule.end(),
                     [] (const ScheduledAction& x, const ScheduledAction& y) { return x.at < y.at; });
  }
  return sc;
}

Scenario
load_scenario(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw ScenarioError("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.stem().string());
}

std::filesystem::path
resolve_scenario_path(const std::string& arg)
{
  std::filesystem::path p(arg);
  if (std::filesystem::exists(p))
    return p;
  if (const char* dir = std::getenv("R2P2_SCENARIO_DIR")) {
    auto q = std::filesystem::path(dir) / p;
    if (std::filesystem::exists(q))
      return q;
  }
  return p;
}

} // namespace r2p2
