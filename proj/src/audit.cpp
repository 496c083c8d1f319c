#include "r2p2/simnet.hpp"

#include <set>
#include <sstream>

namespace r2p2 {

using nlohmann::json;

namespace {

struct TxInfo
{
  std::int64_t t = 0;
  std::int64_t arrive = 0;
  std::string node;
  std::string to;
  std::string kind;
  std::string name;
};

std::string
at(const json& ev)
{
  return "t=" + std::to_string(ev.value("t", std::int64_t{0})) + "us";
}

} // namespace

std::vector<std::string>
audit_run(const Simulator& sim)
{
  const auto& sc = sim.scenario();
  const auto& trace = sim.trace();
  std::vector<std::string> v;
  auto violation = [&] (const json& ev, const std::string& what) {
    if (v.size() < 100)
      v.push_back(at(ev) + " " + what);
  };

  std::map<std::string, Tokens> cost;
  for (const auto& n : sc.nodes)
    cost[n.id] = n.forwarding_cost;
  auto linked = [&] (const std::string& a, const std::string& b) { return sc.link_between(a, b).has_value(); };
  auto produces = [&] (const std::string& id, const std::string& uri) {
    auto name = Name::parse(uri);
    const auto& pp = sc.node(id).producer_prefixes;
    return std::any_of(pp.begin(), pp.end(), [&] (const Name& p) { return p.is_prefix_of(name); });
  };

  const auto timeout = ms(sc.defaults.keepalive_timeout_ms).count();
  const auto period = ms(sc.defaults.keepalive_period_ms).count();

  std::map<std::uint64_t, TxInfo> tx;
  std::set<std::pair<std::string, std::string>> data_seen; // (node, name) received Data
  std::map<std::pair<std::string, std::string>, bool> alive;       // (node, neighbor)
  std::map<std::pair<std::string, std::string>, std::int64_t> down_since; // link id pair
  std::map<std::pair<std::string, std::string>, std::int64_t> pending_down; // (node, neighbor) -> deadline
  std::int64_t last_t = 0;

  for (const auto& ev : trace) {
    auto t = ev.value("t", std::int64_t{0});
    if (t < last_t)
      violation(ev, "trace time went backwards");
    last_t = t;

    // overdue keep-alive detections expire as time passes
    for (auto it = pending_down.begin(); it != pending_down.end();) {
      if (t > it->second) {
        violation(ev, "keep-alive bound: " + it->first.first + " still treats " + it->first.second +
                        " as alive after its link went down");
        it = pending_down.erase(it);
      }
      else {
        ++it;
      }
    }

    const auto kind = ev.value("ev", std::string{});
    if (kind == "tx") {
      auto pid = ev.value("pid", std::uint64_t{0});
      TxInfo info{t, ev.value("arrive", t), ev.value("node", std::string{}), ev.value("to", std::string{}),
                  ev.value("kind", std::string{}), ev.value("name", std::string{})};
      tx[pid] = info;

      if (info.kind == "Data" && ev.value("bcast", false))
        violation(ev, "Data " + info.name + " broadcast by " + info.node);
      if (!info.to.empty() && !linked(info.node, info.to))
        violation(ev, "transmission over non-existent link " + info.node + "-" + info.to);

      if (ev.contains("route")) {
        std::vector<std::string> route = ev["route"];
        std::set<std::string> uniq(route.begin(), route.end());
        if (uniq.size() != route.size())
          violation(ev, "route with a repeated node on " + info.name);
        for (std::size_t i = 1; i < route.size(); ++i)
          if (!linked(route[i - 1], route[i]))
            violation(ev, "route hop " + route[i - 1] + "-" + route[i] + " is not a link");
        if (!route.empty() && !info.to.empty() && route.front() != info.to)
          violation(ev, "routed packet not addressed to its route top");
      }

      if (info.kind == "Data" && ev.value("discovery", false)) {
        std::vector<std::string> route = ev["route"];
        std::vector<Tokens> breakdown = ev["breakdown"];
        Tokens price = ev["price"];
        Tokens sum = 0;
        for (auto b : breakdown)
          sum += b;
        if (sum != price)
          violation(ev, "discovery price " + std::to_string(price) + " is not the sum of its breakdown");
        if (breakdown.size() + 1 != route.size()) {
          violation(ev, "price breakdown length does not match the route");
        }
        else {
          Tokens expected = 0;
          for (std::size_t i = 1; i < route.size(); ++i)
            expected += cost[route[i]];
          for (std::size_t i = 0; i < breakdown.size(); ++i)
            if (breakdown[i] != cost[route[route.size() - 1 - i]])
              violation(ev, "price breakdown entry " + std::to_string(i) + " differs from that node's cost");
          if (expected != price)
            violation(ev, "discovery price " + std::to_string(price) + " differs from route cost " +
                            std::to_string(expected));
        }
      }
      if (info.kind == "Data" && !ev.value("discovery", false) &&
          data_seen.count({info.node, info.name}) == 0 && !produces(info.node, info.name))
        violation(ev, info.node + " sent Data " + info.name + " it never received or produced");
    }
    else if (kind == "rx") {
      auto pid = ev.value("pid", std::uint64_t{0});
      auto it = tx.find(pid);
      if (it == tx.end()) {
        violation(ev, "reception of packet " + std::to_string(pid) + " that was never sent");
        continue;
      }
      const auto& info = it->second;
      auto node = ev.value("node", std::string{});
      if (t < info.arrive)
        violation(ev, "packet " + std::to_string(pid) + " received before its link could deliver it");
      if (node != info.to || ev.value("from", std::string{}) != info.node)
        violation(ev, "packet " + std::to_string(pid) + " received by the wrong node");
      if (info.kind == "Data")
        data_seen.insert({node, info.name});
    }
    else if (kind == "decision") {
      auto mode = ev.value("mode", std::string{});
      bool named_alive = ev.value("named_next_alive", false);
      bool any_hop = ev.value("any_enabled_hop", false);
      auto action = ev.value("action", std::string{});
      if (mode == "SourceRouted") {
        if (!named_alive)
          violation(ev, "SourceRouted toward a neighbour that is not alive");
        if (action == "forward" && ev.value("next", std::string{}) != ev.value("named_next", std::string{}))
          violation(ev, "SourceRouted forwarded to a hop other than the named next hop");
      }
      else if (mode == "MinCost") {
        if (named_alive)
          violation(ev, "MinCost chosen while the named next hop was alive");
        if (!any_hop)
          violation(ev, "MinCost chosen without an enabled FIB hop");
      }
      else if (mode == "Rediscovery") {
        if (named_alive || any_hop)
          violation(ev, "Rediscovery chosen while a cheaper mode was available");
      }
    }
    else if (kind == "neighbor_up" || kind == "neighbor_down") {
      auto node = ev.value("node", std::string{});
      auto nb = ev.value("neighbor", std::string{});
      bool up = kind == "neighbor_up";
      alive[{node, nb}] = up;
      if (!up) {
        pending_down.erase({node, nb});
        auto last = ev.value("last_seen_us", std::int64_t{0});
        if (t - last > timeout + period)
          violation(ev, node + " disabled " + nb + " " + std::to_string(t - last) +
                          "us after last hearing it, beyond timeout plus one period");
      }
    }
    else if (kind == "link") {
      auto a = ev.value("a", std::string{});
      auto b = ev.value("b", std::string{});
      bool up = ev.value("up", true);
      if (!up) {
        for (const auto& [x, y] : {std::pair{a, b}, std::pair{b, a}})
          if (alive.count({x, y}) != 0 && alive[{x, y}] && pending_down.count({x, y}) == 0)
            pending_down[{x, y}] = t + timeout + period;
      }
      else {
        pending_down.erase({a, b});
        pending_down.erase({b, a});
      }
    }
  }

  // ledger: supply constant and the transaction log replays cleanly
  const auto& ledger = sim.ledger();
  if (ledger.total_supply() != sim.initial_supply())
    v.push_back("token supply changed from " + std::to_string(sim.initial_supply()) + " to " +
                std::to_string(ledger.total_supply()));
  std::stringstream log;
  ledger.write_log(log);
  auto replay = payment::audit_log(log);
  for (const auto& msg : replay.violations)
    v.push_back("ledger: " + msg);
  return v;
}

} // namespace r2p2
