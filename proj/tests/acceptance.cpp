// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "r2p2/bench.hpp"
#include "r2p2/simnet.hpp"
#include "support/properties.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace r2p2;

namespace {

using Clock = std::chrono::steady_clock;

double
seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::filesystem::path
scenario(const std::string& name)
{
  return std::filesystem::path(R2P2_SCENARIO_DIR) / (name + ".scn");
}

struct Verdict
{
  bool pass = true;
  std::ostringstream why;

  void
  require(bool ok, const std::string& what)
  {
    if (!ok) {
      pass = false;
      why << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void
report(int n, Verdict& v)
{
  if (!v.pass)
    ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n << ":" << v.why.str() << std::endl;
}

template <typename F>
void
criterion(int n, F&& body)
{
  Verdict v;
  try {
    body(v);
  }
  catch (const std::exception& e) {
    v.require(false, std::string("exception: ") + e.what());
  }
  report(n, v);
}

std::int64_t
gain(Simulator& sim, const std::string& id)
{
  return static_cast<std::int64_t>(sim.ledger().account(sim.node(id).addr()).balance) -
         static_cast<std::int64_t>(sim.initial_balance(id));
}

} // namespace

int
main()
{
  criterion(1, [] (Verdict& v) {
    auto t0 = Clock::now();
    Simulator sim(load_scenario(scenario("fig1")));
    sim.run();
    auto elapsed = seconds_since(t0);
    auto r = sim.report();
    const auto& paths = r["nodes"]["A"]["paths"]["/video"];
    v.require(paths.size() == 1, "exactly one discovered path");
    v.require(paths[0]["route"] == nlohmann::json::array({"A", "B", "C"}), "route A-B-C");
    v.require(paths[0]["price"] == 15, "price 15u");
    v.require(r["nodes"]["B"]["fib"]["/video"][0]["next_hop"] == "C", "B's FIB points at C");
    v.require(r["fetches"][0]["success"] == true, "fetch completes");
    v.require(elapsed < 1.0, "under 1 s");
    v.why << " fig1 path A->B->C at " << paths[0]["price"] << "u, B next hop "
          << r["nodes"]["B"]["fib"]["/video"][0]["next_hop"].get<std::string>() << ", " << elapsed << " s";
  });

  criterion(2, [] (Verdict& v) {
    auto t0 = Clock::now();
    Simulator sim(load_scenario(scenario("fig6")));
    sim.run();
    auto elapsed = seconds_since(t0);
    std::int64_t ra = gain(sim, "RA"), rb = gain(sim, "RB"), p = gain(sim, "P");
    std::int64_t c = gain(sim, "Consumer");
    bool settled = true;
    for (const auto& [id, ch] : sim.ledger().channels())
      settled = settled && ch.status == payment::ChannelStatus::Settled;
    v.require(ra == 5 && rb == 2 && p == 3, "incomes 5/2/3");
    v.require(c == -10, "consumer pays 10u");
    v.require(settled, "all channels settled");
    v.require(sim.ledger().total_supply() == sim.initial_supply(), "supply conserved");
    v.require(elapsed < 1.0, "under 1 s");
    v.why << " fig6 settled incomes RA " << ra << "u, RB " << rb << "u, P " << p << "u, consumer " << c << "u, "
          << elapsed << " s";
  });

  criterion(3, [] (Verdict& v) {
    Simulator sim(load_scenario(scenario("diamond")));
    sim.run();
    auto r = sim.report();
    const auto& t = r["totals"];
    auto sr = t.value("mode.SourceRouted", 0), mc = t.value("mode.MinCost", 0), rd = t.value("mode.Rediscovery", 0);
    v.require(sr > 0 && mc > 0 && rd > 0, "all three modes exercised");
    v.require(r["fetches"][0]["success"] == true, "flow completes");
    v.require(sim.audit().empty(), "trace audit clean");
    v.why << " diamond SourceRouted " << sr << ", MinCost " << mc << ", Rediscovery " << rd << ", flow "
          << (r["fetches"][0]["success"] == true ? "completed" : "failed");
  });

  criterion(4, [] (Verdict& v) {
    auto t0 = Clock::now();
    auto s = props::pof_mutation_sweep(16);
    auto elapsed = seconds_since(t0);
    v.require(s.honest_valid, "honest chain verifies");
    v.require(s.mutations >= 6000, "at least 6000 mutations");
    v.require(s.false_valids == 0, "no mutation verifies");
    v.require(elapsed < 60.0, "under 60 s");
    v.why << " " << s.mutations << " single-byte mutations, " << s.false_valids << " false valids, " << elapsed
          << " s";
  });

  criterion(5, [] (Verdict& v) {
    const std::vector<std::uint64_t> ns{1, 4, 16, 64};
    // 1408 packets: every N divides the packet count, so the ratio is exact
    const std::uint64_t bytes = 1500 * 1408;
    for (const auto& c : bench::pof_operation_counts(bytes, 1500, 3, ns))
      v.require(c.packet_level_signatures == c.n * c.chunk_level_signatures &&
                  c.packet_level_verifications == c.n * c.chunk_level_verifications,
                "count factor N=" + std::to_string(c.n));

    std::vector<std::int64_t> chunk_nonfinal, saf_first;
    for (auto n : ns) {
      auto pl = bench::measure_relay_delay(2, static_cast<std::uint32_t>(n), 1500, PofMode::PacketLevel);
      auto cl = bench::measure_relay_delay(2, static_cast<std::uint32_t>(n), 1500, PofMode::ChunkLevel);
      auto sf = bench::measure_relay_delay(2, static_cast<std::uint32_t>(n), 1500, PofMode::StoreAndForward);
      v.require(pl.fetched && cl.fetched && sf.fetched, "line fetch N=" + std::to_string(n));
      v.require(pl.signatures == n * cl.signatures, "simulated signatures factor N=" + std::to_string(n));
      chunk_nonfinal.push_back(cl.max_nonfinal_us);
      saf_first.push_back(sf.max_first_packet_us);
    }
    auto [lo, hi] = std::minmax_element(chunk_nonfinal.begin(), chunk_nonfinal.end());
    v.require(*hi - *lo <= 1, "chunk-level non-final delay independent of N");
    // store-and-forward: d(N) = t * (N - 1) + delta for N > 1, where delta < t is the extra
    // transmission time of the proof-carrying final packet; a one-packet chunk never waits
    double slope = double(saf_first[3] - saf_first[2]) / double(ns[3] - ns[2]);
    double delta = double(saf_first[1]) - slope * double(ns[1] - 1);
    bool linear = saf_first[0] == 0 && delta >= 0 && delta < slope;
    for (std::size_t i = 1; i < ns.size(); ++i)
      linear = linear && std::abs(double(saf_first[i]) - (slope * double(ns[i] - 1) + delta)) <= 1.0;
    v.require(linear && slope > 0, "store-and-forward first-packet delay linear in N");
    v.why << " signing counts drop by exactly N for N in {1,4,16,64}; chunk-level relay delay "
          << *lo << ".." << *hi << " us for every N; store-and-forward first packet";
    for (auto d : saf_first)
      v.why << " " << d;
    v.why << " us (" << slope << " us per packet + " << delta << " us final-packet overhead)";
  });

  criterion(6, [] (Verdict& v) {
    auto s = props::conservation_sweep(6, 10000);
    v.require(s.ok(), "conservation holds");
    v.why << " " << s.ops << " random operations (" << s.opens << " opens, " << s.updates << " updates, "
          << s.settles << " settles), drift " << s.drift_events << ", stale replays accepted " << s.stale_accepted
          << " of " << s.stale_replays << ", log audit " << (s.log_audit_ok ? "ok" : "failed");
  });

  criterion(7, [] (Verdict& v) {
    std::size_t identical = 0;
    for (const auto* name : {"fig1", "fig6", "diamond", "churn", "mesh10"}) {
      auto a = props::run_scenario(scenario(name));
      auto b = props::run_scenario(scenario(name));
      bool same = a.trace == b.trace && a.report == b.report && a.ledger == b.ledger;
      v.require(same, std::string(name) + " reproducible");
      identical += same;
    }
    v.why << " " << identical << "/5 shipped scenarios byte-identical across two runs";
  });

  criterion(8, [] (Verdict& v) {
    auto s = props::codec_sweep(8, 100000, 100000);
    v.require(s.ok(), "codec properties");
    v.why << " " << s.packets << " random packets round-trip canonically (" << s.reference_mismatches
          << " reference mismatches); " << s.fuzz_inputs << " fuzz inputs, " << s.fuzz_crashes << " crashes, "
          << s.fuzz_accepted << " accepted";
  });

  return failures == 0 ? 0 : 1;
}
