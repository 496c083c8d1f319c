// r2p2: scenario runner and operator tool.
//
// Exit codes: 0 success, 1 invalid scenario or usage, 2 invariant violation.
// Errors go to stderr as "r2p2:error:<kind>: <message>".

#include "r2p2/bench.hpp"
#include "r2p2/simnet.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace {

using namespace r2p2;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int exit_ok = 0;
constexpr int exit_invalid = 1;
constexpr int exit_violation = 2;

int
error(std::string_view kind, const std::string& msg, int code)
{
  std::cerr << "r2p2:error:" << kind << ": " << msg << '\n';
  return code;
}

struct Options
{
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  std::string log; // audit-ledger input
  std::uint32_t packet_size = 1500;
  std::uint64_t chunk_bytes = 2 * 1024 * 1024;
  std::uint64_t hops = 3;
  std::vector<std::uint64_t> ns{1, 4, 16, 64};
  std::uint32_t relays = 2;
};

void
info(const Options& o, const std::string& msg)
{
  if (o.verbosity > 0)
    std::cerr << "r2p2: " << msg << '\n';
}

Scenario
load(const Options& o)
{
  if (o.scenario.empty())
    throw ScenarioError("--scenario is required");
  return load_scenario(resolve_scenario_path(o.scenario));
}

void
write_file(const fs::path& path, const std::function<void(std::ostream&)>& body)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot write " + path.string());
  body(os);
  if (!os)
    throw std::runtime_error("write failed for " + path.string());
}

int
cmd_validate(const Options& o)
{
  auto sc = load(o);
  std::cout << "ok " << sc.name << ": " << sc.nodes.size() << " nodes, " << sc.links.size() << " links, "
            << sc.content.size() << " content prefixes, " << sc.schedule.size() << " scheduled actions\n";
  return exit_ok;
}

int
cmd_run(const Options& o)
{
  auto sc = load(o);
  info(o, "running " + sc.name);
  Simulator sim(std::move(sc), SimOptions{o.seed});
  sim.run();
  auto report = sim.report();
  info(o, std::to_string(sim.events_processed()) + " events, " + std::to_string(sim.trace().size()) +
            " trace records");

  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_file(fs::path(o.out) / "report.json", [&] (std::ostream& os) { os << report.dump(2) << '\n'; });
    write_file(fs::path(o.out) / "trace.ndjson", [&] (std::ostream& os) { sim.write_trace(os); });
    write_file(fs::path(o.out) / "ledger.ndjson", [&] (std::ostream& os) { sim.ledger().write_log(os); });
    write_file(fs::path(o.out) / "state.ndjson", [&] (std::ostream& os) { sim.write_state(os); });
    info(o, "wrote report, trace, ledger and state to " + o.out);
  }
  std::cout << report.dump(2) << '\n';

  if (!report["audit"]["ok"].get<bool>()) {
    for (const auto& v : report["audit"]["violations"])
      std::cerr << "r2p2:error:invariant: " << v.get<std::string>() << '\n';
    return exit_violation;
  }
  return exit_ok;
}

int
cmd_dump_state(const Options& o)
{
  auto sc = load(o);
  Simulator sim(std::move(sc), SimOptions{o.seed});
  sim.run();
  if (o.out.empty())
    sim.write_state(std::cout);
  else
    write_file(o.out, [&] (std::ostream& os) { sim.write_state(os); });
  return sim.audit().empty() ? exit_ok : exit_violation;
}

int
cmd_audit_ledger(const Options& o)
{
  payment::AuditResult res;
  if (!o.log.empty()) {
    std::ifstream in(o.log);
    if (!in)
      return error("io", "cannot read ledger log " + o.log, exit_invalid);
    res = payment::audit_log(in);
  }
  else {
    Simulator sim(load(o), SimOptions{o.seed});
    sim.run();
    std::stringstream log;
    sim.ledger().write_log(log);
    if (!o.out.empty())
      write_file(o.out, [&] (std::ostream& os) { os << log.str(); });
    res = payment::audit_log(log);
  }
  std::cout << "records " << res.records << '\n';
  for (const auto& v : res.violations)
    std::cerr << "r2p2:error:ledger: " << v << '\n';
  std::cout << (res.ok() ? "ledger ok" : "ledger VIOLATED") << '\n';
  return res.ok() ? exit_ok : exit_violation;
}

int
cmd_bench_pof(const Options& o)
{
  auto counts = bench::pof_operation_counts(o.chunk_bytes, o.packet_size, o.hops, o.ns);
  json out;
  out["chunk_bytes"] = o.chunk_bytes;
  out["packet_size"] = o.packet_size;
  out["hops"] = o.hops;

  std::cout << "signing operations for " << o.chunk_bytes << " bytes in " << o.packet_size << "-byte packets over "
            << o.hops << " signing hops\n";
  std::cout << std::setw(6) << "N" << std::setw(14) << "packet-sign" << std::setw(14) << "chunk-sign"
            << std::setw(14) << "packet-verify" << std::setw(14) << "chunk-verify" << std::setw(10) << "ratio"
            << '\n';
  json rows = json::array();
  for (const auto& c : counts) {
    double ratio = static_cast<double>(c.packet_level_signatures) / static_cast<double>(c.chunk_level_signatures);
    std::cout << std::setw(6) << c.n << std::setw(14) << c.packet_level_signatures << std::setw(14)
              << c.chunk_level_signatures << std::setw(14) << c.packet_level_verifications << std::setw(14)
              << c.chunk_level_verifications << std::setw(10) << std::fixed << std::setprecision(2) << ratio
              << '\n';
    rows.push_back({{"n", c.n},
                    {"packet_level_signatures", c.packet_level_signatures},
                    {"chunk_level_signatures", c.chunk_level_signatures},
                    {"packet_level_verifications", c.packet_level_verifications},
                    {"chunk_level_verifications", c.chunk_level_verifications}});
  }
  out["counts"] = rows;

  std::cout << "\nsimulated relay forwarding delay (" << o.relays << " relays, " << o.packet_size
            << "-byte packets)\n";
  std::cout << std::setw(6) << "N" << std::setw(20) << "mode" << std::setw(16) << "first-pkt-us" << std::setw(16)
            << "nonfinal-us" << std::setw(12) << "signatures" << '\n';
  json delays = json::array();
  for (auto n : o.ns) {
    for (auto mode : {PofMode::PacketLevel, PofMode::ChunkLevel, PofMode::StoreAndForward}) {
      auto s = bench::measure_relay_delay(o.relays, static_cast<std::uint32_t>(n), o.packet_size, mode);
      std::cout << std::setw(6) << n << std::setw(20) << to_string(mode) << std::setw(16) << s.max_first_packet_us
                << std::setw(16) << s.max_nonfinal_us << std::setw(12) << s.signatures
                << (s.fetched ? "" : "  (fetch incomplete)") << '\n';
      delays.push_back({{"n", n},
                        {"mode", std::string(to_string(mode))},
                        {"fetched", s.fetched},
                        {"max_first_packet_us", s.max_first_packet_us},
                        {"max_nonfinal_us", s.max_nonfinal_us},
                        {"signatures", s.signatures}});
    }
  }
  out["relay_delay"] = delays;
  if (!o.out.empty())
    write_file(o.out, [&] (std::ostream& os) { os << out.dump(2) << '\n'; });
  return exit_ok;
}

int
cmd_compare_payment(const Options& o)
{
  auto base = load(o);
  json out = json::array();
  std::map<PaymentMode, json> by_mode;
  bool audit_ok = true;
  for (auto mode : {PaymentMode::PayAll, PaymentMode::HopByHop}) {
    auto sc = base;
    sc.defaults.payment_mode = mode;
    Simulator sim(std::move(sc), SimOptions{o.seed});
    sim.run();
    auto rep = sim.report();
    std::size_t ok = 0;
    Tokens paid = 0;
    for (const auto& f : rep["fetches"]) {
      ok += f["success"].get<bool>() ? 1 : 0;
      paid += f["paid"].get<Tokens>();
    }
    json row{{"mode", std::string(to_string(mode))},
             {"channels_opened", rep["ledger"]["channels_opened"]},
             {"settlements", rep["ledger"]["settlements"]},
             {"ledger_records", rep["ledger"]["records"]},
             {"fetches", rep["fetches"].size()},
             {"fetches_ok", ok},
             {"tokens_paid", paid},
             {"audit_ok", rep["audit"]["ok"]}};
    audit_ok = audit_ok && rep["audit"]["ok"].get<bool>();
    by_mode[mode] = row;
    out.push_back(row);
  }

  std::cout << std::setw(12) << "mode" << std::setw(18) << "channels-opened" << std::setw(14) << "settlements"
            << std::setw(16) << "ledger-records" << std::setw(12) << "fetches-ok" << std::setw(14) << "tokens-paid"
            << '\n';
  auto num = [] (const json& v) { return std::to_string(v.get<std::uint64_t>()); };
  for (const auto& row : out)
    std::cout << std::setw(12) << row["mode"].get<std::string>() << std::setw(18) << num(row["channels_opened"])
              << std::setw(14) << num(row["settlements"]) << std::setw(16) << num(row["ledger_records"])
              << std::setw(12) << (num(row["fetches_ok"]) + "/" + num(row["fetches"])) << std::setw(14)
              << num(row["tokens_paid"]) << '\n';
  auto hbh = by_mode[PaymentMode::HopByHop]["channels_opened"].get<std::size_t>();
  auto pa = by_mode[PaymentMode::PayAll]["channels_opened"].get<std::size_t>();
  std::cout << "hop-by-hop opens " << (hbh < pa ? "fewer" : hbh == pa ? "as many" : "more")
            << " channels than pay-all (" << hbh << " vs " << pa << ")\n";
  if (!o.out.empty())
    write_file(o.out, [&] (std::ostream& os) { os << out.dump(2) << '\n'; });
  return audit_ok ? exit_ok : exit_violation;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"R2P2 scenario runner"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&] (CLI::App* sub, bool needs_scenario) {
    auto* s = sub->add_option("--scenario", o.scenario, "scenario file (or name inside $R2P2_SCENARIO_DIR)");
    if (needs_scenario)
      s->required();
    sub->add_option("--out", o.out, "output path");
    sub->add_option("--seed", o.seed, "override the scenario seed");
    sub->add_flag("-v,--verbose", o.verbosity, "verbose progress on stderr");
  };

  auto* run = app.add_subcommand("run", "run a scenario and print its report");
  add_common(run, true);
  auto* validate = app.add_subcommand("validate", "check a scenario file");
  add_common(validate, true);
  auto* dump = app.add_subcommand("dump-state", "run a scenario and dump every node's tables as NDJSON");
  add_common(dump, true);
  auto* audit = app.add_subcommand("audit-ledger", "replay a ledger log and check conservation");
  add_common(audit, false);
  audit->add_option("log", o.log, "ledger NDJSON log (otherwise the scenario is run)");
  auto* bench = app.add_subcommand("bench-pof", "proof-of-forwarding operation counts and relay delays");
  add_common(bench, false);
  bench->add_option("--packet-size", o.packet_size, "packet payload bytes")->check(CLI::Range(1u, 65507u));
  bench->add_option("--chunk-bytes", o.chunk_bytes, "content size to sign")->check(CLI::PositiveNumber);
  bench->add_option("--hops", o.hops, "signing nodes, producer included")->check(CLI::PositiveNumber);
  bench->add_option("--chunk-n", o.ns, "packets per signed chunk")->check(CLI::PositiveNumber);
  bench->add_option("--relays", o.relays, "relays in the simulated line")->check(CLI::Range(1u, 16u));
  auto* compare = app.add_subcommand("compare-payment", "run a scenario under pay-all and hop-by-hop payment");
  add_common(compare, true);

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e) {
    return error("usage", e.what(), exit_invalid);
  }

  try {
    if (*run)
      return cmd_run(o);
    if (*validate)
      return cmd_validate(o);
    if (*dump)
      return cmd_dump_state(o);
    if (*audit) {
      if (o.log.empty() && o.scenario.empty())
        return error("usage", "audit-ledger needs a ledger log or --scenario", exit_invalid);
      return cmd_audit_ledger(o);
    }
    if (*bench)
      return cmd_bench_pof(o);
    if (*compare)
      return cmd_compare_payment(o);
  }
  catch (const ScenarioError& e) {
    return error("validation", e.what(), exit_invalid);
  }
  catch (const std::exception& e) {
    return error("internal", e.what(), exit_violation);
  }
  return exit_invalid;
}
