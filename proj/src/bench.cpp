#include "r2p2/bench.hpp"

#include "r2p2/simnet.hpp"

namespace r2p2::bench {

std::vector<PofOpCounts>
pof_operation_counts(std::uint64_t chunk_bytes, std::uint64_t packet_size, std::uint64_t hops,
                     std::span<const std::uint64_t> ns)
{
  std::vector<PofOpCounts> out;
  auto per_packet = pof::signature_budget(chunk_bytes, packet_size, pof::SigningMode::PacketLevel);
  for (auto n : ns) {
    auto per_chunk = pof::signature_budget(chunk_bytes, packet_size, pof::SigningMode::ChunkLevel, n);
    PofOpCounts c;
    c.n = n;
    c.packet_level_signatures = hops * per_packet;
    c.chunk_level_signatures = hops * per_chunk;
    c.packet_level_verifications = hops * per_packet;
    c.chunk_level_verifications = hops * per_chunk;
    out.push_back(c);
  }
  return out;
}

Scenario
line_scenario(std::uint32_t relays, std::uint32_t n, std::uint32_t packet_size, PofMode mode, PaymentMode payment)
{
  Scenario sc;
  sc.name = "line";
  sc.seed = 7;
  sc.defaults.pof_mode = mode;
  sc.defaults.payment_mode = payment;
  sc.defaults.chunk_packets = n;
  sc.defaults.packet_size = packet_size;
  sc.duration = ms(3000);

  auto addr = [] (std::uint8_t i) { return NodeAddr(NodeAddr::Octets{0x02, 0, 0, 0, 0, i}); };
  NodeConfig consumer{"C", addr(1), 0, {}, "nonce-budget"};
  sc.nodes.push_back(consumer);
  std::string prev = "C";
  for (std::uint32_t r = 0; r < relays; ++r) {
    std::string id = "R" + std::to_string(r + 1);
    sc.nodes.push_back(NodeConfig{id, addr(static_cast<std::uint8_t>(10 + r)), 1, {}, "nonce-budget"});
    sc.links.push_back(LinkSpec{prev, id, ms(1), true, 0.0, sc.defaults.link_bandwidth_mbps});
    prev = id;
  }
  Name prefix = Name::parse("/bench");
  sc.nodes.push_back(NodeConfig{"P", addr(2), 1, {prefix}, "nonce-budget"});
  sc.links.push_back(LinkSpec{prev, "P", ms(1), true, 0.0, sc.defaults.link_bandwidth_mbps});
  sc.content.push_back(ContentSpec{prefix, 1, n, packet_size});
  sc.schedule.push_back(ScheduledAction{ms(150), FetchAction{"C", prefix, 0}});
  return sc;
}

RelaySample
measure_relay_delay(std::uint32_t relays, std::uint32_t n, std::uint32_t packet_size, PofMode mode)
{
  Simulator sim(line_scenario(relays, n, packet_size, mode));
  sim.run();
  RelaySample s;
  s.n = n;
  s.mode = mode;
  const auto& results = sim.app("C").results();
  s.fetched = !results.empty() && results.front().success;
  for (std::uint32_t r = 0; r < relays; ++r) {
    const auto& fwd = sim.node("R" + std::to_string(r + 1));
    const auto& d = fwd.relay_delays();
    s.max_nonfinal_us = std::max(s.max_nonfinal_us, static_cast<std::int64_t>(d.max_nonfinal_delay.count()));
    s.max_first_packet_us =
      std::max(s.max_first_packet_us, static_cast<std::int64_t>(d.max_first_packet_delay.count()));
    s.max_us = std::max(s.max_us, static_cast<std::int64_t>(d.max_delay.count()));
  }
  for (const auto& node : sim.scenario().nodes) {
    const auto& c = sim.node(node.id).counters();
    if (auto it = c.find("signatures_produced"); it != c.end())
      s.signatures += it->second;
  }
  return s;
}

} // namespace r2p2::bench
