#pragma once

// Operation-count and relay-delay measurements for proof-of-forwarding modes.

#include "r2p2/scenario.hpp"

namespace r2p2::bench {

struct PofOpCounts
{
  std::uint64_t n = 1;                      ///< packets per signed chunk
  std::uint64_t packet_level_signatures = 0; ///< over all signing hops
  std::uint64_t chunk_level_signatures = 0;
  std::uint64_t packet_level_verifications = 0; ///< consumer-side
  std::uint64_t chunk_level_verifications = 0;
};

/// Counts signing and verification operations needed to move `chunk_bytes` across `hops`
/// signing nodes (producer included).
std::vector<PofOpCounts>
pof_operation_counts(std::uint64_t chunk_bytes, std::uint64_t packet_size, std::uint64_t hops,
                     std::span<const std::uint64_t> ns);

/// Consumer - relay... - producer line with one chunk group of `n` packets.
Scenario
line_scenario(std::uint32_t relays, std::uint32_t n, std::uint32_t packet_size, PofMode mode,
              PaymentMode payment = PaymentMode::None);

struct RelaySample
{
  std::uint32_t n = 0;
  PofMode mode = PofMode::ChunkLevel;
  bool fetched = false;
  std::int64_t max_nonfinal_us = 0;      ///< worst relay delay over non-final packets
  std::int64_t max_first_packet_us = 0;  ///< worst relay delay of packet 0
  std::int64_t max_us = 0;
  std::uint64_t signatures = 0;          ///< produced network-wide
};

/// Runs line_scenario and reads the relays' forwarding delays.
RelaySample
measure_relay_delay(std::uint32_t relays, std::uint32_t n, std::uint32_t packet_size, PofMode mode);

} // namespace r2p2::bench
