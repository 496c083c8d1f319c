#pragma once

// Property harnesses shared by the unit suites and the acceptance runner.

#include "r2p2/pof.hpp"

#include <filesystem>
#include <string>

namespace props {

struct CodecSweep
{
  std::size_t packets = 0;
  std::size_t reference_mismatches = 0; ///< encode() differs from the reference encoder
  std::size_t roundtrip_failures = 0;
  std::size_t canonical_failures = 0;
  std::size_t fuzz_inputs = 0;
  std::size_t fuzz_accepted = 0;
  std::size_t fuzz_noncanonical = 0; ///< accepted input that does not re-encode to itself
  std::size_t fuzz_crashes = 0;      ///< exceptions other than DecodeError

  bool
  ok() const
  {
    return reference_mismatches + roundtrip_failures + canonical_failures + fuzz_noncanonical + fuzz_crashes == 0;
  }
};

CodecSweep
codec_sweep(std::uint64_t seed, std::size_t packets, std::size_t fuzz_inputs);

/// Honest chunk signed along producer -> R1 -> R2, plus the verification context.
struct PofFixture
{
  r2p2::pof::SignedChunk chunk;
  std::vector<r2p2::NodeAddr> path; ///< producer first
  r2p2::pof::KeyDirectory directory;
};

PofFixture
honest_chunk(std::uint32_t packets = 4, std::uint32_t packet_size = 32);

struct MutationSweep
{
  bool honest_valid = false;
  std::size_t mutations = 0;
  std::size_t false_valids = 0;
  std::size_t payload_mutations = 0;
  std::size_t chain_mutations = 0;
};

/// Every byte of the payload, digest and chain, XORed with each of `masks_per_byte` masks.
MutationSweep
pof_mutation_sweep(unsigned masks_per_byte = 16);

struct ConservationSweep
{
  std::size_t ops = 0;
  std::size_t opens = 0;
  std::size_t updates = 0;
  std::size_t settles = 0;
  std::size_t refused = 0; ///< operations the ledger legitimately rejected
  std::size_t drift_events = 0; ///< steps after which global supply differed from the start
  std::size_t channel_violations = 0;
  std::size_t stale_replays = 0;
  std::size_t stale_accepted = 0;
  bool log_audit_ok = false;

  bool
  ok() const
  {
    return drift_events == 0 && channel_violations == 0 && stale_accepted == 0 && stale_replays > 0 &&
           log_audit_ok;
  }
};

ConservationSweep
conservation_sweep(std::uint64_t seed, std::size_t ops);

struct RunOutput
{
  std::string trace;
  std::string report;
  std::string ledger;
};

RunOutput
run_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed = std::nullopt);

} // namespace props
