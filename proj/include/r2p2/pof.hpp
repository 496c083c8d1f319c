#pragma once

// Proof-of-forwarding: chunk assembly and chained per-hop signatures.
//
// A chunk is signed once per hop. Each signature covers
//   digest || signer_0 || pub_0 || sig_0 || ... || signer_{k-1} || pub_{k-1} || sig_{k-1}
// where digest = SHA-256(payload), so signature k commits to the content and to every
// signature before it. The producer signs first.

#include "r2p2/crypto.hpp"
#include "r2p2/wire.hpp"

#include <map>

namespace r2p2::pof {

struct ChunkDescriptor
{
  Name name; ///< chunk group prefix
  std::uint32_t packet_count = 1;
  std::uint32_t packet_size = 1500;

  bool operator==(const ChunkDescriptor&) const = default;
};

struct SignedChunk
{
  ChunkDescriptor descriptor;
  Bytes payload;                        ///< packet payloads concatenated in index order
  std::optional<crypto::Digest> digest; ///< set by the first signer
  std::vector<HopSignature> chain;      ///< producer first

  bool operator==(const SignedChunk&) const = default;
};

class IncompleteChunk : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Appends key.owner's signature to the chain.
/// Throws IncompleteChunk if the payload length does not fill the descriptor, and
/// std::invalid_argument if the payload no longer matches the declared digest.
SignedChunk
sign_chunk(SignedChunk chunk, const crypto::KeyPair& key);

/// Bytes covered by the signature at chain position `index`.
Bytes
signing_message(const crypto::Digest& digest, std::span<const HopSignature> chain, std::size_t index);

enum class Failure { MissingSigner, UnexpectedSigner, BadSignature, PayloadTampered };

std::string_view
to_string(Failure f);

struct Invalid
{
  std::size_t index = 0;
  Failure why = Failure::BadSignature;

  bool operator==(const Invalid&) const = default;
};

struct Verdict
{
  std::optional<Invalid> invalid;

  bool
  valid() const
  {
    return !invalid.has_value();
  }
};

using KeyDirectory = std::map<NodeAddr, crypto::PublicKey>;

/// Checks that the chain was produced, in order, by exactly `expected_path` (producer first)
/// and that every signature and the payload digest are intact.
Verdict
verify_chain(const SignedChunk& chunk, std::span<const NodeAddr> expected_path,
             const KeyDirectory& directory);

enum class AssemblyStatus { Incomplete, Complete, Expired };

/// Collects the packets of one chunk group at a node.
class ChunkAssembly
{
public:
  ChunkAssembly(ChunkDescriptor descriptor, SimTime deadline);

  /// Adds one packet; duplicate indices are ignored. Once the deadline has passed the
  /// assembly is Expired and discards its packets.
  AssemblyStatus
  add(std::uint64_t index, const Bytes& payload, SimTime now);

  AssemblyStatus
  status(SimTime now) const;

  bool
  complete() const
  {
    return received_.size() == descriptor_.packet_count;
  }

  /// Concatenated payload; throws IncompleteChunk if packets are missing.
  Bytes
  payload() const;

  const ChunkDescriptor&
  descriptor() const
  {
    return descriptor_;
  }

  SimTime
  deadline() const
  {
    return deadline_;
  }

  std::size_t
  received() const
  {
    return received_.size();
  }

private:
  ChunkDescriptor descriptor_;
  std::map<std::uint64_t, Bytes> received_;
  SimTime deadline_;
  bool expired_ = false;
};

enum class SigningMode { PacketLevel, ChunkLevel };

/// Signing operations each hop performs to cover `chunk_bytes` of content.
/// PacketLevel signs every packet; ChunkLevel signs once per `n` packets.
std::uint64_t
signature_budget(std::uint64_t chunk_bytes, std::uint64_t packet_size, SigningMode mode,
                 std::uint64_t n = 1);

/// Standalone TLV form (tag 0x38) used for fixtures and offline audit.
Bytes
encode_signed_chunk(const SignedChunk& chunk);

SignedChunk
decode_signed_chunk(std::span<const std::uint8_t> bytes);

} // namespace r2p2::pof
