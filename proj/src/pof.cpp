#include "r2p2/pof.hpp"

#include "tlv.hpp"

#include <algorithm>

namespace r2p2::pof {

Bytes
signing_message(const crypto::Digest& digest, std::span<const HopSignature> chain, std::size_t index)
{
  Bytes msg(digest.begin(), digest.end());
  auto prior = serialize_chain(chain.first(index));
  msg.insert(msg.end(), prior.begin(), prior.end());
  return msg;
}

SignedChunk
sign_chunk(SignedChunk chunk, const crypto::KeyPair& key)
{
  const auto& d = chunk.descriptor;
  std::uint64_t full = std::uint64_t(d.packet_count) * d.packet_size;
  std::uint64_t floor = std::uint64_t(d.packet_count - 1) * d.packet_size;
  if (d.packet_count == 0 || chunk.payload.size() > full || chunk.payload.size() <= floor)
    throw IncompleteChunk("cannot sign " + d.name.to_uri() + ": payload of " +
                          std::to_string(chunk.payload.size()) + " bytes does not fill " +
                          std::to_string(d.packet_count) + " packets");

  auto digest = crypto::sha256(chunk.payload);
  if (chunk.digest && *chunk.digest != digest)
    throw std::invalid_argument("payload of " + d.name.to_uri() + " does not match its declared digest");
  chunk.digest = digest;

  auto msg = signing_message(digest, chunk.chain, chunk.chain.size());
  chunk.chain.push_back(HopSignature{key.owner, key.public_key, crypto::sign(key, msg)});
  return chunk;
}

std::string_view
to_string(Failure f)
{
  switch (f) {
  case Failure::MissingSigner:
    return "MissingSigner";
  case Failure::UnexpectedSigner:
    return "UnexpectedSigner";
  case Failure::BadSignature:
    return "BadSignature";
  case Failure::PayloadTampered:
    return "PayloadTampered";
  }
  return "Unknown";
}

Verdict
verify_chain(const SignedChunk& chunk, std::span<const NodeAddr> expected_path,
             const KeyDirectory& directory)
{
  auto fail = [] (std::size_t i, Failure why) { return Verdict{Invalid{i, why}}; };

  if (!chunk.digest)
    return fail(0, chunk.chain.empty() ? Failure::MissingSigner : Failure::BadSignature);

  const auto& chain = chunk.chain;
  std::size_t n = std::max(chain.size(), expected_path.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= chain.size())
      return fail(i, Failure::MissingSigner);
    if (i >= expected_path.size())
      return fail(i, Failure::UnexpectedSigner);

    const auto& hs = chain[i];
    if (hs.signer != expected_path[i]) {
      // a signer that belongs later on the path means the expected one was skipped
      bool later = std::find(expected_path.begin() + i + 1, expected_path.end(), hs.signer) !=
                   expected_path.end();
      return fail(i, later ? Failure::MissingSigner : Failure::UnexpectedSigner);
    }
    auto key = directory.find(hs.signer);
    if (key == directory.end())
      return fail(i, Failure::UnexpectedSigner);
    if (key->second != hs.signer_pub)
      return fail(i, Failure::BadSignature);
    if (!crypto::verify(key->second, signing_message(*chunk.digest, chain, i), hs.sig))
      return fail(i, Failure::BadSignature);
  }

  if (crypto::sha256(chunk.payload) != *chunk.digest)
    return fail(0, Failure::PayloadTampered);
  return {};
}

// ---- assembly --------------------------------------------------------------

ChunkAssembly::ChunkAssembly(ChunkDescriptor descriptor, SimTime deadline)
  : descriptor_(std::move(descriptor))
  , deadline_(deadline)
{
  if (descriptor_.packet_count == 0)
    throw InvalidArgument("chunk packet_count must be positive");
}

AssemblyStatus
ChunkAssembly::add(std::uint64_t index, const Bytes& payload, SimTime now)
{
  if (status(now) == AssemblyStatus::Expired) {
    expired_ = true;
    received_.clear();
    return AssemblyStatus::Expired;
  }
  if (index >= descriptor_.packet_count)
    throw InvalidArgument("packet index " + std::to_string(index) + " outside chunk " +
                          descriptor_.name.to_uri());
  received_.try_emplace(index, payload);
  return complete() ? AssemblyStatus::Complete : AssemblyStatus::Incomplete;
}

AssemblyStatus
ChunkAssembly::status(SimTime now) const
{
  if (complete())
    return AssemblyStatus::Complete;
  if (expired_ || now >= deadline_)
    return AssemblyStatus::Expired;
  return AssemblyStatus::Incomplete;
}

Bytes
ChunkAssembly::payload() const
{
  if (!complete())
    throw IncompleteChunk("chunk " + descriptor_.name.to_uri() + " has " + std::to_string(received_.size()) +
                          " of " + std::to_string(descriptor_.packet_count) + " packets");
  Bytes out;
  for (const auto& [index, p] : received_)
    out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::uint64_t
signature_budget(std::uint64_t chunk_bytes, std::uint64_t packet_size, SigningMode mode, std::uint64_t n)
{
  if (packet_size == 0 || n == 0)
    throw InvalidArgument("packet size and group size must be positive");
  std::uint64_t unit = mode == SigningMode::PacketLevel ? packet_size : packet_size * n;
  return (chunk_bytes + unit - 1) / unit;
}

// ---- codec -----------------------------------------------------------------

Bytes
encode_signed_chunk(const SignedChunk& chunk)
{
  if (chunk.chain.empty() != !chunk.digest.has_value())
    throw EncodeError("signed chunk digest must be present exactly when the chain is non-empty");
  tlv::Writer w;
  auto m = w.open(tlv::SignedChunk);
  tlv::write_name(w, chunk.descriptor.name);
  w.uint<4>(tlv::PacketCount, chunk.descriptor.packet_count);
  w.uint<4>(tlv::PacketSize, chunk.descriptor.packet_size);
  if (chunk.digest)
    w.bytes(tlv::PayloadDigest, *chunk.digest);
  for (const auto& hs : chunk.chain)
    tlv::write_hop_signature(w, hs);
  w.bytes(tlv::Payload, chunk.payload);
  w.close(m);
  return w.take();
}

SignedChunk
decode_signed_chunk(std::span<const std::uint8_t> bytes)
{
  if (bytes.empty())
    throw DecodeError(0, "empty input");
  tlv::Reader top(bytes, 0);
  auto e = top.next();
  if (e.tag != tlv::SignedChunk)
    throw DecodeError(0, "expected signed chunk tag 0x38");
  if (!top.at_end())
    throw DecodeError(top.offset(), "trailing bytes after signed chunk");

  auto r = tlv::children(e);
  SignedChunk chunk;
  chunk.descriptor.name = tlv::read_name(r.expect(tlv::Name));
  chunk.descriptor.packet_count = static_cast<std::uint32_t>(tlv::read_uint<4>(r.expect(tlv::PacketCount)));
  chunk.descriptor.packet_size = static_cast<std::uint32_t>(tlv::read_uint<4>(r.expect(tlv::PacketSize)));
  if (auto dg = r.optional(tlv::PayloadDigest))
    chunk.digest = tlv::read_fixed<32>(*dg);
  while (r.peek_tag() == tlv::HopSig)
    chunk.chain.push_back(tlv::read_hop_signature(r.next()));
  auto payload = r.expect(tlv::Payload);
  chunk.payload.assign(payload.value.begin(), payload.value.end());
  r.finish();
  if (chunk.chain.empty() != !chunk.digest.has_value())
    throw DecodeError(0, "signed chunk digest must be present exactly when the chain is non-empty");
  return chunk;
}

} // namespace r2p2::pof
