#pragma once

#include "r2p2/crypto.hpp"
#include "r2p2/types.hpp"

#include <variant>

namespace r2p2 {

using Nonce = std::uint64_t;

struct HopInfo
{
  NodeAddr local;
  std::optional<NodeAddr> remote; ///< absent = broadcast

  bool operator==(const HopInfo&) const = default;
};

/// FILO stack of addresses; addrs.front() is the top.
struct RouteStack
{
  std::vector<NodeAddr> addrs;

  const NodeAddr&
  top() const
  {
    return addrs.front();
  }

  void
  push(const NodeAddr& addr)
  {
    addrs.insert(addrs.begin(), addr);
  }

  NodeAddr
  pop()
  {
    NodeAddr a = addrs.front();
    addrs.erase(addrs.begin());
    return a;
  }

  bool
  empty() const
  {
    return addrs.empty();
  }

  bool
  contains(const NodeAddr& addr) const;

  bool operator==(const RouteStack&) const = default;
};

struct Payment
{
  std::uint64_t channel_id = 0;
  Tokens amount = 0;
  std::uint64_t sequence = 0;
  Bytes payer_sig;

  bool operator==(const Payment&) const = default;
};

struct HopSignature
{
  NodeAddr signer;
  crypto::PublicKey signer_pub{};
  crypto::Signature sig{};

  bool operator==(const HopSignature&) const = default;
};

/// Chunk-proof fragment riding in a content Data. Every packet of a group carries
/// the descriptor fields; the accumulated chain rides on the final-index packet.
struct ProofFragment
{
  std::uint32_t packet_count = 1;
  std::uint32_t packet_size = 0;
  std::optional<crypto::Digest> digest; ///< present iff chain is non-empty
  std::vector<HopSignature> chain;

  bool operator==(const ProofFragment&) const = default;
};

struct Interest
{
  Name name;
  Nonce nonce = 0;
  HopInfo hop_info;
  std::optional<RouteStack> route; ///< present => source-routed
  std::optional<Payment> payment;
  std::uint32_t lifetime_ms = 4000;

  bool
  is_discovery() const
  {
    return !route.has_value();
  }

  bool operator==(const Interest&) const = default;
};

struct Data
{
  Name name;
  Bytes payload;
  HopInfo hop_info;
  std::optional<RouteStack> route;       ///< discovery Data only
  std::optional<Tokens> price;           ///< discovery Data only
  std::vector<Tokens> price_breakdown;   ///< discovery Data only; one entry per costed hop, producer first
  std::optional<ProofFragment> proof;    ///< content Data only

  bool
  is_discovery() const
  {
    return route.has_value();
  }

  bool operator==(const Data&) const = default;
};

enum class NackReason : std::uint8_t {
  NoRoute = 1,
  InsufficientPayment = 2,
  Duplicate = 3,
  Expired = 4,
};

std::string_view
to_string(NackReason reason);

struct Nack
{
  Name name;
  Nonce nonce = 0;
  NackReason reason = NackReason::NoRoute;

  bool operator==(const Nack&) const = default;
};

/// Periodic neighbour beacon.
struct KeepAlive
{
  NodeAddr sender;
  std::uint64_t sequence = 0;

  bool operator==(const KeepAlive&) const = default;
};

using Packet = std::variant<Interest, Data, Nack, KeepAlive>;

/// Top-level and nested TLV type tags. See docs/wire-format.md.
namespace tlv {
inline constexpr std::uint8_t Nack = 0x03;
inline constexpr std::uint8_t Interest = 0x05;
inline constexpr std::uint8_t Data = 0x06;
inline constexpr std::uint8_t Name = 0x07;
inline constexpr std::uint8_t NameComponent = 0x08;
inline constexpr std::uint8_t ChunkIndex = 0x09;
inline constexpr std::uint8_t KeepAlive = 0x0a;
inline constexpr std::uint8_t Nonce = 0x0b;
inline constexpr std::uint8_t Lifetime = 0x0c;
inline constexpr std::uint8_t HopInfo = 0x10;
inline constexpr std::uint8_t Local = 0x11;
inline constexpr std::uint8_t Remote = 0x12;
inline constexpr std::uint8_t Route = 0x13;
inline constexpr std::uint8_t RouteAddr = 0x14;
inline constexpr std::uint8_t Payload = 0x15;
inline constexpr std::uint8_t Price = 0x16;
inline constexpr std::uint8_t PriceBreakdown = 0x17;
inline constexpr std::uint8_t HopPrice = 0x18;
inline constexpr std::uint8_t Payment = 0x20;
inline constexpr std::uint8_t ChannelId = 0x21;
inline constexpr std::uint8_t Amount = 0x22;
inline constexpr std::uint8_t Sequence = 0x23;
inline constexpr std::uint8_t PayerSig = 0x24;
inline constexpr std::uint8_t Proof = 0x30;
inline constexpr std::uint8_t PacketCount = 0x31;
inline constexpr std::uint8_t PacketSize = 0x32;
inline constexpr std::uint8_t PayloadDigest = 0x33;
inline constexpr std::uint8_t HopSig = 0x34;
inline constexpr std::uint8_t Signer = 0x35;
inline constexpr std::uint8_t SignerPub = 0x36;
inline constexpr std::uint8_t Sig = 0x37;
inline constexpr std::uint8_t SignedChunk = 0x38;
inline constexpr std::uint8_t NackReason = 0x40;
inline constexpr std::uint8_t KeepAliveSeq = 0x41;

inline constexpr std::size_t max_length = 0xffff;
} // namespace tlv

/// Largest Data payload carried by a UDP overlay (65,535 - 28 bytes of headers).
inline constexpr std::size_t max_overlay_payload = 65507;

class EncodeError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error
{
public:
  DecodeError(std::size_t offset, const std::string& what);

  std::size_t
  offset() const
  {
    return offset_;
  }

private:
  std::size_t offset_;
};

/// Throws EncodeError if the packet violates its type invariants.
void
validate(const Packet& pkt);

Bytes
encode(const Packet& pkt);

Packet
decode(std::span<const std::uint8_t> bytes);

/// Serialized chain as covered by signatures: signer || pub || sig per entry.
Bytes
serialize_chain(std::span<const HopSignature> chain);

std::string_view
packet_kind(const Packet& pkt);

} // namespace r2p2
