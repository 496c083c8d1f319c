#include "r2p2/payment.hpp"
#include "r2p2/pof.hpp"
#include "r2p2/wire.hpp"
#include "support/oracle.hpp"

#include <doctest.h>

using namespace r2p2;

namespace {

const NodeAddr A = NodeAddr::parse("00-14-00-00-00-01");
const NodeAddr B = NodeAddr::parse("00-40-00-00-00-01");
const NodeAddr C = NodeAddr::parse("00-30-00-00-00-01");

std::filesystem::path
fixture(const std::string& name)
{
  return std::filesystem::path(R2P2_FIXTURE_DIR) / name;
}

std::size_t
decode_error_offset(const Bytes& b)
{
  try {
    decode(b);
  }
  catch (const DecodeError& e) {
    return e.offset();
  }
  FAIL("expected a decode error");
  return 0;
}

} // namespace

TEST_CASE("addresses and names parse and print")
{
  CHECK(A.to_string() == "00-14-00-00-00-01");
  CHECK(NodeAddr::parse("00:14:00:00:00:01") == A);
  CHECK(NodeAddr::broadcast().is_broadcast());
  CHECK_THROWS_AS(NodeAddr::parse("00-14-00"), InvalidArgument);
  CHECK_THROWS_AS(NodeAddr::parse("00-14-00-00-00-0g"), InvalidArgument);

  auto n = Name::parse("/video/3#7");
  CHECK(n.components() == std::vector<std::string>{"video", "3"});
  CHECK(n.chunk_index() == 7u);
  CHECK(n.to_uri() == "/video/3#7");
  CHECK(n.group().to_uri() == "/video/3");
  CHECK(Name::parse("/video").is_prefix_of(n));
  CHECK_FALSE(Name::parse("/vid").is_prefix_of(n));
  CHECK_THROWS_AS(Name::parse("video"), InvalidArgument);
  CHECK_THROWS_AS(Name::parse("/a//b"), InvalidArgument);
  CHECK_THROWS_AS(Name::parse("/a#x"), InvalidArgument);
  CHECK_THROWS_AS(Name(std::vector<std::string>{}), InvalidArgument);
}

TEST_CASE("discovery interest round-trips")
{
  Interest i;
  i.name = Name::parse("/v");
  i.nonce = 0;
  i.hop_info = HopInfo{A, std::nullopt};
  auto bytes = encode(i);
  CHECK(bytes == oracle::reference_encode(i));
  CHECK(std::get<Interest>(decode(bytes)) == i);
}

TEST_CASE("data with the overlay maximum payload encodes")
{
  Data d;
  d.name = Name::parse("/v");
  d.hop_info = HopInfo{A, std::nullopt};
  d.payload.assign(max_overlay_payload, 0x5a);
  auto bytes = encode(d);
  CHECK(std::get<Data>(decode(bytes)) == d);

  d.payload.assign(tlv::max_length + 1, 0);
  CHECK_THROWS_AS(encode(d), EncodeError);
}

TEST_CASE("encode rejects packets that break their invariants")
{
  Interest i;
  i.name = Name::parse("/v");
  i.hop_info = HopInfo{A, B};
  CHECK_THROWS_AS(encode(i), EncodeError); // discovery with a remote
  i.route = RouteStack{{C}};
  CHECK_THROWS_AS(encode(i), EncodeError); // remote is not the route top
  i.route = RouteStack{{B, B}};
  CHECK_THROWS_AS(encode(i), EncodeError); // adjacent duplicates
  i.route = RouteStack{{B, C}};
  CHECK_NOTHROW(encode(i));
  i.hop_info = HopInfo{B, B};
  CHECK_THROWS_AS(encode(i), EncodeError);
  i.hop_info = HopInfo{NodeAddr::broadcast(), B};
  CHECK_THROWS_AS(encode(i), EncodeError);

  Data d;
  d.name = Name::parse("/v");
  d.hop_info = HopInfo{A, std::nullopt};
  d.price = 3;
  CHECK_THROWS_AS(encode(d), EncodeError); // price without route
  d.route = RouteStack{{A}};
  CHECK_NOTHROW(encode(d));
  d.proof = ProofFragment{};
  CHECK_THROWS_AS(encode(d), EncodeError); // discovery Data with proof
  d.route.reset();
  d.price.reset();
  d.proof->packet_count = 0;
  CHECK_THROWS_AS(encode(d), EncodeError);
}

TEST_CASE("decode errors name the offending offset")
{
  CHECK(decode_error_offset({}) == 0);
  CHECK(decode_error_offset({0x05, 0x00}) == 0); // truncated header

  Interest i;
  i.name = Name::parse("/v");
  i.hop_info = HopInfo{A, std::nullopt};
  auto good = encode(i);

  auto overrun = good;
  overrun[2] += 1;
  CHECK(decode_error_offset(overrun) == 0);

  auto unknown = good;
  unknown[0] = 0x7f;
  CHECK(decode_error_offset(unknown) == 0);

  // duplicate Nonce TLV right after the first one
  Bytes dup(good.begin(), good.begin() + 3);
  std::size_t name_len = 3 + ((good[4] << 8) | good[5]);
  std::size_t nonce_at = 3 + name_len;
  Bytes nonce(good.begin() + nonce_at, good.begin() + nonce_at + 11);
  dup.insert(dup.end(), good.begin() + 3, good.begin() + nonce_at + 11);
  dup.insert(dup.end(), nonce.begin(), nonce.end());
  dup.insert(dup.end(), good.begin() + nonce_at + 11, good.end());
  std::size_t len = dup.size() - 3;
  dup[1] = static_cast<std::uint8_t>(len >> 8);
  dup[2] = static_cast<std::uint8_t>(len);
  try {
    decode(dup);
    FAIL("duplicate field accepted");
  }
  catch (const DecodeError& e) {
    CHECK(e.offset() == nonce_at + 11);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }

  auto trailing = good;
  trailing.push_back(0);
  CHECK(decode_error_offset(trailing) == good.size());
}

TEST_CASE("golden vectors match the reference encoder")
{
  auto key_a = crypto::derive_keypair(1, A);

  SUBCASE("source-routed interest with voucher")
  {
    Interest i;
    i.name = Name::parse("/video/0#2");
    i.nonce = 0x0123456789abcdefULL;
    i.hop_info = HopInfo{A, B};
    i.route = RouteStack{{B, C}};
    i.payment = payment::make_voucher(7, 15, 1, key_a);
    i.lifetime_ms = 4000;
    auto golden = oracle::read_hex_file(fixture("golden_interest.hex"));
    CHECK(to_hex(encode(i)) == to_hex(golden));
    CHECK(std::get<Interest>(decode(golden)) == i);
    CHECK(payment::verify_voucher(*i.payment, key_a.public_key));
  }
  SUBCASE("discovery interest")
  {
    Interest i;
    i.name = Name::parse("/video");
    i.hop_info = HopInfo{A, std::nullopt};
    CHECK(encode(i) == oracle::read_hex_file(fixture("golden_discovery_interest.hex")));
  }
  SUBCASE("discovery data")
  {
    Data d;
    d.name = Name::parse("/video");
    d.hop_info = HopInfo{C, B};
    d.route = RouteStack{{B, C}};
    d.price = 12;
    d.price_breakdown = {12};
    CHECK(encode(d) == oracle::read_hex_file(fixture("golden_discovery_data.hex")));
  }
  SUBCASE("nack")
  {
    Nack n{Name::parse("/video/0#1"), 42, NackReason::InsufficientPayment};
    CHECK(encode(n) == oracle::read_hex_file(fixture("golden_nack.hex")));
  }
  SUBCASE("signed chunk")
  {
    pof::SignedChunk chunk;
    chunk.descriptor = pof::ChunkDescriptor{Name::parse("/video/0"), 4, 16};
    for (int k = 0; k < 64; ++k)
      chunk.payload.push_back(static_cast<std::uint8_t>(k));
    chunk = pof::sign_chunk(chunk, crypto::derive_keypair(1, C));
    chunk = pof::sign_chunk(chunk, crypto::derive_keypair(1, B));
    auto golden = oracle::read_hex_file(fixture("golden_chunk.hex"));
    CHECK(to_hex(pof::encode_signed_chunk(chunk)) == to_hex(golden));
    CHECK(pof::decode_signed_chunk(golden) == chunk);
  }
}

TEST_CASE("randomized round-trip and canonicality")
{
  oracle::PacketGen gen(20240611);
  constexpr int rounds = 100000;
  int failures = 0;
  for (int k = 0; k < rounds; ++k) {
    auto p = gen.packet();
    auto bytes = encode(p);
    if (bytes != oracle::reference_encode(p) || decode(bytes) != p || encode(decode(bytes)) != bytes)
      ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("fuzzed input decodes canonically or fails cleanly")
{
  oracle::PacketGen gen(77);
  std::size_t accepted = 0;
  auto probe = [&] (const Bytes& b) {
    try {
      auto p = decode(b);
      ++accepted;
      CHECK(encode(p) == b);
    }
    catch (const DecodeError&) {
    }
  };
  // pure noise, biased toward valid tags in the first byte
  for (int k = 0; k < 50000; ++k) {
    auto b = gen.bytes(96);
    if (!b.empty() && gen.coin())
      b[0] = std::array<std::uint8_t, 4>{0x03, 0x05, 0x06, 0x0a}[gen.below(4)];
    probe(b);
  }
  // mutations of valid encodings
  for (int k = 0; k < 50000; ++k) {
    auto b = encode(gen.packet());
    switch (gen.below(4)) {
    case 0:
      b[gen.below(b.size())] ^= static_cast<std::uint8_t>(1 + gen.below(255));
      break;
    case 1:
      b.resize(gen.below(b.size()));
      break;
    case 2:
      b.insert(b.begin() + static_cast<std::ptrdiff_t>(gen.below(b.size() + 1)),
               static_cast<std::uint8_t>(gen.below(256)));
      break;
    default:
      b.erase(b.begin() + static_cast<std::ptrdiff_t>(gen.below(b.size())));
    }
    probe(b);
  }
  MESSAGE("fuzz inputs accepted: " << accepted);
}
