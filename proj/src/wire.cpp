#include "r2p2/wire.hpp"

#include "tlv.hpp"

#include <algorithm>

namespace r2p2 {

DecodeError::DecodeError(std::size_t offset, const std::string& what)
  : std::runtime_error("offset " + std::to_string(offset) + ": " + what)
  , offset_(offset)
{
}

bool
RouteStack::contains(const NodeAddr& addr) const
{
  return std::find(addrs.begin(), addrs.end(), addr) != addrs.end();
}

std::string_view
to_string(NackReason reason)
{
  switch (reason) {
  case NackReason::NoRoute:
    return "NoRoute";
  case NackReason::InsufficientPayment:
    return "InsufficientPayment";
  case NackReason::Duplicate:
    return "Duplicate";
  case NackReason::Expired:
    return "Expired";
  }
  return "Unknown";
}

std::string_view
packet_kind(const Packet& pkt)
{
  static constexpr std::string_view names[] = {"Interest", "Data", "Nack", "KeepAlive"};
  return names[pkt.index()];
}

// ---- invariants ------------------------------------------------------------

namespace {

void
check_name(const Name& name)
{
  if (name.empty())
    throw EncodeError("name has no components");
}

void
check_hop_info(const HopInfo& hi)
{
  if (hi.local.is_broadcast())
    throw EncodeError("hop_info.local is the broadcast address");
  if (hi.remote && *hi.remote == hi.local)
    throw EncodeError("hop_info.local equals hop_info.remote");
}

void
check_route(const RouteStack& route)
{
  if (route.empty())
    throw EncodeError("attached route is empty");
  for (std::size_t i = 1; i < route.addrs.size(); ++i)
    if (route.addrs[i] == route.addrs[i - 1])
      throw EncodeError("route has adjacent duplicate entries");
}

void
check_proof(const ProofFragment& proof)
{
  if (proof.packet_count == 0)
    throw EncodeError("proof packet_count must be positive");
  if (proof.chain.empty() != !proof.digest.has_value())
    throw EncodeError("proof digest must be present exactly when the chain is non-empty");
}

struct Validator
{
  void
  operator()(const Interest& i) const
  {
    check_name(i.name);
    check_hop_info(i.hop_info);
    if (i.lifetime_ms == 0)
      throw EncodeError("Interest lifetime must be positive");
    if (!i.route) {
      if (i.hop_info.remote)
        throw EncodeError("discovery Interest must leave hop_info.remote empty");
    }
    else {
      check_route(*i.route);
      if (!i.hop_info.remote || *i.hop_info.remote != i.route->top())
        throw EncodeError("source-routed Interest must name the route top in hop_info.remote");
    }
  }

  void
  operator()(const Data& d) const
  {
    check_name(d.name);
    check_hop_info(d.hop_info);
    if (d.route.has_value() != d.price.has_value())
      throw EncodeError("discovery Data carries both route and price; content Data neither");
    if (d.route) {
      check_route(*d.route);
      if (d.proof)
        throw EncodeError("discovery Data cannot carry a proof");
    }
    else if (!d.price_breakdown.empty()) {
      throw EncodeError("price breakdown only rides on discovery Data");
    }
    if (d.proof)
      check_proof(*d.proof);
  }

  void
  operator()(const Nack& n) const
  {
    check_name(n.name);
    auto r = static_cast<std::uint8_t>(n.reason);
    if (r < 1 || r > 4)
      throw EncodeError("unknown NACK reason");
  }

  void
  operator()(const KeepAlive& k) const
  {
    if (k.sender.is_broadcast())
      throw EncodeError("keep-alive sender is the broadcast address");
  }
};

} // namespace

void
validate(const Packet& pkt)
{
  std::visit(Validator{}, pkt);
}

// ---- encoding --------------------------------------------------------------

namespace tlv {

void
write_name(Writer& w, const r2p2::Name& name)
{
  auto m = w.open(Name);
  for (const auto& c : name.components())
    w.str(NameComponent, c);
  if (name.chunk_index())
    w.uint<8>(ChunkIndex, *name.chunk_index());
  w.close(m);
}

r2p2::Name
read_name(const Element& e)
{
  auto r = children(e);
  std::vector<std::string> components;
  while (r.peek_tag() == NameComponent) {
    auto c = r.next();
    if (c.value.empty())
      throw DecodeError(c.offset, "empty name component");
    components.emplace_back(c.value.begin(), c.value.end());
  }
  if (components.empty())
    throw DecodeError(e.offset, "name has no components");
  std::optional<std::uint64_t> chunk;
  if (auto ci = r.optional(ChunkIndex))
    chunk = read_uint<8>(*ci);
  r.finish();
  return r2p2::Name(std::move(components), chunk);
}

void
write_hop_signature(Writer& w, const r2p2::HopSignature& hs)
{
  auto m = w.open(HopSig);
  w.addr(Signer, hs.signer);
  w.bytes(SignerPub, hs.signer_pub);
  w.bytes(Sig, hs.sig);
  w.close(m);
}

r2p2::HopSignature
read_hop_signature(const Element& e)
{
  auto r = children(e);
  r2p2::HopSignature hs;
  hs.signer = read_addr(r.expect(Signer));
  hs.signer_pub = read_fixed<32>(r.expect(SignerPub));
  hs.sig = read_fixed<64>(r.expect(Sig));
  r.finish();
  return hs;
}

} // namespace tlv

namespace {

using tlv::Writer;

void
write_hop_info(Writer& w, const HopInfo& hi)
{
  auto m = w.open(tlv::HopInfo);
  w.addr(tlv::Local, hi.local);
  if (hi.remote)
    w.addr(tlv::Remote, *hi.remote);
  w.close(m);
}

void
write_route(Writer& w, const RouteStack& route)
{
  auto m = w.open(tlv::Route);
  for (const auto& a : route.addrs)
    w.addr(tlv::RouteAddr, a);
  w.close(m);
}

struct Encoder
{
  Writer& w;

  void
  operator()(const Interest& i) const
  {
    auto m = w.open(tlv::Interest);
    tlv::write_name(w, i.name);
    w.uint<8>(tlv::Nonce, i.nonce);
    write_hop_info(w, i.hop_info);
    if (i.route)
      write_route(w, *i.route);
    if (i.payment) {
      auto pm = w.open(tlv::Payment);
      w.uint<8>(tlv::ChannelId, i.payment->channel_id);
      w.uint<8>(tlv::Amount, i.payment->amount);
      w.uint<8>(tlv::Sequence, i.payment->sequence);
      w.bytes(tlv::PayerSig, i.payment->payer_sig);
      w.close(pm);
    }
    w.uint<4>(tlv::Lifetime, i.lifetime_ms);
    w.close(m);
  }

  void
  operator()(const Data& d) const
  {
    auto m = w.open(tlv::Data);
    tlv::write_name(w, d.name);
    write_hop_info(w, d.hop_info);
    if (d.route)
      write_route(w, *d.route);
    if (d.price)
      w.uint<8>(tlv::Price, *d.price);
    if (!d.price_breakdown.empty()) {
      auto bm = w.open(tlv::PriceBreakdown);
      for (auto p : d.price_breakdown)
        w.uint<8>(tlv::HopPrice, p);
      w.close(bm);
    }
    if (d.proof) {
      auto pm = w.open(tlv::Proof);
      w.uint<4>(tlv::PacketCount, d.proof->packet_count);
      w.uint<4>(tlv::PacketSize, d.proof->packet_size);
      if (d.proof->digest)
        w.bytes(tlv::PayloadDigest, *d.proof->digest);
      for (const auto& hs : d.proof->chain)
        tlv::write_hop_signature(w, hs);
      w.close(pm);
    }
    w.bytes(tlv::Payload, d.payload);
    w.close(m);
  }

  void
  operator()(const Nack& n) const
  {
    auto m = w.open(tlv::Nack);
    tlv::write_name(w, n.name);
    w.uint<8>(tlv::Nonce, n.nonce);
    w.uint<1>(tlv::NackReason, static_cast<std::uint8_t>(n.reason));
    w.close(m);
  }

  void
  operator()(const KeepAlive& k) const
  {
    auto m = w.open(tlv::KeepAlive);
    w.addr(tlv::Local, k.sender);
    w.uint<8>(tlv::KeepAliveSeq, k.sequence);
    w.close(m);
  }
};

} // namespace

Bytes
encode(const Packet& pkt)
{
  validate(pkt);
  Writer w;
  std::visit(Encoder{w}, pkt);
  return w.take();
}

// ---- decoding --------------------------------------------------------------

namespace {

using tlv::children;
using tlv::Element;
using tlv::read_addr;
using tlv::read_fixed;
using tlv::read_uint;

HopInfo
read_hop_info(const Element& e)
{
  auto r = children(e);
  HopInfo hi;
  hi.local = read_addr(r.expect(tlv::Local));
  if (auto rem = r.optional(tlv::Remote))
    hi.remote = read_addr(*rem);
  r.finish();
  return hi;
}

RouteStack
read_route(const Element& e)
{
  auto r = children(e);
  RouteStack route;
  while (!r.at_end())
    route.addrs.push_back(read_addr(r.expect(tlv::RouteAddr)));
  return route;
}

Interest
read_interest(const Element& e)
{
  auto r = children(e);
  Interest i;
  i.name = tlv::read_name(r.expect(tlv::Name));
  i.nonce = read_uint<8>(r.expect(tlv::Nonce));
  i.hop_info = read_hop_info(r.expect(tlv::HopInfo));
  if (auto route = r.optional(tlv::Route))
    i.route = read_route(*route);
  if (auto pe = r.optional(tlv::Payment)) {
    auto pr = children(*pe);
    Payment p;
    p.channel_id = read_uint<8>(pr.expect(tlv::ChannelId));
    p.amount = read_uint<8>(pr.expect(tlv::Amount));
    p.sequence = read_uint<8>(pr.expect(tlv::Sequence));
    auto sig = pr.expect(tlv::PayerSig);
    p.payer_sig.assign(sig.value.begin(), sig.value.end());
    pr.finish();
    i.payment = std::move(p);
  }
  i.lifetime_ms = static_cast<std::uint32_t>(read_uint<4>(r.expect(tlv::Lifetime)));
  r.finish();
  return i;
}

Data
read_data(const Element& e)
{
  auto r = children(e);
  Data d;
  d.name = tlv::read_name(r.expect(tlv::Name));
  d.hop_info = read_hop_info(r.expect(tlv::HopInfo));
  if (auto route = r.optional(tlv::Route))
    d.route = read_route(*route);
  if (auto price = r.optional(tlv::Price))
    d.price = read_uint<8>(*price);
  if (auto bd = r.optional(tlv::PriceBreakdown)) {
    auto br = children(*bd);
    while (!br.at_end())
      d.price_breakdown.push_back(read_uint<8>(br.expect(tlv::HopPrice)));
    if (d.price_breakdown.empty())
      throw DecodeError(bd->offset, "empty price breakdown");
  }
  if (auto pe = r.optional(tlv::Proof)) {
    auto pr = children(*pe);
    ProofFragment proof;
    proof.packet_count = static_cast<std::uint32_t>(read_uint<4>(pr.expect(tlv::PacketCount)));
    proof.packet_size = static_cast<std::uint32_t>(read_uint<4>(pr.expect(tlv::PacketSize)));
    if (auto dg = pr.optional(tlv::PayloadDigest))
      proof.digest = read_fixed<32>(*dg);
    while (!pr.at_end())
      proof.chain.push_back(tlv::read_hop_signature(pr.expect(tlv::HopSig)));
    d.proof = std::move(proof);
  }
  auto payload = r.expect(tlv::Payload);
  d.payload.assign(payload.value.begin(), payload.value.end());
  r.finish();
  return d;
}

Nack
read_nack(const Element& e)
{
  auto r = children(e);
  Nack n;
  n.name = tlv::read_name(r.expect(tlv::Name));
  n.nonce = read_uint<8>(r.expect(tlv::Nonce));
  auto reason = r.expect(tlv::NackReason);
  auto v = read_uint<1>(reason);
  if (v < 1 || v > 4)
    throw DecodeError(reason.offset, "unknown NACK reason " + std::to_string(v));
  n.reason = static_cast<NackReason>(v);
  r.finish();
  return n;
}

KeepAlive
read_keepalive(const Element& e)
{
  auto r = children(e);
  KeepAlive k;
  k.sender = read_addr(r.expect(tlv::Local));
  k.sequence = read_uint<8>(r.expect(tlv::KeepAliveSeq));
  r.finish();
  return k;
}

} // namespace

Packet
decode(std::span<const std::uint8_t> bytes)
{
  if (bytes.empty())
    throw DecodeError(0, "empty input");
  tlv::Reader top(bytes, 0);
  auto e = top.next();
  if (!top.at_end())
    throw DecodeError(top.offset(), "trailing bytes after top-level TLV");

  Packet pkt = [&] () -> Packet {
    try {
      switch (e.tag) {
      case tlv::Interest:
        return read_interest(e);
      case tlv::Data:
        return read_data(e);
      case tlv::Nack:
        return read_nack(e);
      case tlv::KeepAlive:
        return read_keepalive(e);
      default:
        throw DecodeError(0, "unknown top-level tag 0x" + tlv::Writer::hex(e.tag));
      }
    }
    catch (const InvalidArgument& ex) {
      throw DecodeError(e.offset, ex.what());
    }
  }();

  try {
    validate(pkt);
  }
  catch (const EncodeError& ex) {
    throw DecodeError(0, std::string("packet violates invariants: ") + ex.what());
  }
  return pkt;
}

Bytes
serialize_chain(std::span<const HopSignature> chain)
{
  Bytes out;
  out.reserve(chain.size() * (NodeAddr::size + 32 + 64));
  for (const auto& hs : chain) {
    out.insert(out.end(), hs.signer.octets().begin(), hs.signer.octets().end());
    out.insert(out.end(), hs.signer_pub.begin(), hs.signer_pub.end());
    out.insert(out.end(), hs.sig.begin(), hs.sig.end());
  }
  return out;
}

} // namespace r2p2
