#pragma once

// Independent reference models used as test oracles. Nothing here calls into the
// library's codec, tables or payment code.

#include "r2p2/wire.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace oracle {

using r2p2::Bytes;

// ---- reference TLV encoder -------------------------------------------------

inline void
put_tlv(Bytes& out, std::uint8_t tag, const Bytes& value)
{
  out.push_back(tag);
  out.push_back(static_cast<std::uint8_t>(value.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(value.size() & 0xff));
  out.insert(out.end(), value.begin(), value.end());
}

inline Bytes
be(std::uint64_t v, int width)
{
  Bytes b;
  for (int i = width - 1; i >= 0; --i)
    b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return b;
}

inline Bytes
octets(const r2p2::NodeAddr& a)
{
  return Bytes(a.octets().begin(), a.octets().end());
}

inline Bytes
name_value(const r2p2::Name& n)
{
  Bytes v;
  for (const auto& c : n.components())
    put_tlv(v, 0x08, Bytes(c.begin(), c.end()));
  if (n.chunk_index())
    put_tlv(v, 0x09, be(*n.chunk_index(), 8));
  return v;
}

inline Bytes
hop_info_value(const r2p2::HopInfo& h)
{
  Bytes v;
  put_tlv(v, 0x11, octets(h.local));
  if (h.remote)
    put_tlv(v, 0x12, octets(*h.remote));
  return v;
}

inline Bytes
route_value(const r2p2::RouteStack& r)
{
  Bytes v;
  for (const auto& a : r.addrs)
    put_tlv(v, 0x14, octets(a));
  return v;
}

inline Bytes
hop_sig_value(const r2p2::HopSignature& hs)
{
  Bytes v;
  put_tlv(v, 0x35, octets(hs.signer));
  put_tlv(v, 0x36, Bytes(hs.signer_pub.begin(), hs.signer_pub.end()));
  put_tlv(v, 0x37, Bytes(hs.sig.begin(), hs.sig.end()));
  return v;
}

inline Bytes
reference_encode(const r2p2::Packet& pkt)
{
  Bytes body;
  std::uint8_t tag = 0;
  if (const auto* i = std::get_if<r2p2::Interest>(&pkt)) {
    tag = 0x05;
    put_tlv(body, 0x07, name_value(i->name));
    put_tlv(body, 0x0b, be(i->nonce, 8));
    put_tlv(body, 0x10, hop_info_value(i->hop_info));
    if (i->route)
      put_tlv(body, 0x13, route_value(*i->route));
    if (i->payment) {
      Bytes p;
      put_tlv(p, 0x21, be(i->payment->channel_id, 8));
      put_tlv(p, 0x22, be(i->payment->amount, 8));
      put_tlv(p, 0x23, be(i->payment->sequence, 8));
      put_tlv(p, 0x24, i->payment->payer_sig);
      put_tlv(body, 0x20, p);
    }
    put_tlv(body, 0x0c, be(i->lifetime_ms, 4));
  }
  else if (const auto* d = std::get_if<r2p2::Data>(&pkt)) {
    tag = 0x06;
    put_tlv(body, 0x07, name_value(d->name));
    put_tlv(body, 0x10, hop_info_value(d->hop_info));
    if (d->route)
      put_tlv(body, 0x13, route_value(*d->route));
    if (d->price)
      put_tlv(body, 0x16, be(*d->price, 8));
    if (!d->price_breakdown.empty()) {
      Bytes b;
      for (auto p : d->price_breakdown)
        put_tlv(b, 0x18, be(p, 8));
      put_tlv(body, 0x17, b);
    }
    if (d->proof) {
      Bytes p;
      put_tlv(p, 0x31, be(d->proof->packet_count, 4));
      put_tlv(p, 0x32, be(d->proof->packet_size, 4));
      if (d->proof->digest)
        put_tlv(p, 0x33, Bytes(d->proof->digest->begin(), d->proof->digest->end()));
      for (const auto& hs : d->proof->chain)
        put_tlv(p, 0x34, hop_sig_value(hs));
      put_tlv(body, 0x30, p);
    }
    put_tlv(body, 0x15, d->payload);
  }
  else if (const auto* n = std::get_if<r2p2::Nack>(&pkt)) {
    tag = 0x03;
    put_tlv(body, 0x07, name_value(n->name));
    put_tlv(body, 0x0b, be(n->nonce, 8));
    put_tlv(body, 0x40, be(static_cast<std::uint8_t>(n->reason), 1));
  }
  else {
    const auto& k = std::get<r2p2::KeepAlive>(pkt);
    tag = 0x0a;
    put_tlv(body, 0x11, octets(k.sender));
    put_tlv(body, 0x41, be(k.sequence, 8));
  }
  Bytes out;
  put_tlv(out, tag, body);
  return out;
}

// ---- random valid packets --------------------------------------------------

class PacketGen
{
public:
  explicit PacketGen(std::uint64_t seed)
    : rng_(seed)
  {
  }

  std::uint64_t
  u64()
  {
    return rng_();
  }

  std::uint64_t
  below(std::uint64_t n)
  {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_);
  }

  bool
  coin()
  {
    return below(2) == 0;
  }

  Bytes
  bytes(std::size_t max_len)
  {
    Bytes b(below(max_len + 1));
    for (auto& x : b)
      x = static_cast<std::uint8_t>(below(256));
    return b;
  }

  r2p2::NodeAddr
  addr()
  {
    // small alphabet so collisions (and adjacent duplicates) get exercised
    r2p2::NodeAddr::Octets o{0x02, 0, 0, 0, 0, static_cast<std::uint8_t>(below(12))};
    if (below(16) == 0)
      o[0] = static_cast<std::uint8_t>(below(255));
    return r2p2::NodeAddr(o);
  }

  r2p2::Name
  name()
  {
    std::vector<std::string> comps(1 + below(4));
    for (auto& c : comps) {
      auto b = bytes(10);
      if (b.empty())
        b.push_back('x');
      c.assign(b.begin(), b.end());
    }
    std::optional<std::uint64_t> chunk;
    if (coin())
      chunk = coin() ? below(64) : u64();
    return r2p2::Name(std::move(comps), chunk);
  }

  r2p2::HopInfo
  hop_info(bool with_remote)
  {
    r2p2::HopInfo h{addr(), std::nullopt};
    if (with_remote) {
      auto r = addr();
      while (r == h.local)
        r = addr();
      h.remote = r;
    }
    return h;
  }

  r2p2::RouteStack
  route(std::size_t max_len = 6)
  {
    r2p2::RouteStack r;
    std::size_t n = 1 + below(max_len);
    while (r.addrs.size() < n) {
      auto a = addr();
      if (r.addrs.empty() || r.addrs.back() != a)
        r.addrs.push_back(a);
    }
    return r;
  }

  r2p2::Interest
  interest()
  {
    r2p2::Interest i;
    i.name = name();
    i.nonce = u64();
    i.lifetime_ms = static_cast<std::uint32_t>(1 + below(100000));
    if (coin()) {
      i.route = route();
      i.hop_info = hop_info(false);
      while (i.hop_info.local == i.route->top())
        i.hop_info.local = addr();
      i.hop_info.remote = i.route->top();
      if (coin())
        i.payment = r2p2::Payment{u64(), below(1000000), u64(), bytes(coin() ? 64 : 8)};
    }
    else {
      i.hop_info = hop_info(false);
    }
    return i;
  }

  r2p2::Data
  data()
  {
    r2p2::Data d;
    d.name = name();
    d.hop_info = hop_info(coin());
    d.payload = bytes(below(8) == 0 ? 2000 : 48);
    if (coin()) {
      d.route = route();
      d.price = below(1000);
      std::size_t n = below(4);
      for (std::size_t k = 0; k < n; ++k)
        d.price_breakdown.push_back(below(100));
    }
    else if (coin()) {
      r2p2::ProofFragment p;
      p.packet_count = static_cast<std::uint32_t>(1 + below(64));
      p.packet_size = static_cast<std::uint32_t>(below(2000));
      std::size_t n = below(4);
      for (std::size_t k = 0; k < n; ++k) {
        r2p2::HopSignature hs;
        hs.signer = addr();
        for (auto& x : hs.signer_pub)
          x = static_cast<std::uint8_t>(below(256));
        for (auto& x : hs.sig)
          x = static_cast<std::uint8_t>(below(256));
        p.chain.push_back(hs);
      }
      if (!p.chain.empty()) {
        r2p2::crypto::Digest dg{};
        for (auto& x : dg)
          x = static_cast<std::uint8_t>(below(256));
        p.digest = dg;
      }
      d.proof = p;
    }
    return d;
  }

  r2p2::Nack
  nack()
  {
    return r2p2::Nack{name(), u64(), static_cast<r2p2::NackReason>(1 + below(4))};
  }

  r2p2::KeepAlive
  keepalive()
  {
    r2p2::KeepAlive k;
    k.sender = addr();
    k.sequence = u64();
    return k;
  }

  r2p2::Packet
  packet()
  {
    switch (below(4)) {
    case 0:
      return interest();
    case 1:
      return data();
    case 2:
      return nack();
    default:
      return keepalive();
    }
  }

private:
  std::mt19937_64 rng_;
};

// ---- naive models ----------------------------------------------------------

/// Minimum over the last `capacity` samples by direct scan.
inline std::uint64_t
window_min(const std::vector<std::uint64_t>& all, std::size_t capacity)
{
  auto start = all.size() > capacity ? all.end() - static_cast<std::ptrdiff_t>(capacity) : all.begin();
  return *std::min_element(start, all.end());
}

inline std::string
read_text(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Bytes
read_hex_file(const std::filesystem::path& p)
{
  auto text = read_text(p);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r'))
    text.pop_back();
  Bytes out;
  for (std::size_t i = 0; i + 1 < text.size(); i += 2)
    out.push_back(static_cast<std::uint8_t>(std::stoul(text.substr(i, 2), nullptr, 16)));
  return out;
}

} // namespace oracle
