#pragma once

// Internal TLV helpers shared by the packet codec and the signed-chunk codec.

#include "r2p2/wire.hpp"

#include <set>

namespace r2p2::tlv {

class Writer
{
public:
  /// Opens a nested TLV; returns a marker for close().
  std::size_t
  open(std::uint8_t tag)
  {
    buf_.push_back(tag);
    buf_.push_back(0);
    buf_.push_back(0);
    return buf_.size();
  }

  void
  close(std::size_t marker)
  {
    std::size_t len = buf_.size() - marker;
    if (len > max_length)
      throw EncodeError("TLV 0x" + hex(buf_[marker - 3]) + " value of " + std::to_string(len) +
                        " bytes exceeds 65535");
    buf_[marker - 2] = static_cast<std::uint8_t>(len >> 8);
    buf_[marker - 1] = static_cast<std::uint8_t>(len);
  }

  void
  bytes(std::uint8_t tag, std::span<const std::uint8_t> value)
  {
    auto m = open(tag);
    buf_.insert(buf_.end(), value.begin(), value.end());
    close(m);
  }

  void
  str(std::uint8_t tag, std::string_view value)
  {
    bytes(tag, {reinterpret_cast<const std::uint8_t*>(value.data()), value.size()});
  }

  template<std::size_t Width>
  void
  uint(std::uint8_t tag, std::uint64_t value)
  {
    std::array<std::uint8_t, Width> be{};
    for (std::size_t i = 0; i < Width; ++i)
      be[Width - 1 - i] = static_cast<std::uint8_t>(value >> (8 * i));
    bytes(tag, be);
  }

  void
  addr(std::uint8_t tag, const NodeAddr& a)
  {
    bytes(tag, a.octets());
  }

  Bytes
  take()
  {
    return std::move(buf_);
  }

  static std::string
  hex(std::uint8_t tag)
  {
    return to_hex(Bytes{tag});
  }

private:
  Bytes buf_;
};

struct Element
{
  std::uint8_t tag = 0;
  std::span<const std::uint8_t> value;
  std::size_t offset = 0;       ///< offset of the tag byte in the outermost buffer
  std::size_t value_offset = 0; ///< offset of the first value byte
};

/// Strict, in-order reader over a sequence of sibling TLVs.
class Reader
{
public:
  Reader(std::span<const std::uint8_t> data, std::size_t base)
    : data_(data)
    , base_(base)
  {
  }

  bool
  at_end() const
  {
    return pos_ == data_.size();
  }

  std::size_t
  offset() const
  {
    return base_ + pos_;
  }

  std::optional<std::uint8_t>
  peek_tag() const
  {
    if (at_end())
      return std::nullopt;
    return data_[pos_];
  }

  Element
  next()
  {
    std::size_t start = pos_;
    if (data_.size() - pos_ < 3)
      throw DecodeError(base_ + start, "truncated TLV header");
    std::uint8_t tag = data_[pos_];
    std::size_t len = (std::size_t(data_[pos_ + 1]) << 8) | data_[pos_ + 2];
    if (data_.size() - pos_ - 3 < len)
      throw DecodeError(base_ + start, "TLV 0x" + Writer::hex(tag) + " length " + std::to_string(len) +
                                         " overruns enclosing buffer");
    pos_ += 3 + len;
    seen_.insert(tag);
    return Element{tag, data_.subspan(start + 3, len), base_ + start, base_ + start + 3};
  }

  /// Consumes the next element, which must carry `tag`.
  Element
  expect(std::uint8_t tag)
  {
    auto t = peek_tag();
    if (!t)
      throw DecodeError(offset(), "missing field 0x" + Writer::hex(tag));
    if (*t != tag)
      unexpected();
    return next();
  }

  std::optional<Element>
  optional(std::uint8_t tag)
  {
    if (peek_tag() == tag)
      return next();
    return std::nullopt;
  }

  /// Every sibling must have been consumed.
  void
  finish()
  {
    if (!at_end())
      unexpected();
  }

  [[noreturn]] void
  unexpected()
  {
    std::uint8_t t = data_[pos_];
    if (seen_.count(t) != 0)
      throw DecodeError(offset(), "duplicate field tag 0x" + Writer::hex(t));
    throw DecodeError(offset(), "unexpected field tag 0x" + Writer::hex(t));
  }

private:
  std::span<const std::uint8_t> data_;
  std::size_t base_;
  std::size_t pos_ = 0;
  std::set<std::uint8_t> seen_;
};

inline Reader
children(const Element& e)
{
  return Reader(e.value, e.value_offset);
}

template<std::size_t Width>
std::uint64_t
read_uint(const Element& e)
{
  if (e.value.size() != Width)
    throw DecodeError(e.offset, "field 0x" + Writer::hex(e.tag) + " must be " + std::to_string(Width) +
                                  " bytes, got " + std::to_string(e.value.size()));
  std::uint64_t v = 0;
  for (auto b : e.value)
    v = (v << 8) | b;
  return v;
}

template<std::size_t Width>
std::array<std::uint8_t, Width>
read_fixed(const Element& e)
{
  if (e.value.size() != Width)
    throw DecodeError(e.offset, "field 0x" + Writer::hex(e.tag) + " must be " + std::to_string(Width) +
                                  " bytes, got " + std::to_string(e.value.size()));
  std::array<std::uint8_t, Width> out{};
  std::copy(e.value.begin(), e.value.end(), out.begin());
  return out;
}

inline NodeAddr
read_addr(const Element& e)
{
  return NodeAddr(read_fixed<NodeAddr::size>(e));
}

void
write_name(Writer& w, const r2p2::Name& name);

r2p2::Name
read_name(const Element& e);

void
write_hop_signature(Writer& w, const HopSignature& hs);

HopSignature
read_hop_signature(const Element& e);

} // namespace r2p2::tlv
