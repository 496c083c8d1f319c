#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace r2p2 {

using Bytes = std::vector<std::uint8_t>;

/// Token amounts in micro-units ("u").
using Tokens = std::uint64_t;

/// Simulation time, integer microseconds since scenario start.
using SimTime = std::chrono::microseconds;

constexpr SimTime
ms(std::int64_t v)
{
  return std::chrono::milliseconds(v);
}

/// 6-octet link-layer identifier, rendered as "00-14-00-00-00-0a".
class NodeAddr
{
public:
  static constexpr std::size_t size = 6;
  using Octets = std::array<std::uint8_t, size>;

  constexpr NodeAddr() = default;
  constexpr explicit NodeAddr(const Octets& octets) : octets_(octets) {}

  static NodeAddr
  parse(std::string_view text);

  static constexpr NodeAddr
  broadcast()
  {
    return NodeAddr(Octets{0xff, 0xff, 0xff, 0xff, 0xff, 0xff});
  }

  constexpr bool
  is_broadcast() const
  {
    return *this == broadcast();
  }

  const Octets&
  octets() const
  {
    return octets_;
  }

  std::string
  to_string() const;

  constexpr auto operator<=>(const NodeAddr&) const = default;

private:
  Octets octets_{};
};

/// NDN name: ordered non-empty components plus an optional chunk index.
/// Text form: "/a/b" or "/a/b#3" when the chunk index is present.
class Name
{
public:
  Name() = default;
  explicit Name(std::vector<std::string> components,
                std::optional<std::uint64_t> chunk_index = std::nullopt);

  static Name
  parse(std::string_view uri);

  const std::vector<std::string>&
  components() const
  {
    return components_;
  }

  const std::optional<std::uint64_t>&
  chunk_index() const
  {
    return chunk_index_;
  }

  /// Same name with the chunk index stripped.
  Name
  group() const
  {
    return Name(components_);
  }

  Name
  with_chunk(std::uint64_t index) const
  {
    return Name(components_, index);
  }

  Name
  append(std::string component) const;

  /// True if every component of this name prefixes `other` (chunk index ignored).
  bool
  is_prefix_of(const Name& other) const;

  bool
  empty() const
  {
    return components_.empty();
  }

  std::string
  to_uri() const;

  auto operator<=>(const Name&) const = default;

private:
  std::vector<std::string> components_;
  std::optional<std::uint64_t> chunk_index_;
};

class InvalidArgument : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

std::string
to_hex(const Bytes& bytes);

Bytes
from_hex(std::string_view hex);

} // namespace r2p2
