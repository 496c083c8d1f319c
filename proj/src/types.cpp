#include "r2p2/types.hpp"

#include <algorithm>
#include <charconv>

namespace r2p2 {

namespace {

int
hex_value(char c)
{
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

constexpr char kHexDigits[] = "0123456789abcdef";

} // namespace

NodeAddr
NodeAddr::parse(std::string_view text)
{
  // accepts "00-14-00-00-00-0a" and "00:14:00:00:00:0a"
  if (text.size() != 17)
    throw InvalidArgument("node address must have 6 octets: '" + std::string(text) + "'");
  Octets octets{};
  for (std::size_t i = 0; i < size; ++i) {
    int hi = hex_value(text[i * 3]);
    int lo = hex_value(text[i * 3 + 1]);
    if (hi < 0 || lo < 0 || (i + 1 < size && text[i * 3 + 2] != '-' && text[i * 3 + 2] != ':'))
      throw InvalidArgument("malformed node address '" + std::string(text) + "'");
    octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return NodeAddr(octets);
}

std::string
NodeAddr::to_string() const
{
  std::string out;
  out.reserve(17);
  for (std::size_t i = 0; i < size; ++i) {
    if (i != 0)
      out.push_back('-');
    out.push_back(kHexDigits[octets_[i] >> 4]);
    out.push_back(kHexDigits[octets_[i] & 0x0f]);
  }
  return out;
}

Name::Name(std::vector<std::string> components, std::optional<std::uint64_t> chunk_index)
  : components_(std::move(components))
  , chunk_index_(chunk_index)
{
  if (components_.empty())
    throw InvalidArgument("name needs at least one component");
  if (std::any_of(components_.begin(), components_.end(), [] (const auto& c) { return c.empty(); }))
    throw InvalidArgument("name components must be non-empty");
}

Name
Name::parse(std::string_view uri)
{
  std::optional<std::uint64_t> chunk;
  if (auto hash = uri.rfind('#'); hash != std::string_view::npos) {
    auto digits = uri.substr(hash + 1);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size())
      throw InvalidArgument("malformed chunk index in '" + std::string(uri) + "'");
    chunk = value;
    uri = uri.substr(0, hash);
  }
  if (uri.empty() || uri.front() != '/')
    throw InvalidArgument("name must start with '/': '" + std::string(uri) + "'");

  std::vector<std::string> components;
  std::size_t pos = 1;
  while (pos <= uri.size()) {
    auto next = uri.find('/', pos);
    if (next == std::string_view::npos)
      next = uri.size();
    components.emplace_back(uri.substr(pos, next - pos));
    pos = next + 1;
  }
  return Name(std::move(components), chunk);
}

Name
Name::append(std::string component) const
{
  auto components = components_;
  components.push_back(std::move(component));
  return Name(std::move(components));
}

bool
Name::is_prefix_of(const Name& other) const
{
  if (components_.size() > other.components_.size())
    return false;
  return std::equal(components_.begin(), components_.end(), other.components_.begin());
}

std::string
Name::to_uri() const
{
  std::string out;
  for (const auto& c : components_) {
    out.push_back('/');
    out += c;
  }
  if (chunk_index_)
    out += "#" + std::to_string(*chunk_index_);
  return out;
}

std::string
to_hex(const Bytes& bytes)
{
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

Bytes
from_hex(std::string_view hex)
{
  Bytes out;
  int pending = -1;
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t')
      continue;
    int v = hex_value(c);
    if (v < 0)
      throw InvalidArgument("invalid hex digit");
    if (pending < 0) {
      pending = v;
    }
    else {
      out.push_back(static_cast<std::uint8_t>(pending * 16 + v));
      pending = -1;
    }
  }
  if (pending >= 0)
    throw InvalidArgument("odd number of hex digits");
  return out;
}

} // namespace r2p2
