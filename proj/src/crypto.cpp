#include "r2p2/crypto.hpp"

#include <sodium.h>

namespace r2p2::crypto {

namespace {

void
ensure_sodium()
{
  static const bool ready = [] {
    if (sodium_init() < 0)
      throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}

} // namespace

Digest
sha256(std::span<const std::uint8_t> data)
{
  ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

KeyPair
derive_keypair(std::uint64_t seed, const NodeAddr& owner)
{
  ensure_sodium();
  Bytes material;
  for (int shift = 56; shift >= 0; shift -= 8)
    material.push_back(static_cast<std::uint8_t>(seed >> shift));
  constexpr std::string_view label = "r2p2-key";
  material.insert(material.end(), label.begin(), label.end());
  material.insert(material.end(), owner.octets().begin(), owner.octets().end());
  Digest key_seed = sha256(material);

  KeyPair kp;
  kp.owner = owner;
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), key_seed.data());
  return kp;
}

Signature
sign(const KeyPair& key, std::span<const std::uint8_t> message)
{
  ensure_sodium();
  Signature sig{};
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), key.secret_key.data());
  return sig;
}

bool
verify(const PublicKey& key, std::span<const std::uint8_t> message, const Signature& sig)
{
  ensure_sodium();
  return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

} // namespace r2p2::crypto
