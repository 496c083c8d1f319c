#pragma once

#include "r2p2/types.hpp"

#include <array>
#include <span>

namespace r2p2::crypto {

using Digest = std::array<std::uint8_t, 32>;
using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;
using Signature = std::array<std::uint8_t, 64>;

/// SHA-256.
Digest
sha256(std::span<const std::uint8_t> data);

struct KeyPair
{
  PublicKey public_key{};
  SecretKey secret_key{};
  NodeAddr owner;
};

/// Deterministic Ed25519 key pair derived from SHA-256(seed_be64 || "r2p2-key" || owner).
KeyPair
derive_keypair(std::uint64_t seed, const NodeAddr& owner);

/// Ed25519 detached signature (deterministic).
Signature
sign(const KeyPair& key, std::span<const std::uint8_t> message);

bool
verify(const PublicKey& key, std::span<const std::uint8_t> message, const Signature& sig);

} // namespace r2p2::crypto
