#pragma once

// Hashing and signatures behind a small value-typed interface. The concrete
// scheme is Ed25519 with SHA-256 digests (libsodium).

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcache/core/rng.hpp"

namespace vcache::ledger {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

template <std::size_t N, typename Tag>
struct FixedBytes {
  std::array<std::uint8_t, N> bytes{};

  static constexpr std::size_t size() { return N; }
  ByteView view() const { return bytes; }
  friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

struct DigestTag {};
struct PublicKeyTag {};
struct SignatureTag {};
struct WalletTag {};

using Digest = FixedBytes<32, DigestTag>;
using Signature = FixedBytes<64, SignatureTag>;
using WalletAddress = FixedBytes<20, WalletTag>;

struct PublicKey : FixedBytes<32, PublicKeyTag> {
  /// Throws InvalidArgument unless `raw` has exactly 32 bytes.
  static PublicKey from_bytes(ByteView raw);
};

/// Ed25519 secret key (seed followed by public key).
class SecretKey {
 public:
  /// Throws InvalidArgument for a wrong length or an inconsistent key.
  static SecretKey from_bytes(ByteView raw);
  ByteView view() const { return bytes_; }
  PublicKey public_key() const;

 private:
  std::array<std::uint8_t, 64> bytes_{};
  friend struct KeyPair;
};

struct KeyPair {
  PublicKey pk;
  SecretKey sk;

  static KeyPair from_seed(const std::array<std::uint8_t, 32>& seed);
  /// Deterministic key from the seeded generator.
  static KeyPair generate(Rng& rng);
};

Digest sha256(ByteView data);
Digest sha256(const std::string& data);

Signature sign(const SecretKey& sk, ByteView message);
bool verify(const PublicKey& pk, ByteView message, const Signature& sig);

/// Address = first 20 bytes of SHA-256(public key). A non-zero `index`
/// derives an additional address from SHA-256(public key || index) so a
/// vehicle can rotate addresses under one key.
WalletAddress wallet_address(const PublicKey& pk, std::uint32_t index = 0);

struct SignedItem {
  PublicKey pk;
  Bytes message;
  Signature sig;
};

/// True iff every item verifies (vacuously true when empty). Items are
/// checked in parallel.
bool batch_verify(std::span<const SignedItem> items);

namespace reference {
bool batch_verify(std::span<const SignedItem> items);
}

std::string to_hex(ByteView data);

}  // namespace vcache::ledger
