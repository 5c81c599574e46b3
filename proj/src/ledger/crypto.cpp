#include "vcache/ledger/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstdint>
#include <cstring>

#include "vcache/core/error.hpp"

namespace vcache::ledger {

namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error("libsodium failed to initialise");
}

}  // namespace

PublicKey PublicKey::from_bytes(ByteView raw) {
  if (raw.size() != size()) throw InvalidArgument("public key must be 32 bytes");
  PublicKey pk;
  std::copy(raw.begin(), raw.end(), pk.bytes.begin());
  return pk;
}

SecretKey SecretKey::from_bytes(ByteView raw) {
  ensure_sodium();
  if (raw.size() != 64) throw InvalidArgument("secret key must be 64 bytes");
  SecretKey sk;
  std::copy(raw.begin(), raw.end(), sk.bytes_.begin());
  std::array<std::uint8_t, 32> pk{};
  std::array<std::uint8_t, 64> check{};
  crypto_sign_seed_keypair(pk.data(), check.data(), sk.bytes_.data());
  if (check != sk.bytes_) throw InvalidArgument("secret key is inconsistent with its public half");
  return sk;
}

PublicKey SecretKey::public_key() const {
  PublicKey pk;
  std::copy(bytes_.begin() + 32, bytes_.end(), pk.bytes.begin());
  return pk;
}

KeyPair KeyPair::from_seed(const std::array<std::uint8_t, 32>& seed) {
  ensure_sodium();
  KeyPair kp;
  crypto_sign_seed_keypair(kp.pk.bytes.data(), kp.sk.bytes_.data(), seed.data());
  return kp;
}

KeyPair KeyPair::generate(Rng& rng) {
  std::array<std::uint8_t, 32> seed{};
  for (std::size_t k = 0; k < seed.size(); k += 8) {
    const std::uint64_t v = rng.next_u64();
    std::memcpy(seed.data() + k, &v, 8);
  }
  return from_seed(seed);
}

Digest sha256(ByteView data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Digest sha256(const std::string& data) {
  return sha256(ByteView(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Signature sign(const SecretKey& sk, ByteView message) {
  ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(), sk.view().data());
  return sig;
}

bool verify(const PublicKey& pk, ByteView message, const Signature& sig) {
  ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                     pk.bytes.data()) == 0;
}

WalletAddress wallet_address(const PublicKey& pk, std::uint32_t index) {
  Digest d;
  if (index == 0) {
    d = sha256(pk.view());
  } else {
    Bytes buf(pk.bytes.begin(), pk.bytes.end());
    for (int s = 24; s >= 0; s -= 8) buf.push_back(static_cast<std::uint8_t>(index >> s));
    d = sha256(buf);
  }
  WalletAddress w;
  std::copy_n(d.bytes.begin(), w.bytes.size(), w.bytes.begin());
  return w;
}

bool batch_verify(std::span<const SignedItem> items) {
  ensure_sodium();
  const auto n = static_cast<std::int64_t>(items.size());
  int failures = 0;
#pragma omp parallel for reduction(+ : failures) schedule(static)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto& it = items[static_cast<std::size_t>(k)];
    if (!verify(it.pk, it.message, it.sig)) ++failures;
  }
  return failures == 0;
}

namespace reference {

bool batch_verify(std::span<const SignedItem> items) {
  for (const auto& it : items) {
    if (!verify(it.pk, it.message, it.sig)) return false;
  }
  return true;
}

}  // namespace reference

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

}  // namespace vcache::ledger
