#pragma once

// Identities and the signed messages exchanged between vehicles and base
// stations. Every message has a canonical encoding; signatures cover the
// fields listed next to each `signed_payload()`.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "vcache/core/model.hpp"
#include "vcache/ledger/codec.hpp"
#include "vcache/ledger/crypto.hpp"

namespace vcache::ledger {

/// CA-signed binding of a public key to a digest of registration data. The
/// registration data itself never leaves the CA.
struct Certificate {
  PublicKey subject;
  Digest registration_digest;
  PublicKey issuer;
  Signature signature;

  Bytes signed_payload() const;  // subject || registration_digest
  void encode(ByteWriter& w) const;
  static Certificate decode(ByteReader& r);
};

struct Identity {
  KeyPair keys;
  Certificate cert;

  const PublicKey& pk() const { return keys.pk; }
  std::uint32_t wallet_index = 0;  // which derived address is in use

  WalletAddress wallet() const { return wallet_address(keys.pk, wallet_index); }
};

class CertificateAuthority {
 public:
  explicit CertificateAuthority(Rng& rng);

  Identity issue(std::string_view registration_info, Rng& rng) const;
  bool check(const Certificate& cert) const;
  const PublicKey& public_key() const { return keys_.pk; }

 private:
  KeyPair keys_;
};

/// Integer coin units; 1 coin = kUnitsPerCoin units.
inline constexpr std::int64_t kUnitsPerCoin = 1'000'000'000;
std::int64_t to_units(double coins);
double to_coins(std::int64_t units);

/// Vehicle -> BS: request for cache space.
struct CachingRequest {
  double cache_bytes = 0.0;
  Vec2 location;
  PublicKey pk;
  Signature sig;  // over cache_bytes || location
  Certificate cert;
  double ts = 0.0;

  static CachingRequest make(const Identity& id, double cache_bytes, Vec2 location, double ts);
  Bytes signed_payload() const;
  Bytes encode() const;
  static CachingRequest decode(ByteView raw);
};

/// Vehicle -> BS: advertised free cache space.
struct ResourceAdvert {
  double capacity_bytes = 0.0;
  Vec2 location;
  PublicKey pk;
  Signature sig;  // over capacity_bytes || location
  Certificate cert;
  double ts = 0.0;

  static ResourceAdvert make(const Identity& id, double capacity_bytes, Vec2 location, double ts);
  Bytes signed_payload() const;
  Bytes encode() const;
  static ResourceAdvert decode(ByteView raw);
};

/// Checks signature, certificate and freshness (|now - ts| <= window).
bool verify_message(const CachingRequest& m, const CertificateAuthority& ca, double now,
                    double window);
bool verify_message(const ResourceAdvert& m, const CertificateAuthority& ca, double now,
                    double window);

SignedItem signed_item(const CachingRequest& m);
SignedItem signed_item(const ResourceAdvert& m);

struct ChannelInfo {
  double rate_bps = 0.0;
  double distance_m = 0.0;
};

/// BS -> requester: where its content goes.
struct RequesterResponse {
  Vec2 provider_location;
  ChannelInfo chan;
  PublicKey provider_pk;
  Signature bs_sig;  // over provider_location || chan || provider_pk
  double ts = 0.0;

  Bytes signed_payload() const;
  Bytes encode() const;
  static RequesterResponse decode(ByteView raw);
};

/// BS -> provider: how much content to expect.
struct ProviderResponse {
  double cache_bytes = 0.0;
  Vec2 provider_location;
  ChannelInfo chan;
  Signature bs_sig;  // over cache_bytes || provider_location || chan
  double ts = 0.0;

  Bytes signed_payload() const;
  Bytes encode() const;
  static ProviderResponse decode(ByteView raw);
};

using MatchResponse = std::variant<RequesterResponse, ProviderResponse>;

struct MatchResponses {
  RequesterResponse to_requester;
  ProviderResponse to_provider;
};

/// The pair of responses a BS issues for one matched (requester, provider).
MatchResponses respond(const KeyPair& bs, double cache_bytes, const PublicKey& provider_pk,
                       Vec2 provider_location, const ChannelInfo& chan, double ts);
bool verify_response(const RequesterResponse& r, const PublicKey& bs);
bool verify_response(const ProviderResponse& r, const PublicKey& bs);

/// Requester's record of a completed caching payment.
struct Transaction {
  double cache_bytes = 0.0;
  std::int64_t coins = 0;  // units
  WalletAddress from;
  WalletAddress to;
  PublicKey payer;
  std::uint32_t from_index = 0;  // derivation index of `from` under `payer`
  double ts = 0.0;
  Signature sig;  // over cache_bytes || coins || from || to || from_index || ts

  static Transaction make(const Identity& payer, double cache_bytes, std::int64_t coins,
                          const WalletAddress& to, double ts);
  Bytes signed_payload() const;
  /// Positive amount, signature valid and `from` derived from `payer`.
  bool verify() const;
  Digest hash() const;
  void encode(ByteWriter& w) const;
  static Transaction decode(ByteReader& r);
  nlohmann::json to_json() const;
};

/// Authenticated envelope standing in for public-key encryption: bound to a
/// recipient and signed by the sender.
struct Envelope {
  PublicKey recipient;
  PublicKey sender;
  Bytes payload;
  Signature sig;  // over recipient || payload
};

Envelope seal(const PublicKey& recipient, const KeyPair& sender, Bytes payload);
/// Throws LedgerError if the envelope is not addressed to `me` or was altered.
Bytes open(const Envelope& env, const PublicKey& me);

class LedgerError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcache::ledger
