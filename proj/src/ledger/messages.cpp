#include "vcache/ledger/messages.hpp"

#include <cmath>

namespace vcache::ledger {

namespace {

void put_vec(ByteWriter& w, Vec2 v) {
  w.f64(v.x);
  w.f64(v.y);
}

Vec2 get_vec(ByteReader& r) {
  const double x = r.f64();
  const double y = r.f64();
  return {x, y};
}

void put_chan(ByteWriter& w, const ChannelInfo& c) {
  w.f64(c.rate_bps);
  w.f64(c.distance_m);
}

ChannelInfo get_chan(ByteReader& r) {
  const double rate = r.f64();
  const double dist = r.f64();
  return {rate, dist};
}

bool fresh(double ts, double now, double window) { return std::abs(now - ts) <= window; }

}  // namespace

Bytes Certificate::signed_payload() const {
  ByteWriter w;
  w.fixed(subject);
  w.fixed(registration_digest);
  return w.take();
}

void Certificate::encode(ByteWriter& w) const {
  w.fixed(subject);
  w.fixed(registration_digest);
  w.fixed(issuer);
  w.fixed(signature);
}

Certificate Certificate::decode(ByteReader& r) {
  Certificate c;
  c.subject = r.fixed<PublicKey>();
  c.registration_digest = r.fixed<Digest>();
  c.issuer = r.fixed<PublicKey>();
  c.signature = r.fixed<Signature>();
  return c;
}

CertificateAuthority::CertificateAuthority(Rng& rng) : keys_(KeyPair::generate(rng)) {}

Identity CertificateAuthority::issue(std::string_view registration_info, Rng& rng) const {
  Identity id{KeyPair::generate(rng), {}};
  id.cert.subject = id.keys.pk;
  id.cert.registration_digest = sha256(std::string(registration_info));
  id.cert.issuer = keys_.pk;
  id.cert.signature = sign(keys_.sk, id.cert.signed_payload());
  return id;
}

bool CertificateAuthority::check(const Certificate& cert) const {
  return cert.issuer == keys_.pk && verify(keys_.pk, cert.signed_payload(), cert.signature);
}

std::int64_t to_units(double coins) {
  return static_cast<std::int64_t>(std::llround(coins * static_cast<double>(kUnitsPerCoin)));
}

double to_coins(std::int64_t units) {
  return static_cast<double>(units) / static_cast<double>(kUnitsPerCoin);
}

// --- CachingRequest / ResourceAdvert -------------------------------------

CachingRequest CachingRequest::make(const Identity& id, double cache_bytes, Vec2 location,
                                    double ts) {
  CachingRequest m;
  m.cache_bytes = cache_bytes;
  m.location = location;
  m.pk = id.pk();
  m.cert = id.cert;
  m.ts = ts;
  m.sig = sign(id.keys.sk, m.signed_payload());
  return m;
}

Bytes CachingRequest::signed_payload() const {
  ByteWriter w;
  w.f64(cache_bytes);
  put_vec(w, location);
  return w.take();
}

Bytes CachingRequest::encode() const {
  ByteWriter w;
  w.f64(cache_bytes);
  put_vec(w, location);
  w.fixed(pk);
  w.fixed(sig);
  cert.encode(w);
  w.f64(ts);
  return w.take();
}

CachingRequest CachingRequest::decode(ByteView raw) {
  ByteReader r(raw);
  CachingRequest m;
  m.cache_bytes = r.f64();
  m.location = get_vec(r);
  m.pk = r.fixed<PublicKey>();
  m.sig = r.fixed<Signature>();
  m.cert = Certificate::decode(r);
  m.ts = r.f64();
  r.expect_end();
  return m;
}

ResourceAdvert ResourceAdvert::make(const Identity& id, double capacity_bytes, Vec2 location,
                                    double ts) {
  ResourceAdvert m;
  m.capacity_bytes = capacity_bytes;
  m.location = location;
  m.pk = id.pk();
  m.cert = id.cert;
  m.ts = ts;
  m.sig = sign(id.keys.sk, m.signed_payload());
  return m;
}

Bytes ResourceAdvert::signed_payload() const {
  ByteWriter w;
  w.f64(capacity_bytes);
  put_vec(w, location);
  return w.take();
}

Bytes ResourceAdvert::encode() const {
  ByteWriter w;
  w.f64(capacity_bytes);
  put_vec(w, location);
  w.fixed(pk);
  w.fixed(sig);
  cert.encode(w);
  w.f64(ts);
  return w.take();
}

ResourceAdvert ResourceAdvert::decode(ByteView raw) {
  ByteReader r(raw);
  ResourceAdvert m;
  m.capacity_bytes = r.f64();
  m.location = get_vec(r);
  m.pk = r.fixed<PublicKey>();
  m.sig = r.fixed<Signature>();
  m.cert = Certificate::decode(r);
  m.ts = r.f64();
  r.expect_end();
  return m;
}

bool verify_message(const CachingRequest& m, const CertificateAuthority& ca, double now,
                    double window) {
  return fresh(m.ts, now, window) && m.cert.subject == m.pk && ca.check(m.cert) &&
         verify(m.pk, m.signed_payload(), m.sig);
}

bool verify_message(const ResourceAdvert& m, const CertificateAuthority& ca, double now,
                    double window) {
  return fresh(m.ts, now, window) && m.cert.subject == m.pk && ca.check(m.cert) &&
         verify(m.pk, m.signed_payload(), m.sig);
}

SignedItem signed_item(const CachingRequest& m) { return {m.pk, m.signed_payload(), m.sig}; }
SignedItem signed_item(const ResourceAdvert& m) { return {m.pk, m.signed_payload(), m.sig}; }

// --- Responses ------------------------------------------------------------

Bytes RequesterResponse::signed_payload() const {
  ByteWriter w;
  put_vec(w, provider_location);
  put_chan(w, chan);
  w.fixed(provider_pk);
  return w.take();
}

Bytes RequesterResponse::encode() const {
  ByteWriter w;
  put_vec(w, provider_location);
  put_chan(w, chan);
  w.fixed(provider_pk);
  w.fixed(bs_sig);
  w.f64(ts);
  return w.take();
}

RequesterResponse RequesterResponse::decode(ByteView raw) {
  ByteReader r(raw);
  RequesterResponse m;
  m.provider_location = get_vec(r);
  m.chan = get_chan(r);
  m.provider_pk = r.fixed<PublicKey>();
  m.bs_sig = r.fixed<Signature>();
  m.ts = r.f64();
  r.expect_end();
  return m;
}

Bytes ProviderResponse::signed_payload() const {
  ByteWriter w;
  w.f64(cache_bytes);
  put_vec(w, provider_location);
  put_chan(w, chan);
  return w.take();
}

Bytes ProviderResponse::encode() const {
  ByteWriter w;
  w.f64(cache_bytes);
  put_vec(w, provider_location);
  put_chan(w, chan);
  w.fixed(bs_sig);
  w.f64(ts);
  return w.take();
}

ProviderResponse ProviderResponse::decode(ByteView raw) {
  ByteReader r(raw);
  ProviderResponse m;
  m.cache_bytes = r.f64();
  m.provider_location = get_vec(r);
  m.chan = get_chan(r);
  m.bs_sig = r.fixed<Signature>();
  m.ts = r.f64();
  r.expect_end();
  return m;
}

MatchResponses respond(const KeyPair& bs, double cache_bytes, const PublicKey& provider_pk,
                       Vec2 provider_location, const ChannelInfo& chan, double ts) {
  MatchResponses out;
  out.to_requester.provider_location = provider_location;
  out.to_requester.chan = chan;
  out.to_requester.provider_pk = provider_pk;
  out.to_requester.ts = ts;
  out.to_requester.bs_sig = sign(bs.sk, out.to_requester.signed_payload());
  out.to_provider.cache_bytes = cache_bytes;
  out.to_provider.provider_location = provider_location;
  out.to_provider.chan = chan;
  out.to_provider.ts = ts;
  out.to_provider.bs_sig = sign(bs.sk, out.to_provider.signed_payload());
  return out;
}

bool verify_response(const RequesterResponse& r, const PublicKey& bs) {
  return verify(bs, r.signed_payload(), r.bs_sig);
}

bool verify_response(const ProviderResponse& r, const PublicKey& bs) {
  return verify(bs, r.signed_payload(), r.bs_sig);
}

// --- Transaction ----------------------------------------------------------

Transaction Transaction::make(const Identity& payer, double cache_bytes, std::int64_t coins,
                              const WalletAddress& to, double ts) {
  Transaction t;
  t.cache_bytes = cache_bytes;
  t.coins = coins;
  t.from = payer.wallet();
  t.to = to;
  t.payer = payer.pk();
  t.from_index = payer.wallet_index;
  t.ts = ts;
  t.sig = sign(payer.keys.sk, t.signed_payload());
  return t;
}

Bytes Transaction::signed_payload() const {
  ByteWriter w;
  w.f64(cache_bytes);
  w.i64(coins);
  w.fixed(from);
  w.fixed(to);
  w.u32(from_index);
  w.f64(ts);
  return w.take();
}

bool Transaction::verify() const {
  return coins > 0 && from == wallet_address(payer, from_index) &&
         ledger::verify(payer, signed_payload(), sig);
}

Digest Transaction::hash() const {
  ByteWriter w;
  encode(w);
  return sha256(w.bytes());
}

void Transaction::encode(ByteWriter& w) const {
  w.f64(cache_bytes);
  w.i64(coins);
  w.fixed(from);
  w.fixed(to);
  w.fixed(payer);
  w.u32(from_index);
  w.f64(ts);
  w.fixed(sig);
}

Transaction Transaction::decode(ByteReader& r) {
  Transaction t;
  t.cache_bytes = r.f64();
  t.coins = r.i64();
  t.from = r.fixed<WalletAddress>();
  t.to = r.fixed<WalletAddress>();
  t.payer = r.fixed<PublicKey>();
  t.from_index = r.u32();
  t.ts = r.f64();
  t.sig = r.fixed<Signature>();
  return t;
}

nlohmann::json Transaction::to_json() const {
  return {{"cache_bytes", cache_bytes},
          {"coins", to_coins(coins)},
          {"coin_units", coins},
          {"from", to_hex(from.view())},
          {"to", to_hex(to.view())},
          {"payer", to_hex(payer.view())},
          {"from_index", from_index},
          {"ts", ts},
          {"sig", to_hex(sig.view())}};
}

// --- Envelope -------------------------------------------------------------

namespace {

Bytes envelope_payload(const PublicKey& recipient, ByteView payload) {
  ByteWriter w;
  w.fixed(recipient);
  w.blob(payload);
  return w.take();
}

}  // namespace

Envelope seal(const PublicKey& recipient, const KeyPair& sender, Bytes payload) {
  Envelope env{recipient, sender.pk, std::move(payload), {}};
  env.sig = sign(sender.sk, envelope_payload(recipient, env.payload));
  return env;
}

Bytes open(const Envelope& env, const PublicKey& me) {
  if (!(env.recipient == me)) throw LedgerError("envelope addressed to another key");
  if (!verify(env.sender, envelope_payload(env.recipient, env.payload), env.sig)) {
    throw LedgerError("envelope signature invalid");
  }
  return env.payload;
}

}  // namespace vcache::ledger
