#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sodium.h>

#include <cstring>
#include <sstream>

#include "vcache/core/error.hpp"
#include "vcache/ledger/chain.hpp"

using namespace vcache;
using namespace vcache::ledger;

namespace {

struct World {
  Rng rng{99};
  CertificateAuthority ca{rng};
  KeyPair bs = KeyPair::generate(rng);
  Identity alice = ca.issue("alice|plate-1", rng);
  Identity bob = ca.issue("bob|plate-2", rng);
};

Block next_block(const Chain& chain, const KeyPair& leader, std::vector<Transaction> txs,
                 double ts) {
  Block b;
  b.index = chain.tip().index + 1;
  b.prev_hash = chain.tip().hash();
  b.timestamp = ts;
  b.producer = leader.pk;
  b.txs = std::move(txs);
  b.sign_with(leader);
  return b;
}

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST_CASE("hashing matches an independent implementation") {
  REQUIRE(sodium_init() >= 0);
  CHECK(to_hex(sha256(std::string("abc")).view()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  World w;
  std::uint8_t h[crypto_hash_sha256_BYTES];
  crypto_hash_sha256(h, w.alice.pk().bytes.data(), 32);
  const auto addr = wallet_address(w.alice.pk());
  CHECK(std::memcmp(addr.bytes.data(), h, 20) == 0);

  std::uint8_t buf[36];
  std::memcpy(buf, w.alice.pk().bytes.data(), 32);
  const std::uint8_t idx[4] = {0, 0, 0, 7};
  std::memcpy(buf + 32, idx, 4);
  crypto_hash_sha256(h, buf, sizeof buf);
  CHECK(std::memcmp(wallet_address(w.alice.pk(), 7).bytes.data(), h, 20) == 0);
  CHECK_FALSE(wallet_address(w.alice.pk(), 7) == addr);
}

TEST_CASE("sign and verify") {
  World w;
  const Bytes msg = bytes_of("cache 1 GB at (10, 20)");
  const auto sig = sign(w.alice.keys.sk, msg);
  CHECK(verify(w.alice.pk(), msg, sig));

  Bytes flipped = msg;
  flipped[3] ^= 0x01;
  CHECK_FALSE(verify(w.alice.pk(), flipped, sig));
  CHECK_FALSE(verify(w.bob.pk(), msg, sig));
  CHECK_FALSE(verify(w.alice.pk(), msg, sign(w.bob.keys.sk, msg)));

  Rng a(5);
  Rng b(5);
  CHECK(KeyPair::generate(a).pk == KeyPair::generate(b).pk);
  CHECK(SecretKey::from_bytes(w.alice.keys.sk.view()).public_key() == w.alice.pk());
  CHECK_THROWS_AS(PublicKey::from_bytes(Bytes(31, 0)), InvalidArgument);
}

TEST_CASE("batch verification") {
  World w;
  CHECK(batch_verify({}));

  std::vector<SignedItem> items;
  for (int k = 0; k < 50; ++k) {
    const Bytes m = bytes_of("item " + std::to_string(k));
    const auto& id = k % 2 ? w.alice : w.bob;
    items.push_back({id.pk(), m, sign(id.keys.sk, m)});
  }
  CHECK(batch_verify(items));
  CHECK(reference::batch_verify(items));
  items[37].message.push_back(0);
  CHECK_FALSE(batch_verify(items));
  CHECK_FALSE(reference::batch_verify(items));

  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<SignedItem> batch;
    const auto n = rng.uniform_index(12);
    for (std::uint64_t k = 0; k < n; ++k) {
      const Bytes m = bytes_of(std::to_string(rng.next_u64()));
      batch.push_back({w.alice.pk(), m, sign(w.alice.keys.sk, m)});
      if (rng.bernoulli(0.1)) batch.back().sig.bytes[rng.uniform_index(64)] ^= 0x40;
      if (rng.bernoulli(0.05)) batch.back().pk = w.bob.pk();
    }
    bool loop = true;
    for (const auto& it : batch) loop = loop && verify(it.pk, it.message, it.sig);
    CHECK(batch_verify(batch) == loop);
  }
}

TEST_CASE("certificates and signed requests") {
  World w;
  CHECK(w.ca.check(w.alice.cert));
  Rng other_rng(7);
  CertificateAuthority rogue(other_rng);
  const Identity mallory = rogue.issue("mallory", other_rng);
  CHECK_FALSE(w.ca.check(mallory.cert));

  const auto req = CachingRequest::make(w.alice, 1e9, {10.0, 20.0}, 100.0);
  CHECK(verify_message(req, w.ca, 100.5, 1.0));
  CHECK_FALSE(verify_message(req, w.ca, 105.0, 1.0));  // stale
  CHECK_FALSE(verify_message(CachingRequest::make(mallory, 1e9, {0, 0}, 100.0), w.ca, 100.0, 1.0));

  auto forged = req;
  forged.cache_bytes = 2e9;
  CHECK_FALSE(verify_message(forged, w.ca, 100.0, 1.0));
  auto swapped = req;
  swapped.cert = w.bob.cert;
  CHECK_FALSE(verify_message(swapped, w.ca, 100.0, 1.0));

  const auto back = CachingRequest::decode(req.encode());
  CHECK(back.encode() == req.encode());
  CHECK(verify_message(back, w.ca, 100.0, 1.0));
  Bytes cut = req.encode();
  cut.pop_back();
  CHECK_THROWS_AS(CachingRequest::decode(cut), ParseError);

  const auto ad = ResourceAdvert::make(w.bob, 5e9, {30.0, 40.0}, 100.0);
  CHECK(verify_message(ad, w.ca, 100.0, 1.0));
  CHECK(ResourceAdvert::decode(ad.encode()).encode() == ad.encode());
}

TEST_CASE("base-station responses") {
  World w;
  const auto r = respond(w.bs, 1e9, w.bob.pk(), {30.0, 40.0}, {2e8, 50.0}, 10.0);
  CHECK(verify_response(r.to_requester, w.bs.pk));
  CHECK(verify_response(r.to_provider, w.bs.pk));
  CHECK_FALSE(verify_response(r.to_requester, w.alice.pk()));
  auto bad = r.to_provider;
  bad.cache_bytes = 3e9;
  CHECK_FALSE(verify_response(bad, w.bs.pk));
  CHECK(RequesterResponse::decode(r.to_requester.encode()).encode() == r.to_requester.encode());
  CHECK(ProviderResponse::decode(r.to_provider.encode()).encode() == r.to_provider.encode());
}

TEST_CASE("transactions") {
  World w;
  const auto tx = Transaction::make(w.alice, 1e9, 2 * kUnitsPerCoin, w.bob.wallet(), 5.0);
  CHECK(tx.verify());

  auto t1 = tx;
  t1.coins += 1;
  CHECK_FALSE(t1.verify());
  auto t2 = tx;
  t2.to = w.alice.wallet();
  CHECK_FALSE(t2.verify());
  auto t3 = tx;
  t3.payer = w.bob.pk();
  CHECK_FALSE(t3.verify());
  auto t4 = tx;
  t4.ts = 6.0;
  CHECK_FALSE(t4.verify());
  auto t5 = tx;
  t5.from_index = 1;
  CHECK_FALSE(t5.verify());

  CHECK_FALSE(Transaction::make(w.alice, 1e9, 0, w.bob.wallet(), 5.0).verify());

  Identity rotated = w.alice;
  rotated.wallet_index = 3;
  const auto tr = Transaction::make(rotated, 1e9, 10, w.bob.wallet(), 5.0);
  CHECK(tr.verify());
  CHECK(tr.from == wallet_address(w.alice.pk(), 3));

  ByteWriter wr;
  tx.encode(wr);
  ByteReader rd(wr.bytes());
  const auto back = Transaction::decode(rd);
  CHECK(back.hash() == tx.hash());
  CHECK(back.verify());
}

TEST_CASE("transactions reveal no registration data") {
  World w;
  const auto tx = Transaction::make(w.alice, 1e9, 7, w.bob.wallet(), 5.0);
  const auto j = tx.to_json();
  for (const auto& [key, value] : j.items()) {
    CHECK(key != "cert");
    CHECK(key != "registration_digest");
    CHECK(key != "location");
  }
  ByteWriter wr;
  tx.encode(wr);
  const auto& raw = wr.bytes();
  const auto digest = w.alice.cert.registration_digest;
  const auto hit = std::search(raw.begin(), raw.end(), digest.bytes.begin(), digest.bytes.end());
  CHECK(hit == raw.end());
}

TEST_CASE("envelopes") {
  World w;
  const Bytes payload = bytes_of("provider at (30, 40)");
  const auto env = seal(w.bob.pk(), w.alice.keys, payload);
  CHECK(open(env, w.bob.pk()) == payload);
  CHECK_THROWS_AS(open(env, w.alice.pk()), LedgerError);
  auto altered = env;
  altered.payload[0] ^= 1;
  CHECK_THROWS_AS(open(altered, w.bob.pk()), LedgerError);
}

TEST_CASE("coin units") {
  CHECK(to_units(2.0) == 2 * kUnitsPerCoin);
  CHECK(to_units(1e-9) == 1);
  CHECK(to_coins(3 * kUnitsPerCoin) == 3.0);
}

TEST_CASE("wallet book") {
  WalletBook book;
  World w;
  book.mint(w.alice.wallet(), 10);
  CHECK(book.balance(w.alice.wallet()) == 10);
  CHECK(book.balance(w.bob.wallet()) == 0);
  CHECK_FALSE(book.transfer(w.alice.wallet(), w.bob.wallet(), 11));
  CHECK(book.balance(w.alice.wallet()) == 10);
  CHECK(book.transfer(w.alice.wallet(), w.bob.wallet(), 10));
  CHECK(book.balance(w.alice.wallet()) == 0);
  CHECK(book.balance(w.bob.wallet()) == 10);
  CHECK(book.total() == 10);
}

TEST_CASE("caching contract") {
  World w;
  const double bytes = 1e9;
  const double price = 2e-9;
  const std::int64_t due = to_units(price * bytes);
  const auto r = respond(w.bs, bytes, w.bob.pk(), {30.0, 40.0}, {2e8, 50.0}, 10.0);

  SUBCASE("exact balance") {
    WalletBook book;
    book.mint(w.alice.wallet(), due);
    const auto res = execute_contract(r.to_requester, r.to_provider, w.bs.pk, w.alice, 4e8, price,
                                      book, 11.0);
    CHECK(book.balance(w.alice.wallet()) == 0);
    CHECK(book.balance(wallet_address(w.bob.pk())) == due);
    CHECK(res.tx.verify());
    CHECK(res.tx.coins == due);
    CHECK(res.delivery.latency_s == doctest::Approx(2.0));
    CHECK(res.delivery.provider == w.bob.pk());
  }
  SUBCASE("one unit short") {
    WalletBook book;
    book.mint(w.alice.wallet(), due - 1);
    CHECK_THROWS_AS(execute_contract(r.to_requester, r.to_provider, w.bs.pk, w.alice, 4e8, price,
                                     book, 11.0),
                    ContractError);
    CHECK(book.balance(w.alice.wallet()) == due - 1);
    CHECK(book.balance(wallet_address(w.bob.pk())) == 0);
  }
  SUBCASE("forged or mismatched responses") {
    WalletBook book;
    book.mint(w.alice.wallet(), 100 * due);
    CHECK_THROWS_AS(execute_contract(r.to_requester, r.to_provider, w.alice.pk(), w.alice, 4e8,
                                     price, book, 11.0),
                    ContractError);
    const auto other = respond(w.bs, bytes, w.bob.pk(), {31.0, 40.0}, {2e8, 50.0}, 10.0);
    CHECK_THROWS_AS(execute_contract(r.to_requester, other.to_provider, w.bs.pk, w.alice, 4e8,
                                     price, book, 11.0),
                    ContractError);
    CHECK(book.balance(w.alice.wallet()) == 100 * due);
  }
}

TEST_CASE("contracts conserve coins") {
  Rng rng(8);
  CertificateAuthority ca(rng);
  const KeyPair bs = KeyPair::generate(rng);
  std::vector<Identity> ids;
  WalletBook book;
  for (int k = 0; k < 8; ++k) {
    ids.push_back(ca.issue("v" + std::to_string(k), rng));
    book.mint(ids.back().wallet(), to_units(rng.uniform(0.0, 20.0)));
  }
  const std::int64_t total = book.total();
  int aborted = 0;
  for (int k = 0; k < 300; ++k) {
    const auto& payer = ids[rng.uniform_index(ids.size())];
    const auto& payee = ids[rng.uniform_index(ids.size())];
    const double bytes = rng.uniform(0.5e9, 2.5e9);
    const auto r = respond(bs, bytes, payee.pk(), {1.0, 2.0}, {1e8, 10.0}, k);
    try {
      execute_contract(r.to_requester, r.to_provider, bs.pk, payer, 1e8, 2e-9, book, k);
    } catch (const ContractError&) {
      ++aborted;
    }
    REQUIRE(book.total() == total);
  }
  CHECK(aborted > 0);
  CHECK(aborted < 300);
}

TEST_CASE("chain append rules") {
  World w;
  Chain chain(w.bs, 0.0, 3);
  CHECK(chain.size() == 1);
  CHECK(chain.tip().index == 0);
  CHECK(chain.validate() == std::nullopt);

  const auto tx1 = Transaction::make(w.alice, 1e9, 2, w.bob.wallet(), 1.0);
  const auto tx2 = Transaction::make(w.bob, 1e9, 3, w.alice.wallet(), 1.5);
  CHECK(chain.append(next_block(chain, w.bs, {tx1}, 2.0)) == AppendStatus::ok);
  CHECK(chain.seen(tx1.sig));

  auto wrong_prev = next_block(chain, w.bs, {tx2}, 3.0);
  wrong_prev.prev_hash = chain.at(0).hash();
  wrong_prev.sign_with(w.bs);
  CHECK(chain.append(wrong_prev) == AppendStatus::bad_prev_hash);

  auto wrong_index = next_block(chain, w.bs, {tx2}, 3.0);
  wrong_index.index += 1;
  wrong_index.sign_with(w.bs);
  CHECK(chain.append(wrong_index) == AppendStatus::bad_index);

  auto unsigned_block = next_block(chain, w.bs, {tx2}, 3.0);
  unsigned_block.leader_sig.bytes[0] ^= 1;
  CHECK(chain.append(unsigned_block) == AppendStatus::bad_signature);

  auto bad_tx = tx2;
  bad_tx.coins = 99;
  CHECK(chain.append(next_block(chain, w.bs, {bad_tx}, 3.0)) == AppendStatus::bad_transaction);
  CHECK(chain.append(next_block(chain, w.bs, {tx1}, 3.0)) ==
        AppendStatus::duplicate_transaction);
  CHECK(chain.append(next_block(chain, w.bs, {tx2, tx2}, 3.0)) ==
        AppendStatus::duplicate_transaction);
  const auto tx3 = Transaction::make(w.alice, 1e9, 4, w.bob.wallet(), 2.0);
  const auto tx4 = Transaction::make(w.alice, 1e9, 5, w.bob.wallet(), 2.5);
  CHECK(chain.append(next_block(chain, w.bs, {tx2, tx3, tx4, Transaction::make(w.alice, 1e9, 6,
                                                                                 w.bob.wallet(),
                                                                                 2.6)},
                                3.0)) == AppendStatus::too_many_transactions);
  CHECK(chain.size() == 2);
  CHECK(chain.append(next_block(chain, w.bs, {tx2, tx3, tx4}, 3.0)) == AppendStatus::ok);
  CHECK(chain.validate() == std::nullopt);
}

TEST_CASE("merkle root") {
  CHECK(merkle_root({}) == sha256(Bytes{}));
  const auto a = sha256(std::string("a"));
  const auto b = sha256(std::string("b"));
  const auto c = sha256(std::string("c"));
  CHECK(merkle_root({a}) == a);
  auto pair = [](const Digest& x, const Digest& y) {
    Bytes buf(x.bytes.begin(), x.bytes.end());
    buf.insert(buf.end(), y.bytes.begin(), y.bytes.end());
    return sha256(buf);
  };
  CHECK(merkle_root({a, b}) == pair(a, b));
  CHECK(merkle_root({a, b, c}) == pair(pair(a, b), pair(c, c)));
}

TEST_CASE("every single-byte mutation of a stored block is caught at that block") {
  World w;
  Chain chain(w.bs, 0.0, 4);
  for (int k = 1; k < 10; ++k) {
    std::vector<Transaction> txs;
    for (int j = 0; j < k % 3; ++j) {
      txs.push_back(Transaction::make(j % 2 ? w.alice : w.bob, 1e9, k * 10 + j,
                                      j % 2 ? w.bob.wallet() : w.alice.wallet(), k + 0.1 * j));
    }
    REQUIRE(chain.append(next_block(chain, w.bs, txs, k)) == AppendStatus::ok);
  }
  REQUIRE(chain.size() == 10);
  for (std::size_t k : {std::size_t{0}, std::size_t{4}, std::size_t{8}}) {
    const Bytes raw = chain.at(k).encode();
    for (std::size_t pos = 0; pos < raw.size(); ++pos) {
      Bytes mutated = raw;
      mutated[pos] ^= 0x5A;
      std::vector<Block> blocks = chain.blocks();
      try {
        blocks[k] = Block::decode(mutated);
      } catch (const ParseError&) {
        continue;  // rejected before validation
      }
      const auto bad = Chain::validate(blocks, chain.max_txs());
      REQUIRE_MESSAGE(bad.has_value(), "byte ", pos, " of block ", k);
      CHECK(*bad == k);
    }
  }
}

TEST_CASE("chain dump round trip") {
  World w;
  Chain chain(w.bs, 0.0, 10);
  chain.append(next_block(chain, w.bs, {Transaction::make(w.alice, 1e9, 2, w.bob.wallet(), 1.0)},
                          1.0));
  std::stringstream buf;
  chain.dump(buf);
  const auto blocks = Chain::load(buf);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[1].hash() == chain.at(1).hash());
  CHECK(Chain::validate(blocks, 10) == std::nullopt);

  std::stringstream broken(buf.str().substr(0, buf.str().size() - 5));
  CHECK_THROWS_AS(Chain::load(broken), ParseError);
}
