#include "vcache/ledger/chain.hpp"

#include <istream>
#include <iterator>
#include <ostream>

namespace vcache::ledger {

Digest merkle_root(const std::vector<Digest>& leaves) {
  if (leaves.empty()) return sha256(Bytes{});
  std::vector<Digest> level = leaves;
  while (level.size() > 1) {
    std::vector<Digest> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t k = 0; k < level.size(); k += 2) {
      const Digest& a = level[k];
      const Digest& b = k + 1 < level.size() ? level[k + 1] : level[k];
      ByteWriter w;
      w.fixed(a);
      w.fixed(b);
      next.push_back(sha256(w.bytes()));
    }
    level = std::move(next);
  }
  return level.front();
}

Digest Block::merkle_root() const {
  std::vector<Digest> leaves;
  leaves.reserve(txs.size());
  for (const auto& t : txs) leaves.push_back(t.hash());
  return ledger::merkle_root(leaves);
}

Bytes Block::header() const {
  ByteWriter w;
  w.u64(index);
  w.fixed(prev_hash);
  w.f64(timestamp);
  w.fixed(producer);
  w.u32(static_cast<std::uint32_t>(txs.size()));
  w.fixed(merkle_root());
  return w.take();
}

Digest Block::hash() const { return sha256(header()); }

void Block::sign_with(const KeyPair& leader) {
  producer = leader.pk;
  leader_sig = sign(leader.sk, header());
}

bool Block::signature_ok() const { return verify(producer, header(), leader_sig); }

Bytes Block::encode() const {
  ByteWriter w;
  w.u64(index);
  w.fixed(prev_hash);
  w.f64(timestamp);
  w.fixed(producer);
  w.u32(static_cast<std::uint32_t>(txs.size()));
  for (const auto& t : txs) t.encode(w);
  w.fixed(leader_sig);
  return w.take();
}

Block Block::decode(ByteView raw) {
  ByteReader r(raw);
  Block b;
  b.index = r.u64();
  b.prev_hash = r.fixed<Digest>();
  b.timestamp = r.f64();
  b.producer = r.fixed<PublicKey>();
  const std::uint32_t n = r.u32();
  // Each transaction needs well over one byte, so this bounds bogus counts.
  if (n > r.remaining()) throw ParseError("transaction count exceeds record size");
  b.txs.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) b.txs.push_back(Transaction::decode(r));
  b.leader_sig = r.fixed<Signature>();
  r.expect_end();
  return b;
}

nlohmann::json Block::to_json() const {
  nlohmann::json txs_json = nlohmann::json::array();
  for (const auto& t : txs) txs_json.push_back(t.to_json());
  return {{"index", index},
          {"hash", to_hex(hash().view())},
          {"prev_hash", to_hex(prev_hash.view())},
          {"timestamp", timestamp},
          {"producer", to_hex(producer.view())},
          {"merkle_root", to_hex(merkle_root().view())},
          {"leader_sig", to_hex(leader_sig.view())},
          {"transactions", std::move(txs_json)}};
}

const char* to_string(AppendStatus s) {
  switch (s) {
    case AppendStatus::ok: return "ok";
    case AppendStatus::bad_index: return "bad_index";
    case AppendStatus::bad_prev_hash: return "bad_prev_hash";
    case AppendStatus::bad_signature: return "bad_signature";
    case AppendStatus::bad_transaction: return "bad_transaction";
    case AppendStatus::duplicate_transaction: return "duplicate_transaction";
    case AppendStatus::too_many_transactions: return "too_many_transactions";
  }
  return "unknown";
}

Chain::Chain(const KeyPair& genesis_key, double timestamp, std::size_t max_txs)
    : max_txs_(max_txs) {
  if (max_txs == 0) throw InvalidArgument("block transaction cap must be positive");
  Block g;
  g.index = 0;
  g.timestamp = timestamp;
  g.sign_with(genesis_key);
  blocks_.push_back(std::move(g));
}

namespace {

AppendStatus check_link(const Block& prev, const Block& b, std::size_t max_txs,
                        std::set<Signature>& seen) {
  if (b.index != prev.index + 1) return AppendStatus::bad_index;
  if (b.prev_hash != prev.hash()) return AppendStatus::bad_prev_hash;
  if (b.txs.size() > max_txs) return AppendStatus::too_many_transactions;
  if (!b.signature_ok()) return AppendStatus::bad_signature;
  for (const auto& t : b.txs) {
    if (!t.verify()) return AppendStatus::bad_transaction;
    if (!seen.insert(t.sig).second) return AppendStatus::duplicate_transaction;
  }
  return AppendStatus::ok;
}

}  // namespace

AppendStatus Chain::check(const Block& block) const {
  std::set<Signature> seen = seen_;
  return check_link(blocks_.back(), block, max_txs_, seen);
}

AppendStatus Chain::append(Block block) {
  std::set<Signature> seen = seen_;
  const AppendStatus st = check_link(blocks_.back(), block, max_txs_, seen);
  if (st != AppendStatus::ok) return st;
  seen_ = std::move(seen);
  blocks_.push_back(std::move(block));
  return st;
}

std::optional<std::size_t> Chain::validate(const std::vector<Block>& blocks,
                                           std::size_t max_txs) {
  if (blocks.empty()) return std::nullopt;
  const Block& g = blocks.front();
  if (g.index != 0 || g.prev_hash != Digest{} || !g.txs.empty() || !g.signature_ok()) {
    return 0;
  }
  std::set<Signature> seen;
  for (std::size_t k = 1; k < blocks.size(); ++k) {
    if (check_link(blocks[k - 1], blocks[k], max_txs, seen) != AppendStatus::ok) return k;
  }
  return std::nullopt;
}

void Chain::dump(std::ostream& out) const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(blocks_.size()));
  for (const auto& b : blocks_) w.blob(b.encode());
  const Bytes& bytes = w.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<Block> Chain::load(std::istream& in) {
  const Bytes raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(raw);
  const std::uint32_t n = r.u32();
  if (n > r.remaining()) throw ParseError("block count exceeds dump size");
  std::vector<Block> out;
  out.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) out.push_back(Block::decode(r.blob()));
  r.expect_end();
  return out;
}

// --- WalletBook -----------------------------------------------------------

void WalletBook::mint(const WalletAddress& w, std::int64_t units) {
  if (units < 0) throw InvalidArgument("cannot mint a negative amount");
  balances_[w] += units;
}

std::int64_t WalletBook::balance(const WalletAddress& w) const {
  const auto it = balances_.find(w);
  return it == balances_.end() ? 0 : it->second;
}

bool WalletBook::transfer(const WalletAddress& from, const WalletAddress& to, std::int64_t units) {
  if (units < 0) return false;
  const auto it = balances_.find(from);
  if (it == balances_.end() || it->second < units) return false;
  it->second -= units;
  balances_[to] += units;
  return true;
}

std::int64_t WalletBook::total() const {
  std::int64_t sum = 0;
  for (const auto& [w, v] : balances_) sum += v;
  return sum;
}

// --- Contract -------------------------------------------------------------

ContractResult execute_contract(const RequesterResponse& to_req, const ProviderResponse& to_pro,
                                const PublicKey& bs, const Identity& requester,
                                double size_bits, double price_per_byte, WalletBook& book,
                                double ts) {
  if (!verify_response(to_req, bs) || !verify_response(to_pro, bs)) {
    throw ContractError("base station response signature invalid");
  }
  if (to_req.provider_location.x != to_pro.provider_location.x ||
      to_req.provider_location.y != to_pro.provider_location.y) {
    throw ContractError("responses disagree on the provider");
  }
  if (!(to_req.chan.rate_bps > 0.0)) throw ContractError("provider unreachable");

  const std::int64_t units = to_units(price_per_byte * to_pro.cache_bytes);
  const WalletAddress payee = wallet_address(to_req.provider_pk);
  const WalletAddress payer = requester.wallet();
  if (book.balance(payer) < units) throw ContractError("insufficient balance");

  ContractResult out;
  out.tx = Transaction::make(requester, to_pro.cache_bytes, units, payee, ts);
  out.delivery = {to_req.provider_pk, to_pro.cache_bytes, size_bits / to_req.chan.rate_bps, ts};
  book.transfer(payer, payee, units);
  return out;
}

}  // namespace vcache::ledger
