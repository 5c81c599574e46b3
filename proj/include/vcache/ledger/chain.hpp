#pragma once

// Hash-linked block store, wallet balances and the caching contract.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcache/ledger/messages.hpp"

namespace vcache::ledger {

struct Block {
  std::uint64_t index = 0;
  Digest prev_hash;
  double timestamp = 0.0;
  PublicKey producer;
  std::vector<Transaction> txs;
  Signature leader_sig;  // over header || merkle root

  Digest merkle_root() const;
  /// index || prev_hash || timestamp || producer || tx count || merkle root.
  Bytes header() const;
  Digest hash() const;

  void sign_with(const KeyPair& leader);
  bool signature_ok() const;

  Bytes encode() const;
  static Block decode(ByteView raw);
  nlohmann::json to_json() const;
};

/// Merkle root over the transaction hashes; an odd node is paired with
/// itself. The empty list hashes to SHA-256 of nothing.
Digest merkle_root(const std::vector<Digest>& leaves);

enum class AppendStatus {
  ok,
  bad_index,
  bad_prev_hash,
  bad_signature,
  bad_transaction,
  duplicate_transaction,
  too_many_transactions,
};

const char* to_string(AppendStatus s);

class Chain {
 public:
  /// Creates a chain holding only a genesis block (index 0, zero prev hash,
  /// no transactions) signed by `genesis_key`.
  Chain(const KeyPair& genesis_key, double timestamp, std::size_t max_txs);

  /// Checks and appends. Nothing changes unless the result is `ok`.
  AppendStatus append(Block block);
  /// The checks `append` would run, without appending.
  AppendStatus check(const Block& block) const;

  const Block& tip() const { return blocks_.back(); }
  const Block& at(std::size_t i) const { return blocks_.at(i); }
  std::size_t size() const { return blocks_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t max_txs() const { return max_txs_; }
  bool seen(const Signature& tx_sig) const { return seen_.contains(tx_sig); }

  /// Full recomputation of links, signatures and transactions. Returns the
  /// index of the first bad block, or nullopt if the chain is intact.
  static std::optional<std::size_t> validate(const std::vector<Block>& blocks,
                                             std::size_t max_txs);
  std::optional<std::size_t> validate() const { return validate(blocks_, max_txs_); }

  /// Length-prefixed canonical encoding: u32 block count, then one blob per
  /// block.
  void dump(std::ostream& out) const;
  static std::vector<Block> load(std::istream& in);

 private:
  std::vector<Block> blocks_;
  std::set<Signature> seen_;
  std::size_t max_txs_;
};

/// Integer balances keyed by wallet address.
class WalletBook {
 public:
  void mint(const WalletAddress& w, std::int64_t units);
  std::int64_t balance(const WalletAddress& w) const;
  /// Moves `units` if the payer can cover them. Returns false and changes
  /// nothing otherwise.
  bool transfer(const WalletAddress& from, const WalletAddress& to, std::int64_t units);
  std::int64_t total() const;
  std::size_t size() const { return balances_.size(); }

 private:
  std::map<WalletAddress, std::int64_t> balances_;
};

struct DeliveryEvent {
  PublicKey provider;
  double cache_bytes = 0.0;
  double latency_s = 0.0;  // transmission time at the reported channel rate
  double ts = 0.0;
};

struct ContractResult {
  Transaction tx;
  DeliveryEvent delivery;
};

class ContractError : public LedgerError {
 public:
  using LedgerError::LedgerError;
};

/// Runs the caching contract for one matched pair: validates both BS
/// responses, charges `price_per_byte * cache_bytes` to the requester and
/// credits the provider. Throws ContractError on a bad signature, a payload
/// mismatch or an uncovered payment, leaving `book` untouched.
ContractResult execute_contract(const RequesterResponse& to_req, const ProviderResponse& to_pro,
                                const PublicKey& bs, const Identity& requester,
                                double size_bits, double price_per_byte, WalletBook& book,
                                double ts);

}  // namespace vcache::ledger
