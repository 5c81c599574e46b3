#pragma once

// Round-by-round block production and verification by the delegate
// commission over a simulated wired network.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcache/consensus/pou.hpp"
#include "vcache/ledger/chain.hpp"

namespace vcache::consensus {

/// A transaction waiting for a block, with the latency figures that enter
/// that block's utility.
struct PendingTx {
  ledger::Transaction tx;
  double transmission = 0.0;
  double deadline = 0.0;
};

/// Declarative misbehaviour for one round.
struct RoundFaults {
  bool leader_fails = false;               // block skipped, txs carried over
  std::set<std::size_t> rejecting;         // station indices that vote reject
  std::optional<std::size_t> tamper_tx;    // leader alters this tx before signing
  std::optional<std::size_t> tamper_byte;  // flip a byte of the broadcast block
  bool forge_leader_sig = false;           // broadcast carries a bad leader signature
};

using FaultSchedule = std::map<std::uint64_t, RoundFaults>;

struct AuditResult {
  std::size_t verifier = 0;        // station index
  bool block_ok = false;           // decoded, linked and leader-signed
  std::vector<std::size_t> bad_txs;
  ledger::Digest audited;          // hash of the block as decoded (zero if undecodable)

  bool agrees() const { return block_ok && bad_txs.empty(); }
};

/// Leader -> verifier.
struct BroadcastMessage {
  ledger::PublicKey leader;
  ledger::PublicKey verifier;
  double ts = 0.0;
  ledger::Bytes block;
};

/// Verifier -> leader.
struct ConfirmMessage {
  ledger::PublicKey verifier;
  ledger::PublicKey leader;
  AuditResult self;
  std::vector<AuditResult> received;
  bool agree = false;
  ledger::Signature sig;  // verifier's signature over the verdict and audited hash

  ledger::Bytes signed_payload() const;
};

struct RoundReport {
  std::uint64_t round = 0;
  std::size_t leader = 0;
  std::size_t verifier_count = 0;
  std::size_t agree_count = 0;
  bool accepted = false;
  bool skipped = false;
  std::size_t tx_count = 0;
  std::optional<std::uint64_t> block_index;
  DelayBreakdown delays;
  std::vector<double> utility_per_bs;
  double clock = 0.0;
  bool rotation_complete = false;
  std::vector<AuditResult> audits;

  nlohmann::json to_json() const;
};

/// Strict two-thirds rule over the verifiers (the leader does not vote).
bool quorum_reached(std::size_t agree, std::size_t verifier_count);

class ConsensusEngine {
 public:
  ConsensusEngine(std::vector<BaseStation> stations, ConsensusParams params, ledger::Chain chain,
                  Rng rng);

  /// Queues a transaction. Rejects (returns false) one that fails
  /// verification or whose signature is already pending or on chain.
  bool submit(PendingTx tx);
  std::size_t pending() const { return mempool_.size(); }
  const std::vector<PendingTx>& mempool() const { return mempool_; }

  void set_commission(DelegateCommission c);
  void elect(std::span<const Vote> votes);
  const DelegateCommission& commission() const { return commission_; }

  void set_fault_schedule(FaultSchedule s) { faults_ = std::move(s); }
  /// Sizes (bits) of the block, local result and second audit for the
  /// following rounds.
  void set_message_sizes(double block_bits, double result_bits, double audit_bits);

  /// One production and verification round. Faults come from the schedule
  /// unless given explicitly.
  RoundReport run_round();
  RoundReport run_round(const RoundFaults& faults);

  const ledger::Chain& chain() const { return chain_; }
  const std::vector<BaseStation>& stations() const { return stations_; }
  const ConsensusParams& params() const { return params_; }
  double clock() const { return clock_; }
  std::uint64_t rounds_run() const { return round_; }

  /// Audit a broadcast block as verifier `station` against the current tip.
  AuditResult audit(std::size_t station, const BroadcastMessage& bro) const;

 private:
  ledger::Block build_block(std::size_t tx_count) const;
  void advance_leader(RoundReport& report);

  std::vector<BaseStation> stations_;
  ConsensusParams params_;
  ledger::Chain chain_;
  Rng rng_;
  DelegateCommission commission_;
  std::vector<PendingTx> mempool_;
  std::set<ledger::Signature> pending_sigs_;
  FaultSchedule faults_;
  std::uint64_t round_ = 0;
  double clock_ = 0.0;
};

}  // namespace vcache::consensus
