#pragma once

// Proof-of-Utility scoring: delay model of block production and
// verification among base stations, the latency utility, coin-weighted
// voting and delegate election.

#include <cstdint>
#include <span>
#include <vector>

#include "vcache/core/model.hpp"
#include "vcache/ledger/messages.hpp"

namespace vcache::consensus {

inline constexpr double kMegabyteBits = 8e6;
inline constexpr double kKilobyteBits = 8e3;

/// Compute and placement of one base station as seen by the delay model.
struct Node {
  Vec2 position;
  double cpu_hz = 7.5e9;
};

struct BaseStation {
  std::uint32_t id = 0;
  Node node;
  ledger::Identity identity;
};

struct ConsensusParams {
  std::size_t commission_size = 3;   // odd, 3 <= n <= station count
  double wired_rate = 1e11;          // r; delay of s bits over d meters is s*d/r
  double hash_delay = 0.5;           // seconds
  double cycles_per_bit = 125.0;     // f0
  double block_bits = 30 * kMegabyteBits;
  double result_bits = 3 * kMegabyteBits;
  double audit_bits = 300 * kKilobyteBits;
  std::size_t max_txs = 10;          // K
  double default_deadline = 7.5;     // tau for a block without transactions

  void validate(std::size_t station_count) const;
};

/// max over verifiers of I*d/r.
double block_broadcast_delay(const Node& leader, std::span<const Node> verifiers,
                             const ConsensusParams& p);
/// max over ordered verifier pairs of I*f0/F' + O*d/r + O*f0/F''. Needs at
/// least two verifiers.
double cross_verification_delay(std::span<const Node> verifiers, const ConsensusParams& p);
/// max over verifiers of W*d/r.
double block_confirm_delay(const Node& leader, std::span<const Node> verifiers,
                           const ConsensusParams& p);

struct DelayBreakdown {
  double hash = 0.0;
  double broadcast = 0.0;
  double cross = 0.0;
  double confirm = 0.0;
  double transmission = 0.0;  // T_ip of the content being recorded

  double verification() const { return broadcast + cross + confirm; }
  double total() const { return hash + verification() + transmission; }
};

double verification_delay(const Node& leader, std::span<const Node> verifiers,
                          const ConsensusParams& p);
DelayBreakdown block_time(const Node& leader, std::span<const Node> verifiers,
                          const ConsensusParams& p, double transmission);

/// [exp(1 - T/tau) - 1]^+. Throws InvalidArgument unless tau > 0.
double utility(double total_time, double tau);

/// The n-1 stations closest to `candidate` (ties by lower index), which
/// verify when it leads.
std::vector<std::size_t> nearest_verifiers(const std::vector<BaseStation>& stations,
                                           std::size_t candidate, std::size_t count);

/// Utility a vehicle with the given deadline and transmission time assigns to
/// `candidate` acting as leader over its nearest verifiers.
double station_utility(const std::vector<BaseStation>& stations, std::size_t candidate,
                       const ConsensusParams& p, double transmission, double tau);

struct Voter {
  ledger::WalletAddress wallet;
  std::int64_t fee = 0;       // coin units paid in this epoch's caching transaction
  double transmission = 0.0;  // T_ip of that transaction's content
  double deadline = 0.0;      // tau of that content
};

struct Vote {
  ledger::WalletAddress voter;
  std::size_t candidate = 0;
  std::int64_t weight = 0;
};

/// One vote per voter for the argmax-utility station, lowest index on ties.
std::vector<Vote> cast_votes(std::span<const Voter> voters,
                             const std::vector<BaseStation>& stations, const ConsensusParams& p);

struct DelegateCommission {
  std::vector<std::size_t> delegates;  // station indices, leader order
  std::size_t cursor = 0;
  std::uint64_t rounds = 0;

  std::size_t leader() const { return delegates.at(cursor); }
  std::vector<std::size_t> verifiers() const;
};

/// Top-n stations by total vote weight, ties to lower index, ordered by
/// descending weight.
DelegateCommission elect_commission(std::span<const Vote> votes, std::size_t station_count,
                                    std::size_t n);

}  // namespace vcache::consensus
