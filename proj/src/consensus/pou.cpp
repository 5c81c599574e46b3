#include "vcache/consensus/pou.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vcache/core/error.hpp"

namespace vcache::consensus {

void ConsensusParams::validate(std::size_t station_count) const {
  if (commission_size < 3 || commission_size % 2 == 0) {
    throw InvalidArgument("commission size must be an odd number of at least 3");
  }
  if (commission_size > station_count) {
    throw InvalidArgument("commission size exceeds the number of base stations");
  }
  if (!(wired_rate > 0.0)) throw InvalidArgument("wired rate must be positive");
  if (!(hash_delay >= 0.0)) throw InvalidArgument("hash delay must be non-negative");
  if (!(cycles_per_bit >= 0.0)) throw InvalidArgument("verify cost must be non-negative");
  if (!(block_bits >= 0.0) || !(result_bits >= 0.0) || !(audit_bits >= 0.0)) {
    throw InvalidArgument("message sizes must be non-negative");
  }
  if (max_txs == 0) throw InvalidArgument("block transaction cap must be positive");
  if (!(default_deadline > 0.0)) throw InvalidArgument("default deadline must be positive");
}

double block_broadcast_delay(const Node& leader, std::span<const Node> verifiers,
                             const ConsensusParams& p) {
  double worst = 0.0;
  for (const auto& v : verifiers) {
    worst = std::max(worst, p.block_bits * distance(leader.position, v.position) / p.wired_rate);
  }
  return worst;
}

double cross_verification_delay(std::span<const Node> verifiers, const ConsensusParams& p) {
  if (verifiers.size() < 2) throw InvalidArgument("cross verification needs two verifiers");
  double worst = 0.0;
  for (std::size_t a = 0; a < verifiers.size(); ++a) {
    for (std::size_t b = 0; b < verifiers.size(); ++b) {
      if (a == b) continue;
      const Node& va = verifiers[a];
      const Node& vb = verifiers[b];
      const double t = p.block_bits * p.cycles_per_bit / va.cpu_hz +
                       p.result_bits * distance(va.position, vb.position) / p.wired_rate +
                       p.result_bits * p.cycles_per_bit / vb.cpu_hz;
      worst = std::max(worst, t);
    }
  }
  return worst;
}

double block_confirm_delay(const Node& leader, std::span<const Node> verifiers,
                           const ConsensusParams& p) {
  double worst = 0.0;
  for (const auto& v : verifiers) {
    worst = std::max(worst, p.audit_bits * distance(leader.position, v.position) / p.wired_rate);
  }
  return worst;
}

double verification_delay(const Node& leader, std::span<const Node> verifiers,
                          const ConsensusParams& p) {
  return block_time(leader, verifiers, p, 0.0).verification();
}

DelayBreakdown block_time(const Node& leader, std::span<const Node> verifiers,
                          const ConsensusParams& p, double transmission) {
  DelayBreakdown d;
  d.hash = p.hash_delay;
  d.broadcast = block_broadcast_delay(leader, verifiers, p);
  d.cross = cross_verification_delay(verifiers, p);
  d.confirm = block_confirm_delay(leader, verifiers, p);
  d.transmission = transmission;
  return d;
}

double utility(double total_time, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("utility deadline must be positive");
  return std::max(std::exp(1.0 - total_time / tau) - 1.0, 0.0);
}

std::vector<std::size_t> nearest_verifiers(const std::vector<BaseStation>& stations,
                                           std::size_t candidate, std::size_t count) {
  if (candidate >= stations.size()) throw InvalidArgument("candidate station out of range");
  if (count >= stations.size()) throw InvalidArgument("not enough stations to verify");
  std::vector<std::size_t> others;
  others.reserve(stations.size() - 1);
  for (std::size_t k = 0; k < stations.size(); ++k) {
    if (k != candidate) others.push_back(k);
  }
  const Vec2 c = stations[candidate].node.position;
  std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
    return distance(c, stations[a].node.position) < distance(c, stations[b].node.position);
  });
  others.resize(count);
  return others;
}

namespace {

std::vector<Node> nodes_of(const std::vector<BaseStation>& stations,
                           const std::vector<std::size_t>& idx) {
  std::vector<Node> out;
  out.reserve(idx.size());
  for (std::size_t k : idx) out.push_back(stations[k].node);
  return out;
}

}  // namespace

double station_utility(const std::vector<BaseStation>& stations, std::size_t candidate,
                       const ConsensusParams& p, double transmission, double tau) {
  const auto verifiers = nodes_of(stations, nearest_verifiers(stations, candidate,
                                                              p.commission_size - 1));
  const auto d = block_time(stations[candidate].node, verifiers, p, transmission);
  return utility(d.total(), tau);
}

std::vector<Vote> cast_votes(std::span<const Voter> voters,
                             const std::vector<BaseStation>& stations, const ConsensusParams& p) {
  std::vector<Vote> votes;
  votes.reserve(voters.size());
  for (const auto& v : voters) {
    std::size_t best = 0;
    double best_u = -1.0;
    for (std::size_t m = 0; m < stations.size(); ++m) {
      const double u = station_utility(stations, m, p, v.transmission, v.deadline);
      if (u > best_u) {
        best_u = u;
        best = m;
      }
    }
    votes.push_back({v.wallet, best, v.fee});
  }
  return votes;
}

std::vector<std::size_t> DelegateCommission::verifiers() const {
  std::vector<std::size_t> out;
  out.reserve(delegates.size() - 1);
  for (std::size_t k = 0; k < delegates.size(); ++k) {
    if (k != cursor) out.push_back(delegates[k]);
  }
  return out;
}

DelegateCommission elect_commission(std::span<const Vote> votes, std::size_t station_count,
                                    std::size_t n) {
  if (n == 0 || n > station_count) throw InvalidArgument("commission larger than station set");
  std::vector<std::int64_t> weight(station_count, 0);
  for (const auto& v : votes) {
    if (v.candidate >= station_count) throw InvalidArgument("vote for an unknown station");
    weight[v.candidate] += v.weight;
  }
  std::vector<std::size_t> order(station_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });
  order.resize(n);
  return {std::move(order), 0, 0};
}

}  // namespace vcache::consensus
