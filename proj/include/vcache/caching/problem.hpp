#pragma once

// One caching slot: who wants cache space, who offers it, and the per-pair
// rate / latency / energy matrices derived from positions.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcache/core/matrix.hpp"
#include "vcache/core/model.hpp"
#include "vcache/core/rng.hpp"

namespace vcache::caching {

struct Requester {
  Content content;
  Vec2 position;
  Heading heading = Heading::east;
};

struct Provider {
  double capacity_bytes = 0.0;
  Vec2 position;
  Heading heading = Heading::east;
};

/// x(i, p) == 1 when requester i caches its content at provider p.
using Assignment = Matrix<std::uint8_t>;

class CachingProblem {
 public:
  /// Computes the pair matrices. Out-of-range pairs get rate 0 and infinite
  /// latency and energy. Throws DegenerateGeometry on coincident positions.
  static CachingProblem build(std::vector<Requester> requesters, std::vector<Provider> providers,
                              const ChannelParams& chan, const EconomicParams& econ);

  std::size_t requester_count() const { return requesters_.size(); }
  std::size_t provider_count() const { return providers_.size(); }

  const std::vector<Requester>& requesters() const { return requesters_; }
  const std::vector<Provider>& providers() const { return providers_; }
  const ChannelParams& channel() const { return chan_; }
  const EconomicParams& economics() const { return econ_; }

  const Matrix<double>& rates() const { return rates_; }
  const Matrix<double>& latencies() const { return latencies_; }
  const Matrix<double>& energies() const { return energies_; }

  bool in_range(std::size_t i, std::size_t p) const { return rates_(i, p) > 0.0; }
  /// Payment minus energy for selecting (i, p).
  double margin(std::size_t i, std::size_t p) const;

  Assignment empty_assignment() const { return Assignment(requester_count(), provider_count(), 0); }

 private:
  std::vector<Requester> requesters_;
  std::vector<Provider> providers_;
  ChannelParams chan_;
  EconomicParams econ_;
  Matrix<double> rates_;
  Matrix<double> latencies_;
  Matrix<double> energies_;
};

struct Violation {
  enum class Kind { capacity, latency };
  Kind kind;
  std::size_t index;  // provider for capacity, requester for latency
  double slack;       // bound minus load; negative when violated
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<Violation> violations;

  explicit operator bool() const { return feasible; }
};

/// Checks every provider capacity and every requester deadline.
/// Throws InvalidArgument on a dimension mismatch.
FeasibilityReport feasible(const CachingProblem& p, const Assignment& a);

/// Sum of margins over selected pairs, regardless of feasibility.
double utility(const CachingProblem& p, const Assignment& a);

/// Per-requester view of feasibility: assigned, own deadline met, and every
/// provider it uses within capacity.
std::vector<bool> successful_requesters(const CachingProblem& p, const Assignment& a);

struct ExactSolution {
  Assignment assignment;
  double utility = 0.0;
};

inline constexpr std::size_t kExactCellLimit = 20;

/// Exhaustive optimum of the binary program (branch and bound). Ties go to
/// the lexicographically smallest flattened assignment. Throws InvalidArgument
/// when I*P exceeds kExactCellLimit.
ExactSolution solve_exact(const CachingProblem& p);

/// Greedy baseline: requesters in index order take the fastest in-range
/// provider that keeps both constraints satisfied.
Assignment gcc(const CachingProblem& p);

/// Random baseline: each requester picks uniformly among in-range providers,
/// ignoring capacity and deadlines.
Assignment rcc(const CachingProblem& p, Rng& rng);

nlohmann::json to_json(const CachingProblem& p);
CachingProblem problem_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Assignment& a);

}  // namespace vcache::caching
