#pragma once

// Rounding of a fractional caching action to a binary assignment: split each
// provider into unit-capacity slots, connect requesters to slots with the
// fractional mass they carry, then take a maximum-weight matching.

#include <cstddef>
#include <span>
#include <vector>

#include "vcache/caching/problem.hpp"

namespace vcache::refine {

inline constexpr double kBoundaryTol = 1e-9;

struct Slot {
  std::size_t provider;
  std::size_t index;  // 0-based slot of that provider

  friend auto operator<=>(const Slot&, const Slot&) = default;
};

struct Edge {
  std::size_t requester;
  std::size_t slot;  // index into BipartiteGraph::slots
  double weight;
};

struct BipartiteGraph {
  std::size_t requesters = 0;
  std::size_t providers = 0;
  std::vector<Slot> slots;  // ordered by (provider, index)
  std::vector<Edge> edges;  // ordered by (requester, provider, slot)

  /// Slot count of one provider (ceil of its column mass).
  std::size_t slot_count(std::size_t provider) const;
};

/// `z` holds x'(i, p) row-major (requesters x providers), each in [0, 1].
/// Throws InvalidArgument for out-of-range entries or a size mismatch.
BipartiteGraph build_graph(std::span<const double> z, std::size_t requesters,
                           std::size_t providers);

struct MatchedPair {
  std::size_t requester;
  std::size_t slot;
  double weight;
};

struct Matching {
  std::vector<MatchedPair> pairs;  // sorted by requester
  double total_weight = 0.0;
};

/// Maximum-weight matching (Hungarian method). Only graph edges are
/// returned; rows and columns are scanned in index order so equal-weight
/// alternatives always resolve to the same matching.
Matching max_weight_matching(const BipartiteGraph& g);

/// Dense variant: weights(i, j) > 0 marks an edge.
Matching max_weight_matching(const Matrix<double>& weights);

/// Build, match, and map matched slots back to providers. Entries for
/// out-of-range pairs are treated as zero.
caching::Assignment refine(std::span<const double> z, const caching::CachingProblem& p);

/// Optional post-pass: drops assignments, highest requester index first,
/// until every capacity and deadline holds. Not applied by refine().
caching::Assignment repair_feasibility(const caching::CachingProblem& p,
                                       caching::Assignment a);

}  // namespace vcache::refine
