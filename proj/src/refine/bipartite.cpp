#include "vcache/refine/bipartite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vcache/core/error.hpp"

namespace vcache::refine {

std::size_t BipartiteGraph::slot_count(std::size_t provider) const {
  return static_cast<std::size_t>(std::count_if(
      slots.begin(), slots.end(), [&](const Slot& s) { return s.provider == provider; }));
}

BipartiteGraph build_graph(std::span<const double> z, std::size_t requesters,
                           std::size_t providers) {
  if (z.size() != requesters * providers) throw InvalidArgument("action size mismatch");
  for (double v : z) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("fractional action outside [0, 1]");
  }
  BipartiteGraph g;
  g.requesters = requesters;
  g.providers = providers;
  // first_slot[p] is the index in g.slots of provider p's slot 0.
  std::vector<std::size_t> first_slot(providers);
  for (std::size_t p = 0; p < providers; ++p) {
    double mass = 0.0;
    for (std::size_t i = 0; i < requesters; ++i) mass += z[i * providers + p];
    const auto count = static_cast<std::size_t>(std::ceil(std::max(mass - kBoundaryTol, 0.0)));
    first_slot[p] = g.slots.size();
    for (std::size_t s = 0; s < count; ++s) g.slots.push_back({p, s});
  }
  // Each requester occupies the interval [before, after) of its provider's
  // cumulative mass; slot s covers [s, s + 1). The weight toward a slot is
  // the overlap, so an entry splits across at most two consecutive slots and
  // the split pieces always sum to the entry.
  std::vector<double> cumulative(providers, 0.0);
  for (std::size_t i = 0; i < requesters; ++i) {
    for (std::size_t p = 0; p < providers; ++p) {
      const double x = z[i * providers + p];
      const double before = cumulative[p];
      const double after = before + x;
      cumulative[p] = after;
      if (x <= 0.0) continue;
      const std::size_t count = (p + 1 < providers ? first_slot[p + 1] : g.slots.size()) -
                                first_slot[p];
      if (count == 0) continue;
      auto s = static_cast<std::size_t>(std::floor(before + kBoundaryTol));
      s = std::min(s, count - 1);
      for (; s < count; ++s) {
        const double lo = std::max(before, static_cast<double>(s));
        const double hi = (s + 1 == count) ? after : std::min(after, static_cast<double>(s + 1));
        const double w = hi - lo;
        if (w > kBoundaryTol) g.edges.push_back({i, first_slot[p] + s, w});
        if (after <= static_cast<double>(s + 1) + kBoundaryTol) break;
      }
    }
  }
  return g;
}

namespace {

// Minimum-cost assignment covering every row of `cost` (rows <= cols).
// Returns the column chosen for each row.
std::vector<std::size_t> hungarian(const Matrix<double>& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (owner[j] != 0) col_of_row[owner[j] - 1] = j - 1;
  }
  return col_of_row;
}

}  // namespace

Matching max_weight_matching(const Matrix<double>& weights) {
  Matching out;
  const std::size_t rows = weights.rows();
  const std::size_t cols = weights.cols();
  if (rows == 0 || cols == 0) return out;
  const bool transpose = rows > cols;
  Matrix<double> cost(transpose ? cols : rows, transpose ? rows : cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double w = weights(i, j) > 0.0 ? weights(i, j) : 0.0;
      if (transpose) {
        cost(j, i) = -w;
      } else {
        cost(i, j) = -w;
      }
    }
  }
  const auto assigned = hungarian(cost);
  for (std::size_t r = 0; r < assigned.size(); ++r) {
    const std::size_t i = transpose ? assigned[r] : r;
    const std::size_t j = transpose ? r : assigned[r];
    if (weights(i, j) > 0.0) out.pairs.push_back({i, j, weights(i, j)});
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.requester < b.requester; });
  for (const auto& pr : out.pairs) out.total_weight += pr.weight;
  return out;
}

Matching max_weight_matching(const BipartiteGraph& g) {
  Matrix<double> w(g.requesters, g.slots.size(), 0.0);
  for (const auto& e : g.edges) w(e.requester, e.slot) = e.weight;
  return max_weight_matching(w);
}

caching::Assignment refine(std::span<const double> z, const caching::CachingProblem& p) {
  if (z.size() != p.requester_count() * p.provider_count()) {
    throw InvalidArgument("action size mismatch");
  }
  // Pairs without a V2V link are not candidate edges.
  std::vector<double> masked(z.begin(), z.end());
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (!p.in_range(i, q)) masked[i * p.provider_count() + q] = 0.0;
    }
  }
  const BipartiteGraph g = build_graph(masked, p.requester_count(), p.provider_count());
  const Matching m = max_weight_matching(g);
  caching::Assignment a = p.empty_assignment();
  for (const auto& pr : m.pairs) a(pr.requester, g.slots[pr.slot].provider) = 1;
  return a;
}

caching::Assignment repair_feasibility(const caching::CachingProblem& p, caching::Assignment a) {
  for (;;) {
    const auto report = caching::feasible(p, a);
    if (report) return a;
    const auto& v = report.violations.front();
    if (v.kind == caching::Violation::Kind::capacity) {
      for (std::size_t i = p.requester_count(); i-- > 0;) {
        if (a(i, v.index)) {
          a(i, v.index) = 0;
          break;
        }
      }
    } else {
      std::size_t worst = p.provider_count();
      for (std::size_t q = 0; q < p.provider_count(); ++q) {
        if (a(v.index, q) &&
            (worst == p.provider_count() || p.latencies()(v.index, q) > p.latencies()(v.index, worst))) {
          worst = q;
        }
      }
      a(v.index, worst) = 0;
    }
  }
}

}  // namespace vcache::refine
