#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "vcache/core/error.hpp"
#include "vcache/refine/bipartite.hpp"

using namespace vcache;
using vcache::refine::build_graph;
using vcache::refine::max_weight_matching;
using vcache::refine::repair_feasibility;

namespace {

// Exhaustive search over partial injections left -> right.
double best_matching(const Matrix<double>& w, std::size_t row, std::vector<bool>& used) {
  if (row == w.rows()) return 0.0;
  double best = best_matching(w, row + 1, used);
  for (std::size_t c = 0; c < w.cols(); ++c) {
    if (used[c] || !(w(row, c) > 0.0)) continue;
    used[c] = true;
    best = std::max(best, w(row, c) + best_matching(w, row + 1, used));
    used[c] = false;
  }
  return best;
}

caching::CachingProblem close_problem(std::size_t n_req, std::size_t n_pro) {
  std::vector<caching::Requester> reqs(n_req);
  std::vector<caching::Provider> provs(n_pro);
  for (std::size_t i = 0; i < n_req; ++i) {
    reqs[i].position = {static_cast<double>(i) * 10.0, 0.0};
    reqs[i].content = {8e6, 1e9, 5.0};
  }
  for (std::size_t p = 0; p < n_pro; ++p) {
    provs[p].position = {static_cast<double>(p) * 10.0, 50.0};
    provs[p].capacity_bytes = 5e9;
  }
  return caching::CachingProblem::build(reqs, provs, ChannelParams{}, EconomicParams{});
}

}  // namespace

TEST_CASE("graph construction") {
  SUBCASE("all zeros") {
    const std::vector<double> z(6, 0.0);
    const auto g = build_graph(z, 2, 3);
    CHECK(g.edges.empty());
    CHECK(g.slots.empty());
  }
  SUBCASE("split across two slots") {
    const std::vector<double> z{0.4, 0.8};
    const auto g = build_graph(z, 2, 1);
    REQUIRE(g.slots.size() == 2);
    CHECK(g.slot_count(0) == 2);
    REQUIRE(g.edges.size() == 3);
    CHECK(g.edges[0].requester == 0);
    CHECK(g.slots[g.edges[0].slot].index == 0);
    CHECK(g.edges[0].weight == doctest::Approx(0.4));
    CHECK(g.edges[1].requester == 1);
    CHECK(g.slots[g.edges[1].slot].index == 0);
    CHECK(g.edges[1].weight == doctest::Approx(0.6));
    CHECK(g.edges[2].requester == 1);
    CHECK(g.slots[g.edges[2].slot].index == 1);
    CHECK(g.edges[2].weight == doctest::Approx(0.2));
  }
  SUBCASE("single slot keeps raw weights") {
    const std::vector<double> z{0.3, 0.0, 0.5, 0.9};
    const auto g = build_graph(z, 2, 2);
    CHECK(g.slot_count(0) == 1);
    CHECK(g.slot_count(1) == 1);
    CHECK(g.edges.size() == 3);
  }
  SUBCASE("bad input") {
    const std::vector<double> z{0.3, 1.2};
    CHECK_THROWS_AS(build_graph(z, 1, 2), InvalidArgument);
    const std::vector<double> n{0.3, std::nan("")};
    CHECK_THROWS_AS(build_graph(n, 1, 2), InvalidArgument);
    CHECK_THROWS_AS(build_graph(z, 2, 2), InvalidArgument);
  }
}

TEST_CASE("graph construction conserves mass and bounds slot load") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n_req = 1 + rng.uniform_index(8);
    const std::size_t n_pro = 1 + rng.uniform_index(5);
    std::vector<double> z(n_req * n_pro);
    for (auto& v : z) {
      const double u = rng.uniform01();
      v = u < 0.2 ? 0.0 : (u < 0.3 ? 1.0 : rng.uniform01());
    }
    const auto g = build_graph(z, n_req, n_pro);
    std::map<std::pair<std::size_t, std::size_t>, double> per_pair;
    std::vector<double> per_slot(g.slots.size(), 0.0);
    for (const auto& e : g.edges) {
      CHECK(e.weight >= 0.0);
      CHECK(e.weight <= 1.0 + 1e-12);
      per_pair[{e.requester, g.slots[e.slot].provider}] += e.weight;
      per_slot[e.slot] += e.weight;
    }
    for (std::size_t i = 0; i < n_req; ++i) {
      for (std::size_t p = 0; p < n_pro; ++p) {
        CHECK(std::abs(per_pair[{i, p}] - z[i * n_pro + p]) <= 1e-9);
      }
    }
    for (double load : per_slot) CHECK(load <= 1.0 + 1e-9);
    for (std::size_t p = 0; p < n_pro; ++p) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n_req; ++i) mass += z[i * n_pro + p];
      CHECK(g.slot_count(p) == static_cast<std::size_t>(std::ceil(mass - 1e-9)));
    }
  }
}

TEST_CASE("matching small cases") {
  Matrix<double> one(1, 1, 0.7);
  const auto m1 = max_weight_matching(one);
  REQUIRE(m1.pairs.size() == 1);
  CHECK(m1.total_weight == doctest::Approx(0.7));

  Matrix<double> w(2, 2);
  w(0, 0) = 1.0;
  w(0, 1) = 2.0;
  w(1, 0) = 2.0;
  w(1, 1) = 1.0;
  const auto m = max_weight_matching(w);
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0].slot == 1);
  CHECK(m.pairs[1].slot == 0);
  CHECK(m.total_weight == doctest::Approx(4.0));

  Matrix<double> none(3, 2, 0.0);
  CHECK(max_weight_matching(none).pairs.empty());
}

TEST_CASE("matching equals exhaustive search") {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(6);
    const std::size_t cols = 1 + rng.uniform_index(6);
    Matrix<double> w(rows, cols);
    for (auto& v : w.flat()) v = rng.bernoulli(0.3) ? 0.0 : rng.uniform01();
    const auto m = max_weight_matching(w);
    std::vector<bool> used(cols, false);
    CHECK(m.total_weight == doctest::Approx(best_matching(w, 0, used)).epsilon(1e-12));
    std::vector<bool> seen(cols, false);
    double sum = 0.0;
    for (const auto& pr : m.pairs) {
      CHECK(w(pr.requester, pr.slot) > 0.0);
      CHECK_FALSE(seen[pr.slot]);
      seen[pr.slot] = true;
      sum += w(pr.requester, pr.slot);
    }
    CHECK(sum == doctest::Approx(m.total_weight));
  }
}

TEST_CASE("refine") {
  const auto p = close_problem(4, 4);
  SUBCASE("zeros give the empty assignment") {
    const std::vector<double> z(16, 0.0);
    CHECK(vcache::refine::refine(z, p) == p.empty_assignment());
  }
  SUBCASE("a binary matching is a fixed point") {
    std::vector<double> z(16, 0.0);
    z[0 * 4 + 2] = 1.0;
    z[1 * 4 + 0] = 1.0;
    z[3 * 4 + 3] = 1.0;
    const auto a = vcache::refine::refine(z, p);
    for (std::size_t k = 0; k < 16; ++k) CHECK(a.flat()[k] == static_cast<std::uint8_t>(z[k]));
  }
  SUBCASE("random actions give binary single assignments") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> z(16);
      for (auto& v : z) v = rng.uniform01();
      const auto a = vcache::refine::refine(z, p);
      for (std::size_t i = 0; i < 4; ++i) {
        int row = 0;
        for (std::size_t q = 0; q < 4; ++q) {
          CHECK(a(i, q) <= 1);
          row += a(i, q);
        }
        CHECK(row <= 1);
      }
      CHECK(vcache::refine::refine(z, p) == a);
    }
  }
  SUBCASE("pairs without a link are never selected") {
    std::vector<caching::Requester> reqs{{{8e6, 1e9, 5.0}, {0.0, 0.0}, Heading::east}};
    std::vector<caching::Provider> provs{{5e9, {900.0, 0.0}, Heading::east},
                                         {5e9, {100.0, 0.0}, Heading::east}};
    const auto far = caching::CachingProblem::build(reqs, provs, ChannelParams{},
                                                    EconomicParams{});
    const std::vector<double> z{0.9, 0.1};
    const auto a = vcache::refine::refine(z, far);
    CHECK(a(0, 0) == 0);
    CHECK(a(0, 1) == 1);
  }
}

TEST_CASE("repair drops pairs until feasible") {
  std::vector<caching::Requester> reqs(3);
  for (std::size_t i = 0; i < 3; ++i) {
    reqs[i].position = {static_cast<double>(i) * 10.0, 0.0};
    reqs[i].content = {8e6, 2e9, 5.0};
  }
  std::vector<caching::Provider> provs{{5e9, {0.0, 50.0}, Heading::east}};
  const auto p = caching::CachingProblem::build(reqs, provs, ChannelParams{}, EconomicParams{});
  caching::Assignment a = p.empty_assignment();
  for (std::size_t i = 0; i < 3; ++i) a(i, 0) = 1;
  REQUIRE_FALSE(caching::feasible(p, a).feasible);
  const auto r = repair_feasibility(p, a);
  CHECK(caching::feasible(p, r).feasible);
  CHECK(r(0, 0) == 1);
  CHECK(r(1, 0) == 1);
  CHECK(r(2, 0) == 0);
}
