#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "vcache/caching/problem.hpp"
#include "vcache/core/error.hpp"

using namespace vcache;
using namespace vcache::caching;

namespace {

CachingProblem random_instance(std::size_t n_req, std::size_t n_pro, Rng& rng,
                               double extent = 700.0) {
  std::vector<Requester> reqs(n_req);
  std::vector<Provider> provs(n_pro);
  for (auto& r : reqs) {
    r.position = {rng.uniform(0.0, extent), rng.uniform(0.0, extent)};
    r.content = {rng.uniform(10.0, 50.0) * 8e6, rng.uniform(0.5, 2.5) * 1e9,
                 rng.uniform(0.2, 2.0)};
  }
  for (auto& p : provs) {
    p.position = {rng.uniform(0.0, extent), rng.uniform(0.0, extent)};
    p.capacity_bytes = rng.uniform(1.0, 5.0) * 1e9;
  }
  return CachingProblem::build(reqs, provs, ChannelParams{}, EconomicParams{});
}

// Constraint re-evaluation written against the raw fields.
bool oracle_feasible(const CachingProblem& p, const Assignment& a) {
  for (std::size_t q = 0; q < p.provider_count(); ++q) {
    double load = 0.0;
    for (std::size_t i = 0; i < p.requester_count(); ++i) {
      if (a(i, q)) load += p.requesters()[i].content.cache_bytes;
    }
    if (load > p.providers()[q].capacity_bytes) return false;
  }
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    double delay = 0.0;
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (!a(i, q)) continue;
      const double d = distance(p.requesters()[i].position, p.providers()[q].position);
      const double rate = data_rate(d, p.channel());
      if (rate <= 0.0) return false;
      delay += p.requesters()[i].content.size_bits / rate;
    }
    if (delay > p.requesters()[i].content.deadline_s) return false;
  }
  return true;
}

double oracle_utility(const CachingProblem& p, const Assignment& a) {
  double u = 0.0;
  for (std::size_t i = 0; i < p.requester_count(); ++i) {
    for (std::size_t q = 0; q < p.provider_count(); ++q) {
      if (!a(i, q)) continue;
      const auto& c = p.requesters()[i].content;
      const double d = distance(p.requesters()[i].position, p.providers()[q].position);
      u += pair_payment(c, p.economics()) -
           energy_cost(c, data_rate(d, p.channel()), p.channel(), p.economics());
    }
  }
  return u;
}

Assignment from_mask(const CachingProblem& p, std::uint32_t mask) {
  Assignment a = p.empty_assignment();
  for (std::size_t k = 0; k < a.size(); ++k) a.flat()[k] = (mask >> k) & 1u;
  return a;
}

double brute_force_best(const CachingProblem& p) {
  double best = 0.0;
  const std::uint32_t cells = static_cast<std::uint32_t>(p.requester_count() * p.provider_count());
  for (std::uint32_t mask = 0; mask < (1u << cells); ++mask) {
    const Assignment a = from_mask(p, mask);
    if (oracle_feasible(p, a)) best = std::max(best, oracle_utility(p, a));
  }
  return best;
}

}  // namespace

TEST_CASE("feasibility basics") {
  Rng rng(1);
  const auto p = random_instance(3, 3, rng);
  CHECK(feasible(p, p.empty_assignment()).feasible);

  const auto one = CachingProblem::build({{{8e6, 3e9, 5.0}, {0.0, 0.0}, Heading::east}},
                                         {{2e9, {100.0, 0.0}, Heading::east}}, ChannelParams{},
                                         EconomicParams{});
  Assignment a = one.empty_assignment();
  a(0, 0) = 1;
  const auto rep = feasible(one, a);
  CHECK_FALSE(rep.feasible);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].kind == Violation::Kind::capacity);
  CHECK(rep.violations[0].slack == doctest::Approx(-1e9));

  CHECK_THROWS_AS(feasible(one, Assignment(2, 1)), InvalidArgument);
}

TEST_CASE("feasibility agrees with constraint re-evaluation") {
  Rng rng(2);
  for (int inst = 0; inst < 200; ++inst) {
    const auto p = random_instance(4, 4, rng);
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = from_mask(p, static_cast<std::uint32_t>(rng.uniform_index(1u << 16)));
      CHECK(feasible(p, a).feasible == oracle_feasible(p, a));
    }
  }
}

TEST_CASE("out-of-range pairs") {
  const auto p = CachingProblem::build({{{8e6, 1e9, 5.0}, {0.0, 0.0}, Heading::east}},
                                       {{5e9, {600.0, 0.0}, Heading::east}}, ChannelParams{},
                                       EconomicParams{});
  CHECK_FALSE(p.in_range(0, 0));
  CHECK(p.rates()(0, 0) == 0.0);
  CHECK(std::isinf(p.latencies()(0, 0)));
  Assignment a = p.empty_assignment();
  a(0, 0) = 1;
  CHECK_FALSE(feasible(p, a).feasible);
  CHECK(gcc(p) == p.empty_assignment());
  Rng rng(1);
  CHECK(rcc(p, rng) == p.empty_assignment());

  CHECK_THROWS_AS(CachingProblem::build({{{8e6, 1e9, 5.0}, {3.0, 4.0}, Heading::east}},
                                        {{5e9, {3.0, 4.0}, Heading::east}}, ChannelParams{},
                                        EconomicParams{}),
                  DegenerateGeometry);
}

TEST_CASE("utility") {
  Rng rng(3);
  const auto p = random_instance(4, 4, rng, 400.0);
  CHECK(utility(p, p.empty_assignment()) == 0.0);
  for (int k = 0; k < 100; ++k) {
    const auto a = from_mask(p, static_cast<std::uint32_t>(rng.uniform_index(1u << 16)));
    CHECK(utility(p, a) == doctest::Approx(oracle_utility(p, a)).epsilon(1e-12));
  }

  // Payment 5 and energy 2: 2.5e9 bytes at 2e-9, energy price chosen to give exactly 2.
  EconomicParams econ;
  econ.cache_price = 2e-9;
  econ.cache_energy = 0.0;
  ChannelParams chan;
  chan.tx_power_mw = 1000.0;
  const Content c{1.0, 2.5e9, 100.0};
  const double rate = data_rate(100.0, chan);
  econ.energy_price = 2.0 / (1.0 * (1.0 / rate));
  const auto one = CachingProblem::build({{c, {0.0, 0.0}, Heading::east}},
                                         {{5e9, {100.0, 0.0}, Heading::east}}, chan, econ);
  Assignment a = one.empty_assignment();
  a(0, 0) = 1;
  CHECK(utility(one, a) == doctest::Approx(3.0));
}

TEST_CASE("exact solver") {
  SUBCASE("nothing feasible") {
    const auto p = CachingProblem::build({{{8e6, 9e9, 5.0}, {0.0, 0.0}, Heading::east}},
                                         {{5e9, {100.0, 0.0}, Heading::east}}, ChannelParams{},
                                         EconomicParams{});
    const auto s = solve_exact(p);
    CHECK(s.assignment == p.empty_assignment());
    CHECK(s.utility == 0.0);
  }
  SUBCASE("one profitable pair") {
    const auto p = CachingProblem::build({{{8e6, 1e9, 5.0}, {0.0, 0.0}, Heading::east}},
                                         {{5e9, {100.0, 0.0}, Heading::east}}, ChannelParams{},
                                         EconomicParams{});
    const auto s = solve_exact(p);
    CHECK(s.assignment(0, 0) == 1);
    CHECK(s.utility > 0.0);
  }
  SUBCASE("enumeration agreement on 3x3") {
    Rng rng(4);
    for (int inst = 0; inst < 60; ++inst) {
      const auto p = random_instance(3, 3, rng);
      const auto s = solve_exact(p);
      CHECK(feasible(p, s.assignment).feasible);
      CHECK(s.utility == doctest::Approx(brute_force_best(p)).epsilon(1e-9));
      CHECK(s.utility == doctest::Approx(utility(p, s.assignment)).epsilon(1e-12));
    }
  }
  SUBCASE("size limit") {
    Rng rng(5);
    CHECK_THROWS_AS(solve_exact(random_instance(5, 5, rng)), InvalidArgument);
  }
}

TEST_CASE("greedy baseline") {
  const Content c{8e6, 1e9, 5.0};
  const auto p = CachingProblem::build(
      {{c, {0.0, 0.0}, Heading::east}},
      {{5e9, {300.0, 0.0}, Heading::east}, {5e9, {100.0, 0.0}, Heading::east}}, ChannelParams{},
      EconomicParams{});
  REQUIRE(p.rates()(0, 1) > p.rates()(0, 0));
  const auto a = gcc(p);
  CHECK(a(0, 0) == 0);
  CHECK(a(0, 1) == 1);

  Rng rng(6);
  for (int inst = 0; inst < 300; ++inst) {
    const auto q = random_instance(5, 5, rng);
    const auto g = gcc(q);
    CHECK(feasible(q, g).feasible);
    for (std::size_t i = 0; i < 5; ++i) {
      int row = 0;
      for (std::size_t k = 0; k < 5; ++k) row += g(i, k);
      CHECK(row <= 1);
    }
  }
}

TEST_CASE("greedy takes the lowest index on equal rates and respects capacity order") {
  const Content c{8e6, 3e9, 5.0};
  const auto p = CachingProblem::build(
      {{c, {0.0, 0.0}, Heading::east}, {c, {0.0, 10.0}, Heading::east}},
      {{5e9, {100.0, 0.0}, Heading::east}, {5e9, {-100.0, 0.0}, Heading::east}}, ChannelParams{},
      EconomicParams{});
  const auto a = gcc(p);
  CHECK(a(0, 0) == 1);
  // Requester 1 no longer fits at provider 0 and falls back to provider 1.
  CHECK(a(1, 0) == 0);
  CHECK(a(1, 1) == 1);
}

TEST_CASE("random baseline") {
  const Content c{8e6, 1e9, 5.0};
  const auto single = CachingProblem::build(
      {{c, {0.0, 0.0}, Heading::east}},
      {{5e9, {900.0, 0.0}, Heading::east}, {5e9, {100.0, 0.0}, Heading::east}}, ChannelParams{},
      EconomicParams{});
  Rng rng(7);
  for (int k = 0; k < 100; ++k) CHECK(rcc(single, rng)(0, 1) == 1);

  const auto three = CachingProblem::build({{c, {0.0, 0.0}, Heading::east}},
                                           {{5e9, {100.0, 0.0}, Heading::east},
                                            {5e9, {0.0, 200.0}, Heading::east},
                                            {5e9, {-300.0, 0.0}, Heading::east},
                                            {5e9, {0.0, -800.0}, Heading::east}},
                                           ChannelParams{}, EconomicParams{});
  int counts[4] = {0, 0, 0, 0};
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    const auto a = rcc(three, rng);
    for (int q = 0; q < 4; ++q) counts[q] += a(0, q);
  }
  CHECK(counts[3] == 0);
  for (int q = 0; q < 3; ++q) CHECK(std::abs(counts[q] / double(draws) - 1.0 / 3.0) <= 0.02);
}

TEST_CASE("successful requesters") {
  const Content small{8e6, 1e9, 5.0};
  const Content large{8e6, 4.5e9, 5.0};
  const auto p = CachingProblem::build(
      {{small, {0.0, 0.0}, Heading::east}, {large, {0.0, 5.0}, Heading::east},
       {small, {0.0, 10.0}, Heading::east}},
      {{5e9, {100.0, 0.0}, Heading::east}, {5e9, {-100.0, 0.0}, Heading::east}}, ChannelParams{},
      EconomicParams{});
  Assignment a = p.empty_assignment();
  a(0, 0) = 1;
  a(1, 0) = 1;  // provider 0 overloaded
  const auto ok = successful_requesters(p, a);
  CHECK_FALSE(ok[0]);
  CHECK_FALSE(ok[1]);
  CHECK_FALSE(ok[2]);  // unassigned
  a(1, 0) = 0;
  a(1, 1) = 1;
  const auto ok2 = successful_requesters(p, a);
  CHECK(ok2[0]);
  CHECK(ok2[1]);
}

TEST_CASE("json round trip") {
  Rng rng(8);
  const auto p = random_instance(3, 2, rng);
  const auto q = problem_from_json(to_json(p));
  CHECK(q.rates() == p.rates());
  CHECK(q.latencies() == p.latencies());
  CHECK(q.energies() == p.energies());
  CHECK_THROWS_AS(problem_from_json(nlohmann::json::parse(R"({"requesters": 3})")), ParseError);
}
