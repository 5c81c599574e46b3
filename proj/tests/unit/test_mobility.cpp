#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vcache/core/error.hpp"
#include "vcache/harness/experiment.hpp"
#include "vcache/mobility/grid.hpp"
#include "vcache/mobility/trace.hpp"

using namespace vcache;
using namespace vcache::mobility;

namespace {

VehicleState at(Vec2 p, Heading h, double v) {
  VehicleState s;
  s.position = p;
  s.heading = h;
  s.velocity = v;
  return s;
}

// Fraction of arrivals that end in a wait, from 190 m driving east into (200, 600).
double empirical_stop_rate(const GridParams& g, double v, int trials, Rng& rng) {
  int stops = 0;
  for (int k = 0; k < trials; ++k) {
    const auto s = step(at({190.0, 600.0}, Heading::east, v), g, 10.5 / v, rng);
    if (s.wait_remaining > 0.0) ++stops;
  }
  return static_cast<double>(stops) / trials;
}

}  // namespace

TEST_CASE("move and stop probabilities") {
  GridParams g;
  g.wait_time = 0.0;
  CHECK(move_probability(g, 10.0) == 1.0);
  CHECK(stop_probability(g, 10.0) == 0.0);

  g.wait_time = 40.0;
  g.wait_prob = 1.0;
  g.intersection_density = 1.0 / 200.0;
  // 40 * 1 * 0.005 * 10 = 2, so 2 / (2 + 2).
  CHECK(move_probability(g, 10.0) == doctest::Approx(0.5));
  CHECK(stop_probability(g, 10.0) == doctest::Approx(0.5));

  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    g.wait_time = rng.uniform(0.0, 120.0);
    g.wait_prob = rng.uniform01();
    const double v = rng.uniform(0.1, 30.0);
    CHECK(std::abs(move_probability(g, v) + stop_probability(g, v) - 1.0) <= 1e-12);
  }
}

TEST_CASE("empirical stop frequency matches the analytic value") {
  struct Setting {
    double wait_time, wait_prob, v;
  };
  const Setting settings[] = {{30.0, 0.5, 10.0}, {60.0, 0.9, 5.0}, {10.0, 0.2, 15.0}};
  Rng rng(2024);
  for (const auto& s : settings) {
    GridParams g;
    g.wait_time = s.wait_time;
    g.wait_prob = s.wait_prob;
    const double expected = stop_probability(g, s.v);
    CHECK(std::abs(empirical_stop_rate(g, s.v, 100000, rng) - expected) <= 0.01);
  }
}

TEST_CASE("kinematics between intersections") {
  GridParams g;
  Rng rng(1);
  const auto parked = at({50.0, 0.0}, Heading::east, 0.0);
  const auto same = step(parked, g, 1.0, rng);
  CHECK(same.position == parked.position);
  CHECK(same.heading == parked.heading);

  const auto moved = step(at({50.0, 400.0}, Heading::east, 12.0), g, 2.0, rng);
  CHECK(moved.position.x == doctest::Approx(74.0));
  CHECK(moved.position.y == 400.0);
  CHECK(moved.heading == Heading::east);

  const auto south = step(at({600.0, 390.0}, Heading::south, 5.0), g, 1.0, rng);
  CHECK(south.position.y == doctest::Approx(385.0));
}

TEST_CASE("vehicles stay on streets and on the map") {
  GridParams g;
  Rng rng(77);
  for (int v = 0; v < 50; ++v) {
    const auto pl = random_placement(g, rng);
    REQUIRE(on_grid(pl.position, g));
    auto s = at(pl.position, pl.heading, rng.uniform(5.0, 15.0));
    for (int t = 0; t < 500; ++t) {
      s = step(s, g, 1.0, rng);
      REQUIRE(on_grid(s.position, g));
      REQUIRE(s.wait_remaining >= 0.0);
    }
  }
}

TEST_CASE("grid parameter validation") {
  GridParams g;
  CHECK_NOTHROW(g.validate());
  g.wait_prob = 1.5;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
  g = GridParams{};
  g.width = 1250.0;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
  g = GridParams{};
  g.intersection_density = 1.0 / 100.0;
  CHECK_THROWS_AS(g.validate(), InvalidArgument);
  Rng rng(1);
  CHECK_THROWS_AS(step(at({50.0, 50.0}, Heading::east, 10.0), GridParams{}, 1.0, rng),
                  InvalidArgument);
}

TEST_CASE("trace interpolation") {
  Trace t;
  t.add("a", 3.0, {7.0, 8.0});
  t.finalize();
  CHECK(t.position("a", 0.0) == Vec2{7.0, 8.0});
  CHECK(t.position("a", 100.0) == Vec2{7.0, 8.0});

  Trace u;
  u.add("b", 10.0, {100.0, 0.0});
  u.add("b", 0.0, {0.0, 50.0});
  u.finalize();
  const Vec2 mid = u.position("b", 5.0);
  CHECK(mid.x == doctest::Approx(50.0));
  CHECK(mid.y == doctest::Approx(25.0));
  CHECK(u.start_time() == 0.0);
  CHECK(u.end_time() == 10.0);
}

TEST_CASE("trace ingest rejects malformed input") {
  const GeoBox box;
  std::istringstream no_header("1,a,40.67,-73.94\n");
  CHECK_THROWS_AS(ingest_trace(no_header, box), ParseError);
  std::istringstream bad_field("timestamp,vehicle_id,lat,lon\n1,a,north,-73.94\n");
  CHECK_THROWS_AS(ingest_trace(bad_field, box), ParseError);
  std::istringstream outside("timestamp,vehicle_id,lat,lon\n1,a,10.0,10.0\n");
  CHECK_THROWS_AS(ingest_trace(outside, box), ParseError);
  std::istringstream ok(
      "timestamp,vehicle_id,lat,lon\n0,a,40.67,-73.94\n1,a,40.671,-73.94\n2,z,1.0,1.0\n");
  const auto t = ingest_trace(ok, box);
  CHECK(t.size() == 1);
  CHECK(t.series("a").size() == 2);
}

TEST_CASE("projection round trip") {
  const GeoBox box;
  const auto [lat, lon] = unproject(project(40.6701, -73.9402, box), box);
  CHECK(lat == doctest::Approx(40.6701).epsilon(1e-12));
  CHECK(lon == doctest::Approx(-73.9402).epsilon(1e-12));
  const auto e = box.extent_m();
  CHECK(e.x > 1500.0);
  CHECK(e.y > 1000.0);
}

TEST_CASE("synthetic trace survives a write and ingest") {
  harness::ScenarioConfig cfg;
  const auto records = harness::generate_synthetic_trace(cfg, 100, 20);
  REQUIRE(records.size() == 100 * 21);
  std::stringstream buf;
  write_trace(buf, records);
  const auto trace = ingest_trace(buf, cfg.mobility.bbox);
  REQUIRE(trace.size() == 100);
  for (const auto& r : records) {
    const auto& series = trace.series(r.vehicle_id);
    const Vec2 expected = project(r.lat, r.lon, cfg.mobility.bbox);
    bool found = false;
    for (const auto& s : series) {
      if (s.t == r.timestamp) {
        CHECK(s.position == expected);
        found = true;
      }
    }
    CHECK(found);
  }
}
