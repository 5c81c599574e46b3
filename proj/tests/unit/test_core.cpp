#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "vcache/core/error.hpp"
#include "vcache/core/model.hpp"
#include "vcache/core/rng.hpp"

using namespace vcache;

namespace {

// 24 dBm evaluated independently of dbm_to_mw.
constexpr double kP24dBm = 251.18864315095797;

ChannelParams reference_channel() {
  ChannelParams c;
  c.bandwidth_hz = 10e6;
  c.tx_power_mw = kP24dBm;
  c.channel_gain = 1.0;
  c.path_loss_exp = 2.0;
  c.noise_mw = 1e-11;
  c.v2v_range_m = 500.0;
  return c;
}

}  // namespace

TEST_CASE("rate at 100 m matches the closed form") {
  // SNR = 251.18864 * 1e-4 / 1e-11 = 2.5118864e9; log2(1 + SNR) = 31.2260...
  const double snr = kP24dBm * 1e-4 / 1e-11;
  const double expected = 1e7 * (std::log(1.0 + snr) / std::log(2.0));
  CHECK(data_rate(100.0, reference_channel()) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(3.1226e8).epsilon(1e-4));
}

TEST_CASE("rate edge cases") {
  auto c = reference_channel();
  CHECK(data_rate(600.0, c) == 0.0);
  CHECK(data_rate(500.0, c) > 0.0);
  CHECK_THROWS_AS(data_rate(0.0, c), DegenerateGeometry);
  c.tx_power_mw = 0.0;
  CHECK(data_rate(100.0, c) == 0.0);
}

TEST_CASE("rate decreases with distance inside the range") {
  const auto c = reference_channel();
  double prev = data_rate(1.0, c);
  for (double d = 5.0; d <= 500.0; d += 5.0) {
    const double r = data_rate(d, c);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("dbm conversion") {
  CHECK(dbm_to_mw(24.0) == doctest::Approx(kP24dBm).epsilon(1e-12));
  CHECK(dbm_to_mw(0.0) == doctest::Approx(1.0));
}

TEST_CASE("transmission latency") {
  Content c{8e6, 1.0, 1.0};
  CHECK(tx_latency(c, 8e6) == doctest::Approx(1.0));
  c.size_bits = 0.0;
  CHECK(tx_latency(c, 8e6) == 0.0);
  CHECK_THROWS_AS(tx_latency(c, 0.0), Unreachable);

  Content big{30e6 * 8, 1.0, 1.0};
  const double snr = kP24dBm * 1e-4 / 1e-11;
  const double rate = 1e7 * std::log2(1.0 + snr);
  CHECK(tx_latency(big, data_rate(100.0, reference_channel())) ==
        doctest::Approx(240e6 / rate).epsilon(1e-12));
}

TEST_CASE("energy cost") {
  ChannelParams chan = reference_channel();
  EconomicParams econ;

  SUBCASE("free energy") {
    econ.energy_price = 0.0;
    CHECK(energy_cost({8e6, 1e9, 5.0}, 8e6, chan, econ) == 0.0);
  }
  SUBCASE("transmission term only") {
    // p = 1000 mW for 1 s is 1 J.
    chan.tx_power_mw = 1000.0;
    econ.cache_energy = 0.0;
    econ.energy_price = 0.5;
    CHECK(energy_cost({8e6, 1e9, 5.0}, 8e6, chan, econ) == doctest::Approx(0.5));
  }
  SUBCASE("default scenario values") {
    // 20 MB at 100 m, 1 GB cached: beta * (0.25118864 W * T + 1e-9 J/B * 1e9 B).
    const Content c{20 * 8e6, 1e9, 7.0};
    const double rate = data_rate(100.0, chan);
    const double joules = 0.25118864315095797 * (160e6 / rate) + 1.0;
    CHECK(energy_cost(c, rate, chan, econ) == doctest::Approx(0.1 * joules).epsilon(1e-12));
    CHECK(energy_cost(c, rate, chan, econ) == doctest::Approx(0.112870).epsilon(1e-5));
  }
}

TEST_CASE("payment") {
  EconomicParams econ;
  econ.cache_price = 2e-9;
  CHECK(pair_payment({1.0, 1e9, 1.0}, econ) == doctest::Approx(2.0));
  econ.cache_price = 0.0;
  CHECK(pair_payment({1.0, 1e9, 1.0}, econ) == 0.0);

  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    econ.cache_price = rng.uniform(0.0, 1e-8);
    const double bytes = rng.uniform(0.5e9, 2.5e9);
    CHECK(pair_payment({1.0, bytes, 1.0}, econ) == econ.cache_price * bytes);
  }
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(reference_channel().validate());
  auto c = reference_channel();
  c.noise_mw = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);

  EconomicParams e;
  CHECK_NOTHROW(e.validate());
  e.penalty = 5.0;
  CHECK_THROWS_AS(e.validate(), InvalidArgument);

  VehicleState v;
  v.role = Role::requester;
  CHECK_THROWS_AS(v.validate(), InvalidArgument);
  v.content = Content{1.0, 1.0, 1.0};
  CHECK_NOTHROW(v.validate());
  v.wallet = -1.0;
  CHECK_THROWS_AS(v.validate(), InvalidArgument);
}

TEST_CASE("headings") {
  CHECK(opposite(Heading::north) == Heading::south);
  CHECK(opposite(Heading::west) == Heading::east);
  CHECK(direction(Heading::north) == Vec2{0.0, 1.0});
  CHECK(direction(Heading::west) == Vec2{-1.0, 0.0});
  CHECK(to_string(Heading::east) == "east");
}

TEST_CASE("rng is reproducible and forks independently") {
  Rng a(42);
  Rng b(42);
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());
  Rng c = a.fork();
  Rng d = b.fork();
  CHECK(c.next_u64() == d.next_u64());
  CHECK(c.next_u64() != a.next_u64());

  Rng r(3);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);

  for (int k = 0; k < 1000; ++k) CHECK(r.uniform_index(7) < 7);
}
