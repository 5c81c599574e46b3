#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "vcache/core/rng.hpp"
#include "vcache/rl/kernels.hpp"

using namespace vcache;
namespace k = vcache::rl::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double sparsity = 0.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.bernoulli(sparsity) ? 0.0 : rng.uniform(-1.0, 1.0);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= 1e-12 * (1.0 + std::abs(b[i])));
  }
}

struct Shape {
  std::size_t batch, in, out;
};

const Shape kShapes[] = {{1, 1, 1}, {3, 5, 7}, {32, 97, 64}, {32, 770, 128}, {17, 128, 200}};

}  // namespace

TEST_CASE("thread count is positive") { CHECK(k::thread_count() >= 1); }

TEST_CASE("forward matches the serial reference") {
  Rng rng(1);
  for (const auto& s : kShapes) {
    const auto x = random_vec(s.batch * s.in, rng);
    const auto w = random_vec(s.out * s.in, rng);
    const auto b = random_vec(s.out, rng);
    std::vector<double> y(s.batch * s.out), y_ref(s.batch * s.out);
    k::dense_forward(x.data(), s.batch, s.in, w.data(), b.data(), s.out, y.data());
    k::reference::dense_forward(x.data(), s.batch, s.in, w.data(), b.data(), s.out, y_ref.data());
    check_close(y, y_ref);
  }
}

TEST_CASE("input gradient matches the serial reference") {
  Rng rng(2);
  for (const auto& s : kShapes) {
    const auto dy = random_vec(s.batch * s.out, rng, 0.4);
    const auto w = random_vec(s.out * s.in, rng);
    std::vector<double> dx(s.batch * s.in, 9.0), dx_ref(s.batch * s.in, -9.0);
    k::dense_backward_input(dy.data(), s.batch, s.out, w.data(), s.in, dx.data());
    k::reference::dense_backward_input(dy.data(), s.batch, s.out, w.data(), s.in, dx_ref.data());
    check_close(dx, dx_ref);
  }
}

TEST_CASE("parameter gradient accumulates like the serial reference") {
  Rng rng(3);
  for (const auto& s : kShapes) {
    const auto dy = random_vec(s.batch * s.out, rng, 0.4);
    const auto x = random_vec(s.batch * s.in, rng);
    auto dw = random_vec(s.out * s.in, rng);
    auto db = random_vec(s.out, rng);
    auto dw_ref = dw;
    auto db_ref = db;
    k::dense_backward_params(dy.data(), s.batch, s.out, x.data(), s.in, dw.data(), db.data());
    k::reference::dense_backward_params(dy.data(), s.batch, s.out, x.data(), s.in, dw_ref.data(),
                                        db_ref.data());
    check_close(dw, dw_ref);
    check_close(db, db_ref);
  }
}

TEST_CASE("hand-sized forward") {
  // y = [1 2] . [[1 0] [0 1] [1 1]]^T + [0 0 1]
  const double x[] = {1.0, 2.0};
  const double w[] = {1.0, 0.0, 0.0, 1.0, 1.0, 1.0};
  const double b[] = {0.0, 0.0, 1.0};
  double y[3];
  k::dense_forward(x, 1, 2, w, b, 3, y);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 4.0);
}

TEST_CASE("kernels are deterministic across calls") {
  Rng rng(4);
  const Shape s{32, 770, 128};
  const auto x = random_vec(s.batch * s.in, rng);
  const auto w = random_vec(s.out * s.in, rng);
  const auto b = random_vec(s.out, rng);
  std::vector<double> y1(s.batch * s.out), y2(s.batch * s.out);
  k::dense_forward(x.data(), s.batch, s.in, w.data(), b.data(), s.out, y1.data());
  k::dense_forward(x.data(), s.batch, s.in, w.data(), b.data(), s.out, y2.data());
  CHECK(y1 == y2);
}
