// Parallel kernels against their serial references, at the layer shapes the
// agent uses on the 20x10 and 50x50 scenarios.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "vcache/core/rng.hpp"
#include "vcache/ledger/crypto.hpp"
#include "vcache/rl/kernels.hpp"

using namespace vcache;
namespace k = vcache::rl::kernels;

namespace {

struct Layer {
  std::size_t batch, in, out;
  std::vector<double> x, w, b, y, dy, dx, dw, db;

  Layer(std::size_t batch_, std::size_t in_, std::size_t out_)
      : batch(batch_), in(in_), out(out_) {
    Rng rng(batch * 131 + in * 7 + out);
    auto fill = [&](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (auto& e : v) e = rng.uniform(-1.0, 1.0);
    };
    fill(x, batch * in);
    fill(w, out * in);
    fill(b, out);
    fill(dy, batch * out);
    y.resize(batch * out);
    dx.resize(batch * in);
    dw.assign(out * in, 0.0);
    db.assign(out, 0.0);
  }
};

Layer make(const benchmark::State& st) {
  return {static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)),
          static_cast<std::size_t>(st.range(2))};
}

void shapes(benchmark::internal::Benchmark* b) {
  // batch, in, out: first layers of actor (state -> hidden) and critic
  // (state + action -> hidden) for 20x10, then 50x50, then hidden -> hidden.
  b->Args({32, 770, 128})->Args({32, 970, 128})->Args({32, 8050, 128})->Args({32, 128, 128});
  b->ArgNames({"batch", "in", "out"});
}

void set_flops(benchmark::State& st, const Layer& l) {
  st.counters["GFLOP/s"] = benchmark::Counter(
      2.0 * static_cast<double>(l.batch * l.in * l.out) * static_cast<double>(st.iterations()),
      benchmark::Counter::kIsRate, benchmark::Counter::kIs1000);
}

void BM_forward_parallel(benchmark::State& st) {
  auto l = make(st);
  for (auto _ : st) {
    k::dense_forward(l.x.data(), l.batch, l.in, l.w.data(), l.b.data(), l.out, l.y.data());
    benchmark::DoNotOptimize(l.y.data());
  }
  set_flops(st, l);
}

void BM_forward_reference(benchmark::State& st) {
  auto l = make(st);
  for (auto _ : st) {
    k::reference::dense_forward(l.x.data(), l.batch, l.in, l.w.data(), l.b.data(), l.out,
                                l.y.data());
    benchmark::DoNotOptimize(l.y.data());
  }
  set_flops(st, l);
}

void BM_backward_input_parallel(benchmark::State& st) {
  auto l = make(st);
  for (auto _ : st) {
    k::dense_backward_input(l.dy.data(), l.batch, l.out, l.w.data(), l.in, l.dx.data());
    benchmark::DoNotOptimize(l.dx.data());
  }
  set_flops(st, l);
}

void BM_backward_input_reference(benchmark::State& st) {
  auto l = make(st);
  for (auto _ : st) {
    k::reference::dense_backward_input(l.dy.data(), l.batch, l.out, l.w.data(), l.in,
                                       l.dx.data());
    benchmark::DoNotOptimize(l.dx.data());
  }
  set_flops(st, l);
}

void BM_backward_params_parallel(benchmark::State& st) {
  auto l = make(st);
  for (auto _ : st) {
    k::dense_backward_params(l.dy.data(), l.batch, l.out, l.x.data(), l.in, l.dw.data(),
                             l.db.data());
    benchmark::DoNotOptimize(l.dw.data());
  }
  set_flops(st, l);
}

void BM_backward_params_reference(benchmark::State& st) {
  auto l = make(st);
  for (auto _ : st) {
    k::reference::dense_backward_params(l.dy.data(), l.batch, l.out, l.x.data(), l.in,
                                        l.dw.data(), l.db.data());
    benchmark::DoNotOptimize(l.dw.data());
  }
  set_flops(st, l);
}

std::vector<ledger::SignedItem> signed_batch(std::size_t n) {
  Rng rng(17);
  std::vector<ledger::KeyPair> keys;
  for (int k = 0; k < 8; ++k) keys.push_back(ledger::KeyPair::generate(rng));
  std::vector<ledger::SignedItem> items;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& kp = keys[k % keys.size()];
    const std::string s = "request " + std::to_string(k);
    ledger::Bytes m(s.begin(), s.end());
    items.push_back({kp.pk, m, ledger::sign(kp.sk, m)});
  }
  return items;
}

void BM_batch_verify_parallel(benchmark::State& st) {
  const auto items = signed_batch(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(ledger::batch_verify(items));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_batch_verify_reference(benchmark::State& st) {
  const auto items = signed_batch(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(ledger::reference::batch_verify(items));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_forward_parallel)->Apply(shapes);
BENCHMARK(BM_forward_reference)->Apply(shapes);
BENCHMARK(BM_backward_input_parallel)->Apply(shapes);
BENCHMARK(BM_backward_input_reference)->Apply(shapes);
BENCHMARK(BM_backward_params_parallel)->Apply(shapes);
BENCHMARK(BM_backward_params_reference)->Apply(shapes);
BENCHMARK(BM_batch_verify_parallel)->Arg(30)->Arg(100);
BENCHMARK(BM_batch_verify_reference)->Arg(30)->Arg(100);

BENCHMARK_MAIN();
