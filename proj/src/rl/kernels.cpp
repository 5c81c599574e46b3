#include "vcache/rl/kernels.hpp"

#include <cstdint>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace vcache::rl::kernels {

int thread_count() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y) {
  const auto rows = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static) if (batch * out * in > 32768)
  for (std::int64_t n = 0; n < rows; ++n) {
    const double* xr = x + n * in;
    double* yr = y + n * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = w + o * in;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      yr[o] = acc + b[o];
    }
  }
}

void dense_backward_input(const double* dy, std::size_t batch, std::size_t out, const double* w,
                          std::size_t in, double* dx) {
  const auto rows = static_cast<std::int64_t>(batch);
#pragma omp parallel for schedule(static) if (batch * out * in > 32768)
  for (std::int64_t n = 0; n < rows; ++n) {
    double* dxr = dx + n * in;
    const double* dyr = dy + n * out;
    for (std::size_t i = 0; i < in; ++i) dxr[i] = 0.0;
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      const double* wr = w + o * in;
      for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
    }
  }
}

void dense_backward_params(const double* dy, std::size_t batch, std::size_t out, const double* x,
                           std::size_t in, double* dw, double* db) {
  const auto cols = static_cast<std::int64_t>(out);
#pragma omp parallel for schedule(static) if (batch * out * in > 32768)
  for (std::int64_t o = 0; o < cols; ++o) {
    double* dwr = dw + o * in;
    double bias = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const double g = dy[n * out + o];
      bias += g;
      if (g == 0.0) continue;
      const double* xr = x + n * in;
      for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
    }
    db[o] += bias;
  }
}

namespace reference {

void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y) {
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += x[n * in + i] * w[o * in + i];
      y[n * out + o] = acc + b[o];
    }
  }
}

void dense_backward_input(const double* dy, std::size_t batch, std::size_t out, const double* w,
                          std::size_t in, double* dx) {
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += dy[n * out + o] * w[o * in + i];
      dx[n * in + i] = acc;
    }
  }
}

void dense_backward_params(const double* dy, std::size_t batch, std::size_t out, const double* x,
                           std::size_t in, double* dw, double* db) {
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t n = 0; n < batch; ++n) acc += dy[n * out + o] * x[n * in + i];
      dw[o * in + i] += acc;
    }
    double acc = 0.0;
    for (std::size_t n = 0; n < batch; ++n) acc += dy[n * out + o];
    db[o] += acc;
  }
}

}  // namespace reference

}  // namespace vcache::rl::kernels
