#pragma once

// Dense-layer kernels used by the actor and critic networks.
//
// All matrices are row-major. Shapes:
//   x  : batch x in       w : out x in      b : out
//   y  : batch x out      dy: batch x out
//   dx : batch x in       dw: out x in      db: out
//
// The parallel versions split work over independent output elements, so every
// output is reduced by one thread in a fixed order and results are
// bit-identical to a single-threaded run. The `reference` namespace keeps the
// plain serial loops for testing and benchmarking.

#include <cstddef>

namespace vcache::rl::kernels {

void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y);

void dense_backward_input(const double* dy, std::size_t batch, std::size_t out, const double* w,
                          std::size_t in, double* dx);

/// Accumulates into dw and db (callers zero them first when needed).
void dense_backward_params(const double* dy, std::size_t batch, std::size_t out, const double* x,
                           std::size_t in, double* dw, double* db);

/// Number of OpenMP threads the kernels will use (1 when built without OpenMP).
int thread_count();

namespace reference {

void dense_forward(const double* x, std::size_t batch, std::size_t in, const double* w,
                   const double* b, std::size_t out, double* y);

void dense_backward_input(const double* dy, std::size_t batch, std::size_t out, const double* w,
                          std::size_t in, double* dx);

void dense_backward_params(const double* dy, std::size_t batch, std::size_t out, const double* x,
                           std::size_t in, double* dw, double* db);

}  // namespace reference

}  // namespace vcache::rl::kernels
