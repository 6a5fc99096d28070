#pragma once
#include <omp.h>

#include <cstdint>
#include <vector>

namespace kbdiag {

// Thread budget for all OpenMP kernels. 0 = OpenMP default.
inline void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

template <class F>
void par_for(std::int64_t n, F&& body) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

// Deterministic parallel sum: fixed 1024-element blocks are reduced
// independently and then combined in block order, so the result does not
// depend on the number of threads.
template <class F>
double par_sum(std::int64_t n, F&& term) {
  constexpr std::int64_t kBlock = 1024;
  const std::int64_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < nblocks; ++b) {
    const std::int64_t lo = b * kBlock;
    const std::int64_t hi = std::min(lo + kBlock, n);
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) acc += term(i);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

template <class F>
double par_max(std::int64_t n, F&& term) {
  double best = -1.0 / 0.0;
#pragma omp parallel for schedule(static) reduction(max : best)
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = term(i);
    if (v > best) best = v;
  }
  return best;
}

}  // namespace kbdiag
