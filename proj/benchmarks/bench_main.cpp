// Compares the OpenMP kernels against their serial reference routes on a
// deep dyadic tree: same numbers, different code paths.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "kbdiag/heat.hpp"
#include "kbdiag/jump.hpp"
#include "kbdiag/reference.hpp"

using namespace kbdiag;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Row {
  const char* name;
  double serial_ms;
  double parallel_ms;
  double max_gap;
};

void print(const Row& row) {
  std::printf("%-28s serial %10.2f ms   omp %10.2f ms   speedup %5.2fx   max|gap| %.3e\n",
              row.name, row.serial_ms, row.parallel_ms,
              row.serial_ms / std::max(1e-9, row.parallel_ms), row.max_gap);
}

}  // namespace

int main(int argc, char** argv) {
  const bool smoke = argc > 1 && std::strcmp(argv[1], "--smoke") == 0;
  const int depth = smoke ? 8 : 20;
  const int threads = omp_get_max_threads();
  std::printf("dyadic tree, depth %d, %d threads\n", depth, threads);

  KGraphSpec spec;
  spec.k = 1;
  spec.N = 1;
  spec.matrices = {{{2}}};
  const ValidatedKGraph vk = validate(spec);
  const PerronData pd = perron_data(vk);
  const PathTree tree = build_tree(vk, pd, depth, 10'000'000);

  // annotation sweep: omp closed-form kernels vs serial recurrence routes
  {
    auto t0 = Clock::now();
    const MeasureLayer mu = annotate_measure(tree);
    const WeightLayer w = annotate_weight(tree, mu, WeightParams{0.5});
    const double par_ms = ms_since(t0);

    t0 = Clock::now();
    const LevelArrays rmu = ref::measure(tree);
    const LevelArrays rw = ref::weight(tree, rmu, 0.5);
    const double ser_ms = ms_since(t0);

    double gap = 0.0;
    for (int n = 0; n <= depth; ++n)
      for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
        gap = std::max(gap, std::abs(mu.mu[n][i] - rmu[n][i]) / rmu[n][i]);
        gap = std::max(gap, std::abs(w.w[n][i] - rw[n][i]) / rw[n][i]);
      }
    print({"annotate mu+w", ser_ms, par_ms, gap});
  }

  const Annotations ann(tree, SpectralParams{1.0, 0.5});

  // eigenvalue sweep: telescoping recurrence vs prefix-sum walk
  {
    auto t0 = Clock::now();
    const SpectralLayer sp = annotate_spectral(tree, ann.measure(), ann.weight(), 1.0);
    const double par_ms = ms_since(t0);
    (void)sp;
    t0 = Clock::now();
    const double gap = ref::lambda_route_gap(tree, ann);
    const double ser_ms = ms_since(t0);
    print({"lambda recurrence vs walk", ser_ms, par_ms, gap});
  }

  // doubling audit: omp over centers vs single-thread run of the same kernel
  {
    const std::int64_t centers = smoke ? 128 : 4096;
    auto t0 = Clock::now();
    const VdReport rep = vd_audit_dw(tree, ann.measure(), ann.weight(), {}, centers);
    const double par_ms = ms_since(t0);
    omp_set_num_threads(1);
    t0 = Clock::now();
    const VdReport rep1 = vd_audit_dw(tree, ann.measure(), ann.weight(), {}, centers);
    const double ser_ms = ms_since(t0);
    omp_set_num_threads(threads);
    print({"vd audit d_w", ser_ms, par_ms,
           std::abs(rep.empirical_constant - rep1.empirical_constant)});
  }

  // displacement moments: prefix-grouped sum vs explicit leaf sum
  {
    const double beta = 2.0 + 0.5 - 1.0;
    std::vector<double> grid;
    for (int i = 0; i < (smoke ? 4 : 16); ++i) grid.push_back(std::pow(10.0, -2.0 + 2.0 * i / 15.0));
    auto t0 = Clock::now();
    const MomentTable table = moments(tree, ann, 0, grid, {2.0}, beta);
    const double par_ms = ms_since(t0);
    t0 = Clock::now();
    double gap = 0.0;
    // leaf-sum oracle is O(leaves) per cell; sample the grid in smoke mode
    for (std::size_t ti = 0; ti < grid.size(); ti += smoke ? 1 : 4) {
      const double exact = ref::moment_by_leaves(tree, ann, 0, grid[ti], beta * 2.0);
      gap = std::max(gap, std::abs(table.expectation[0][ti] - exact) / exact);
    }
    const double ser_ms = ms_since(t0);
    print({"moments", ser_ms, par_ms, gap});
  }

  // path sampling (omp over sample streams vs one thread)
  {
    const std::int64_t count = smoke ? 20'000 : 2'000'000;
    auto t0 = Clock::now();
    const auto a = sample_paths(tree, 7, count);
    const double par_ms = ms_since(t0);
    omp_set_num_threads(1);
    t0 = Clock::now();
    const auto b = sample_paths(tree, 7, count);
    const double ser_ms = ms_since(t0);
    omp_set_num_threads(threads);
    double gap = 0.0;
    for (std::int64_t i = 0; i < count; ++i)
      if (a[i] != b[i]) gap = 1.0;
    print({"sample_paths", ser_ms, par_ms, gap});
  }

  // CTMC simulation (omp over paths vs one thread)
  {
    const std::int64_t paths = smoke ? 2'000 : 200'000;
    SimConfig cfg;
    cfg.path_count = paths;
    cfg.state_level = std::min(4, depth);
    cfg.horizon = 0.05;
    cfg.seed = 7;
    cfg.max_logged_paths = 0;
    auto t0 = Clock::now();
    const SimResult a = ctmc_simulate(tree, ann, cfg);
    const double par_ms = ms_since(t0);
    omp_set_num_threads(1);
    t0 = Clock::now();
    const SimResult b = ctmc_simulate(tree, ann, cfg);
    const double ser_ms = ms_since(t0);
    omp_set_num_threads(threads);
    double gap = 0.0;
    for (std::size_t i = 0; i < a.terminal_counts.size(); ++i)
      if (a.terminal_counts[i] != b.terminal_counts[i]) gap = 1.0;
    print({"ctmc_simulate", ser_ms, par_ms, gap});
  }

  return 0;
}
