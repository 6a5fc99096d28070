#pragma once
#include <string>
#include <vector>

#include "kbdiag/annotations.hpp"

namespace kbdiag {

// Jump-form double sum over ordered pairs of distinct depth-m cylinders:
//   sum J(a ^ b) (f_a - f_b)(g_a - g_b) mu_a mu_b,
// with no cross-component terms. Equals <f, -Delta_s g> in L^2(mu) for
// functions constant on depth-m cylinders.
double dirichlet_jump(const PathTree& tree, const Annotations& ann, int m,
                      const std::vector<double>& f, const std::vector<double>& g);

struct SimConfig {
  std::int64_t x0_leaf = 0;        // start in this leaf's level-m cylinder
  double horizon = 0.1;            // t
  std::int64_t path_count = 1000;
  std::uint64_t seed = 0;
  int state_level = 1;             // m
  std::int64_t max_logged_paths = 1000;  // full event logs kept for this many paths
};

struct SimEvent {
  std::int64_t path = 0;
  double time = 0.0;
  std::int64_t from = 0, to = 0;
};

struct SimResult {
  int state_level = 0;
  std::int64_t initial_state = 0;
  std::vector<std::int64_t> terminal;         // per path
  std::vector<std::int64_t> terminal_counts;  // histogram over level-m states
  std::vector<SimEvent> events;               // for the logged paths, in path order
  std::int64_t total_jumps = 0;
};

// Continuous-time Markov chain of the level-m generator: exponential holding
// time with rate -M[a][a], jump a -> b with probability M[a][b] / (-M[a][a]).
// Path j draws from the stream (seed, j), so results do not depend on
// scheduling. Throws NotAGenerator if an off-diagonal entry is < -1e-12.
SimResult ctmc_simulate(const PathTree& tree, const Annotations& ann, const SimConfig& cfg);

struct MomentFit {
  double gamma = 0.0;
  bool ok = false;
  std::string reason;
  std::int64_t points = 0;
  double slope = 0.0;
  double rms_residual = 0.0;
  // gamma = 1 alternative: slope of log(E / (|log t| + 1)) against log t
  double slope_log_corrected = 0.0;
  double rms_log_corrected = 0.0;
};

// Exact displacement moments E_x[ d_w(x, Y_t)^{beta * gamma} ] by summation
// over the prefix levels of x's chain. Distances inside the deepest cylinder
// are counted as zero; the in-cylinder mass times w(deepest)^{beta gamma}
// bounds that omission and is reported per t. Fits use only the t where the
// bound stays below fit_rel_error_cap relative to the value.
struct MomentTable {
  double beta = 0.0;
  std::int64_t x0_leaf = 0;
  std::vector<double> t_grid;
  std::vector<double> gammas;
  std::vector<std::vector<double>> expectation;  // [gamma][t]
  std::vector<std::vector<double>> error_bound;  // [gamma][t]
  std::vector<MomentFit> fits;
};

MomentTable moments(const PathTree& tree, const Annotations& ann, std::int64_t x0_leaf,
                    const std::vector<double>& t_grid, const std::vector<double>& gammas,
                    double beta, double fit_rel_error_cap = 1e-9);

}  // namespace kbdiag
