#pragma once
#include <vector>

#include "kbdiag/path_tree.hpp"

namespace kbdiag {

struct WeightParams {
  double delta = 0.5;  // must lie in the open interval (0, 1)
};

struct SpectralParams {
  double s = 1.0;
  double delta = 0.5;
};

using LevelArrays = std::vector<std::vector<double>>;  // [level][node index]

// Cylinder measure: mu[path] = prefactor(level) * kappa_{source}, where the
// prefactor divides by the spectral radius of each edge level passed. Log
// values are kept alongside so deep levels stay usable after the plain
// doubles underflow.
struct MeasureLayer {
  std::vector<double> prefactor;
  std::vector<double> log_prefactor;
  LevelArrays mu;
  LevelArrays log_mu;
  std::vector<double> level_min_mu;
};

// Weight: w[path] = prefactor(level)^(1/delta)-style decay * kappa_{source};
// exponent pattern follows the same cycling of spectral radii as mu.
struct WeightLayer {
  double delta = 0.0;
  std::vector<double> prefactor;
  std::vector<double> log_prefactor;
  LevelArrays w;
  LevelArrays log_w;
  std::vector<double> level_max_w;
};

// G[path] = 1/2 * w^(2-s) * sum over ordered pairs of distinct child edges
// (e, e') of mu[path e] mu[path e']. The pair sum collapses to
// mu^2 * (1 - Q_i(v) / (rho_i kappa_v)^2) with Q_i(v) = sum_w A_i(v,w) kappa_w^2,
// so it is available at every level including the deepest one.
//
// lambda[path] follows the telescoping recurrence
//   lambda(root v)  = -mu[v] / G[v]
//   lambda(child c) = lambda(parent) + mu[c] * (1/G(parent) - 1/G(c)).
struct SpectralLayer {
  double s = 0.0;
  LevelArrays G;
  LevelArrays log_G;
  LevelArrays lambda;
  std::vector<double> level_min_lambda;  // most negative per level
  std::vector<double> level_max_lambda;  // least negative per level
};

// Jump kernel J[path] = w^(s-2) / (pair sum); J * 2G = 1 up to rounding.
struct JumpLayer {
  double s = 0.0;
  LevelArrays J;
};

MeasureLayer annotate_measure(const PathTree& tree);
WeightLayer annotate_weight(const PathTree& tree, const MeasureLayer& measure,
                            WeightParams params);
// Throws NotBranching if any (level, vertex) in range has < 2 child edges.
SpectralLayer annotate_spectral(const PathTree& tree, const MeasureLayer& measure,
                                const WeightLayer& weight, double s);
JumpLayer annotate_jump(const PathTree& tree, const MeasureLayer& measure,
                        const WeightLayer& weight, double s);

// Everything the downstream modules need, bundled.
class Annotations {
 public:
  Annotations(const PathTree& tree, SpectralParams params);

  const PathTree& tree() const { return *tree_; }
  double delta() const { return weight_.delta; }
  double s() const { return spectral_.s; }

  double mu(int level, std::int64_t idx) const { return measure_.mu[level][idx]; }
  double log_mu(int level, std::int64_t idx) const { return measure_.log_mu[level][idx]; }
  double w(int level, std::int64_t idx) const { return weight_.w[level][idx]; }
  double G(int level, std::int64_t idx) const { return spectral_.G[level][idx]; }
  double lambda(int level, std::int64_t idx) const { return spectral_.lambda[level][idx]; }
  double jump(int level, std::int64_t idx) const { return jump_.J[level][idx]; }

  const MeasureLayer& measure() const { return measure_; }
  const WeightLayer& weight() const { return weight_; }
  const SpectralLayer& spectral() const { return spectral_; }
  const JumpLayer& jump_layer() const { return jump_; }

 private:
  const PathTree* tree_;
  MeasureLayer measure_;
  WeightLayer weight_;
  SpectralLayer spectral_;
  JumpLayer jump_;
};

// Per-level sum of w^s and the level-over-level increment ratio, one row per
// level, for each exponent in s_grid. Divergence of the partial sums as the
// ratio crosses 1 brackets the zeta-function abscissa near delta.
struct ZetaRow {
  double s = 0.0;
  std::vector<double> level_increment;
  std::vector<double> increment_ratio;  // increment[n+1] / increment[n]
  double partial_sum = 0.0;
};
std::vector<ZetaRow> zeta_partial(const PathTree& tree, const WeightLayer& weight,
                                  const std::vector<double>& s_grid);

}  // namespace kbdiag
