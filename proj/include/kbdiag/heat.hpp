#pragma once
#include <limits>
#include <string>
#include <vector>

#include "kbdiag/metrics.hpp"
#include "kbdiag/spectral.hpp"

namespace kbdiag {

struct HeatKernelEval {
  double t = 0.0;
  std::int64_t x = 0, y = 0;
  double value = 0.0;
  int truncation_level = 0;
  double tail_bound = 0.0;  // bound on the omitted on-diagonal terms; 0 when exact
};

struct HeatOptions {
  int level = -1;  // truncation level for on-diagonal sums; -1 = tree depth
  // throw TailTooLarge when the on-diagonal tail bound exceeds this
  double max_tail = std::numeric_limits<double>::infinity();
};

// Telescoping closed form along the prefix chain of x ^ y.
//   x == y : 1/mu_0 + sum_{n<L} (1/mu_{n+1} - 1/mu_n) e^{lambda_n t}, plus a
//            certified bound on the omitted n >= L terms;
//   x != y : sum_{n=0}^{|x^y|} (1/mu_n)(e^{lambda_{n-1} t} - e^{lambda_n t})
//            with lambda_{-1} = 0 — an exact finite sum;
//   different components: 0.
// Requires t > 0 and s < 2 + delta (the eigenvalues must diverge for the
// on-diagonal series to converge).
HeatKernelEval heat_closed(const PathTree& tree, const Annotations& ann, double t,
                           std::int64_t x, std::int64_t y, HeatOptions opts = {});

// Value of the depth-m semigroup kernel between two level-m cylinders.
// This is the (a, b) entry of exp(t M) divided by mu[b] for the level-m
// generator M; computed by the same telescoping sums, exactly.
double heat_matrix_kernel(const PathTree& tree, const Annotations& ann, double t, int m,
                          std::int64_t a, std::int64_t b);

// Eigen-expansion route: component indicators plus the mean-zero vectors of
// the basis with |gamma| < basis.level. Agrees with heat_closed at matched
// truncation.
double heat_eigen(const PathTree& tree, const Annotations& ann, const EigenBasis& basis,
                  double t, std::int64_t x, std::int64_t y);

// (p_t f) for f constant on depth-m cylinders (f given per level-m node).
// Exact: the depth-m cylinder functions are an invariant subspace.
std::vector<double> semigroup_apply(const PathTree& tree, const Annotations& ann, double t,
                                    int m, const std::vector<double>& f);

// Deterministic enumeration of same-component leaf pairs (i < j),
// stride-sampled when the total exceeds the cap.
std::vector<std::pair<std::int64_t, std::int64_t>> same_component_leaf_pairs(
    const PathTree& tree, std::int64_t max_pairs);

struct EstimateAudit {
  std::string id;
  std::string grid_description;
  double worst_margin = 0.0;  // most negative relative slack observed
  double c1 = 0.0, c2 = 0.0;  // comparison-ratio band for two-sided audits
  bool pass = false;
  std::int64_t cells_checked = 0;
  std::int64_t cells_skipped = 0;
};

// Pointwise bounds (s < 2):
//  (a) p(t,x,x) >= (1/e) / mu(B_s(x,t))        for every leaf and t;
//  (b) p(t,x,y) <= 1 / (d_s(x,y) mu[x ^ y])    for 0 < t <= d_s(x,y).
// (a) uses the truncated on-diagonal value, which can only under-estimate
// the left side, so a pass is sound. Cells whose ball is below tree
// resolution are skipped and counted.
EstimateAudit audit_pbound(const PathTree& tree, const Annotations& ann,
                           const std::vector<double>& t_grid,
                           std::int64_t max_pairs = 1 << 22);

// Two-sided comparison p(t,x,y) against
//   t / (d_s(x,y) mu[x ^ y])   if t <= d_s(x,y),
//   1 / mu(B_s(x,t))           otherwise;
// reports the min/max ratio band over the grid. Band stability under depth
// refinement is the caller's check.
EstimateAudit audit_asymp(const PathTree& tree, const Annotations& ann,
                          const std::vector<double>& t_grid,
                          std::int64_t max_pairs = 1 << 22);

struct FitReport {
  bool ok = false;
  std::string reason;
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::int64_t points = 0;
  // candidate exponents and |slope - candidate|
  double candidate_a = 0.0, distance_a = 0.0;  // 2 + delta - s
  double candidate_b = 0.0, distance_b = 0.0;  // (2 + delta - s) / delta
};

// Least-squares slope of log d_s against log d_w over same-component leaf
// pairs (1 < s < 2 + delta). Needs at least two distinct prefix depths.
FitReport regress_exponent(const PathTree& tree, const Annotations& ann,
                           std::int64_t max_pairs = 1 << 22);

}  // namespace kbdiag
