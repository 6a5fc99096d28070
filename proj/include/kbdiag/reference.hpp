#pragma once
#include <vector>

#include "kbdiag/heat.hpp"
#include "kbdiag/jump.hpp"

// Serial reference implementations. Each one recomputes a quantity by a
// different route than the production kernels (recursion instead of closed
// forms, explicit pair enumeration instead of collapsed sums, direct
// prefix-sum eigenvalues instead of the telescoping recurrence), so tests
// and the benchmark can compare the two paths.
namespace kbdiag::ref {

// mu by the top-down edge recurrence mu[child] = mu[parent] * kappa_w / (rho_i kappa_v)
LevelArrays measure(const PathTree& tree);

// w from mu via w = (mu / kappa)^(1/delta) * kappa
LevelArrays weight(const PathTree& tree, const LevelArrays& mu, double delta);

// G by enumerating the ordered pairs of materialized child edges
// (levels 0 .. depth-1 only; the deepest level has no materialized children)
LevelArrays G_pairwise(const PathTree& tree, const LevelArrays& mu, const LevelArrays& w,
                       double s);

// eigenvalues by the direct prefix sum
//   sum_{j<n} (mu_{j+1} - mu_j)/G_j - mu_n/G_n
// with compensated accumulation along each root-to-node walk
LevelArrays lambda_prefix_sum(const PathTree& tree, const LevelArrays& mu,
                              const LevelArrays& G);

// largest relative gap between the production lambda and the prefix-sum route
double lambda_route_gap(const PathTree& tree, const Annotations& ann);

// brute-force d_w ball membership: all leaves within distance < r of x
std::vector<std::int64_t> ball_members_dw(const PathTree& tree, const WeightLayer& weight,
                                          std::int64_t leaf, double r);

// brute-force doubling constant for d_w over every leaf and the given radii
double doubling_constant_dw(const PathTree& tree, const MeasureLayer& measure,
                            const WeightLayer& weight, const std::vector<double>& radii);

// <f, -M g> in L^2(mu) through the assembled level-m generator
double dirichlet_via_generator(const PathTree& tree, const Annotations& ann, int m,
                               const std::vector<double>& f, const std::vector<double>& g);

// eigen-expansion kernel via the child-indicator identity
//   sum_j psi_j(x) psi_j(y) = sum_e chi_[ge](x) chi_[ge](y)/mu[ge] - chi_[g](x) chi_[g](y)/mu[g]
// (no Gram-Schmidt involved)
double heat_kernel_identity(const PathTree& tree, const Annotations& ann, int m, double t,
                            std::int64_t x, std::int64_t y);

// displacement moment by explicit summation over every leaf
double moment_by_leaves(const PathTree& tree, const Annotations& ann, std::int64_t x0_leaf,
                        double t, double exponent);

}  // namespace kbdiag::ref
