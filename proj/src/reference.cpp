#include "kbdiag/reference.hpp"

#include <algorithm>
#include <cmath>

namespace kbdiag::ref {

LevelArrays measure(const PathTree& tree) {
  const auto& kappa = tree.perron().kappa;
  const auto& rho = tree.perron().rho;
  LevelArrays mu(tree.depth() + 1);
  mu[0].resize(tree.level_size(0));
  for (std::int64_t v = 0; v < tree.level_size(0); ++v) mu[0][v] = kappa[v];
  for (int n = 1; n <= tree.depth(); ++n) {
    const double r = rho[tree.graph().matrix_index_for_level(n - 1) - 1];
    mu[n].resize(tree.level_size(n));
    for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
      const std::int64_t p = tree.parent_of(n, i);
      mu[n][i] = mu[n - 1][p] * kappa[tree.source_of(n, i)] /
                 (r * kappa[tree.source_of(n - 1, p)]);
    }
  }
  return mu;
}

LevelArrays weight(const PathTree& tree, const LevelArrays& mu, double delta) {
  const auto& kappa = tree.perron().kappa;
  LevelArrays w(tree.depth() + 1);
  for (int n = 0; n <= tree.depth(); ++n) {
    w[n].resize(tree.level_size(n));
    for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
      const double k = kappa[tree.source_of(n, i)];
      w[n][i] = std::pow(mu[n][i] / k, 1.0 / delta) * k;
    }
  }
  return w;
}

LevelArrays G_pairwise(const PathTree& tree, const LevelArrays& mu, const LevelArrays& w,
                       double s) {
  LevelArrays G(tree.depth() + 1);
  for (int n = 0; n < tree.depth(); ++n) {
    G[n].resize(tree.level_size(n));
    for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
      double pair_sum = 0.0;
      for (const auto& [e1, e2] : ext1_pairs(tree, NodeId{n, i}))
        pair_sum += mu[n + 1][e1] * mu[n + 1][e2];
      G[n][i] = 0.5 * std::pow(w[n][i], 2.0 - s) * pair_sum;
    }
  }
  return G;
}

LevelArrays lambda_prefix_sum(const PathTree& tree, const LevelArrays& mu,
                              const LevelArrays& G) {
  const int max_level = static_cast<int>(G.size()) - 1;
  LevelArrays lam(max_level + 1);
  for (int n = 0; n <= max_level; ++n) {
    if (G[n].empty()) continue;
    lam[n].resize(tree.level_size(n));
    for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
      std::vector<std::int64_t> chain(n + 1);
      chain[n] = i;
      for (int l = n; l > 0; --l) chain[l - 1] = tree.parent_of(l, chain[l]);
      double sum = 0.0, comp = 0.0;  // Kahan
      for (int j = 0; j < n; ++j) {
        const double term = (mu[j + 1][chain[j + 1]] - mu[j][chain[j]]) / G[j][chain[j]];
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
      }
      lam[n][i] = sum - mu[n][i] / G[n][i];
    }
  }
  return lam;
}

double lambda_route_gap(const PathTree& tree, const Annotations& ann) {
  const auto mu = measure(tree);
  const auto w = weight(tree, mu, ann.delta());
  auto G = G_pairwise(tree, mu, w, ann.s());
  // deepest level: reuse the production pair-sum value so the walk can end
  // at the leaves; the summands above it still come from the explicit pairs
  G[tree.depth()] = ann.spectral().G[tree.depth()];
  const auto lam = lambda_prefix_sum(tree, mu, G);
  double worst = 0.0;
  for (int n = 0; n <= tree.depth(); ++n)
    for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
      const double a = ann.lambda(n, i);
      const double b = lam[n][i];
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
    }
  return worst;
}

std::vector<std::int64_t> ball_members_dw(const PathTree& tree, const WeightLayer& weight,
                                          std::int64_t leaf, double r) {
  std::vector<std::int64_t> members;
  for (std::int64_t y = 0; y < tree.leaf_count(); ++y)
    if (d_w(tree, weight, leaf, y) < r) members.push_back(y);
  return members;
}

double doubling_constant_dw(const PathTree& tree, const MeasureLayer& measure,
                            const WeightLayer& weight, const std::vector<double>& radii) {
  double worst = 1.0;
  for (std::int64_t x = 0; x < tree.leaf_count(); ++x)
    for (double r : radii) {
      double small = 0.0, big = 0.0;
      bool small_empty = true;
      for (std::int64_t y = 0; y < tree.leaf_count(); ++y) {
        const double d = d_w(tree, weight, x, y);
        const double my = measure.mu[tree.depth()][y];
        if (d < r) {
          small += my;
          small_empty = false;
        }
        if (d < 2.0 * r) big += my;
      }
      if (!small_empty) worst = std::max(worst, big / small);
    }
  return worst;
}

double dirichlet_via_generator(const PathTree& tree, const Annotations& ann, int m,
                               const std::vector<double>& f, const std::vector<double>& g) {
  const Eigen::MatrixXd gen = delta_s_matrix(tree, ann, m);
  const std::int64_t n = gen.rows();
  double acc = 0.0;
  for (std::int64_t a = 0; a < n; ++a) {
    double mg = 0.0;
    for (std::int64_t b = 0; b < n; ++b) mg += gen(a, b) * g[b];
    acc += f[a] * (-mg) * ann.mu(m, a);
  }
  return acc;
}

double heat_kernel_identity(const PathTree& tree, const Annotations& ann, int m, double t,
                            std::int64_t x, std::int64_t y) {
  const int depth = tree.depth();
  if (tree.root_of(depth, x) != tree.root_of(depth, y)) return 0.0;
  double acc = 1.0 / ann.mu(0, tree.ancestor(x, 0));
  for (int l = 0; l < m; ++l) {
    const std::int64_t gx = tree.ancestor(x, l);
    if (gx != tree.ancestor(y, l)) break;
    const std::int64_t cx = tree.ancestor(x, l + 1);
    const std::int64_t cy = tree.ancestor(y, l + 1);
    double kernel = -1.0 / ann.mu(l, gx);
    if (cx == cy) kernel += 1.0 / ann.mu(l + 1, cx);
    acc += std::exp(ann.lambda(l, gx) * t) * kernel;
  }
  return acc;
}

double moment_by_leaves(const PathTree& tree, const Annotations& ann, std::int64_t x0_leaf,
                        double t, double exponent) {
  double acc = 0.0;
  for (std::int64_t y = 0; y < tree.leaf_count(); ++y) {
    if (y == x0_leaf) continue;
    const double d = d_w(tree, ann.weight(), x0_leaf, y);
    const double p = heat_closed(tree, ann, t, x0_leaf, y).value;
    acc += std::pow(d, exponent) * p * ann.mu(tree.depth(), y);
  }
  return acc;
}

}  // namespace kbdiag::ref
