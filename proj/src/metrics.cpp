#include "kbdiag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kbdiag/parallel.hpp"

namespace kbdiag {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double virtual_root_diameter(const Annotations& ann) {
  const auto& lam0 = ann.spectral().lambda[0];
  double d = 0.0;
  for (double l : lam0) d = std::max(d, -1.0 / l);
  return d;
}

// centers are stride-sampled when the leaf count exceeds the cap
std::vector<std::int64_t> pick_centers(const PathTree& tree, std::int64_t max_centers) {
  const std::int64_t n = tree.leaf_count();
  std::vector<std::int64_t> centers;
  if (n <= max_centers) {
    centers.resize(n);
    for (std::int64_t i = 0; i < n; ++i) centers[i] = i;
  } else {
    const std::int64_t stride = (n + max_centers - 1) / max_centers;
    for (std::int64_t i = 0; i < n; i += stride) centers.push_back(i);
  }
  return centers;
}
}  // namespace

double d_w(const PathTree& tree, const WeightLayer& weight, std::int64_t leaf_x,
           std::int64_t leaf_y) {
  if (leaf_x == leaf_y) return 0.0;
  auto prefix = common_prefix(tree, leaf_x, leaf_y);
  if (!prefix) return 1.0;
  return weight.w[prefix->level][prefix->idx];
}

double d_s(const PathTree& tree, const Annotations& ann, std::int64_t leaf_x,
           std::int64_t leaf_y, CrossComponentPolicy policy) {
  if (ann.s() >= 2.0)
    throw ParamOutOfRange("intrinsic metric requires s < 2 (got s = " + std::to_string(ann.s()) + ")");
  if (leaf_x == leaf_y) return 0.0;
  auto prefix = common_prefix(tree, leaf_x, leaf_y);
  if (!prefix)
    return policy == CrossComponentPolicy::Separate ? kInf : virtual_root_diameter(ann);
  return -1.0 / ann.lambda(prefix->level, prefix->idx);
}

double ball_measure(const PathTree& tree, const MeasureLayer& measure, const Ball& ball) {
  if (ball.whole_space) return 1.0;
  (void)tree;
  return measure.mu[ball.node.level][ball.node.idx];
}

Ball ball_dw(const PathTree& tree, const WeightLayer& weight, std::int64_t leaf, double r) {
  Ball out;
  if (r > 1.0) {
    out.whole_space = true;
    return out;
  }
  const auto chain = tree.chain(leaf);
  for (int n = 0; n <= tree.depth(); ++n) {
    if (weight.w[n][chain[n]] < r) {
      out.node = NodeId{n, chain[n]};
      return out;
    }
  }
  out.node = NodeId{tree.depth(), leaf};
  out.below_resolution = true;
  return out;
}

Ball ball_ds(const PathTree& tree, const Annotations& ann, std::int64_t leaf, double a,
             CrossComponentPolicy policy) {
  if (ann.s() >= 2.0) throw ParamOutOfRange("intrinsic-metric balls require s < 2");
  Ball out;
  if (policy == CrossComponentPolicy::VirtualRoot && a > virtual_root_diameter(ann)) {
    out.whole_space = true;
    return out;
  }
  const auto chain = tree.chain(leaf);
  for (int n = 0; n <= tree.depth(); ++n) {
    if (-1.0 / ann.lambda(n, chain[n]) < a) {
      out.node = NodeId{n, chain[n]};
      return out;
    }
  }
  out.node = NodeId{tree.depth(), leaf};
  out.below_resolution = true;
  return out;
}

VdReport vd_audit_dw(const PathTree& tree, const MeasureLayer& measure,
                     const WeightLayer& weight, const std::vector<double>& extra_radii,
                     std::int64_t max_centers) {
  VdReport report;
  report.metric_name = "d_w";
  const auto& pd = tree.perron();
  const double rho = pd.rho_product;
  const double Y = pd.kappa_max() / pd.kappa_min();
  const double R = -weight.delta * std::log(2.0) / std::log(rho) - 2.0;
  report.theoretical_bound = std::pow(rho, -R) * Y;

  const auto centers = pick_centers(tree, max_centers);
  report.grid_description =
      "chain-step radii (both sides, plus doubling seams) over " +
      std::to_string(centers.size()) + " centers";

  const double up = 1.0 + 1e-9, dn = 1.0 - 1e-9;
  std::vector<double> worst(centers.size(), 1.0);
  std::vector<std::int64_t> checked(centers.size(), 0), skipped(centers.size(), 0);
  par_for(static_cast<std::int64_t>(centers.size()), [&](std::int64_t ci) {
    const std::int64_t x = centers[ci];
    const auto chain = tree.chain(x);
    std::vector<double> radii(extra_radii);
    for (int n = 0; n <= tree.depth(); ++n) {
      const double w = weight.w[n][chain[n]];
      radii.push_back(w * up);
      radii.push_back(w * dn);
      radii.push_back(0.5 * w * up);
      radii.push_back(0.5 * w * dn);
    }
    radii.push_back(up);
    radii.push_back(dn);
    radii.push_back(0.5 * up);
    radii.push_back(0.5 * dn);
    for (double r : radii) {
      if (!(r > 0.0)) continue;
      const Ball small = ball_dw(tree, weight, x, r);
      if (small.below_resolution) {
        ++skipped[ci];
        continue;
      }
      const Ball big = ball_dw(tree, weight, x, 2.0 * r);
      const double ratio =
          ball_measure(tree, measure, big) / ball_measure(tree, measure, small);
      worst[ci] = std::max(worst[ci], ratio);
      ++checked[ci];
    }
  });
  for (std::size_t i = 0; i < centers.size(); ++i) {
    report.empirical_constant = std::max(report.empirical_constant, worst[i]);
    report.cells_checked += checked[i];
    report.cells_skipped += skipped[i];
  }
  report.pass = report.empirical_constant <= report.theoretical_bound + 1e-9;
  return report;
}

VdReport vd_audit_ds(const PathTree& tree, const Annotations& ann,
                     const std::vector<double>& extra_radii, std::int64_t max_centers,
                     int lambda_lag, CrossComponentPolicy policy) {
  if (ann.s() >= 2.0) throw ParamOutOfRange("doubling audit for the intrinsic metric requires s < 2");
  VdReport report;
  report.metric_name = "d_s";
  report.lambda_lag = lambda_lag;

  // route constants: measure ratio along edges, eigenvalue ratio along chains
  double c1 = kInf;
  for (int n = 1; n <= tree.depth(); ++n)
    for (std::int64_t i = 0; i < tree.level_size(n); ++i)
      c1 = std::min(c1, ann.mu(n, i) / ann.mu(n - 1, tree.parent_of(n, i)));
  double c2 = 0.0;
  for (int n = lambda_lag; n <= tree.depth(); ++n)
    for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
      std::int64_t anc = i;
      for (int l = n; l > n - lambda_lag; --l) anc = tree.parent_of(l, anc);
      c2 = std::max(c2, ann.lambda(n - lambda_lag, anc) / ann.lambda(n, i));
    }
  report.c1_mu_ratio_min = c1;
  report.c2_lambda_ratio_max = c2;

  const auto centers = pick_centers(tree, max_centers);
  report.grid_description = "eigenvalue-step radii (both sides, plus doubling seams) over " +
                            std::to_string(centers.size()) + " centers";
  const double up = 1.0 + 1e-9, dn = 1.0 - 1e-9;
  std::vector<double> worst(centers.size(), 1.0);
  std::vector<std::int64_t> checked(centers.size(), 0), skipped(centers.size(), 0);
  par_for(static_cast<std::int64_t>(centers.size()), [&](std::int64_t ci) {
    const std::int64_t x = centers[ci];
    const auto chain = tree.chain(x);
    std::vector<double> radii(extra_radii);
    for (int n = 0; n <= tree.depth(); ++n) {
      const double d = -1.0 / ann.lambda(n, chain[n]);
      radii.push_back(d * up);
      radii.push_back(d * dn);
      radii.push_back(0.5 * d * up);
      radii.push_back(0.5 * d * dn);
    }
    for (double a : radii) {
      if (!(a > 0.0)) continue;
      const Ball small = ball_ds(tree, ann, x, a, policy);
      if (small.below_resolution) {
        ++skipped[ci];
        continue;
      }
      const Ball big = ball_ds(tree, ann, x, 2.0 * a, policy);
      const double ratio = ball_measure(tree, ann.measure(), big) /
                           ball_measure(tree, ann.measure(), small);
      worst[ci] = std::max(worst[ci], ratio);
      ++checked[ci];
    }
  });
  for (std::size_t i = 0; i < centers.size(); ++i) {
    report.empirical_constant = std::max(report.empirical_constant, worst[i]);
    report.cells_checked += checked[i];
    report.cells_skipped += skipped[i];
  }
  report.theoretical_bound = 0.0;
  report.pass = std::isfinite(report.empirical_constant) && report.empirical_constant >= 1.0;
  return report;
}

}  // namespace kbdiag
