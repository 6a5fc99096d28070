#pragma once
#include <string>

#include "kbdiag/annotations.hpp"

namespace kbdiag {

// Leaves rooted at different vertices lie in different components of the
// boundary. The weight metric assigns such pairs distance 1; the intrinsic
// metric does not define them, so the handling is a run-wide choice:
//   Separate    - cross-component distance is +infinity (components audited
//                 independently); the default.
//   VirtualRoot - cross-component distance is max_v(-1/lambda(v)) over the
//                 level-0 cylinders, which keeps the ultrametric inequality.
enum class CrossComponentPolicy { Separate, VirtualRoot };

// d_w(x, y): 0 when x = y, 1 across components, else the weight of the
// longest common prefix.
double d_w(const PathTree& tree, const WeightLayer& weight, std::int64_t leaf_x,
           std::int64_t leaf_y);

// Intrinsic metric d_s(x, y) = -1 / lambda(x ^ y). Requires s < 2 (the range
// where the eigenvalue chain is strictly decreasing).
double d_s(const PathTree& tree, const Annotations& ann, std::int64_t leaf_x,
           std::int64_t leaf_y, CrossComponentPolicy policy = CrossComponentPolicy::Separate);

// A metric ball around a leaf. Balls of an ultrametric are cylinders except
// at the extremes: radius above the diameter (whole space) or below the
// resolution of the materialized tree (the leaf cylinder, flagged).
struct Ball {
  bool whole_space = false;
  bool below_resolution = false;
  NodeId node;
};

double ball_measure(const PathTree& tree, const MeasureLayer& measure, const Ball& ball);

// Open ball {y : d_w(x, y) < r}.
Ball ball_dw(const PathTree& tree, const WeightLayer& weight, std::int64_t leaf, double r);

// Open ball {y : d_s(x, y) < a}; cylinder [x(0,n)] with
// -1/lambda(x(0,n)) < a <= -1/lambda(x(0,n-1)).
Ball ball_ds(const PathTree& tree, const Annotations& ann, std::int64_t leaf, double a,
             CrossComponentPolicy policy = CrossComponentPolicy::Separate);

struct VdReport {
  std::string metric_name;
  double empirical_constant = 0.0;   // max observed mu(B(x,2r)) / mu(B(x,r))
  double theoretical_bound = 0.0;    // closed-form bound (d_w); 0 = none audited
  std::string grid_description;
  bool pass = false;
  std::int64_t cells_checked = 0;
  std::int64_t cells_skipped = 0;    // radius below tree resolution
  // intrinsic-metric route constants
  double c1_mu_ratio_min = 0.0;      // min over nodes of mu[child]/mu[parent]
  double c2_lambda_ratio_max = 0.0;  // max over chains of lambda_n / lambda_{n+lag}
  int lambda_lag = 1;
};

// Doubling audit for d_w. Radii are taken from the chain weights of each
// center (both sides of every step, and seams where the doubled radius
// crosses a step), plus any extra user radii. The closed-form bound is
// rho^(-R) * Y with R = -delta ln2 / ln rho - 2 and Y = max kappa_v / kappa_w.
VdReport vd_audit_dw(const PathTree& tree, const MeasureLayer& measure,
                     const WeightLayer& weight,
                     const std::vector<double>& extra_radii = {},
                     std::int64_t max_centers = 1 << 20);

// Doubling audit for d_s (s < 2). No closed-form constant is claimed; the
// report carries the measure-ratio and eigenvalue-ratio constants alongside
// the empirical doubling maximum.
VdReport vd_audit_ds(const PathTree& tree, const Annotations& ann,
                     const std::vector<double>& extra_radii = {},
                     std::int64_t max_centers = 1 << 20, int lambda_lag = 1,
                     CrossComponentPolicy policy = CrossComponentPolicy::Separate);

}  // namespace kbdiag
