#include "kbdiag/heat.hpp"

#include <algorithm>
#include <cmath>

#include "kbdiag/parallel.hpp"

namespace kbdiag {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_heat_params(const Annotations& ann, double t) {
  if (!(t > 0.0)) throw ParamOutOfRange("heat kernel requires t > 0");
  if (!(ann.s() < 2.0 + ann.delta()))
    throw ParamOutOfRange("heat kernel requires s < 2 + delta");
}

// Bound on sum_{n >= L} (1/mu_{n+1} - 1/mu_n) e^{lambda_n t} along any chain.
// Uses lambda_n <= -R(n) with R(n) = c_m * kmin^{max(0,s-2)} * pw(n)^{s-2} / pm(n),
// where pw/pm are the pure radius products of the weight/measure prefactors
// (extendable past the materialized depth) and c_m = 2 m_max / (m_max - 1)
// comes from the Cauchy-Schwarz floor of the child pair sum. R grows
// geometrically exactly when s < 2 + delta.
double on_diag_tail_bound(const PathTree& tree, const Annotations& ann, int L, double t) {
  const auto& rho = tree.perron().rho;
  const double s = ann.s();
  const double delta = ann.delta();
  const double kmin = tree.perron().kappa_min();
  const double m_max = static_cast<double>(tree.graph().max_row_sum());
  const double expo = (2.0 - s) / delta + 1.0;  // per-level growth of log R
  double log_R = std::log(2.0 * m_max / (m_max - 1.0)) +
                 std::max(0.0, s - 2.0) * std::log(kmin);
  double log_pm = 0.0;
  auto log_rho_at = [&](int level) {
    return std::log(rho[tree.graph().matrix_index_for_level(level) - 1]);
  };
  for (int j = 0; j < L; ++j) {
    const double lr = log_rho_at(j);
    log_pm -= lr;
    log_R += expo * lr;
  }

  double total = 0.0;
  double prev_lt = kInf;
  bool decaying = false;
  for (int n = L; n < L + 200000; ++n) {
    const double lr = log_rho_at(n);
    const double log_pm_next = log_pm - lr;
    const double R = std::exp(log_R);
    const double lt = -log_pm_next - std::log(kmin) - R * t;
    const double term = std::exp(lt);
    total += term;
    const double ratio = std::exp(lt - prev_lt);
    if (prev_lt != kInf && ratio < 0.5) decaying = true;
    if (decaying && (term == 0.0 || term < 1e-18 * total)) {
      // ratios keep shrinking once R t dominates, so a half-geometric
      // remainder cushion is valid
      return total + term;
    }
    prev_lt = lt;
    log_pm = log_pm_next;
    log_R += expo * lr;
  }
  return kInf;  // could not certify within the iteration cap
}

}  // namespace

HeatKernelEval heat_closed(const PathTree& tree, const Annotations& ann, double t,
                           std::int64_t x, std::int64_t y, HeatOptions opts) {
  require_heat_params(ann, t);
  const int depth = tree.depth();
  const int L = opts.level < 0 ? depth : opts.level;
  if (L < 1 || L > depth) throw ParamOutOfRange("truncation level must lie in [1, depth]");

  HeatKernelEval eval;
  eval.t = t;
  eval.x = x;
  eval.y = y;
  eval.truncation_level = L;

  std::int64_t prefix_level = depth;  // x == y: the whole chain is shared
  if (x != y) {
    const auto prefix = common_prefix(tree, x, y);
    if (!prefix) return eval;  // different components: kernel is 0, exactly
    prefix_level = prefix->level;
  }

  const auto chain = tree.chain(x);
  if (prefix_level >= L) {
    // on-diagonal (at this truncation both points share the depth-L cylinder)
    double acc = 1.0 / ann.mu(0, chain[0]);
    for (int n = 0; n < L; ++n)
      acc += (1.0 / ann.mu(n + 1, chain[n + 1]) - 1.0 / ann.mu(n, chain[n])) *
             std::exp(ann.lambda(n, chain[n]) * t);
    eval.value = acc;
    eval.tail_bound = on_diag_tail_bound(tree, ann, L, t);
    if (eval.tail_bound > opts.max_tail) throw TailTooLarge(eval.tail_bound, opts.max_tail);
    return eval;
  }

  // exact finite telescoping sum over the common prefix chain
  double acc = 0.0;
  double prev_exp = 1.0;  // e^{lambda_{-1} t} with lambda_{-1} = 0
  for (std::int64_t n = 0; n <= prefix_level; ++n) {
    const double cur_exp = std::exp(ann.lambda(static_cast<int>(n), chain[n]) * t);
    acc += (prev_exp - cur_exp) / ann.mu(static_cast<int>(n), chain[n]);
    prev_exp = cur_exp;
  }
  eval.value = acc;
  eval.tail_bound = 0.0;
  return eval;
}

double heat_matrix_kernel(const PathTree& tree, const Annotations& ann, double t, int m,
                          std::int64_t a, std::int64_t b) {
  require_heat_params(ann, t);
  if (tree.root_of(m, a) != tree.root_of(m, b)) return 0.0;

  std::vector<std::int64_t> chain(m + 1);
  chain[m] = a;
  for (int l = m; l > 0; --l) chain[l - 1] = tree.parent_of(l, chain[l]);

  int prefix_level = m;
  if (a != b) {
    std::int64_t pa = a, pb = b;
    int l = m;
    while (pa != pb) {
      pa = tree.parent_of(l, pa);
      pb = tree.parent_of(l, pb);
      --l;
    }
    prefix_level = l;
  }

  if (prefix_level == m) {
    double acc = 1.0 / ann.mu(0, chain[0]);
    for (int n = 0; n < m; ++n)
      acc += (1.0 / ann.mu(n + 1, chain[n + 1]) - 1.0 / ann.mu(n, chain[n])) *
             std::exp(ann.lambda(n, chain[n]) * t);
    return acc;
  }
  double acc = 0.0;
  double prev_exp = 1.0;
  for (int n = 0; n <= prefix_level; ++n) {
    const double cur_exp = std::exp(ann.lambda(n, chain[n]) * t);
    acc += (prev_exp - cur_exp) / ann.mu(n, chain[n]);
    prev_exp = cur_exp;
  }
  return acc;
}

double heat_eigen(const PathTree& tree, const Annotations& ann, const EigenBasis& basis,
                  double t, std::int64_t x, std::int64_t y) {
  require_heat_params(ann, t);
  const int depth = tree.depth();
  if (tree.root_of(depth, x) != tree.root_of(depth, y)) return 0.0;

  double acc = 1.0 / ann.mu(0, tree.ancestor(x, 0));
  int top = basis.level - 1;
  if (x != y) {
    const auto prefix = common_prefix(tree, x, y);
    top = std::min<int>(top, prefix->level);
  }
  const auto chain = tree.chain(x);
  for (int l = 0; l <= top; ++l) {
    const std::int64_t i = chain[l];
    const std::int64_t first = basis.first_vector[l][i];
    const std::int64_t count = tree.child_count_of(l, i) - 1;
    const double decay = std::exp(ann.lambda(l, i) * t);
    for (std::int64_t j = first; j < first + count; ++j) {
      const auto& vec = basis.vectors[j];
      acc += decay * evaluate_basis_vector(tree, vec, x) * evaluate_basis_vector(tree, vec, y);
    }
  }
  return acc;
}

std::vector<double> semigroup_apply(const PathTree& tree, const Annotations& ann, double t,
                                    int m, const std::vector<double>& f) {
  if (m < 1 || m > tree.depth()) throw ParamOutOfRange("semigroup level must lie in [1, depth]");
  const std::int64_t n = tree.level_size(m);
  if (static_cast<std::int64_t>(f.size()) != n)
    throw ParamOutOfRange("function must have one value per depth-m cylinder");
  if (t == 0.0) return f;
  std::vector<double> out(n);
  par_for(n, [&](std::int64_t a) {
    double acc = 0.0;
    for (std::int64_t b = 0; b < n; ++b)
      acc += heat_matrix_kernel(tree, ann, t, m, a, b) * f[b] * ann.mu(m, b);
    out[a] = acc;
  });
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> same_component_leaf_pairs(
    const PathTree& tree, std::int64_t max_pairs) {
  const std::int64_t n = tree.leaf_count();
  const int depth = tree.depth();
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  const std::int64_t all = n * (n - 1) / 2;
  const std::int64_t stride = std::max<std::int64_t>(1, all / std::max<std::int64_t>(1, max_pairs));
  std::int64_t counter = 0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j) {
      if (tree.root_of(depth, i) != tree.root_of(depth, j)) continue;
      if (counter++ % stride == 0) pairs.emplace_back(i, j);
    }
  return pairs;
}

EstimateAudit audit_pbound(const PathTree& tree, const Annotations& ann,
                           const std::vector<double>& t_grid, std::int64_t max_pairs) {
  if (ann.s() >= 2.0) throw ParamOutOfRange("pointwise heat bounds require s < 2");
  EstimateAudit audit;
  audit.id = "p_bound";

  const std::int64_t leaves = tree.leaf_count();
  const auto pairs = same_component_leaf_pairs(tree, max_pairs);
  audit.grid_description = std::to_string(t_grid.size()) + " times x " +
                           std::to_string(leaves) + " leaves (on-diagonal) and " +
                           std::to_string(pairs.size()) + " pairs (off-diagonal)";

  // (a) on-diagonal lower bound; the truncated kernel value only
  // under-estimates the left side
  std::vector<double> margin_a(leaves, kInf);
  std::vector<std::int64_t> checked_a(leaves, 0), skipped_a(leaves, 0);
  par_for(leaves, [&](std::int64_t x) {
    for (double t : t_grid) {
      const Ball ball = ball_ds(tree, ann, x, t);
      if (ball.below_resolution) {
        ++skipped_a[x];
        continue;
      }
      const double lhs = heat_closed(tree, ann, t, x, x).value;
      const double rhs = (1.0 / std::exp(1.0)) / ball_measure(tree, ann.measure(), ball);
      margin_a[x] = std::min(margin_a[x], (lhs - rhs) / rhs);
      ++checked_a[x];
    }
  });

  // (b) off-diagonal upper bound for 0 < t <= dslocal
  const std::int64_t np = static_cast<std::int64_t>(pairs.size());
  std::vector<double> margin_b(np, kInf);
  std::vector<std::int64_t> checked_b(np, 0);
  par_for(np, [&](std::int64_t pi) {
    const auto [x, y] = pairs[pi];
    const auto prefix = common_prefix(tree, x, y);
    const double d = -1.0 / ann.lambda(prefix->level, prefix->idx);
    const double mu_prefix = ann.mu(prefix->level, prefix->idx);
    const double rhs = 1.0 / (d * mu_prefix);
    for (double t : t_grid) {
      if (t > d) continue;
      const double lhs = heat_closed(tree, ann, t, x, y).value;
      margin_b[pi] = std::min(margin_b[pi], (rhs - lhs) / rhs);
      ++checked_b[pi];
    }
  });

  double worst = kInf;
  for (std::int64_t i = 0; i < leaves; ++i) {
    if (checked_a[i] > 0) worst = std::min(worst, margin_a[i]);
    audit.cells_checked += checked_a[i];
    audit.cells_skipped += skipped_a[i];
  }
  for (std::int64_t i = 0; i < np; ++i) {
    if (checked_b[i] > 0) worst = std::min(worst, margin_b[i]);
    audit.cells_checked += checked_b[i];
  }
  audit.worst_margin = worst;
  audit.pass = worst >= -1e-9;
  return audit;
}

EstimateAudit audit_asymp(const PathTree& tree, const Annotations& ann,
                          const std::vector<double>& t_grid, std::int64_t max_pairs) {
  if (ann.s() >= 2.0) throw ParamOutOfRange("heat comparison audit requires s < 2");
  EstimateAudit audit;
  audit.id = "asymp_p";
  const auto pairs = same_component_leaf_pairs(tree, max_pairs);
  const std::int64_t np = static_cast<std::int64_t>(pairs.size());
  audit.grid_description =
      std::to_string(t_grid.size()) + " times x " + std::to_string(np) + " pairs";

  std::vector<double> lo(np, kInf), hi(np, -kInf);
  std::vector<std::int64_t> checked(np, 0), skipped(np, 0);
  par_for(np, [&](std::int64_t pi) {
    const auto [x, y] = pairs[pi];
    const auto prefix = common_prefix(tree, x, y);
    const double d = -1.0 / ann.lambda(prefix->level, prefix->idx);
    const double mu_prefix = ann.mu(prefix->level, prefix->idx);
    for (double t : t_grid) {
      double comparison;
      if (t <= d) {
        comparison = t / (d * mu_prefix);
      } else {
        const Ball ball = ball_ds(tree, ann, x, t);
        if (ball.below_resolution) {
          ++skipped[pi];
          continue;
        }
        comparison = 1.0 / ball_measure(tree, ann.measure(), ball);
      }
      const double p = heat_closed(tree, ann, t, x, y).value;
      const double ratio = p / comparison;
      lo[pi] = std::min(lo[pi], ratio);
      hi[pi] = std::max(hi[pi], ratio);
      ++checked[pi];
    }
  });
  audit.c1 = kInf;
  audit.c2 = -kInf;
  for (std::int64_t i = 0; i < np; ++i) {
    if (checked[i] > 0) {
      audit.c1 = std::min(audit.c1, lo[i]);
      audit.c2 = std::max(audit.c2, hi[i]);
    }
    audit.cells_checked += checked[i];
    audit.cells_skipped += skipped[i];
  }
  audit.pass = audit.c1 > 0.0 && std::isfinite(audit.c2);
  audit.worst_margin = audit.c1;
  return audit;
}

FitReport regress_exponent(const PathTree& tree, const Annotations& ann,
                           std::int64_t max_pairs) {
  FitReport fit;
  const double s = ann.s();
  const double delta = ann.delta();
  if (!(s > 1.0 && s < 2.0 + delta))
    throw ParamOutOfRange("metric-equivalence regression requires 1 < s < 2 + delta");

  const auto pairs = same_component_leaf_pairs(tree, max_pairs);
  std::vector<double> u, v;
  u.reserve(pairs.size());
  v.reserve(pairs.size());
  for (const auto& [x, y] : pairs) {
    const auto prefix = common_prefix(tree, x, y);
    const double lam = ann.lambda(prefix->level, prefix->idx);
    if (!(lam < 0.0)) continue;
    u.push_back(std::log(ann.w(prefix->level, prefix->idx)));
    v.push_back(std::log(-1.0 / lam));
  }
  fit.points = static_cast<std::int64_t>(u.size());

  const double distinct_eps = 1e-12;
  std::vector<double> su = u;
  std::sort(su.begin(), su.end());
  std::int64_t distinct = su.empty() ? 0 : 1;
  for (std::size_t i = 1; i < su.size(); ++i)
    if (su[i] - su[i - 1] > distinct_eps) ++distinct;
  if (distinct < 2) {
    fit.ok = false;
    fit.reason = "fewer than 2 distinct prefix depths among the sampled pairs";
    return fit;
  }

  const double n = static_cast<double>(u.size());
  double sum_u = 0, sum_v = 0, sum_uu = 0, sum_uv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sum_u += u[i];
    sum_v += v[i];
    sum_uu += u[i] * u[i];
    sum_uv += u[i] * v[i];
  }
  fit.slope = (n * sum_uv - sum_u * sum_v) / (n * sum_uu - sum_u * sum_u);
  fit.intercept = (sum_v - fit.slope * sum_u) / n;
  double ss = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = v[i] - (fit.intercept + fit.slope * u[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.candidate_a = 2.0 + delta - s;
  fit.candidate_b = (2.0 + delta - s) / delta;
  fit.distance_a = std::abs(fit.slope - fit.candidate_a);
  fit.distance_b = std::abs(fit.slope - fit.candidate_b);
  fit.ok = true;
  return fit;
}

}  // namespace kbdiag
