#include "kbdiag/annotations.hpp"

#include <algorithm>
#include <cmath>

#include "kbdiag/parallel.hpp"

namespace kbdiag {

MeasureLayer annotate_measure(const PathTree& tree) {
  MeasureLayer out;
  const int depth = tree.depth();
  const auto& rho = tree.perron().rho;
  const auto& kappa = tree.perron().kappa;

  out.prefactor.resize(depth + 1);
  out.log_prefactor.resize(depth + 1);
  out.prefactor[0] = 1.0;
  out.log_prefactor[0] = 0.0;
  for (int n = 0; n < depth; ++n) {
    const double r = rho[tree.graph().matrix_index_for_level(n) - 1];
    out.prefactor[n + 1] = out.prefactor[n] / r;
    out.log_prefactor[n + 1] = out.log_prefactor[n] - std::log(r);
  }

  out.mu.resize(depth + 1);
  out.log_mu.resize(depth + 1);
  out.level_min_mu.resize(depth + 1);
  for (int n = 0; n <= depth; ++n) {
    const std::int64_t sz = tree.level_size(n);
    out.mu[n].resize(sz);
    out.log_mu[n].resize(sz);
    const double pf = out.prefactor[n];
    const double lpf = out.log_prefactor[n];
    auto& mu = out.mu[n];
    auto& lmu = out.log_mu[n];
    par_for(sz, [&](std::int64_t i) {
      const double k = kappa[tree.source_of(n, i)];
      mu[i] = pf * k;
      lmu[i] = lpf + std::log(k);
    });
    out.level_min_mu[n] = pf * tree.perron().kappa_min();
  }
  return out;
}

WeightLayer annotate_weight(const PathTree& tree, const MeasureLayer& measure,
                            WeightParams params) {
  (void)measure;  // the weight shares mu's exponent pattern but not its values
  if (!(params.delta > 0.0 && params.delta < 1.0))
    throw ParamOutOfRange("delta must lie in (0, 1)");
  WeightLayer out;
  out.delta = params.delta;
  const int depth = tree.depth();
  const auto& rho = tree.perron().rho;
  const auto& kappa = tree.perron().kappa;

  out.prefactor.resize(depth + 1);
  out.log_prefactor.resize(depth + 1);
  out.prefactor[0] = 1.0;
  out.log_prefactor[0] = 0.0;
  std::vector<double> rho_pow(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho_pow[i] = std::pow(rho[i], -1.0 / params.delta);
  for (int n = 0; n < depth; ++n) {
    const int i = tree.graph().matrix_index_for_level(n) - 1;
    out.prefactor[n + 1] = out.prefactor[n] * rho_pow[i];
    out.log_prefactor[n + 1] = out.log_prefactor[n] - std::log(rho[i]) / params.delta;
  }

  out.w.resize(depth + 1);
  out.log_w.resize(depth + 1);
  out.level_max_w.resize(depth + 1);
  for (int n = 0; n <= depth; ++n) {
    const std::int64_t sz = tree.level_size(n);
    out.w[n].resize(sz);
    out.log_w[n].resize(sz);
    const double pf = out.prefactor[n];
    const double lpf = out.log_prefactor[n];
    auto& w = out.w[n];
    auto& lw = out.log_w[n];
    par_for(sz, [&](std::int64_t i) {
      const double k = kappa[tree.source_of(n, i)];
      w[i] = pf * k;
      lw[i] = lpf + std::log(k);
    });
    out.level_max_w[n] = pf * tree.perron().kappa_max();
  }
  return out;
}

namespace {

// 1 - Q_i(v) / (rho_i kappa_v)^2 per (matrix, vertex); the pair sum over
// ordered distinct child edges of a node with source v is mu^2 times this.
std::vector<std::vector<double>> pair_sum_coefficients(const PathTree& tree) {
  const int N = tree.vertex_count();
  const int k = tree.graph().k();
  const auto& kappa = tree.perron().kappa;
  const auto& rho = tree.perron().rho;
  std::vector<std::vector<double>> c(k, std::vector<double>(N));
  for (int i = 1; i <= k; ++i) {
    const IntMatrix& a = tree.graph().matrix(i);
    for (int v = 0; v < N; ++v) {
      double q = 0.0;
      std::int64_t edges = 0;
      for (int w = 0; w < N; ++w) {
        q += static_cast<double>(a[v][w]) * kappa[w] * kappa[w];
        edges += a[v][w];
      }
      if (edges < 2) {
        c[i - 1][v] = 0.0;  // flagged by the branching check below
        continue;
      }
      const double total = rho[i - 1] * kappa[v];
      c[i - 1][v] = 1.0 - q / (total * total);
    }
  }
  return c;
}

void check_branching(const PathTree& tree) {
  for (int n = 0; n <= tree.depth(); ++n) {
    const int mi = tree.graph().matrix_index_for_level(n);
    for (int v = 0; v < tree.vertex_count(); ++v)
      if (tree.graph().row_sum(mi, v) < 2) {
        // report the first materialized offender, if any
        for (std::int64_t i = 0; i < tree.level_size(n); ++i)
          if (tree.source_of(n, i) == v) throw NotBranching(n, i);
      }
  }
}

}  // namespace

SpectralLayer annotate_spectral(const PathTree& tree, const MeasureLayer& measure,
                                const WeightLayer& weight, double s) {
  check_branching(tree);
  SpectralLayer out;
  out.s = s;
  const int depth = tree.depth();
  const auto coeff = pair_sum_coefficients(tree);

  out.G.resize(depth + 1);
  out.log_G.resize(depth + 1);
  out.lambda.resize(depth + 1);
  out.level_min_lambda.resize(depth + 1);
  out.level_max_lambda.resize(depth + 1);

  for (int n = 0; n <= depth; ++n) {
    const std::int64_t sz = tree.level_size(n);
    out.G[n].resize(sz);
    out.log_G[n].resize(sz);
    out.lambda[n].resize(sz);
    const int mi = tree.graph().matrix_index_for_level(n);
    auto& G = out.G[n];
    auto& lG = out.log_G[n];
    auto& lam = out.lambda[n];
    par_for(sz, [&](std::int64_t i) {
      const double c = coeff[mi - 1][tree.source_of(n, i)];
      const double mu = measure.mu[n][i];
      const double w = weight.w[n][i];
      G[i] = 0.5 * std::pow(w, 2.0 - s) * mu * mu * c;
      lG[i] = std::log(0.5 * c) + (2.0 - s) * weight.log_w[n][i] + 2.0 * measure.log_mu[n][i];
      if (n == 0) {
        lam[i] = -mu / G[i];
      } else {
        const std::int64_t p = tree.parent_of(n, i);
        lam[i] = out.lambda[n - 1][p] + mu * (1.0 / out.G[n - 1][p] - 1.0 / G[i]);
      }
    });
    double lo = lam[0], hi = lam[0];
    for (std::int64_t i = 1; i < sz; ++i) {
      lo = std::min(lo, lam[i]);
      hi = std::max(hi, lam[i]);
    }
    out.level_min_lambda[n] = lo;
    out.level_max_lambda[n] = hi;
  }
  return out;
}

JumpLayer annotate_jump(const PathTree& tree, const MeasureLayer& measure,
                        const WeightLayer& weight, double s) {
  check_branching(tree);
  JumpLayer out;
  out.s = s;
  const int depth = tree.depth();
  const auto coeff = pair_sum_coefficients(tree);
  out.J.resize(depth + 1);
  for (int n = 0; n <= depth; ++n) {
    const std::int64_t sz = tree.level_size(n);
    out.J[n].resize(sz);
    const int mi = tree.graph().matrix_index_for_level(n);
    auto& J = out.J[n];
    par_for(sz, [&](std::int64_t i) {
      const double c = coeff[mi - 1][tree.source_of(n, i)];
      const double mu = measure.mu[n][i];
      const double w = weight.w[n][i];
      J[i] = std::pow(w, s - 2.0) / (mu * mu * c);
    });
  }
  return out;
}

Annotations::Annotations(const PathTree& tree, SpectralParams params)
    : tree_(&tree),
      measure_(annotate_measure(tree)),
      weight_(annotate_weight(tree, measure_, WeightParams{params.delta})),
      spectral_(annotate_spectral(tree, measure_, weight_, params.s)),
      jump_(annotate_jump(tree, measure_, weight_, params.s)) {}

std::vector<ZetaRow> zeta_partial(const PathTree& tree, const WeightLayer& weight,
                                  const std::vector<double>& s_grid) {
  std::vector<ZetaRow> rows;
  rows.reserve(s_grid.size());
  for (double s : s_grid) {
    ZetaRow row;
    row.s = s;
    row.level_increment.resize(tree.depth() + 1);
    for (int n = 0; n <= tree.depth(); ++n) {
      const auto& lw = weight.log_w[n];
      row.level_increment[n] = par_sum(tree.level_size(n), [&](std::int64_t i) {
        return std::exp(s * lw[i]);
      });
      row.partial_sum += row.level_increment[n];
    }
    row.increment_ratio.resize(tree.depth());
    for (int n = 0; n < tree.depth(); ++n)
      row.increment_ratio[n] = row.level_increment[n + 1] / row.level_increment[n];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace kbdiag
