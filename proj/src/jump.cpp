#include "kbdiag/jump.hpp"

#include <algorithm>
#include <cmath>

#include "kbdiag/parallel.hpp"
#include "kbdiag/rng.hpp"
#include "kbdiag/spectral.hpp"

namespace kbdiag {

double dirichlet_jump(const PathTree& tree, const Annotations& ann, int m,
                      const std::vector<double>& f, const std::vector<double>& g) {
  if (m < 1 || m > tree.depth()) throw ParamOutOfRange("cylinder level must lie in [1, depth]");
  const std::int64_t n = tree.level_size(m);
  if (static_cast<std::int64_t>(f.size()) != n || static_cast<std::int64_t>(g.size()) != n)
    throw ParamOutOfRange("functions must have one value per depth-m cylinder");

  // per-row sums over b > a, doubled for the ordered-pair convention
  std::vector<double> row(n, 0.0);
  par_for(n, [&](std::int64_t a) {
    double acc = 0.0;
    for (std::int64_t b = a + 1; b < n; ++b) {
      if (tree.root_of(m, a) != tree.root_of(m, b)) continue;
      std::int64_t pa = a, pb = b;
      int l = m;
      while (pa != pb) {
        pa = tree.parent_of(l, pa);
        pb = tree.parent_of(l, pb);
        --l;
      }
      acc += ann.jump(l, pa) * (f[a] - f[b]) * (g[a] - g[b]) * ann.mu(m, a) * ann.mu(m, b);
    }
    row[a] = acc;
  });
  double total = 0.0;
  for (double r : row) total += r;
  return 2.0 * total;
}

SimResult ctmc_simulate(const PathTree& tree, const Annotations& ann, const SimConfig& cfg) {
  if (!(cfg.horizon > 0.0)) throw ParamOutOfRange("simulation horizon must be positive");
  const int m = cfg.state_level;
  const Eigen::MatrixXd gen = delta_s_matrix(tree, ann, m);
  const std::int64_t n = gen.rows();

  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b)
      if (a != b && gen(a, b) < -1e-12)
        throw NotAGenerator("off-diagonal entry (" + std::to_string(a) + "," +
                            std::to_string(b) + ") = " + std::to_string(gen(a, b)));

  // per-state holding rate and jump distribution
  std::vector<double> rate(n);
  std::vector<std::vector<double>> cdf(n);
  std::vector<std::vector<std::int64_t>> target(n);
  for (std::int64_t a = 0; a < n; ++a) {
    rate[a] = -gen(a, a);
    double acc = 0.0;
    for (std::int64_t b = 0; b < n; ++b) {
      if (b == a) continue;
      const double w = std::max(0.0, gen(a, b));
      if (w <= 0.0) continue;
      acc += w;
      cdf[a].push_back(acc);
      target[a].push_back(b);
    }
    for (double& c : cdf[a]) c /= acc;
    if (!cdf[a].empty()) cdf[a].back() = 1.0;
  }

  SimResult result;
  result.state_level = m;
  result.initial_state = tree.ancestor(cfg.x0_leaf, m);
  result.terminal.resize(cfg.path_count);
  result.terminal_counts.assign(n, 0);

  const std::int64_t logged = std::min(cfg.max_logged_paths, cfg.path_count);
  std::vector<std::vector<SimEvent>> logs(logged);
  std::vector<std::int64_t> jumps(cfg.path_count, 0);

  par_for(cfg.path_count, [&](std::int64_t j) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(j));
    std::int64_t state = result.initial_state;
    double time = 0.0;
    const bool keep_log = j < logged;
    while (true) {
      const double r = rate[state];
      if (!(r > 0.0)) break;
      const double hold = -std::log(rng.next_double_pos()) / r;
      if (time + hold > cfg.horizon) break;
      time += hold;
      const double u = rng.next_double();
      const auto& c = cdf[state];
      std::size_t slot = static_cast<std::size_t>(
          std::lower_bound(c.begin(), c.end(), u) - c.begin());
      if (slot >= c.size()) slot = c.size() - 1;
      const std::int64_t next = target[state][slot];
      if (keep_log) logs[j].push_back(SimEvent{j, time, state, next});
      state = next;
      ++jumps[j];
    }
    result.terminal[j] = state;
  });

  for (std::int64_t j = 0; j < cfg.path_count; ++j) {
    ++result.terminal_counts[result.terminal[j]];
    result.total_jumps += jumps[j];
  }
  for (auto& log : logs)
    result.events.insert(result.events.end(), log.begin(), log.end());
  return result;
}

namespace {

struct LinFit {
  double slope = 0.0;
  double rms = 0.0;
};

LinFit least_squares(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = static_cast<double>(u.size());
  double su = 0, sv = 0, suu = 0, suv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    su += u[i];
    sv += v[i];
    suu += u[i] * u[i];
    suv += u[i] * v[i];
  }
  LinFit fit;
  fit.slope = (n * suv - su * sv) / (n * suu - su * su);
  const double intercept = (sv - fit.slope * su) / n;
  double ss = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = v[i] - (intercept + fit.slope * u[i]);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

}  // namespace

MomentTable moments(const PathTree& tree, const Annotations& ann, std::int64_t x0_leaf,
                    const std::vector<double>& t_grid, const std::vector<double>& gammas,
                    double beta, double fit_rel_error_cap) {
  const double s = ann.s();
  const double delta = ann.delta();
  if (!(s >= 1.0 && s < 2.0 + delta))
    throw ParamOutOfRange("displacement moments require 1 <= s < 2 + delta");
  for (double t : t_grid)
    if (!(t > 0.0)) throw ParamOutOfRange("moment time grid must be positive");

  const int depth = tree.depth();
  const auto chain = tree.chain(x0_leaf);
  std::vector<double> mu(depth + 1), lw(depth + 1), lam(depth + 1);
  for (int n = 0; n <= depth; ++n) {
    mu[n] = ann.mu(n, chain[n]);
    lw[n] = ann.weight().log_w[n][chain[n]];
    lam[n] = ann.lambda(n, chain[n]);
  }

  MomentTable table;
  table.beta = beta;
  table.x0_leaf = x0_leaf;
  table.t_grid = t_grid;
  table.gammas = gammas;
  table.expectation.assign(gammas.size(), std::vector<double>(t_grid.size(), 0.0));
  table.error_bound.assign(gammas.size(), std::vector<double>(t_grid.size(), 0.0));

  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    // kernel value p_n(t) for targets splitting off at prefix level n,
    // built incrementally along the chain
    std::vector<double> p(depth);
    double acc = 0.0, prev_exp = 1.0;
    for (int n = 0; n < depth; ++n) {
      const double cur_exp = std::exp(lam[n] * t);
      acc += (prev_exp - cur_exp) / mu[n];
      prev_exp = cur_exp;
      p[n] = acc;
    }
    double covered = 0.0;
    for (int n = 0; n < depth; ++n) covered += p[n] * (mu[n] - mu[n + 1]);
    const double residual_mass = std::max(0.0, 1.0 - covered);

    for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
      const double expo = beta * gammas[gi];
      double e = 0.0;
      for (int n = 0; n < depth; ++n)
        e += std::exp(expo * lw[n]) * p[n] * (mu[n] - mu[n + 1]);
      table.expectation[gi][ti] = e;
      table.error_bound[gi][ti] = residual_mass * std::exp(expo * lw[depth]);
    }
  }

  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    MomentFit fit;
    fit.gamma = gammas[gi];
    std::vector<double> u, v, v_log;
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
      const double e = table.expectation[gi][ti];
      if (!(e > 0.0) || table.error_bound[gi][ti] > fit_rel_error_cap * e) continue;
      const double t = t_grid[ti];
      u.push_back(std::log(t));
      v.push_back(std::log(e));
      v_log.push_back(std::log(e / (std::abs(std::log(t)) + 1.0)));
    }
    fit.points = static_cast<std::int64_t>(u.size());
    if (fit.points < 2) {
      fit.ok = false;
      fit.reason = "fewer than 2 grid times with certified truncation error";
    } else {
      const LinFit plain = least_squares(u, v);
      const LinFit corrected = least_squares(u, v_log);
      fit.ok = true;
      fit.slope = plain.slope;
      fit.rms_residual = plain.rms;
      fit.slope_log_corrected = corrected.slope;
      fit.rms_log_corrected = corrected.rms;
    }
    table.fits.push_back(std::move(fit));
  }
  return table;
}

}  // namespace kbdiag
