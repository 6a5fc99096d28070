#include "kbdiag/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "kbdiag/heat.hpp"
#include "kbdiag/jump.hpp"
#include "kbdiag/parallel.hpp"
#include "kbdiag/reference.hpp"

namespace kbdiag {

namespace fs = std::filesystem;

namespace {

struct RunContext {
  RunConfig cfg;
  PerronData perron;
  PathTree tree;
};

RunContext make_context(const RunConfig& cfg) {
  set_threads(cfg.threads);
  ValidatedKGraph vk = validate(cfg.graph);
  PerronData pd = perron_data(vk);
  PathTree tree = build_tree(vk, pd, cfg.depth, cfg.max_nodes);
  return RunContext{cfg, std::move(pd), std::move(tree)};
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

void write_text(const std::string& dir, const std::string& name, const std::string& body) {
  if (dir.empty()) return;
  std::ofstream out(fs::path(dir) / name, std::ios::binary);
  out << body;
}

void write_json(const std::string& dir, const std::string& name, const ordered_json& j) {
  write_text(dir, name, j.dump(2) + "\n");
}

ordered_json error_json(const Error& e) {
  ordered_json j;
  j["error"] = e.code();
  j["message"] = e.what();
  return j;
}

ordered_json perron_json(const PerronData& pd) {
  ordered_json j;
  j["rho"] = pd.rho;
  j["kappa"] = pd.kappa;
  j["rho_product"] = pd.rho_product;
  return j;
}

// ---- audit pieces ------------------------------------------------------

ordered_json audit_perron(const PathTree& tree) {
  const auto& spec = tree.graph().spec();
  const auto& pd = tree.perron();
  double residual = 0.0;
  for (int i = 0; i < spec.k; ++i) {
    for (int v = 0; v < spec.N; ++v) {
      double av = 0.0;
      for (int w = 0; w < spec.N; ++w)
        av += static_cast<double>(spec.matrices[i][v][w]) * pd.kappa[w];
      residual = std::max(residual, std::abs(av - pd.rho[i] * pd.kappa[v]) / pd.rho[i]);
    }
  }
  double ksum = 0.0;
  for (double k : pd.kappa) ksum += k;
  ordered_json j;
  j["name"] = "perron";
  j["hard"] = true;
  j["residual_rel"] = residual;
  j["kappa_sum_gap"] = std::abs(ksum - 1.0);
  j["pass"] = residual <= 1e-10 && std::abs(ksum - 1.0) <= 1e-12;
  return j;
}

ordered_json audit_measure_weight(const PathTree& tree, const Annotations& ann) {
  const int depth = tree.depth();
  double additivity = 0.0;
  std::int64_t weight_violations = 0;
  for (int n = 0; n < depth; ++n) {
    const std::int64_t sz = tree.level_size(n);
    const double lvl_gap = par_max(sz, [&](std::int64_t i) {
      double child_sum = 0.0;
      const std::int64_t cb = tree.child_begin_of(n, i);
      for (std::int32_t c = 0; c < tree.child_count_of(n, i); ++c)
        child_sum += ann.mu(n + 1, cb + c);
      return std::abs(child_sum - ann.mu(n, i)) / ann.mu(n, i);
    });
    additivity = std::max(additivity, lvl_gap);
    for (std::int64_t i = 0; i < tree.level_size(n + 1); ++i)
      if (!(ann.w(n + 1, i) < ann.w(n, tree.parent_of(n + 1, i)))) ++weight_violations;
  }
  double leaf_sum = par_sum(tree.leaf_count(), [&](std::int64_t i) { return ann.mu(depth, i); });

  // w = (mu / kappa)^(1/delta) * kappa, checked against the stored values
  const auto& kappa = tree.perron().kappa;
  double relation = 0.0;
  for (int n = 0; n <= depth; ++n)
    relation = std::max(relation, par_max(tree.level_size(n), [&](std::int64_t i) {
                          const double k = kappa[tree.source_of(n, i)];
                          const double expect = std::pow(ann.mu(n, i) / k, 1.0 / ann.delta()) * k;
                          return std::abs(expect - ann.w(n, i)) / ann.w(n, i);
                        }));

  bool sup_w_decreasing = true;
  for (int n = 0; n < depth; ++n)
    if (!(ann.weight().level_max_w[n + 1] < ann.weight().level_max_w[n]))
      sup_w_decreasing = false;

  ordered_json j;
  j["name"] = "measure_weight";
  j["hard"] = true;
  j["additivity_rel_max"] = additivity;
  j["leaf_sum_gap"] = std::abs(leaf_sum - 1.0);
  j["weight_monotonicity_violations"] = weight_violations;
  j["weight_relation_rel_max"] = relation;
  j["sup_w_decreasing"] = sup_w_decreasing;
  j["pass"] = additivity <= 1e-12 && std::abs(leaf_sum - 1.0) <= 1e-12 &&
              weight_violations == 0 && relation <= 1e-12 && sup_w_decreasing;
  return j;
}

ordered_json audit_lambda(const PathTree& tree, const Annotations& ann) {
  const int depth = tree.depth();
  const double route_gap = ref::lambda_route_gap(tree, ann);

  std::int64_t negativity_violations = 0;
  for (int n = 0; n <= depth; ++n)
    for (std::int64_t i = 0; i < tree.level_size(n); ++i)
      if (!(ann.lambda(n, i) < 0.0)) ++negativity_violations;

  std::int64_t monotonicity_violations = 0;
  if (ann.s() < 2.0) {
    for (int n = 1; n <= depth; ++n)
      for (std::int64_t i = 0; i < tree.level_size(n); ++i)
        if (!(ann.lambda(n, i) < ann.lambda(n - 1, tree.parent_of(n, i))))
          ++monotonicity_violations;
  }

  bool level_min_decreasing = true;
  const auto& mins = ann.spectral().level_min_lambda;
  for (int n = 0; n < depth; ++n)
    if (!(mins[n + 1] < mins[n])) level_min_decreasing = false;

  ordered_json j;
  j["name"] = "eigenvalues";
  j["hard"] = true;
  j["ev_route_gap_rel"] = route_gap;
  j["negativity_violations"] = negativity_violations;
  j["chain_monotonicity_violations"] = monotonicity_violations;  // s < 2 only
  j["level_min_strictly_decreasing"] = level_min_decreasing;
  j["level_min_lambda"] = mins;
  j["pass"] = route_gap <= 1e-10 && negativity_violations == 0 &&
              monotonicity_violations == 0 && level_min_decreasing;
  return j;
}

ordered_json audit_spectrum(const PathTree& tree, const Annotations& ann, int level) {
  const int m = std::min(level, tree.depth());
  const SpectrumReport rep = spectrum_match(tree, ann, m);

  const Eigen::MatrixXd gen = delta_s_matrix(tree, ann, m);
  const std::int64_t n = gen.rows();
  double row_sum_gap = 0.0, min_offdiag = 0.0, sym_gap = 0.0;
  for (std::int64_t a = 0; a < n; ++a) {
    double rs = 0.0;
    for (std::int64_t b = 0; b < n; ++b) {
      rs += gen(a, b);
      if (a != b) {
        min_offdiag = std::min(min_offdiag, gen(a, b));
        const double lhs = ann.mu(m, a) * gen(a, b);
        const double rhs = ann.mu(m, b) * gen(b, a);
        sym_gap = std::max(sym_gap, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
      }
    }
    row_sum_gap = std::max(row_sum_gap, std::abs(rs) / std::max(1.0, -gen(a, a)));
  }

  ordered_json j;
  j["name"] = "spectrum";
  j["hard"] = true;
  j["level"] = m;
  j["max_rel_deviation"] = rep.max_rel_deviation;
  j["row_sum_gap_rel"] = row_sum_gap;
  j["min_offdiagonal"] = min_offdiag;
  j["mu_selfadjointness_gap_rel"] = sym_gap;
  j["pass"] = rep.pass && row_sum_gap <= 1e-10 && min_offdiag >= -1e-12 && sym_gap <= 1e-10;
  return j;
}

std::vector<double> basis_values_at_level(const PathTree& tree, const BasisVector& vec,
                                          int m) {
  const std::int64_t n = tree.level_size(m);
  std::vector<double> out(n, 0.0);
  for (std::int64_t b = 0; b < n; ++b) {
    std::int64_t anc = b;
    for (int l = m; l > vec.node.level; --l) anc = tree.parent_of(l, anc);
    if (anc != vec.node.idx) continue;
    if (vec.coeff.size() == 1) {
      out[b] = vec.coeff[0];
    } else {
      std::int64_t child = b;
      for (int l = m; l > vec.node.level + 1; --l) child = tree.parent_of(l, child);
      out[b] = vec.coeff[child - tree.child_begin_of(vec.node.level, vec.node.idx)];
    }
  }
  return out;
}

ordered_json audit_dirichlet(const PathTree& tree, const Annotations& ann, int level) {
  const int m = std::min(level, tree.depth());

  double j2g_gap = 0.0;
  for (int n = 0; n <= tree.depth(); ++n)
    j2g_gap = std::max(j2g_gap, par_max(tree.level_size(n), [&](std::int64_t i) {
                         return std::abs(ann.jump(n, i) * 2.0 * ann.G(n, i) - 1.0);
                       }));

  const EigenBasis basis = eigenbasis(tree, ann, m);
  std::vector<std::vector<double>> functions;
  std::vector<double> scale;
  for (const auto& r : basis.root_functions) {
    functions.push_back(basis_values_at_level(tree, r, m));
    scale.push_back(1.0);
  }
  for (const auto& v : basis.vectors) {
    functions.push_back(basis_values_at_level(tree, v, m));
    scale.push_back(std::abs(v.lambda));
  }

  double equiv_gap = 0.0;
  for (std::size_t i = 0; i < functions.size(); ++i)
    for (std::size_t jdx = 0; jdx < functions.size(); ++jdx) {
      const double a = dirichlet_jump(tree, ann, m, functions[i], functions[jdx]);
      const double b = ref::dirichlet_via_generator(tree, ann, m, functions[i], functions[jdx]);
      const double denom = std::max({1.0, scale[i], scale[jdx]});
      equiv_gap = std::max(equiv_gap, std::abs(a - b) / denom);
    }

  ordered_json j;
  j["name"] = "dirichlet_equivalence";
  j["hard"] = true;
  j["level"] = m;
  j["jump_2G_identity_gap_max"] = j2g_gap;
  j["form_equivalence_gap_rel_max"] = equiv_gap;
  j["basis_size"] = functions.size();
  j["pass"] = j2g_gap <= 1e-12 && equiv_gap <= 1e-9;
  return j;
}

ordered_json audit_heat(const PathTree& tree, const Annotations& ann, const RunConfig& cfg) {
  const int depth = tree.depth();
  const EigenBasis basis = eigenbasis(tree, ann, depth);
  const auto pairs = same_component_leaf_pairs(tree, cfg.heat_pair_sample);

  double closed_vs_eigen = 0.0, symmetry_gap = 0.0;
  for (const auto& [x, y] : pairs)
    for (double t : cfg.t_grid) {
      const double pc = heat_closed(tree, ann, t, x, y).value;
      const double pe = heat_eigen(tree, ann, basis, t, x, y);
      closed_vs_eigen = std::max(closed_vs_eigen, std::abs(pc - pe) / std::max(1.0, std::abs(pc)));
      const double pr = heat_closed(tree, ann, t, y, x).value;
      symmetry_gap = std::max(symmetry_gap, std::abs(pc - pr));
    }
  // matched truncation on the diagonal
  const std::int64_t leaf_stride = std::max<std::int64_t>(1, tree.leaf_count() / 8);
  for (std::int64_t x = 0; x < tree.leaf_count(); x += leaf_stride)
    for (double t : cfg.t_grid) {
      const double pc = heat_closed(tree, ann, t, x, x).value;
      const double pe = heat_eigen(tree, ann, basis, t, x, x);
      closed_vs_eigen = std::max(closed_vs_eigen, std::abs(pc - pe) / std::max(1.0, std::abs(pc)));
    }

  // stochasticity of the level-m kernel (exact at truncation)
  const int ms = std::min(depth, 6);
  double stochasticity_gap = 0.0;
  const std::int64_t n_ms = tree.level_size(ms);
  for (std::int64_t a = 0; a < n_ms; a += std::max<std::int64_t>(1, n_ms / 8))
    for (double t : cfg.t_grid) {
      const double total = par_sum(n_ms, [&](std::int64_t b) {
        return heat_matrix_kernel(tree, ann, t, ms, a, b) * ann.mu(ms, b);
      });
      stochasticity_gap = std::max(stochasticity_gap, std::abs(total - 1.0));
    }

  // Chapman-Kolmogorov on the level-mck kernel
  const int mck = std::min(depth, cfg.ck_level);
  const std::int64_t nck = tree.level_size(mck);
  double ck_gap = 0.0;
  {
    const double t1 = cfg.t_grid.front(), t2 = cfg.t_grid.back();
    Eigen::MatrixXd p1(nck, nck), p2(nck, nck), p12(nck, nck);
    for (std::int64_t a = 0; a < nck; ++a)
      for (std::int64_t b = 0; b < nck; ++b) {
        p1(a, b) = heat_matrix_kernel(tree, ann, t1, mck, a, b);
        p2(a, b) = heat_matrix_kernel(tree, ann, t2, mck, a, b);
        p12(a, b) = heat_matrix_kernel(tree, ann, t1 + t2, mck, a, b);
      }
    for (std::int64_t a = 0; a < nck; ++a)
      for (std::int64_t c = 0; c < nck; ++c) {
        double acc = 0.0;
        for (std::int64_t b = 0; b < nck; ++b) acc += p1(a, b) * p2(b, c) * ann.mu(mck, b);
        ck_gap = std::max(ck_gap, std::abs(acc - p12(a, c)) / std::max(1.0, std::abs(p12(a, c))));
      }
  }

  double min_value = 0.0;
  for (const auto& [x, y] : pairs)
    for (double t : cfg.t_grid)
      min_value = std::min(min_value, heat_closed(tree, ann, t, x, y).value);

  ordered_json j;
  j["name"] = "heat_consistency";
  j["hard"] = true;
  j["closed_vs_eigen_rel_max"] = closed_vs_eigen;
  j["symmetry_gap_max"] = symmetry_gap;
  j["stochasticity_gap_max"] = stochasticity_gap;
  j["chapman_kolmogorov_rel_max"] = ck_gap;
  j["min_kernel_value"] = min_value;
  j["pairs"] = pairs.size();
  j["pass"] = closed_vs_eigen <= 1e-8 && symmetry_gap == 0.0 && stochasticity_gap <= 1e-10 &&
              ck_gap <= 1e-8 && min_value >= -1e-10;
  return j;
}

ordered_json vd_report_json(const VdReport& rep) {
  ordered_json j;
  j["metric"] = rep.metric_name;
  j["empirical_constant"] = rep.empirical_constant;
  j["theoretical_bound"] = rep.theoretical_bound;
  j["grid"] = rep.grid_description;
  j["cells_checked"] = rep.cells_checked;
  j["cells_skipped"] = rep.cells_skipped;
  j["c1_mu_ratio_min"] = rep.c1_mu_ratio_min;
  j["c2_lambda_ratio_max"] = rep.c2_lambda_ratio_max;
  j["lambda_lag"] = rep.lambda_lag;
  j["pass"] = rep.pass;
  return j;
}

ordered_json estimate_audit_json(const EstimateAudit& audit) {
  ordered_json j;
  j["id"] = audit.id;
  j["grid"] = audit.grid_description;
  j["worst_margin"] = audit.worst_margin;
  j["c1"] = audit.c1;
  j["c2"] = audit.c2;
  j["cells_checked"] = audit.cells_checked;
  j["cells_skipped"] = audit.cells_skipped;
  j["pass"] = audit.pass;
  return j;
}

ordered_json fit_report_json(const FitReport& fit) {
  ordered_json j;
  j["ok"] = fit.ok;
  if (!fit.ok) j["reason"] = fit.reason;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["rms_residual"] = fit.rms_residual;
  j["points"] = fit.points;
  j["candidate_2+delta-s"] = fit.candidate_a;
  j["distance_to_2+delta-s"] = fit.distance_a;
  j["candidate_(2+delta-s)/delta"] = fit.candidate_b;
  j["distance_to_(2+delta-s)/delta"] = fit.distance_b;
  return j;
}

ordered_json moment_table_json(const MomentTable& table) {
  ordered_json j;
  j["beta"] = table.beta;
  j["x0_leaf"] = table.x0_leaf;
  j["t_grid"] = table.t_grid;
  ordered_json fits = ordered_json::array();
  for (std::size_t gi = 0; gi < table.gammas.size(); ++gi) {
    const auto& f = table.fits[gi];
    ordered_json fj;
    fj["gamma"] = f.gamma;
    fj["ok"] = f.ok;
    if (!f.ok) fj["reason"] = f.reason;
    fj["points"] = f.points;
    fj["slope"] = f.slope;
    fj["rms_residual"] = f.rms_residual;
    fj["slope_log_corrected"] = f.slope_log_corrected;
    fj["rms_log_corrected"] = f.rms_log_corrected;
    fj["expectation"] = table.expectation[gi];
    fj["error_bound"] = table.error_bound[gi];
    fits.push_back(std::move(fj));
  }
  j["fits"] = std::move(fits);
  return j;
}

ordered_json skipped(const std::string& name, const std::string& reason) {
  ordered_json j;
  j["name"] = name;
  j["hard"] = false;
  j["skipped"] = true;
  j["reason"] = reason;
  j["pass"] = true;
  return j;
}

// ---- CSV emitters ------------------------------------------------------

std::string nodes_csv(const PathTree& tree, const Annotations& ann) {
  std::string out = "level,idx,mu,w\n";
  for (int n = 0; n <= tree.depth(); ++n)
    for (std::int64_t i = 0; i < tree.level_size(n); ++i)
      out += std::to_string(n) + "," + std::to_string(i) + "," + format17(ann.mu(n, i)) +
             "," + format17(ann.w(n, i)) + "\n";
  return out;
}

std::string spectral_csv(const PathTree& tree, const Annotations& ann) {
  std::string out = "level,idx,G,lambda\n";
  for (int n = 0; n <= tree.depth(); ++n)
    for (std::int64_t i = 0; i < tree.level_size(n); ++i)
      out += std::to_string(n) + "," + std::to_string(i) + "," + format17(ann.G(n, i)) +
             "," + format17(ann.lambda(n, i)) + "\n";
  return out;
}

std::string vd_cells_csv(const PathTree& tree, const Annotations& ann, bool intrinsic,
                         std::int64_t max_rows) {
  std::string out = "x,r,ratio\n";
  std::int64_t rows = 0;
  const std::int64_t stride = std::max<std::int64_t>(1, tree.leaf_count() / 64);
  for (std::int64_t x = 0; x < tree.leaf_count() && rows < max_rows; x += stride) {
    const auto chain = tree.chain(x);
    for (int n = 0; n <= tree.depth() && rows < max_rows; ++n) {
      const double base = intrinsic ? -1.0 / ann.lambda(n, chain[n])
                                    : ann.w(n, chain[n]);
      for (double f : {1.0 + 1e-9, 1.0 - 1e-9}) {
        const double r = base * f;
        const Ball small = intrinsic ? ball_ds(tree, ann, x, r)
                                     : ball_dw(tree, ann.weight(), x, r);
        if (small.below_resolution) continue;
        const Ball big = intrinsic ? ball_ds(tree, ann, x, 2.0 * r)
                                   : ball_dw(tree, ann.weight(), x, 2.0 * r);
        const double ratio = ball_measure(tree, ann.measure(), big) /
                             ball_measure(tree, ann.measure(), small);
        out += std::to_string(x) + "," + format17(r) + "," + format17(ratio) + "\n";
        ++rows;
      }
    }
  }
  return out;
}

std::string zeta_csv(const std::vector<ZetaRow>& rows) {
  std::string out = "s,level,increment,ratio\n";
  for (const auto& row : rows)
    for (std::size_t n = 0; n < row.level_increment.size(); ++n) {
      out += format17(row.s) + "," + std::to_string(n) + "," +
             format17(row.level_increment[n]) + ",";
      if (n < row.increment_ratio.size()) out += format17(row.increment_ratio[n]);
      out += "\n";
    }
  return out;
}

}  // namespace

// ---- subcommands -------------------------------------------------------

int run_validate(const RunConfig& cfg, const std::string& out_dir, std::ostream& console) {
  ensure_dir(out_dir);
  try {
    set_threads(cfg.threads);
    ValidatedKGraph vk = validate(cfg.graph);
    PerronData pd = perron_data(vk);
    ordered_json j;
    j["valid"] = true;
    j["perron"] = perron_json(pd);
    console << j.dump(2) << "\n";
    write_json(out_dir, "perron.json", j);
    write_json(out_dir, "resolved_config.json", resolved_config_json(cfg));
    return 0;
  } catch (const Error& e) {
    ordered_json j;
    j["valid"] = false;
    j["error"] = error_json(e);
    console << j.dump(2) << "\n";
    write_json(out_dir, "perron.json", j);
    return 2;
  }
}

int run_audit(const RunConfig& cfg, const std::string& out_dir, std::ostream& console,
              bool dump_tree) {
  ensure_dir(out_dir);
  RunContext ctx = make_context(cfg);
  const PathTree& tree = ctx.tree;

  write_json(out_dir, "resolved_config.json", resolved_config_json(cfg));
  if (dump_tree && !out_dir.empty()) {
    std::ofstream out(fs::path(out_dir) / "tree.csv", std::ios::binary);
    dump_tree_csv(tree, out);
  }

  ordered_json report;
  report["perron"] = perron_json(tree.perron());
  ordered_json results = ordered_json::array();
  int hard_failures = 0;

  for (double s : cfg.s_values) {
    const Annotations ann(tree, SpectralParams{s, cfg.delta});
    ordered_json audits = ordered_json::array();

    audits.push_back(audit_perron(tree));
    audits.push_back(audit_measure_weight(tree, ann));
    audits.push_back(audit_lambda(tree, ann));
    audits.push_back(audit_spectrum(tree, ann, cfg.spectrum_level));
    audits.push_back(audit_dirichlet(tree, ann, cfg.dirichlet_level));

    {
      const VdReport vd = vd_audit_dw(tree, ann.measure(), ann.weight(), {}, cfg.max_centers);
      ordered_json j = vd_report_json(vd);
      j["name"] = "volume_doubling_dw";
      j["hard"] = true;
      audits.push_back(std::move(j));
    }
    if (s < 2.0) {
      const VdReport vd = vd_audit_ds(tree, ann, {}, cfg.max_centers, 1, cfg.cross_component);
      ordered_json j = vd_report_json(vd);
      j["name"] = "volume_doubling_ds";
      j["hard"] = true;
      audits.push_back(std::move(j));
    } else {
      audits.push_back(skipped("volume_doubling_ds", "requires s < 2"));
    }

    if (s < 2.0 + cfg.delta) {
      audits.push_back(audit_heat(tree, ann, cfg));
    } else {
      audits.push_back(skipped("heat_consistency", "requires s < 2 + delta (eigenvalue divergence)"));
    }

    if (s < 2.0) {
      ordered_json j = estimate_audit_json(audit_pbound(tree, ann, cfg.t_grid, cfg.max_pairs));
      j["name"] = "p_bound";
      j["hard"] = true;
      audits.push_back(std::move(j));
      ordered_json j2 = estimate_audit_json(audit_asymp(tree, ann, cfg.t_grid, cfg.max_pairs));
      j2["name"] = "asymp_band";
      j2["hard"] = false;
      audits.push_back(std::move(j2));
    } else {
      audits.push_back(skipped("p_bound", "requires s < 2"));
      audits.push_back(skipped("asymp_band", "requires s < 2"));
    }

    if (s > 1.0 && s < 2.0 + cfg.delta) {
      ordered_json j = fit_report_json(regress_exponent(tree, ann, cfg.max_pairs));
      j["name"] = "exponent_regression";
      j["hard"] = false;
      j["pass"] = true;  // evidence report, no pass/fail semantics
      audits.push_back(std::move(j));
    } else {
      audits.push_back(skipped("exponent_regression", "requires 1 < s < 2 + delta"));
    }

    if (s >= 1.0 && s < 2.0 + cfg.delta) {
      const double beta_printed = (2.0 + cfg.delta - s) / cfg.delta;
      const double beta_alt = 2.0 + cfg.delta - s;
      ordered_json j;
      j["name"] = "moments";
      j["hard"] = false;
      j["pass"] = true;  // evidence report
      j["printed_exponent"] = moment_table_json(
          moments(tree, ann, cfg.sim_x0_leaf, cfg.t_grid, cfg.gamma_list, beta_printed));
      j["metric_equivalence_exponent"] = moment_table_json(
          moments(tree, ann, cfg.sim_x0_leaf, cfg.t_grid, cfg.gamma_list, beta_alt));
      audits.push_back(std::move(j));
    } else {
      audits.push_back(skipped("moments", "requires 1 <= s < 2 + delta"));
    }

    for (const auto& a : audits)
      if (a.value("hard", false) && !a.value("pass", false)) ++hard_failures;

    ordered_json entry;
    entry["s"] = s;
    entry["audits"] = std::move(audits);
    results.push_back(std::move(entry));

    if (!out_dir.empty()) {
      const std::string tag = "s" + format17(s);
      write_text(out_dir, "nodes_" + tag + ".csv", nodes_csv(tree, ann));
      write_text(out_dir, "spectral_" + tag + ".csv", spectral_csv(tree, ann));
      write_text(out_dir, "vd_dw_cells_" + tag + ".csv", vd_cells_csv(tree, ann, false, 100000));
      if (s < 2.0)
        write_text(out_dir, "vd_ds_cells_" + tag + ".csv", vd_cells_csv(tree, ann, true, 100000));
    }
  }

  // zeta diagnostics bracket the abscissa around delta
  {
    const WeightLayer wl = annotate_weight(tree, annotate_measure(tree), WeightParams{cfg.delta});
    const std::vector<double> zeta_grid = {0.5 * cfg.delta, cfg.delta, 1.5 * cfg.delta, 1.0};
    const auto rows = zeta_partial(tree, wl, zeta_grid);
    ordered_json zj = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json r;
      r["s"] = row.s;
      r["partial_sum"] = row.partial_sum;
      r["last_ratio"] = row.increment_ratio.empty() ? 0.0 : row.increment_ratio.back();
      zj.push_back(std::move(r));
    }
    report["zeta"] = std::move(zj);
    write_text(out_dir, "zeta.csv", zeta_csv(rows));
  }

  report["results"] = std::move(results);
  report["hard_failures"] = hard_failures;
  report["pass"] = hard_failures == 0;
  write_json(out_dir, "report.json", report);
  console << (hard_failures == 0 ? "AUDIT PASS" : "AUDIT FAIL") << " (hard failures: "
          << hard_failures << ")\n";
  return hard_failures == 0 ? 0 : 1;
}

int run_heat(const RunConfig& cfg, const std::string& out_dir, std::ostream& console) {
  ensure_dir(out_dir);
  RunContext ctx = make_context(cfg);
  const PathTree& tree = ctx.tree;
  write_json(out_dir, "resolved_config.json", resolved_config_json(cfg));

  ordered_json summary;
  std::int64_t refused = 0;
  for (double s : cfg.s_values) {
    if (!(s < 2.0 + cfg.delta))
      throw ConfigError("heat requires s < 2 + delta for every listed s");
    const Annotations ann(tree, SpectralParams{s, cfg.delta});
    const auto pairs = same_component_leaf_pairs(tree, cfg.heat_pair_sample);
    std::string csv = "s,t,x,y,p,tail_bound\n";
    HeatOptions opts;
    opts.max_tail = cfg.heat_max_tail;
    for (double t : cfg.t_grid) {
      for (const auto& [x, y] : pairs) {
        const HeatKernelEval ev = heat_closed(tree, ann, t, x, y);
        csv += format17(s) + "," + format17(t) + "," + std::to_string(x) + "," +
               std::to_string(y) + "," + format17(ev.value) + "," +
               format17(ev.tail_bound) + "\n";
      }
      const std::int64_t stride = std::max<std::int64_t>(1, tree.leaf_count() / 8);
      for (std::int64_t x = 0; x < tree.leaf_count(); x += stride) {
        try {
          const HeatKernelEval ev = heat_closed(tree, ann, t, x, x, opts);
          csv += format17(s) + "," + format17(t) + "," + std::to_string(x) + "," +
                 std::to_string(x) + "," + format17(ev.value) + "," +
                 format17(ev.tail_bound) + "\n";
        } catch (const TailTooLarge&) {
          ++refused;  // diagonal value not certified at this depth and t
        }
      }
    }
    write_text(out_dir, "heat_s" + format17(s) + ".csv", csv);
  }
  summary["refused_diagonal_evaluations"] = refused;
  summary["max_tail"] = cfg.heat_max_tail;
  write_json(out_dir, "heat_summary.json", summary);
  console << "heat tables written (" << refused << " diagonal evaluations refused)\n";
  return 0;
}

int run_simulate(const RunConfig& cfg, const std::string& out_dir, std::ostream& console) {
  ensure_dir(out_dir);
  RunContext ctx = make_context(cfg);
  const PathTree& tree = ctx.tree;
  write_json(out_dir, "resolved_config.json", resolved_config_json(cfg));

  const double s = cfg.s_values.front();
  if (!(s < 2.0 + cfg.delta)) throw ConfigError("simulate requires s < 2 + delta");
  const Annotations ann(tree, SpectralParams{s, cfg.delta});
  const int m = std::min(cfg.sim_level, tree.depth());

  ordered_json summary;
  summary["s"] = s;
  summary["state_level"] = m;
  ordered_json runs = ordered_json::array();
  for (std::size_t hi = 0; hi < cfg.sim_horizons.size(); ++hi) {
    SimConfig sim;
    sim.x0_leaf = cfg.sim_x0_leaf;
    sim.horizon = cfg.sim_horizons[hi];
    sim.path_count = cfg.sim_paths;
    sim.seed = cfg.seed;
    sim.state_level = m;
    sim.max_logged_paths = cfg.sim_max_logged_paths;
    const SimResult res = ctmc_simulate(tree, ann, sim);

    std::string csv = "path,event_time,from_state,to_state\n";
    for (const auto& e : res.events)
      csv += std::to_string(e.path) + "," + format17(e.time) + "," + std::to_string(e.from) +
             "," + std::to_string(e.to) + "\n";
    write_text(out_dir, "trajectories_h" + std::to_string(hi) + ".csv", csv);

    // terminal frequencies against the kernel law p(t, x0, .) mu[.]
    const std::int64_t n = tree.level_size(m);
    std::string tcsv = "state,count,expected_probability,z_score\n";
    double worst_z = 0.0;
    for (std::int64_t b = 0; b < n; ++b) {
      const double p = heat_matrix_kernel(tree, ann, sim.horizon, m, res.initial_state, b) *
                       ann.mu(m, b);
      const double count = static_cast<double>(res.terminal_counts[b]);
      const double sd = std::sqrt(std::max(1e-300, p * (1.0 - p) * sim.path_count));
      const double z = (count - p * sim.path_count) / sd;
      worst_z = std::max(worst_z, std::abs(z));
      tcsv += std::to_string(b) + "," + std::to_string(res.terminal_counts[b]) + "," +
              format17(p) + "," + format17(z) + "\n";
    }
    write_text(out_dir, "terminal_counts_h" + std::to_string(hi) + ".csv", tcsv);

    ordered_json r;
    r["horizon"] = sim.horizon;
    r["paths"] = sim.path_count;
    r["total_jumps"] = res.total_jumps;
    r["worst_abs_z"] = worst_z;
    r["within_4_sigma"] = worst_z <= 4.0;
    runs.push_back(std::move(r));
  }
  summary["runs"] = std::move(runs);
  write_json(out_dir, "sim_report.json", summary);
  console << "simulation written\n";
  return 0;
}

int run_regress(const RunConfig& cfg, const std::string& out_dir, std::ostream& console) {
  ensure_dir(out_dir);
  RunContext ctx = make_context(cfg);
  const PathTree& tree = ctx.tree;
  write_json(out_dir, "resolved_config.json", resolved_config_json(cfg));

  ordered_json out;
  ordered_json entries = ordered_json::array();
  std::string csv = "s,beta,gamma,t,expectation,error_bound\n";
  for (double s : cfg.s_values) {
    ordered_json entry;
    entry["s"] = s;
    const Annotations ann(tree, SpectralParams{s, cfg.delta});
    if (s > 1.0 && s < 2.0 + cfg.delta)
      entry["exponent_regression"] = fit_report_json(regress_exponent(tree, ann, cfg.max_pairs));
    else
      entry["exponent_regression"] = {{"skipped", true}, {"reason", "requires 1 < s < 2 + delta"}};
    if (s >= 1.0 && s < 2.0 + cfg.delta) {
      for (double beta : {(2.0 + cfg.delta - s) / cfg.delta, 2.0 + cfg.delta - s}) {
        const MomentTable table =
            moments(tree, ann, cfg.sim_x0_leaf, cfg.t_grid, cfg.gamma_list, beta);
        entry[beta == 2.0 + cfg.delta - s ? "moments_metric_equivalence_exponent"
                                          : "moments_printed_exponent"] = moment_table_json(table);
        for (std::size_t gi = 0; gi < table.gammas.size(); ++gi)
          for (std::size_t ti = 0; ti < table.t_grid.size(); ++ti)
            csv += format17(s) + "," + format17(beta) + "," + format17(table.gammas[gi]) + "," +
                   format17(table.t_grid[ti]) + "," + format17(table.expectation[gi][ti]) + "," +
                   format17(table.error_bound[gi][ti]) + "\n";
      }
    } else {
      entry["moments"] = {{"skipped", true}, {"reason", "requires 1 <= s < 2 + delta"}};
    }
    entries.push_back(std::move(entry));
  }
  out["results"] = std::move(entries);
  write_json(out_dir, "regress.json", out);
  write_text(out_dir, "moments.csv", csv);
  console << "regression artifacts written\n";
  return 0;
}

}  // namespace kbdiag
