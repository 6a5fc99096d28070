#include "kbdiag/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace kbdiag {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void reject_unknown_keys(const ordered_json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) fail("unknown key '" + it.key() + "' in " + where);
}

std::vector<double> parse_grid(const ordered_json& j, const std::string& where) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
  } else if (j.is_object() && j.contains("logspace")) {
    const auto& ls = j.at("logspace");
    if (!ls.is_array() || ls.size() != 3) fail(where + ".logspace must be [lo_exp, hi_exp, count]");
    const double lo = ls[0].get<double>(), hi = ls[1].get<double>();
    const int count = ls[2].get<int>();
    if (count < 1) fail(where + ".logspace count must be >= 1");
    for (int i = 0; i < count; ++i) {
      const double e = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
      out.push_back(std::pow(10.0, e));
    }
  } else if (j.is_object() && j.contains("values")) {
    for (const auto& v : j.at("values")) out.push_back(v.get<double>());
  } else {
    fail(where + " must be an array, {\"values\": [...]}, or {\"logspace\": [lo, hi, n]}");
  }
  if (out.empty()) fail(where + " must not be empty");
  return out;
}

}  // namespace

RunConfig parse_config(const ordered_json& j) {
  RunConfig cfg;
  reject_unknown_keys(j, {"graph", "delta", "s", "depth", "seed", "threads", "budgets",
                          "t_grid", "gamma_list", "heat", "sim", "audit",
                          "cross_component"},
                      "config");

  if (!j.contains("graph")) fail("missing 'graph'");
  const auto& g = j.at("graph");
  reject_unknown_keys(g, {"k", "N", "matrices"}, "graph");
  if (!g.contains("matrices") || !g.at("matrices").is_array() || g.at("matrices").empty())
    fail("graph.matrices must be a non-empty array of integer matrices");
  const auto& mats = g.at("matrices");
  cfg.graph.k = g.contains("k") ? g.at("k").get<int>() : static_cast<int>(mats.size());
  if (cfg.graph.k != static_cast<int>(mats.size()))
    fail("graph.k does not match the number of matrices");
  for (const auto& mj : mats) {
    IntMatrix m;
    if (!mj.is_array() || mj.empty()) fail("each vertex matrix must be a non-empty 2d array");
    for (const auto& row : mj) {
      std::vector<std::int64_t> r;
      for (const auto& e : row) {
        if (!e.is_number_integer() && !e.is_number_unsigned())
          fail("matrix entries must be integers");
        r.push_back(e.get<std::int64_t>());
      }
      m.push_back(std::move(r));
    }
    cfg.graph.matrices.push_back(std::move(m));
  }
  cfg.graph.N = static_cast<int>(cfg.graph.matrices[0].size());
  if (g.contains("N") && g.at("N").get<int>() != cfg.graph.N)
    fail("graph.N does not match the matrix dimension");

  if (!j.contains("delta")) fail("missing 'delta'");
  cfg.delta = j.at("delta").get<double>();
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) fail("delta must lie in the open interval (0, 1)");

  if (!j.contains("s")) fail("missing 's'");
  if (j.at("s").is_array()) {
    cfg.s_values.clear();
    for (const auto& v : j.at("s")) cfg.s_values.push_back(v.get<double>());
    if (cfg.s_values.empty()) fail("'s' must not be empty");
  } else {
    cfg.s_values = {j.at("s").get<double>()};
  }

  if (!j.contains("depth")) fail("missing 'depth'");
  cfg.depth = j.at("depth").get<int>();
  if (cfg.depth < 2) fail("depth must be >= 2");

  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();

  if (j.contains("budgets")) {
    const auto& b = j.at("budgets");
    reject_unknown_keys(b, {"max_nodes", "max_pairs", "max_centers"}, "budgets");
    if (b.contains("max_nodes")) cfg.max_nodes = b.at("max_nodes").get<std::uint64_t>();
    if (b.contains("max_pairs")) cfg.max_pairs = b.at("max_pairs").get<std::int64_t>();
    if (b.contains("max_centers")) cfg.max_centers = b.at("max_centers").get<std::int64_t>();
  }

  if (j.contains("t_grid")) {
    cfg.t_grid = parse_grid(j.at("t_grid"), "t_grid");
  } else {
    for (int i = 0; i < 30; ++i) cfg.t_grid.push_back(std::pow(10.0, -3.0 + 3.0 * i / 29.0));
  }
  for (double t : cfg.t_grid)
    if (!(t > 0.0)) fail("t_grid values must be positive");

  if (j.contains("gamma_list")) {
    cfg.gamma_list.clear();
    for (const auto& v : j.at("gamma_list")) cfg.gamma_list.push_back(v.get<double>());
    for (double gmm : cfg.gamma_list)
      if (!(gmm > 0.0)) fail("gamma_list values must be positive");
  }

  if (j.contains("heat")) {
    const auto& h = j.at("heat");
    reject_unknown_keys(h, {"max_tail", "pair_sample"}, "heat");
    if (h.contains("max_tail")) cfg.heat_max_tail = h.at("max_tail").get<double>();
    if (h.contains("pair_sample")) cfg.heat_pair_sample = h.at("pair_sample").get<std::int64_t>();
  }

  if (j.contains("sim")) {
    const auto& sj = j.at("sim");
    reject_unknown_keys(sj, {"level", "paths", "horizons", "x0_leaf", "log_paths"}, "sim");
    if (sj.contains("level")) cfg.sim_level = sj.at("level").get<int>();
    if (sj.contains("paths")) cfg.sim_paths = sj.at("paths").get<std::int64_t>();
    if (sj.contains("horizons")) cfg.sim_horizons = parse_grid(sj.at("horizons"), "sim.horizons");
    if (sj.contains("x0_leaf")) cfg.sim_x0_leaf = sj.at("x0_leaf").get<std::int64_t>();
    if (sj.contains("log_paths")) cfg.sim_max_logged_paths = sj.at("log_paths").get<std::int64_t>();
    if (cfg.sim_level < 1) fail("sim.level must be >= 1");
    if (cfg.sim_level > cfg.depth) fail("sim.level must not exceed depth");
  }

  if (j.contains("audit")) {
    const auto& a = j.at("audit");
    reject_unknown_keys(a, {"spectrum_level", "dirichlet_level", "ck_level"}, "audit");
    if (a.contains("spectrum_level")) cfg.spectrum_level = a.at("spectrum_level").get<int>();
    if (a.contains("dirichlet_level")) cfg.dirichlet_level = a.at("dirichlet_level").get<int>();
    if (a.contains("ck_level")) cfg.ck_level = a.at("ck_level").get<int>();
  }

  if (j.contains("cross_component")) {
    const std::string p = j.at("cross_component").get<std::string>();
    if (p == "separate")
      cfg.cross_component = CrossComponentPolicy::Separate;
    else if (p == "virtual_root")
      cfg.cross_component = CrossComponentPolicy::VirtualRoot;
    else
      fail("cross_component must be 'separate' or 'virtual_root'");
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

ordered_json resolved_config_json(const RunConfig& cfg) {
  ordered_json j;
  ordered_json g;
  g["k"] = cfg.graph.k;
  g["N"] = cfg.graph.N;
  g["matrices"] = cfg.graph.matrices;
  j["graph"] = g;
  j["delta"] = cfg.delta;
  j["s"] = cfg.s_values;
  j["depth"] = cfg.depth;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["budgets"] = {{"max_nodes", cfg.max_nodes},
                  {"max_pairs", cfg.max_pairs},
                  {"max_centers", cfg.max_centers}};
  j["t_grid"] = cfg.t_grid;
  j["gamma_list"] = cfg.gamma_list;
  j["heat"] = {{"max_tail", cfg.heat_max_tail}, {"pair_sample", cfg.heat_pair_sample}};
  j["sim"] = {{"level", cfg.sim_level},
              {"paths", cfg.sim_paths},
              {"horizons", cfg.sim_horizons},
              {"x0_leaf", cfg.sim_x0_leaf},
              {"log_paths", cfg.sim_max_logged_paths}};
  j["audit"] = {{"spectrum_level", cfg.spectrum_level},
                {"dirichlet_level", cfg.dirichlet_level},
                {"ck_level", cfg.ck_level}};
  j["cross_component"] =
      cfg.cross_component == CrossComponentPolicy::Separate ? "separate" : "virtual_root";
  return j;
}

std::string format17(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", x);
  return buffer;
}

}  // namespace kbdiag
