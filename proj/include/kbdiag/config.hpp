#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbdiag/kgraph.hpp"
#include "kbdiag/metrics.hpp"

namespace kbdiag {

using ordered_json = nlohmann::ordered_json;

// One run = one graph, one delta, one depth, one seed, and a list of s
// values; every command reads the same file. Unknown keys are rejected so a
// typo cannot silently disable an audit.
struct RunConfig {
  KGraphSpec graph;
  double delta = 0.5;
  std::vector<double> s_values = {1.0};
  int depth = 8;
  std::uint64_t seed = 0;
  int threads = 0;
  std::uint64_t max_nodes = 5'000'000;

  std::vector<double> t_grid;  // resolved to explicit values
  std::vector<double> gamma_list = {0.5, 1.0, 2.0};

  double heat_max_tail = 1e-9;
  std::int64_t heat_pair_sample = 64;

  int sim_level = 3;
  std::int64_t sim_paths = 100000;
  std::vector<double> sim_horizons = {0.05, 0.2};
  std::int64_t sim_x0_leaf = 0;
  std::int64_t sim_max_logged_paths = 100;

  int spectrum_level = 4;
  int dirichlet_level = 3;
  int ck_level = 3;
  std::int64_t max_pairs = 1 << 22;
  std::int64_t max_centers = 1 << 20;
  CrossComponentPolicy cross_component = CrossComponentPolicy::Separate;
};

// Throws ConfigError on malformed or out-of-range input.
RunConfig parse_config(const ordered_json& j);
RunConfig load_config_file(const std::string& path);

// Fully resolved echo of the run parameters; re-parsing it reproduces the run.
ordered_json resolved_config_json(const RunConfig& cfg);

std::string format17(double x);  // shortest-faithful decimal, 17 significant digits

}  // namespace kbdiag
