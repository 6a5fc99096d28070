#include <CLI11.hpp>
#include <iostream>

#include "kbdiag/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"numerical lab for the boundary of a stationary k-Bratteli diagram: "
               "Perron data, cylinder measures and weights, Laplacian spectra, heat and "
               "jump kernels, and the audits tying them together"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  bool dump_tree = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory for artifacts");
    cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--threads", threads, "override the config thread budget");
  };

  CLI::App* validate = app.add_subcommand("validate", "validate the vertex matrices and print Perron data");
  CLI::App* audit = app.add_subcommand("audit", "run the full audit battery and write the report bundle");
  CLI::App* heat = app.add_subcommand("heat", "tabulate heat-kernel values");
  CLI::App* simulate = app.add_subcommand("simulate", "simulate the cylinder-level Markov chain");
  CLI::App* regress = app.add_subcommand("regress", "metric-equivalence and moment fits");
  for (CLI::App* cmd : {validate, audit, heat, simulate, regress}) add_common(cmd);
  audit->add_flag("--dump-tree", dump_tree, "also write tree.csv (one row per node)");

  CLI11_PARSE(app, argc, argv);

  try {
    kbdiag::RunConfig cfg = kbdiag::load_config_file(config_path);
    if (seed_set) cfg.seed = seed;
    if (threads >= 0) cfg.threads = threads;

    if (validate->parsed()) return kbdiag::run_validate(cfg, out_dir, std::cout);
    if (audit->parsed()) return kbdiag::run_audit(cfg, out_dir, std::cout, dump_tree);
    if (heat->parsed()) return kbdiag::run_heat(cfg, out_dir, std::cout);
    if (simulate->parsed()) return kbdiag::run_simulate(cfg, out_dir, std::cout);
    if (regress->parsed()) return kbdiag::run_regress(cfg, out_dir, std::cout);
  } catch (const kbdiag::Error& e) {
    std::cerr << "{\"error\":\"" << e.code() << "\",\"message\":\"" << e.what() << "\"}\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"Internal\",\"message\":\"" << e.what() << "\"}\n";
    return 2;
  }
  return 2;
}
