#pragma once
#include <ostream>
#include <string>

#include "kbdiag/config.hpp"

namespace kbdiag {

// Subcommand entry points. Each writes its artifacts (plus
// resolved_config.json) into out_dir when one is given, prints a summary to
// `console`, and returns the process exit code: 0 ok, 1 hard audit failure,
// 2 invalid input.
int run_validate(const RunConfig& cfg, const std::string& out_dir, std::ostream& console);
int run_audit(const RunConfig& cfg, const std::string& out_dir, std::ostream& console,
              bool dump_tree = false);
int run_heat(const RunConfig& cfg, const std::string& out_dir, std::ostream& console);
int run_simulate(const RunConfig& cfg, const std::string& out_dir, std::ostream& console);
int run_regress(const RunConfig& cfg, const std::string& out_dir, std::ostream& console);

}  // namespace kbdiag
