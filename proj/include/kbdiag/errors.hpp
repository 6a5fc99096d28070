#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>

namespace kbdiag {

// Base class for all structured failures. `code()` is the stable
// machine-readable tag that also ends up in CLI JSON output.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what)
      : Error("DimensionMismatch", what) {}
};

struct NotCommuting : Error {
  NotCommuting(int i_, int j_)
      : Error("NotCommuting", "vertex matrices A_" + std::to_string(i_) +
                                  " and A_" + std::to_string(j_) +
                                  " do not commute"),
        i(i_),
        j(j_) {}
  int i, j;  // 1-based matrix indices
};

struct NotIrreducible : Error {
  NotIrreducible() : Error("NotIrreducible", "union digraph of the vertex matrices is not strongly connected") {}
};

struct SpectralRadiusAtMostOne : Error {
  explicit SpectralRadiusAtMostOne(int i_)
      : Error("SpectralRadiusAtMostOne",
              "spectral radius of A_" + std::to_string(i_) + " is <= 1"),
        i(i_) {}
  int i;
};

struct NoConvergence : Error {
  explicit NoConvergence(const std::string& what) : Error("NoConvergence", what) {}
};

struct BudgetExceeded : Error {
  explicit BudgetExceeded(std::uint64_t estimated)
      : Error("BudgetExceeded",
              "estimated node count " + std::to_string(estimated) +
                  " exceeds the configured budget"),
        estimated_count(estimated) {}
  std::uint64_t estimated_count;
};

struct NotBranching : Error {
  NotBranching(int level_, std::int64_t idx_)
      : Error("NotBranching", "node (level " + std::to_string(level_) +
                                  ", idx " + std::to_string(idx_) +
                                  ") has fewer than 2 child edges; boundary may not be a Cantor set"),
        level(level_),
        idx(idx_) {}
  int level;
  std::int64_t idx;
};

struct ParamOutOfRange : Error {
  explicit ParamOutOfRange(const std::string& what) : Error("ParamOutOfRange", what) {}
};

struct NotAGenerator : Error {
  explicit NotAGenerator(const std::string& what) : Error("NotAGenerator", what) {}
};

struct TailTooLarge : Error {
  TailTooLarge(double bound, double limit)
      : Error("TailTooLarge", "on-diagonal truncation tail bound " +
                                  std::to_string(bound) + " exceeds limit " +
                                  std::to_string(limit)) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

}  // namespace kbdiag
