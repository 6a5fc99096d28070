#pragma once
#include <cstdint>
#include <vector>

#include "kbdiag/errors.hpp"

namespace kbdiag {

using IntMatrix = std::vector<std::vector<std::int64_t>>;  // row-major N x N

// A rank-k graph presented by its k commuting vertex matrices.
// matrices[i](v, w) counts the degree-e_{i+1} edges with range v and source w.
struct KGraphSpec {
  int k = 0;
  int N = 0;
  std::vector<IntMatrix> matrices;
};

// Perron data of the commuting family: per-matrix spectral radii and the
// common positive eigenvector normalized to sum 1.
struct PerronData {
  std::vector<double> rho;    // rho[i] = spectral radius of A_{i+1}, each > 1
  std::vector<double> kappa;  // kappa[v] > 0, sum = 1
  double rho_product = 0.0;   // rho_1 * ... * rho_k

  double kappa_min() const;
  double kappa_max() const;
};

class ValidatedKGraph {
 public:
  const KGraphSpec& spec() const { return spec_; }
  int k() const { return spec_.k; }
  int vertex_count() const { return spec_.N; }

  // 1-based matrix index used for the edges leaving level n (levels cycle
  // through the matrices starting with A_1).
  int matrix_index_for_level(int level) const { return level % spec_.k + 1; }
  const IntMatrix& matrix(int one_based) const { return spec_.matrices[one_based - 1]; }

  // row sum of A_i at v = number of child edges of any node with source v
  // at a level that uses A_i
  std::int64_t row_sum(int one_based, int v) const;
  std::int64_t max_row_sum() const;
  std::int64_t min_row_sum() const;

 private:
  friend ValidatedKGraph validate(const KGraphSpec& spec);
  explicit ValidatedKGraph(KGraphSpec spec) : spec_(std::move(spec)) {}
  KGraphSpec spec_;
};

// Checks, in order: shape, exact integer commutativity of every pair,
// strong connectivity of the union digraph, and rho_i > 1 for every matrix.
// Throws DimensionMismatch / NotCommuting / NotIrreducible /
// SpectralRadiusAtMostOne.
ValidatedKGraph validate(const KGraphSpec& spec);

// Deterministic Perron data. The common eigenvector is obtained by power
// iteration on I + sum_i A_i (primitive, so the iteration always converges);
// a dense eigensolve backs it up for stubborn inputs. Residuals against
// every A_i are checked to 1e-10 * rho_i before returning.
PerronData perron_data(const ValidatedKGraph& vk);

}  // namespace kbdiag
