#pragma once
#include <Eigen/Dense>

#include "kbdiag/annotations.hpp"

namespace kbdiag {

// Action of the Laplace-Beltrami operator on functions constant on depth-m
// cylinders, as a matrix over the level-m nodes:
//   M[a][b] = mu[b] / G(a ^ b)          for a != b in the same component,
//   M[a][a] = -sum_{j<m} (mu[a_j] - mu[a_{j+1}]) / G(a_j),
//   M[a][b] = 0                         across components.
// Rows sum to zero and off-diagonal entries are non-negative, so M generates
// a continuous-time Markov chain; it is self-adjoint for the mu-weighted
// inner product.
Eigen::MatrixXd delta_s_matrix(const PathTree& tree, const Annotations& ann, int m);

// One orthonormal eigenfunction, constant on the children of `node`:
// the value on child slot j is coeff[j], zero outside [node].
struct BasisVector {
  NodeId node;
  std::vector<double> coeff;
  double lambda = 0.0;
};

// Complete orthonormal system of the depth-m cylinder functions: one
// normalized indicator per level-0 component (eigenvalue 0) plus, for every
// internal node with p children, p-1 mean-zero vectors obtained by
// Gram-Schmidt over the child-indicator differences in child order.
// Total count = N + sum (children - 1) = number of depth-m cylinders.
struct EigenBasis {
  int level = 0;
  std::vector<BasisVector> root_functions;  // constant 1/sqrt(mu[v]) on [v]
  std::vector<BasisVector> vectors;         // mean-zero, ordered by (level, node)
  // vectors of node (l, i) occupy [first_vector[l][i], first_vector[l][i] + children - 1)
  std::vector<std::vector<std::int64_t>> first_vector;
};

EigenBasis eigenbasis(const PathTree& tree, const Annotations& ann, int m);

// Value of a basis vector at (the cylinder of) a leaf.
double evaluate_basis_vector(const PathTree& tree, const BasisVector& v, std::int64_t leaf);

// Eigenvalues of the level-m matrix (via the symmetrization
// D^{1/2} M D^{-1/2}) against the closed-form multiset
// {0 with multiplicity N} + {lambda(node) with multiplicity children-1}.
struct SpectrumReport {
  std::vector<double> matrix_eigenvalues;  // ascending
  std::vector<double> closed_form;         // ascending
  double max_rel_deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

SpectrumReport spectrum_match(const PathTree& tree, const Annotations& ann, int m,
                              double tolerance = 1e-8);

}  // namespace kbdiag
