#include "kbdiag/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kbdiag {

Eigen::MatrixXd delta_s_matrix(const PathTree& tree, const Annotations& ann, int m) {
  if (m < 1 || m > tree.depth())
    throw ParamOutOfRange("matrix level must lie in [1, depth]");
  const std::int64_t n = tree.level_size(m);
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(n, n);

  // ancestor index of every level-m node at every level above it
  std::vector<std::vector<std::int64_t>> anc(m + 1, std::vector<std::int64_t>(n));
  for (std::int64_t i = 0; i < n; ++i) anc[m][i] = i;
  for (int l = m; l > 0; --l)
    for (std::int64_t i = 0; i < n; ++i) anc[l - 1][i] = tree.parent_of(l, anc[l][i]);

  for (std::int64_t a = 0; a < n; ++a) {
    double diag = 0.0;
    for (int j = 0; j < m; ++j)
      diag -= (ann.mu(j, anc[j][a]) - ann.mu(j + 1, anc[j + 1][a])) / ann.G(j, anc[j][a]);
    mat(a, a) = diag;
    for (std::int64_t b = 0; b < n; ++b) {
      if (a == b) continue;
      if (tree.root_of(m, a) != tree.root_of(m, b)) continue;
      int l = m;
      std::int64_t pa = a, pb = b;
      while (pa != pb) {
        pa = tree.parent_of(l, pa);
        pb = tree.parent_of(l, pb);
        --l;
      }
      mat(a, b) = ann.mu(m, b) / ann.G(l, pa);
    }
  }
  return mat;
}

EigenBasis eigenbasis(const PathTree& tree, const Annotations& ann, int m) {
  if (m < 1 || m > tree.depth())
    throw ParamOutOfRange("basis level must lie in [1, depth]");
  EigenBasis basis;
  basis.level = m;

  for (std::int64_t v = 0; v < tree.level_size(0); ++v) {
    BasisVector r;
    r.node = NodeId{0, v};
    r.coeff = {1.0 / std::sqrt(ann.mu(0, v))};
    r.lambda = 0.0;
    basis.root_functions.push_back(std::move(r));
  }

  basis.first_vector.resize(m);
  for (int l = 0; l < m; ++l) {
    basis.first_vector[l].resize(tree.level_size(l));
    for (std::int64_t i = 0; i < tree.level_size(l); ++i) {
      basis.first_vector[l][i] = static_cast<std::int64_t>(basis.vectors.size());
      const std::int32_t p = tree.child_count_of(l, i);
      const std::int64_t cb = tree.child_begin_of(l, i);
      std::vector<double> cmu(p);
      for (std::int32_t c = 0; c < p; ++c) cmu[c] = ann.mu(l + 1, cb + c);
      auto dot = [&](const std::vector<double>& u, const std::vector<double>& w) {
        double acc = 0.0;
        for (std::int32_t c = 0; c < p; ++c) acc += u[c] * w[c] * cmu[c];
        return acc;
      };
      std::vector<std::vector<double>> ortho;
      for (std::int32_t j = 1; j < p; ++j) {
        std::vector<double> g(p, 0.0);
        g[0] = 1.0 / cmu[0];
        g[j] = -1.0 / cmu[j];
        for (const auto& q : ortho) {
          const double c = dot(g, q);
          for (std::int32_t t = 0; t < p; ++t) g[t] -= c * q[t];
        }
        const double norm = std::sqrt(dot(g, g));
        for (double& x : g) x /= norm;
        ortho.push_back(std::move(g));
      }
      for (auto& g : ortho) {
        BasisVector bv;
        bv.node = NodeId{l, i};
        bv.coeff = std::move(g);
        bv.lambda = ann.lambda(l, i);
        basis.vectors.push_back(std::move(bv));
      }
    }
  }
  return basis;
}

double evaluate_basis_vector(const PathTree& tree, const BasisVector& v, std::int64_t leaf) {
  if (v.coeff.size() == 1) {  // component indicator
    return tree.ancestor(leaf, v.node.level) == v.node.idx ? v.coeff[0] : 0.0;
  }
  if (tree.ancestor(leaf, v.node.level) != v.node.idx) return 0.0;
  const std::int64_t child = tree.ancestor(leaf, v.node.level + 1);
  return v.coeff[child - tree.child_begin_of(v.node.level, v.node.idx)];
}

SpectrumReport spectrum_match(const PathTree& tree, const Annotations& ann, int m,
                              double tolerance) {
  SpectrumReport report;
  report.tolerance = tolerance;

  const Eigen::MatrixXd mat = delta_s_matrix(tree, ann, m);
  const std::int64_t n = mat.rows();
  Eigen::VectorXd sqrt_mu(n);
  for (std::int64_t i = 0; i < n; ++i) sqrt_mu(i) = std::sqrt(ann.mu(m, i));
  // detailed balance makes D^{1/2} M D^{-1/2} symmetric
  Eigen::MatrixXd sym = sqrt_mu.asDiagonal() * mat * sqrt_mu.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  report.matrix_eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);

  for (std::int64_t v = 0; v < tree.level_size(0); ++v) report.closed_form.push_back(0.0);
  for (int l = 0; l < m; ++l)
    for (std::int64_t i = 0; i < tree.level_size(l); ++i) {
      const int mult = tree.child_count_of(l, i) - 1;
      for (int j = 0; j < mult; ++j) report.closed_form.push_back(ann.lambda(l, i));
    }
  std::sort(report.closed_form.begin(), report.closed_form.end());

  if (report.closed_form.size() != report.matrix_eigenvalues.size()) {
    report.max_rel_deviation = std::numeric_limits<double>::infinity();
    report.pass = false;
    return report;
  }
  for (std::size_t i = 0; i < report.closed_form.size(); ++i) {
    const double want = report.closed_form[i];
    const double got = report.matrix_eigenvalues[i];
    const double rel = std::abs(got - want) / std::max(1.0, std::abs(want));
    report.max_rel_deviation = std::max(report.max_rel_deviation, rel);
  }
  report.pass = report.max_rel_deviation <= tolerance;
  return report;
}

}  // namespace kbdiag
