#include "kbdiag/kgraph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace kbdiag {

double PerronData::kappa_min() const {
  return *std::min_element(kappa.begin(), kappa.end());
}
double PerronData::kappa_max() const {
  return *std::max_element(kappa.begin(), kappa.end());
}

std::int64_t ValidatedKGraph::row_sum(int one_based, int v) const {
  const IntMatrix& a = matrix(one_based);
  std::int64_t s = 0;
  for (int w = 0; w < spec_.N; ++w) s += a[v][w];
  return s;
}

std::int64_t ValidatedKGraph::max_row_sum() const {
  std::int64_t best = 0;
  for (int i = 1; i <= spec_.k; ++i)
    for (int v = 0; v < spec_.N; ++v) best = std::max(best, row_sum(i, v));
  return best;
}

std::int64_t ValidatedKGraph::min_row_sum() const {
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (int i = 1; i <= spec_.k; ++i)
    for (int v = 0; v < spec_.N; ++v) best = std::min(best, row_sum(i, v));
  return best;
}

namespace {

void check_shape(const KGraphSpec& spec) {
  if (spec.k < 1 || static_cast<int>(spec.matrices.size()) != spec.k)
    throw DimensionMismatch("expected k = " + std::to_string(spec.k) + " vertex matrices, got " +
                            std::to_string(spec.matrices.size()));
  if (spec.N < 1) throw DimensionMismatch("vertex count must be positive");
  for (int i = 0; i < spec.k; ++i) {
    const IntMatrix& a = spec.matrices[i];
    if (static_cast<int>(a.size()) != spec.N)
      throw DimensionMismatch("matrix A_" + std::to_string(i + 1) + " is not " +
                              std::to_string(spec.N) + "x" + std::to_string(spec.N));
    for (const auto& row : a) {
      if (static_cast<int>(row.size()) != spec.N)
        throw DimensionMismatch("matrix A_" + std::to_string(i + 1) + " has a ragged row");
      for (std::int64_t e : row)
        if (e < 0) throw DimensionMismatch("matrix entries must be non-negative integers");
    }
  }
}

IntMatrix multiply(const IntMatrix& a, const IntMatrix& b, int n) {
  IntMatrix c(n, std::vector<std::int64_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) {
      const std::int64_t ail = a[i][l];
      if (ail == 0) continue;
      for (int j = 0; j < n; ++j) c[i][j] += ail * b[l][j];
    }
  return c;
}

// strong connectivity of the digraph with an arc v->w whenever some
// A_i(v, w) > 0; equivalent to (I + sum A_i)^N being entrywise positive
bool strongly_connected_union(const KGraphSpec& spec) {
  const int n = spec.N;
  std::vector<std::vector<int>> fwd(n), bwd(n);
  for (int v = 0; v < n; ++v)
    for (int w = 0; w < n; ++w) {
      bool arc = false;
      for (int i = 0; i < spec.k && !arc; ++i) arc = spec.matrices[i][v][w] > 0;
      if (arc) {
        fwd[v].push_back(w);
        bwd[w].push_back(v);
      }
    }
  auto reaches_all = [n](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          ++count;
          stack.push_back(w);
        }
    }
    return count == n;
  };
  return reaches_all(fwd) && reaches_all(bwd);
}

// Power iteration on C = I + sum_i A_i. C is primitive for an irreducible
// family, so the normalized iterates converge to the common eigenvector.
bool power_iterate_common(const KGraphSpec& spec, std::vector<double>& kappa) {
  const int n = spec.N;
  std::vector<double> v(n, 1.0 / n), next(n);
  const int max_iters = 100000;
  for (int iter = 0; iter < max_iters; ++iter) {
    for (int p = 0; p < n; ++p) {
      double acc = v[p];
      for (int i = 0; i < spec.k; ++i) {
        const auto& a = spec.matrices[i];
        for (int q = 0; q < n; ++q) acc += static_cast<double>(a[p][q]) * v[q];
      }
      next[p] = acc;
    }
    double sum = 0.0;
    for (double x : next) sum += x;
    double diff = 0.0;
    for (int p = 0; p < n; ++p) {
      next[p] /= sum;
      diff = std::max(diff, std::abs(next[p] - v[p]));
    }
    v.swap(next);
    if (diff < 1e-16) {
      kappa = v;
      return true;
    }
  }
  return false;
}

// dense fallback: Perron vector of C via a full eigensolve
bool dense_eigensolve_common(const KGraphSpec& spec, std::vector<double>& kappa) {
  const int n = spec.N;
  if (n > 64) return false;
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < spec.k; ++i)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) c(p, q) += static_cast<double>(spec.matrices[i][p][q]);
  Eigen::EigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) return false;
  int best = 0;
  for (int j = 1; j < n; ++j)
    if (es.eigenvalues()(j).real() > es.eigenvalues()(best).real()) best = j;
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  if (v.sum() < 0) v = -v;
  if ((v.array() <= 0).any()) return false;
  v /= v.sum();
  kappa.assign(v.data(), v.data() + n);
  return true;
}

// rho_i and the worst residual of A_i kappa = rho_i kappa
void radii_from_kappa(const KGraphSpec& spec, const std::vector<double>& kappa,
                      std::vector<double>& rho, double& worst_rel_residual) {
  const int n = spec.N;
  rho.assign(spec.k, 0.0);
  worst_rel_residual = 0.0;
  for (int i = 0; i < spec.k; ++i) {
    std::vector<double> av(n, 0.0);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) av[p] += static_cast<double>(spec.matrices[i][p][q]) * kappa[q];
    double r = 0.0;
    for (double x : av) r += x;  // sum kappa = 1
    rho[i] = r;
    double res = 0.0;
    for (int p = 0; p < n; ++p) res = std::max(res, std::abs(av[p] - r * kappa[p]));
    worst_rel_residual = std::max(worst_rel_residual, res / r);
  }
}

}  // namespace

ValidatedKGraph validate(const KGraphSpec& spec) {
  check_shape(spec);
  for (int i = 0; i < spec.k; ++i)
    for (int j = i + 1; j < spec.k; ++j)
      if (multiply(spec.matrices[i], spec.matrices[j], spec.N) !=
          multiply(spec.matrices[j], spec.matrices[i], spec.N))
        throw NotCommuting(i + 1, j + 1);
  if (!strongly_connected_union(spec)) throw NotIrreducible();

  ValidatedKGraph vk(spec);
  PerronData pd = perron_data(vk);
  for (int i = 0; i < spec.k; ++i)
    if (pd.rho[i] <= 1.0 + 1e-12) throw SpectralRadiusAtMostOne(i + 1);
  return vk;
}

PerronData perron_data(const ValidatedKGraph& vk) {
  const KGraphSpec& spec = vk.spec();
  PerronData pd;
  if (spec.N == 1) {
    pd.kappa = {1.0};
    pd.rho.resize(spec.k);
    pd.rho_product = 1.0;
    for (int i = 0; i < spec.k; ++i) {
      pd.rho[i] = static_cast<double>(spec.matrices[i][0][0]);
      pd.rho_product *= pd.rho[i];
    }
    return pd;
  }

  std::vector<double> kappa;
  double residual = std::numeric_limits<double>::infinity();
  if (power_iterate_common(spec, kappa))
    radii_from_kappa(spec, kappa, pd.rho, residual);
  if (residual > 1e-10) {
    std::vector<double> kappa2;
    if (dense_eigensolve_common(spec, kappa2)) {
      double residual2 = std::numeric_limits<double>::infinity();
      std::vector<double> rho2;
      radii_from_kappa(spec, kappa2, rho2, residual2);
      if (residual2 < residual) {
        kappa = kappa2;
        pd.rho = rho2;
        residual = residual2;
      }
    }
  }
  if (kappa.empty() || residual > 1e-10)
    throw NoConvergence("Perron iteration did not reach the residual target (" +
                        std::to_string(residual) + " relative)");
  pd.kappa = kappa;
  pd.rho_product = 1.0;
  for (double r : pd.rho) pd.rho_product *= r;
  return pd;
}

}  // namespace kbdiag
