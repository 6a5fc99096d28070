#include "kbdiag/path_tree.hpp"

#include <algorithm>

#include "kbdiag/parallel.hpp"
#include "kbdiag/rng.hpp"

namespace kbdiag {

std::int64_t PathTree::total_nodes() const {
  std::int64_t n = 0;
  for (int l = 0; l <= depth_; ++l) n += level_size(l);
  return n;
}

std::vector<std::int64_t> PathTree::chain(std::int64_t leaf_idx) const {
  std::vector<std::int64_t> out(depth_ + 1);
  out[depth_] = leaf_idx;
  for (int n = depth_; n > 0; --n) out[n - 1] = levels_[n].parent[out[n]];
  return out;
}

std::int64_t PathTree::ancestor(std::int64_t leaf_idx, int n) const {
  std::int64_t idx = leaf_idx;
  for (int l = depth_; l > n; --l) idx = levels_[l].parent[idx];
  return idx;
}

PathTree build_tree(const ValidatedKGraph& vk, const PerronData& perron, int depth,
                    std::uint64_t node_budget) {
  const int N = vk.vertex_count();

  // exact node count from the per-vertex level-size recurrence
  {
    std::vector<unsigned __int128> cnt(N, 1);
    unsigned __int128 total = N;
    for (int n = 0; n < depth; ++n) {
      const IntMatrix& a = vk.matrix(vk.matrix_index_for_level(n));
      std::vector<unsigned __int128> next(N, 0);
      for (int v = 0; v < N; ++v)
        for (int w = 0; w < N; ++w)
          next[w] += cnt[v] * static_cast<unsigned __int128>(a[v][w]);
      unsigned __int128 lvl = 0;
      for (int w = 0; w < N; ++w) lvl += next[w];
      total += lvl;
      if (total > node_budget)
        throw BudgetExceeded(total > 0xffffffffffffffffULL
                                 ? 0xffffffffffffffffULL
                                 : static_cast<std::uint64_t>(total));
      cnt.swap(next);
    }
  }

  PathTree tree(vk, perron, depth);
  tree.levels_.resize(depth + 1);

  PathTree::Level& l0 = tree.levels_[0];
  l0.parent.assign(N, -1);
  l0.source.resize(N);
  l0.root.resize(N);
  l0.multiplicity.assign(N, 0);
  for (int v = 0; v < N; ++v) {
    l0.source[v] = v;
    l0.root[v] = v;
  }

  for (int n = 0; n < depth; ++n) {
    const IntMatrix& a = vk.matrix(vk.matrix_index_for_level(n));
    PathTree::Level& cur = tree.levels_[n];
    PathTree::Level& nxt = tree.levels_[n + 1];
    const std::int64_t sz = static_cast<std::int64_t>(cur.source.size());
    cur.child_begin.resize(sz);
    cur.child_count.resize(sz);

    std::int64_t next_sz = 0;
    for (std::int64_t p = 0; p < sz; ++p) {
      const int v = cur.source[p];
      std::int64_t m = 0;
      for (int w = 0; w < N; ++w) m += a[v][w];
      cur.child_begin[p] = next_sz;
      cur.child_count[p] = static_cast<std::int32_t>(m);
      next_sz += m;
    }

    nxt.parent.resize(next_sz);
    nxt.source.resize(next_sz);
    nxt.root.resize(next_sz);
    nxt.multiplicity.resize(next_sz);
    par_for(sz, [&](std::int64_t p) {
      const int v = cur.source[p];
      std::int64_t c = cur.child_begin[p];
      for (int w = 0; w < N; ++w)
        for (std::int64_t copy = 0; copy < a[v][w]; ++copy, ++c) {
          nxt.parent[c] = p;
          nxt.source[c] = w;
          nxt.root[c] = cur.root[p];
          nxt.multiplicity[c] = static_cast<std::int32_t>(copy);
        }
    });
  }
  return tree;
}

std::vector<std::pair<std::int64_t, std::int64_t>> ext1_pairs(const PathTree& tree, NodeId node) {
  if (node.level >= tree.depth())
    throw NotBranching(node.level, node.idx);
  const std::int32_t m = tree.child_count_of(node.level, node.idx);
  if (m < 2) throw NotBranching(node.level, node.idx);
  const std::int64_t b = tree.child_begin_of(node.level, node.idx);
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  out.reserve(static_cast<std::size_t>(m) * (m - 1));
  for (std::int32_t i = 0; i < m; ++i)
    for (std::int32_t j = 0; j < m; ++j)
      if (i != j) out.emplace_back(b + i, b + j);
  return out;
}

std::optional<NodeId> common_prefix(const PathTree& tree, std::int64_t leaf_x,
                                    std::int64_t leaf_y) {
  const int d = tree.depth();
  if (tree.root_of(d, leaf_x) != tree.root_of(d, leaf_y)) return std::nullopt;
  std::int64_t a = leaf_x, b = leaf_y;
  int level = d;
  while (a != b) {
    a = tree.parent_of(level, a);
    b = tree.parent_of(level, b);
    --level;
  }
  return NodeId{level, a};
}

std::vector<std::int64_t> sample_paths(const PathTree& tree, std::uint64_t seed,
                                       std::int64_t count) {
  const int N = tree.vertex_count();
  const auto& kappa = tree.perron().kappa;
  const auto& rho = tree.perron().rho;

  // per-(level, vertex) cumulative child-slot distribution; the slot order
  // matches the lexicographic child order of build_tree
  struct VertexDist {
    std::vector<double> cdf;      // per child slot
    std::vector<std::int32_t> to; // target vertex per slot
  };
  std::vector<std::vector<VertexDist>> dist(tree.depth());
  for (int n = 0; n < tree.depth(); ++n) {
    const int mi = tree.graph().matrix_index_for_level(n);
    const IntMatrix& a = tree.graph().matrix(mi);
    dist[n].resize(N);
    for (int v = 0; v < N; ++v) {
      VertexDist& d = dist[n][v];
      double acc = 0.0;
      for (int w = 0; w < N; ++w)
        for (std::int64_t copy = 0; copy < a[v][w]; ++copy) {
          acc += kappa[w] / (rho[mi - 1] * kappa[v]);
          d.cdf.push_back(acc);
          d.to.push_back(w);
        }
      if (!d.cdf.empty()) d.cdf.back() = 1.0;  // close the rounding gap
    }
  }
  std::vector<double> root_cdf(N);
  {
    double acc = 0.0;
    for (int v = 0; v < N; ++v) {
      acc += kappa[v];
      root_cdf[v] = acc;
    }
    root_cdf[N - 1] = 1.0;
  }

  std::vector<std::int64_t> leaves(count);
  par_for(count, [&](std::int64_t j) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(j));
    const double u0 = rng.next_double();
    std::int64_t idx = static_cast<std::int64_t>(
        std::lower_bound(root_cdf.begin(), root_cdf.end(), u0) - root_cdf.begin());
    if (idx >= N) idx = N - 1;
    for (int n = 0; n < tree.depth(); ++n) {
      const VertexDist& d = dist[n][tree.source_of(n, idx)];
      const double u = rng.next_double();
      std::int64_t slot = static_cast<std::int64_t>(
          std::lower_bound(d.cdf.begin(), d.cdf.end(), u) - d.cdf.begin());
      if (slot >= static_cast<std::int64_t>(d.cdf.size()))
        slot = static_cast<std::int64_t>(d.cdf.size()) - 1;
      idx = tree.child_begin_of(n, idx) + slot;
    }
    leaves[j] = idx;
  });
  return leaves;
}

void dump_tree_csv(const PathTree& tree, std::ostream& os) {
  os << "level,idx,parent,source_vertex,root_vertex,edge_target,edge_multiplicity\n";
  for (int n = 0; n <= tree.depth(); ++n) {
    const auto& l = tree.level(n);
    for (std::int64_t i = 0; i < tree.level_size(n); ++i) {
      os << n << ',' << i << ',' << l.parent[i] << ',' << l.source[i] + 1 << ','
         << l.root[i] + 1 << ',';
      if (n == 0)
        os << ",";
      else
        os << l.source[i] + 1 << ',' << l.multiplicity[i];
      os << '\n';
    }
  }
}

}  // namespace kbdiag
