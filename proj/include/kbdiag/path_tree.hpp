#pragma once
#include <cstdint>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "kbdiag/kgraph.hpp"

namespace kbdiag {

// A node is addressed by (level, index-within-level). Level 0 holds the N
// length-0 paths (one per vertex); level n holds the length-n paths rooted
// at level 0, in lexicographic order (root vertex, then successive edge
// labels).
struct NodeId {
  int level = 0;
  std::int64_t idx = 0;
  friend bool operator==(const NodeId&, const NodeId&) = default;
};

// Finite-depth slice of the stationary k-Bratteli diagram of a validated
// k-graph. Storage is arena-style: one contiguous array per level, children
// of a node occupy a contiguous range of the next level.
class PathTree {
 public:
  struct Level {
    std::vector<std::int64_t> parent;       // index into previous level; -1 at level 0
    std::vector<std::int32_t> source;       // s(path), 0-based vertex
    std::vector<std::int32_t> root;         // r(path) in V_0
    std::vector<std::int32_t> multiplicity; // copy index of the last edge (parallel edges)
    std::vector<std::int64_t> child_begin;  // range [child_begin, child_begin+child_count)
    std::vector<std::int32_t> child_count;  // in the next level; empty at the deepest level
  };

  const ValidatedKGraph& graph() const { return graph_; }
  const PerronData& perron() const { return perron_; }
  int depth() const { return depth_; }
  int vertex_count() const { return graph_.vertex_count(); }

  const Level& level(int n) const { return levels_[n]; }
  std::int64_t level_size(int n) const { return static_cast<std::int64_t>(levels_[n].source.size()); }
  std::int64_t leaf_count() const { return level_size(depth_); }
  std::int64_t total_nodes() const;

  std::int64_t parent_of(int level, std::int64_t idx) const { return levels_[level].parent[idx]; }
  int source_of(int level, std::int64_t idx) const { return levels_[level].source[idx]; }
  int root_of(int level, std::int64_t idx) const { return levels_[level].root[idx]; }
  std::int32_t child_count_of(int level, std::int64_t idx) const { return levels_[level].child_count[idx]; }
  std::int64_t child_begin_of(int level, std::int64_t idx) const { return levels_[level].child_begin[idx]; }

  // ancestor indices of a leaf: result[n] = index of the level-n prefix
  std::vector<std::int64_t> chain(std::int64_t leaf_idx) const;
  // index of the level-n prefix of a leaf
  std::int64_t ancestor(std::int64_t leaf_idx, int n) const;

 private:
  friend PathTree build_tree(const ValidatedKGraph&, const PerronData&, int depth,
                             std::uint64_t node_budget);
  PathTree(ValidatedKGraph g, PerronData p, int d)
      : graph_(std::move(g)), perron_(std::move(p)), depth_(d) {}
  ValidatedKGraph graph_;
  PerronData perron_;
  int depth_ = 0;
  std::vector<Level> levels_;
};

// Materializes all paths of length <= depth. Throws BudgetExceeded when the
// exact node count (computed from the level-size recurrence) exceeds the
// budget.
PathTree build_tree(const ValidatedKGraph& vk, const PerronData& perron, int depth,
                    std::uint64_t node_budget = 5'000'000);

// Ordered pairs (e, e') of distinct child edges of a node, as index pairs
// into the next level. Throws NotBranching when the node has < 2 children.
std::vector<std::pair<std::int64_t, std::int64_t>> ext1_pairs(const PathTree& tree, NodeId node);

// Deepest common ancestor of two depth-n leaves; empty when their root
// vertices differ (paths in different components of the boundary).
std::optional<NodeId> common_prefix(const PathTree& tree, std::int64_t leaf_x,
                                    std::int64_t leaf_y);

// Draws `count` leaves with the cylinder law: the root vertex with
// probability kappa_v, each child edge with probability kappa_{s(e)} /
// (rho_i kappa_{s(parent)}). Deterministic given the seed; sample j uses the
// stream (seed, j).
std::vector<std::int64_t> sample_paths(const PathTree& tree, std::uint64_t seed,
                                       std::int64_t count);

// One CSV row per node: id,parent,level,source_vertex,root_vertex,edge_target,edge_multiplicity
void dump_tree_csv(const PathTree& tree, std::ostream& os);

}  // namespace kbdiag
