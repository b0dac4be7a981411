#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tret/embedding.hpp"
#include "tret/entropy.hpp"
#include "tret/graph.hpp"

#include "json.hpp"

namespace tret {

struct TreeNode {
  int parent = -1;            // -1 for root
  std::vector<int> children;  // ordered by min_member
  int depth = 0;
  long long volume = 0;
  long long cut = 0;
  int min_member = -1;
  bool alive = true;

  // Sorted member indices; kept only while the node is childless. Internal
  // nodes materialize their sets from descendant leaves on demand.
  std::vector<int> members_store;

  bool is_leaf() const { return children.empty(); }
};

// Rooted hierarchy over the graph's node set. Every level partitions V
// (post-regulation); each internal node's set is the disjoint union of its
// children's sets. Ids are creation-ordered and stable across prunes
// (pruned ids are tombstoned); renumbered() produces the canonical
// contiguous numbering used for serialization.
class EncodingTree {
 public:
  explicit EncodingTree(const TextualAttributedGraph& g);

  const TextualAttributedGraph& graph() const { return *graph_; }

  int root() const { return root_; }
  int node_count() const { return live_count_; }
  std::vector<int> ids() const;

  const TreeNode& node(int id) const;
  bool is_pass_through(int id) const { return node(id).children.size() == 1; }

  // Sorted member indices of V_alpha.
  std::vector<int> members(int id) const;

  // Max depth over leaves.
  int height() const;

  int target_levels() const { return target_levels_; }
  void set_target_levels(int levels) { target_levels_ = levels; }

  // New childless node holding `members` (sorted on entry or sorted here),
  // attached under parent_id. Once a parent has children its own member
  // store is dropped; sets derive from leaves.
  int add_child(int parent_id, std::vector<int> members);

  // Lifts id's children to its parent and removes id. Subtree depths
  // decrease by one. Errors on root or leaf.
  void prune(int id);

  // Inserts a pass-through node between child_id and its parent; the new
  // node takes child's set, child's subtree moves one level down. Returns
  // the inserted id.
  int regulate_above(int child_id);

  // Structural consistency; with require_regulated also: every leaf is a
  // singleton at depth exactly target_levels and each level partitions V.
  void validate(bool require_regulated) const;

  // Canonical copy: nodes renumbered 0..N-1 by (depth, min_member).
  EncodingTree renumbered() const;

  nlohmann::json to_json() const;
  static EncodingTree from_json(const nlohmann::json& j, const TextualAttributedGraph& g);

 private:
  EncodingTree() = default;

  TreeNode& node_mut(int id);
  int new_node();
  void collect_members(int id, std::vector<int>& out) const;
  void shift_depth(int id, int delta);

  const TextualAttributedGraph* graph_ = nullptr;
  std::vector<TreeNode> nodes_;
  int root_ = 0;
  int live_count_ = 0;
  int target_levels_ = 0;
};

struct SolverConfig {
  int exact_threshold = 12;
  std::uint64_t seed = 42;
  int max_passes = 60;
  int power_iterations = 40;
  int kmeans_iterations = 25;
};

struct SplitResult {
  std::vector<int> side_a;  // contains the cluster's smallest index
  std::vector<int> side_b;
  double objective = 0.0;   // sum of the two child terms (Eq. 7 form)
};

// Bipartition of `cluster` minimizing the sum of the two child s2 terms
// under a parent of volume parent_volume. Exact enumeration up to
// cfg.exact_threshold, seeded local search beyond it.
SplitResult solve_bipartition(const TextualAttributedGraph& g, const EmbeddingMatrix& embeddings,
                              const EntropyParams& params, std::span<const int> cluster,
                              long long parent_volume, const SolverConfig& cfg);

// Applies solve_bipartition to tree node alpha (|V_alpha| >= 2): attaches
// both sides as children. Returns their ids (min_member order).
std::pair<int, int> partition_node(EncodingTree& tree, int alpha, const EmbeddingMatrix& embeddings,
                                   const EntropyParams& params, const SolverConfig& cfg);

// Entropy change of pruning alpha, computed incrementally in O(k_alpha):
// alpha's own term leaves, each child re-logs against Vol(parent), and the
// parent may lose its pass-through exemption.
double prune_delta(const EncodingTree& tree, int alpha, S2EntropyEngine& engine);

void prune_node(EncodingTree& tree, int alpha);

// Inserts a pass-through node between beta and its parent alpha.
int regulate(EncodingTree& tree, int alpha, int beta);

// Three stages: recursive bipartition to singletons; prune back to height
// <= levels by minimum entropy increase; regulate every leaf to depth
// exactly `levels`. Returns the canonical renumbered tree.
EncodingTree build_encoding_tree(const TextualAttributedGraph& g,
                                 const EmbeddingMatrix& embeddings, const EntropyParams& params,
                                 int levels, const SolverConfig& cfg);

}  // namespace tret
