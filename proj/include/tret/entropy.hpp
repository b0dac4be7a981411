#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "tret/embedding.hpp"
#include "tret/graph.hpp"

namespace tret {

class EncodingTree;

// Mixed-base contract: the structural term uses log2, semantic density
// entropy uses natural log; lambda absorbs the scale difference.
struct EntropyParams {
  double lambda = 1.0;    // semantic weight, >= 0
  double bandwidth = 0.4; // Gaussian KDE bandwidth h, > 0
  int dim = 0;            // embedding dimension d, >= 1

  // Clusters larger than the cap use a seeded uniform subsample for
  // semantic entropy; the exact quadratic evaluation is used below it.
  int subsample_cap = 2048;
  std::uint64_t subsample_seed = 42;

  void validate() const;
};

// log p(z) for the Gaussian-kernel density of `cluster` (rows of
// `embeddings`), evaluated at `point`. Log-sum-exp stabilized; the point's
// own kernel term is included whenever the point belongs to the cluster.
double kde_log_density(std::span<const float> point, const EmbeddingMatrix& embeddings,
                       std::span<const int> cluster, const EntropyParams& params);

// H_sem(V_a) = -(1/n) sum_v log p(z_v), in nats. May be negative.
double semantic_entropy(std::span<const int> cluster, const EmbeddingMatrix& embeddings,
                        const EntropyParams& params);
double semantic_entropy(const NodeSet& cluster, const EmbeddingMatrix& embeddings,
                        const EntropyParams& params);

// -(cut/total_vol) * log2(vol/parent_vol), in bits; exactly 0 when cut==0.
double structural_term_raw(long long cut, long long vol, long long parent_vol,
                           long long total_vol);

// Structural entropy term of child_set under parent_set. Throws unless
// child_set is a subset of parent_set.
double structural_term(const TextualAttributedGraph& g, const NodeSet& child_set,
                       const NodeSet& parent_set);

// structural_term + lambda * H_sem(child_set). A pass-through tree node
// (exactly one child, identical node set) contributes zero semantic
// entropy; callers flag that case.
double s2_term(const TextualAttributedGraph& g, const NodeSet& child_set,
               const NodeSet& parent_set, const EmbeddingMatrix& embeddings,
               const EntropyParams& params, bool pass_through = false);

// Sum of s2 terms over all non-root tree nodes.
double total_tree_entropy(const EncodingTree& tree, const TextualAttributedGraph& g,
                          const EmbeddingMatrix& embeddings, const EntropyParams& params);

// Grid value maximizing mean leave-one-out log density over all rows.
// Ties break toward the smallest bandwidth; fewer than 2 rows returns the
// grid midpoint with a warning on stderr.
double select_bandwidth(const EmbeddingMatrix& embeddings, std::span<const double> grid);

inline std::span<const double> default_bandwidth_grid() {
  static const double grid[] = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
  return grid;
}

// Shared evaluation context for one (graph, embeddings, params) triple.
// Semantic entropies are memoized per node set behind a single-writer lock.
class S2EntropyEngine {
 public:
  S2EntropyEngine(const TextualAttributedGraph& g, const EmbeddingMatrix& embeddings,
                  EntropyParams params);

  const EntropyParams& params() const { return params_; }
  const TextualAttributedGraph& graph() const { return graph_; }
  const EmbeddingMatrix& embeddings() const { return embeddings_; }

  // Memoized H_sem; `sorted_members` must be sorted ascending.
  double semantic(const std::vector<int>& sorted_members);

  double structural(long long cut, long long vol, long long parent_vol) const;

  // Full s2 term of a non-root tree node, applying the pass-through
  // exemption (single-child nodes carry no semantic term).
  double node_term(const EncodingTree& tree, int id);

  struct Breakdown {
    double structural = 0.0;
    double semantic_weighted = 0.0;
    double total() const { return structural + semantic_weighted; }
  };
  Breakdown total(const EncodingTree& tree);

 private:
  const TextualAttributedGraph& graph_;
  const EmbeddingMatrix& embeddings_;
  EntropyParams params_;
  std::map<std::vector<int>, double> memo_;
  std::mutex memo_mutex_;
};

}  // namespace tret
