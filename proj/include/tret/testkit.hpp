#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tret/embedding.hpp"
#include "tret/entropy.hpp"
#include "tret/graph.hpp"
#include "tret/tree.hpp"

namespace tret::testkit {

// Total S2-entropy recomputed with no caches: cuts by full edge scan,
// volumes by degree sum, KDE by an unstabilized double loop. Clusters are
// evaluated in full, so comparisons against the engine are meaningful only
// below the subsample cap.
double oracle_total_entropy(const EncodingTree& tree, const TextualAttributedGraph& g,
                            const EmbeddingMatrix& embeddings, const EntropyParams& params);

// Scans all 2^(n-1)-1 bipartitions of cluster (2 <= n <= 20) and returns
// the optimum. Mask convention, objective expression, and tie-break match
// the solver's exact path, so agreement there is bit-exact.
SplitResult enumerate_bipartitions(const TextualAttributedGraph& g, std::vector<int> cluster,
                                   const EmbeddingMatrix& embeddings, const EntropyParams& params);

struct PlantedInstance {
  std::unique_ptr<TextualAttributedGraph> graph;
  EmbeddingMatrix embeddings;
  std::vector<int> labels;  // planted block per node index
  int u = -1;               // designated pair, path/barbell kinds only
  int v = -1;
};

struct PlantedConfig {
  int blocks = 2;
  double p_in = 0.5;
  double p_out = 0.05;
  int dim = 16;
  double noise = 0.1;  // embedding jitter scale around the block center
};

// kind: "sbm" | "path" | "barbell".
// semantic_layout: sbm takes "aligned" (embeddings cluster with the planted
// blocks) or "misaligned" (independent random semantic grouping); path and
// barbell take "endpoints-identical" (z_u == z_v, interior nodes mutually
// distant).
PlantedInstance gen_planted(const std::string& kind, int n, std::uint64_t seed,
                            const std::string& semantic_layout, const PlantedConfig& config = {});

struct CatalyticInstance {
  std::unique_ptr<TextualAttributedGraph> graph;
  EmbeddingMatrix embeddings;
  int u = 0;
  int v = 0;
  double delta = 0.05;  // sim(z_u, z_v) > 1 - delta
  int gamma = 3;        // geodesic distance d_G(u, v) > gamma
  double bandwidth = 0.3;
  std::vector<double> lambda_grid;
};

// Five-node path u-w1-w2-w3-v, d=8, z_u == z_v == e1 and w_i on separate
// basis axes; lambda grid [0, 10] step 0.25.
CatalyticInstance shipped_path_instance();

struct SweepRow {
  double lambda = 0.0;
  bool co_clustered = false;
  double objective = 0.0;
  std::vector<int> pair_side;  // side holding u (and v when co-clustered)
  std::vector<int> bridging;   // pair_side minus {u, v}, co-clustered rows only
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> lambda0;  // smallest grid lambda with co-clustering
  bool monotone = true;           // co-clustering, once reached, persists up the grid
};

// Exhaustive optimal root bipartition per grid value; bandwidth and dim
// come from base_params (callers usually copy instance.bandwidth in).
SweepResult catalytic_sweep(const CatalyticInstance& instance, std::span<const double> lambda_grid,
                            const EntropyParams& base_params);

// BFS hop count, -1 when unreachable.
int geodesic_distance(const TextualAttributedGraph& g, int u, int v);

// G(n, p) with ids "0".."n-1" and texts "node <i>".
TextualAttributedGraph gen_random_graph(int n, double edge_prob, std::uint64_t seed);

// Unit-norm rows, componentwise uniform before normalization.
EmbeddingMatrix gen_random_embeddings(int n, int dim, std::uint64_t seed);

// Random multiway hierarchy over g: recursive random splits down to
// max_height plus occasional pass-through insertions. Leaves may hold
// several members; the tree validates structurally but is not regulated.
EncodingTree gen_random_tree(const TextualAttributedGraph& g, int max_height, std::uint64_t seed);

// Pair-counting agreement between two labelings of the same universe.
double rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace tret::testkit
