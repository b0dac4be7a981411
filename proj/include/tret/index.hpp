#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tret/embedding.hpp"
#include "tret/graph.hpp"
#include "tret/providers.hpp"
#include "tret/tree.hpp"

#include "json.hpp"

namespace tret {

struct Summary {
  int id = 0;
  std::string text;
  std::string source;  // leaf-passthrough | generated
  long long token_count = 0;
};

// Leaves carry their node text verbatim; pass-through nodes copy their
// child; other internal nodes go through the summarizer.
Summary summarize_node(const EncodingTree& tree, int alpha, const TextualAttributedGraph& g,
                       Summarizer& summarizer);

// All tree nodes, ascending id. Pass-through copies reuse already-computed
// children, so each summary is generated once.
std::vector<Summary> summarize_tree(const EncodingTree& tree, const TextualAttributedGraph& g,
                                    Summarizer& summarizer, int threads = 1);

// Row i = embedding of the summary with the i-th id.
EmbeddingMatrix embed_tree(const std::vector<Summary>& summaries, Embedder& embedder);

struct AnnParams {
  int m = 16;        // neighbors kept per node
  int ef_build = 64; // beam width at insert
  int ef_search = 64;
};

// Deterministic navigable-small-world graph over the index embeddings;
// exact scan remains the reference behavior.
class AnnGraph {
 public:
  void build(const EmbeddingMatrix& emb, const AnnParams& params);
  std::vector<int> search(const EmbeddingMatrix& emb, std::span<const float> query, int k) const;
  bool empty() const { return links_.empty(); }
  const AnnParams& params() const { return params_; }

 private:
  AnnParams params_;
  std::vector<std::vector<int>> links_;
};

class TreeIndex {
 public:
  struct Entry {
    int id = 0;
    int level = 0;
  };

  TreeIndex() = default;
  TreeIndex(std::vector<Entry> entries, EmbeddingMatrix embeddings);

  const std::vector<Entry>& entries() const { return entries_; }
  const EmbeddingMatrix& embeddings() const { return embeddings_; }
  int dim() const { return embeddings_.dim(); }
  std::size_t size() const { return entries_.size(); }

  void enable_ann(const AnnParams& params);
  bool ann_enabled() const { return !ann_.empty(); }

  // Entry positions of the k nearest by cosine, similarity desc then id
  // asc. use_exact forces the scan even when ANN is built.
  std::vector<int> nearest(std::span<const float> query, int k, bool use_exact = false) const;

 private:
  std::vector<Entry> entries_;
  EmbeddingMatrix embeddings_;
  AnnGraph ann_;
};

// One entry per tree node, id order; ANN layer must pass a recall >= 0.95
// gate against the exact scan on seeded probes or the build fails.
TreeIndex build_index(const EncodingTree& tree, const std::vector<Summary>& summaries,
                      EmbeddingMatrix embeddings, bool ann_enabled = false,
                      const AnnParams& ann_params = {});

struct IndexManifest {
  int format_version = 1;
  int dim = 0;
  long long count = 0;
  int levels = 0;
  double lambda = 1.0;
  double bandwidth = 0.4;
  std::string bandwidth_mode = "auto";  // auto | fixed
  std::uint64_t seed = 42;
  int k_default = 6;
  int exact_threshold = 12;
  int subsample_cap = 2048;
  std::string node_embeddings_source = "provider";  // provider | file
  nlohmann::json embedder;    // spec without secrets
  nlohmann::json summarizer;  // spec without secrets
  std::string embedder_id;
  std::string summarizer_id;
  bool ann = false;
  int ann_m = 16;
  int ann_ef = 64;
  long long graph_nodes = 0;
  long long graph_edges = 0;
  std::string embeddings_checksum;  // fnv1a64 hex of embeddings.bin

  nlohmann::json to_json() const;
  static IndexManifest from_json(const nlohmann::json& j);
};

// embeddings.bin: "TRET" | u32 version=1 | u32 dim | u64 count | floats LE.
void write_embeddings_file(const std::filesystem::path& path, const EmbeddingMatrix& emb);
EmbeddingMatrix read_embeddings_file(const std::filesystem::path& path);

void save_index(const std::filesystem::path& dir, const TreeIndex& index, const EncodingTree& tree,
                const TextualAttributedGraph& g, const std::vector<Summary>& summaries,
                IndexManifest manifest);

// Aggregate; the graph sits on the heap so the tree's back-pointer stays
// valid when the whole bundle moves.
struct LoadedIndex {
  std::unique_ptr<TextualAttributedGraph> graph;
  EncodingTree tree;
  std::vector<Summary> summaries;
  TreeIndex index;
  IndexManifest manifest;
};

LoadedIndex load_index(const std::filesystem::path& dir);

}  // namespace tret
