#pragma once

#include <span>
#include <string>
#include <vector>

#include "tret/graph.hpp"
#include "tret/index.hpp"
#include "tret/providers.hpp"
#include "tret/tree.hpp"

namespace tret {

struct Hit {
  int id = 0;      // tree node
  int level = 0;   // tree depth
  double sim = 0;  // cosine similarity
};

struct RetrievalResult {
  std::vector<Hit> hits;                // similarity desc, id asc
  TextualAttributedGraph subgraph;      // union of hit-induced subgraphs
  std::string textualization;
  long long context_tokens = 0;
  long long full_graph_tokens = 0;
};

// TopK over all entries uniformly; ties by tree-node id ascending.
std::vector<Hit> top_k_nodes(const TreeIndex& index, std::span<const float> query_embedding,
                             int k);

// Union of induced subgraphs: every hit's nodes plus edges internal to at
// least one single hit; cross-hit edges stay out.
TextualAttributedGraph extract_union_subgraph(const EncodingTree& tree,
                                              const TextualAttributedGraph& g,
                                              std::span<const Hit> hits);

// "node <id>: <text>" lines in id order, then "edge <a> -- <b>: <text|->"
// lines in (a, b) order; ids compare as strings.
std::string textualize(const TextualAttributedGraph& g);

RetrievalResult retrieve(const TreeIndex& index, const EncodingTree& tree,
                         const TextualAttributedGraph& g, std::span<const float> query_embedding,
                         int k);

struct Answer {
  std::string text;     // empty in offline mode
  std::string prompt;
  std::string provider_id;
};

// Fixed prompt template; a null chat provider means offline (prompt
// assembled, no call made).
Answer answer_query(const std::string& query, const RetrievalResult& result, ChatProvider* chat);

}  // namespace tret
