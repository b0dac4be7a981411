#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tret {

struct NodeRecord {
  std::string id;
  std::string text;
};

// Edge as it appears in input records; endpoints by id, text optional
// (empty string means no attribute).
struct RawEdge {
  std::string src;
  std::string dst;
  std::string text;
};

// Immutable undirected graph with text attributes on nodes and edges.
// Node order is first-appearance order; all entropy accounting (degrees,
// volumes, cuts) is derived from the adjacency built here.
class TextualAttributedGraph {
 public:
  struct Edge {
    int u;  // u < v, indices into node order
    int v;
    std::string text;
  };

  TextualAttributedGraph() = default;

  // Validates: unique ids, known endpoints, no self-loops. Duplicate
  // undirected edges (including reversed duplicates) are dropped and counted.
  TextualAttributedGraph(std::vector<NodeRecord> nodes, const std::vector<RawEdge>& edges);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  long long total_volume() const { return 2LL * edge_count(); }

  const std::string& node_id(int v) const { return nodes_[v].id; }
  const std::string& node_text(int v) const { return nodes_[v].text; }

  // -1 if unknown.
  int index_of(std::string_view id) const;
  // Throws DataError("unknown node id ...") if unknown.
  int require_index(std::string_view id) const;

  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
  std::span<const int> neighbors(int v) const { return adjacency_[v]; }
  std::span<const Edge> edges() const { return edges_; }
  bool has_edge(int u, int v) const;
  // Stored edge for the unordered pair, nullptr if absent.
  const Edge* find_edge(int u, int v) const;

  // Reversed/duplicate input edges collapsed at load.
  int duplicate_edges_dropped() const { return duplicate_edges_dropped_; }

 private:
  std::vector<NodeRecord> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;  // sorted neighbor lists
  std::unordered_map<std::string, int> index_;
  int duplicate_edges_dropped_ = 0;
};

// A subset of V with cached volume and cut, bound to the graph it was
// computed against. Members are sorted node indices.
class NodeSet {
 public:
  static NodeSet from_indices(const TextualAttributedGraph& g, std::vector<int> members);
  static NodeSet from_ids(const TextualAttributedGraph& g, const std::vector<std::string>& ids);

  const std::vector<int>& members() const { return members_; }
  int size() const { return static_cast<int>(members_.size()); }
  long long volume() const { return volume_; }
  long long cut() const { return cut_; }
  bool contains(int v) const;

 private:
  std::vector<int> members_;
  long long volume_ = 0;
  long long cut_ = 0;
};

// Vol(S): sum of member degrees. `members` must be valid indices.
long long set_volume(const TextualAttributedGraph& g, std::span<const int> members);
// g(S): number of edges with exactly one endpoint in S.
long long set_cut(const TextualAttributedGraph& g, std::span<const int> members);

long long volume(const TextualAttributedGraph& g, const NodeSet& s);
long long cut_size(const TextualAttributedGraph& g, const NodeSet& s);

// Nodes of s with original texts plus all edges internal to s.
// Throws DataError("empty extraction") for an empty set.
TextualAttributedGraph induced_subgraph(const TextualAttributedGraph& g, const NodeSet& s);

// graph.jsonl: one object per line, {"kind":"node",...} / {"kind":"edge",...}.
TextualAttributedGraph load_graph(const std::filesystem::path& path);
TextualAttributedGraph parse_graph_jsonl(std::string_view content);
std::string to_jsonl(const TextualAttributedGraph& g);

}  // namespace tret
