#include "tret/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "tret/errors.hpp"

namespace tret {

using nlohmann::json;

TextualAttributedGraph::TextualAttributedGraph(std::vector<NodeRecord> nodes,
                                               const std::vector<RawEdge>& edges)
    : nodes_(std::move(nodes)) {
  index_.reserve(nodes_.size());
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    auto [it, inserted] = index_.emplace(nodes_[i].id, i);
    if (!inserted) {
      throw DataError("duplicate node id \"" + nodes_[i].id + "\"");
    }
  }

  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    int u = require_index(e.src);
    int v = require_index(e.dst);
    if (u == v) {
      throw DataError("self-loop on node \"" + e.src + "\"");
    }
    if (u > v) std::swap(u, v);
    if (!seen.emplace(u, v).second) {
      ++duplicate_edges_dropped_;
      continue;
    }
    edges_.push_back(Edge{u, v, e.text});
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });

  adjacency_.resize(nodes_.size());
  for (const auto& e : edges_) {
    adjacency_[e.u].push_back(e.v);
    adjacency_[e.v].push_back(e.u);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

int TextualAttributedGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? -1 : it->second;
}

int TextualAttributedGraph::require_index(std::string_view id) const {
  int i = index_of(id);
  if (i < 0) {
    throw DataError("unknown endpoint \"" + std::string(id) + "\"");
  }
  return i;
}

bool TextualAttributedGraph::has_edge(int u, int v) const {
  const auto& nbrs = adjacency_[u];
  return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

const TextualAttributedGraph::Edge* TextualAttributedGraph::find_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair{u, v},
                             [](const Edge& e, const std::pair<int, int>& key) {
                               return std::tie(e.u, e.v) < std::tie(key.first, key.second);
                             });
  if (it == edges_.end() || it->u != u || it->v != v) return nullptr;
  return &*it;
}

NodeSet NodeSet::from_indices(const TextualAttributedGraph& g, std::vector<int> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  for (int v : members) {
    if (v < 0 || v >= g.node_count()) {
      throw DataError("node index " + std::to_string(v) + " out of range");
    }
  }
  NodeSet s;
  s.volume_ = set_volume(g, members);
  s.cut_ = set_cut(g, members);
  s.members_ = std::move(members);
  return s;
}

NodeSet NodeSet::from_ids(const TextualAttributedGraph& g, const std::vector<std::string>& ids) {
  std::vector<int> members;
  members.reserve(ids.size());
  for (const auto& id : ids) members.push_back(g.require_index(id));
  return from_indices(g, std::move(members));
}

bool NodeSet::contains(int v) const {
  return std::binary_search(members_.begin(), members_.end(), v);
}

namespace {

void require_node_index(const TextualAttributedGraph& g, int v) {
  if (v < 0 || v >= g.node_count()) {
    throw DataError("node index " + std::to_string(v) + " out of range");
  }
}

}  // namespace

long long set_volume(const TextualAttributedGraph& g, std::span<const int> members) {
  long long vol = 0;
  for (int v : members) {
    require_node_index(g, v);
    vol += g.degree(v);
  }
  return vol;
}

long long set_cut(const TextualAttributedGraph& g, std::span<const int> members) {
  std::vector<char> in(g.node_count(), 0);
  for (int v : members) {
    require_node_index(g, v);
    in[v] = 1;
  }
  long long cut = 0;
  for (int v : members) {
    for (int u : g.neighbors(v)) {
      if (!in[u]) ++cut;
    }
  }
  return cut;
}

long long volume(const TextualAttributedGraph& g, const NodeSet& s) {
  (void)g;
  return s.volume();
}

long long cut_size(const TextualAttributedGraph& g, const NodeSet& s) {
  (void)g;
  return s.cut();
}

TextualAttributedGraph induced_subgraph(const TextualAttributedGraph& g, const NodeSet& s) {
  if (s.size() == 0) {
    throw DataError("empty extraction");
  }
  std::vector<NodeRecord> nodes;
  nodes.reserve(s.size());
  for (int v : s.members()) nodes.push_back({g.node_id(v), g.node_text(v)});
  std::vector<RawEdge> edges;
  for (const auto& e : g.edges()) {
    if (s.contains(e.u) && s.contains(e.v)) {
      edges.push_back({g.node_id(e.u), g.node_id(e.v), e.text});
    }
  }
  return TextualAttributedGraph(std::move(nodes), edges);
}

namespace {

std::string require_string_field(const json& rec, const char* key, int line_no) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw DataError("line " + std::to_string(line_no) + ": missing or non-string \"" +
                    std::string(key) + "\"");
  }
  return it->get<std::string>();
}

}  // namespace

TextualAttributedGraph parse_graph_jsonl(std::string_view content) {
  std::vector<NodeRecord> nodes;
  std::vector<RawEdge> edges;

  std::istringstream in{std::string(content)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw DataError("line " + std::to_string(line_no) + ": malformed record");
    }
    std::string kind = require_string_field(rec, "kind", line_no);
    if (kind == "node") {
      nodes.push_back({require_string_field(rec, "id", line_no),
                       require_string_field(rec, "text", line_no)});
    } else if (kind == "edge") {
      RawEdge e;
      e.src = require_string_field(rec, "src", line_no);
      e.dst = require_string_field(rec, "dst", line_no);
      if (rec.contains("text") && rec["text"].is_string()) {
        e.text = rec["text"].get<std::string>();
      }
      edges.push_back(std::move(e));
    } else {
      throw DataError("line " + std::to_string(line_no) + ": unknown kind \"" + kind + "\"");
    }
  }
  return TextualAttributedGraph(std::move(nodes), edges);
}

TextualAttributedGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open graph file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_graph_jsonl(buf.str());
}

std::string to_jsonl(const TextualAttributedGraph& g) {
  std::string out;
  for (int v = 0; v < g.node_count(); ++v) {
    json rec{{"kind", "node"}, {"id", g.node_id(v)}, {"text", g.node_text(v)}};
    out += rec.dump();
    out += '\n';
  }
  for (const auto& e : g.edges()) {
    json rec{{"kind", "edge"}, {"src", g.node_id(e.u)}, {"dst", g.node_id(e.v)}};
    if (!e.text.empty()) rec["text"] = e.text;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace tret
