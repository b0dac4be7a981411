#include "tret/retriever.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "tret/embedding.hpp"
#include "tret/errors.hpp"
#include "tret/text.hpp"

namespace tret {

std::vector<Hit> top_k_nodes(const TreeIndex& index, std::span<const float> query_embedding,
                             int k) {
  const std::vector<int> positions = index.nearest(query_embedding, k);
  std::vector<Hit> hits;
  hits.reserve(positions.size());
  for (int pos : positions) {
    const TreeIndex::Entry& e = index.entries()[static_cast<std::size_t>(pos)];
    const double sim = dot(index.embeddings().row(static_cast<std::size_t>(pos)), query_embedding);
    hits.push_back(Hit{e.id, e.level, sim});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.id < b.id;
  });
  return hits;
}

TextualAttributedGraph extract_union_subgraph(const EncodingTree& tree,
                                              const TextualAttributedGraph& g,
                                              std::span<const Hit> hits) {
  const std::size_t n = g.node_count();
  std::vector<char> in_union(n, 0);
  std::set<std::pair<int, int>> kept_edges;
  std::vector<char> mark(n, 0);
  for (const Hit& h : hits) {
    const std::vector<int>& members = tree.members(h.id);
    for (int v : members) {
      mark[static_cast<std::size_t>(v)] = 1;
      in_union[static_cast<std::size_t>(v)] = 1;
    }
    for (int v : members) {
      for (int w : g.neighbors(v)) {
        if (w > v && mark[static_cast<std::size_t>(w)]) kept_edges.insert({v, w});
      }
    }
    for (int v : members) mark[static_cast<std::size_t>(v)] = 0;
  }

  std::vector<NodeRecord> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_union[i]) continue;
    nodes.push_back(NodeRecord{g.node_id(static_cast<int>(i)), g.node_text(static_cast<int>(i))});
  }
  std::vector<RawEdge> edges;
  for (const auto& [u, v] : kept_edges) {
    const TextualAttributedGraph::Edge* e = g.find_edge(u, v);
    edges.push_back(RawEdge{g.node_id(u), g.node_id(v), e ? e->text : std::string()});
  }
  return TextualAttributedGraph(std::move(nodes), std::move(edges));
}

std::string textualize(const TextualAttributedGraph& g) {
  std::vector<int> order(g.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return g.node_id(a) < g.node_id(b); });

  std::ostringstream out;
  bool first = true;
  for (int i : order) {
    if (!first) out << '\n';
    first = false;
    out << "node " << g.node_id(i) << ": " << g.node_text(i);
  }

  struct Line {
    std::string a;
    std::string b;
    const std::string* text;
  };
  std::vector<Line> lines;
  lines.reserve(g.edges().size());
  for (const TextualAttributedGraph::Edge& e : g.edges()) {
    std::string a = g.node_id(e.u);
    std::string b = g.node_id(e.v);
    if (b < a) std::swap(a, b);
    lines.push_back(Line{std::move(a), std::move(b), &e.text});
  }
  std::sort(lines.begin(), lines.end(), [](const Line& x, const Line& y) {
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  for (const Line& l : lines) {
    if (!first) out << '\n';
    first = false;
    out << "edge " << l.a << " -- " << l.b << ": " << (l.text->empty() ? "-" : *l.text);
  }
  return out.str();
}

RetrievalResult retrieve(const TreeIndex& index, const EncodingTree& tree,
                         const TextualAttributedGraph& g, std::span<const float> query_embedding,
                         int k) {
  RetrievalResult r;
  r.hits = top_k_nodes(index, query_embedding, k);
  r.subgraph = extract_union_subgraph(tree, g, r.hits);
  r.textualization = textualize(r.subgraph);
  r.context_tokens = static_cast<long long>(whitespace_tokens(r.textualization));
  r.full_graph_tokens = static_cast<long long>(whitespace_tokens(textualize(g)));
  return r;
}

Answer answer_query(const std::string& query, const RetrievalResult& result, ChatProvider* chat) {
  Answer a;
  a.prompt = "Context:\n" + result.textualization + "\n\nQuestion: " + query + "\nAnswer:";
  if (chat == nullptr) {
    a.provider_id = "offline";
    return a;
  }
  a.provider_id = chat->id();
  a.text = chat->complete(a.prompt);
  return a;
}

}  // namespace tret
