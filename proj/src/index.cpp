#include "tret/index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <future>
#include <map>
#include <queue>
#include <sstream>

#include "tret/errors.hpp"
#include "tret/rng.hpp"
#include "tret/text.hpp"

namespace tret {

using nlohmann::json;

namespace {

Summary make_generated(const EncodingTree& tree, int alpha, const TextualAttributedGraph& g,
                       Summarizer& summarizer) {
  std::vector<int> members = tree.members(alpha);
  std::vector<std::pair<std::string, std::string>> node_texts;
  node_texts.reserve(members.size());
  for (int v : members) node_texts.emplace_back(g.node_id(v), g.node_text(v));

  std::vector<char> in(static_cast<std::size_t>(g.node_count()), 0);
  for (int v : members) in[static_cast<std::size_t>(v)] = 1;
  std::vector<EdgeTextRef> edge_texts;
  for (const auto& e : g.edges()) {
    if (in[static_cast<std::size_t>(e.u)] && in[static_cast<std::size_t>(e.v)]) {
      edge_texts.push_back({g.node_id(e.u), g.node_id(e.v), e.text});
    }
  }

  Summary s;
  s.id = alpha;
  s.source = "generated";
  try {
    s.text = summarizer.summarize(node_texts, edge_texts);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    throw ProviderError("summarizer failed on tree node " + std::to_string(alpha) + ": " +
                        ex.what());
  }
  s.token_count = whitespace_tokens(s.text);
  return s;
}

}  // namespace

Summary summarize_node(const EncodingTree& tree, int alpha, const TextualAttributedGraph& g,
                       Summarizer& summarizer) {
  const TreeNode& node = tree.node(alpha);
  if (node.is_leaf()) {
    std::vector<int> members = tree.members(alpha);
    if (members.size() != 1) throw InternalError("leaf summary requires a singleton leaf");
    Summary s;
    s.id = alpha;
    s.text = g.node_text(members.front());
    s.source = "leaf-passthrough";
    s.token_count = whitespace_tokens(s.text);
    return s;
  }
  if (tree.is_pass_through(alpha)) {
    Summary s = summarize_node(tree, node.children.front(), g, summarizer);
    s.id = alpha;
    s.source = "leaf-passthrough";
    return s;
  }
  return make_generated(tree, alpha, g, summarizer);
}

std::vector<Summary> summarize_tree(const EncodingTree& tree, const TextualAttributedGraph& g,
                                    Summarizer& summarizer, int threads) {
  std::vector<int> ids = tree.ids();
  std::map<int, Summary> done;

  std::vector<int> direct;  // leaves and generated nodes; order-free work
  for (int id : ids) {
    if (!tree.is_pass_through(id)) direct.push_back(id);
  }

  if (threads > 1 && direct.size() > 1) {
    std::vector<std::future<std::vector<Summary>>> futures;
    std::size_t chunk = (direct.size() + static_cast<std::size_t>(threads) - 1) /
                        static_cast<std::size_t>(threads);
    for (std::size_t start = 0; start < direct.size(); start += chunk) {
      std::size_t end = std::min(direct.size(), start + chunk);
      futures.push_back(std::async(std::launch::async, [&, start, end] {
        std::vector<Summary> part;
        part.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          part.push_back(summarize_node(tree, direct[i], g, summarizer));
        }
        return part;
      }));
    }
    for (auto& f : futures) {
      for (Summary& s : f.get()) done.emplace(s.id, std::move(s));
    }
  } else {
    for (int id : direct) done.emplace(id, summarize_node(tree, id, g, summarizer));
  }

  // Pass-through copies, deepest first so the child is always ready.
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    int id = *it;
    if (!tree.is_pass_through(id)) continue;
    auto child = done.find(tree.node(id).children.front());
    if (child == done.end()) throw InternalError("pass-through child summarized out of order");
    Summary s = child->second;
    s.id = id;
    s.source = "leaf-passthrough";
    done.emplace(id, std::move(s));
  }

  std::vector<Summary> out;
  out.reserve(done.size());
  for (auto& [id, s] : done) out.push_back(std::move(s));
  return out;
}

EmbeddingMatrix embed_tree(const std::vector<Summary>& summaries, Embedder& embedder) {
  std::vector<std::string> texts;
  texts.reserve(summaries.size());
  for (const auto& s : summaries) texts.push_back(s.text);
  EmbeddingMatrix emb = embedder.embed(texts);
  if (emb.rows() != summaries.size()) {
    throw ProviderError("embedder returned " + std::to_string(emb.rows()) + " rows for " +
                        std::to_string(summaries.size()) + " summaries");
  }
  emb.check();
  return emb;
}

namespace {

struct Scored {
  double dist;
  int id;
  bool operator<(const Scored& o) const { return std::tie(dist, id) < std::tie(o.dist, o.id); }
  bool operator>(const Scored& o) const { return o < *this; }
};

double l2_sq(std::span<const float> a, std::span<const float> b) {
  return squared_distance(a, b);
}

// Greedy best-first over the link graph; nodes with id >= limit are
// invisible (supports insertion over the already-built prefix).
std::vector<Scored> beam_search(const EmbeddingMatrix& emb,
                                const std::vector<std::vector<int>>& links,
                                std::span<const float> query, int ef, int limit) {
  std::vector<char> visited(emb.rows(), 0);
  // Candidates nearest-first; results kept as a farthest-first heap of
  // bounded size ef.
  std::priority_queue<Scored, std::vector<Scored>, std::greater<>> candidates;
  std::priority_queue<Scored> results;

  Scored entry{l2_sq(query, emb.row(0)), 0};
  visited[0] = 1;
  candidates.push(entry);
  results.push(entry);

  while (!candidates.empty()) {
    Scored cur = candidates.top();
    candidates.pop();
    if (static_cast<int>(results.size()) >= ef && cur.dist > results.top().dist) break;
    for (int nbr : links[static_cast<std::size_t>(cur.id)]) {
      if (nbr >= limit || visited[static_cast<std::size_t>(nbr)]) continue;
      visited[static_cast<std::size_t>(nbr)] = 1;
      Scored next{l2_sq(query, emb.row(static_cast<std::size_t>(nbr))), nbr};
      if (static_cast<int>(results.size()) < ef || next.dist < results.top().dist ||
          (next.dist == results.top().dist && next.id < results.top().id)) {
        candidates.push(next);
        results.push(next);
        if (static_cast<int>(results.size()) > ef) results.pop();
      }
    }
  }

  std::vector<Scored> out;
  out.reserve(results.size());
  while (!results.empty()) {
    out.push_back(results.top());
    results.pop();
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void AnnGraph::build(const EmbeddingMatrix& emb, const AnnParams& params) {
  params_ = params;
  const std::size_t n = emb.rows();
  links_.assign(n, {});
  if (n <= 1) return;

  for (std::size_t i = 1; i < n; ++i) {
    std::vector<Scored> near = beam_search(emb, links_, emb.row(i), params_.ef_build,
                                           static_cast<int>(i));
    int take = std::min<int>(params_.m, static_cast<int>(near.size()));
    for (int t = 0; t < take; ++t) {
      int nbr = near[static_cast<std::size_t>(t)].id;
      links_[i].push_back(nbr);
      links_[static_cast<std::size_t>(nbr)].push_back(static_cast<int>(i));
      auto& rev = links_[static_cast<std::size_t>(nbr)];
      if (static_cast<int>(rev.size()) > 2 * params_.m) {
        // Keep the closest 2m, ties by id.
        std::vector<Scored> scored;
        scored.reserve(rev.size());
        for (int r : rev) {
          scored.push_back({l2_sq(emb.row(static_cast<std::size_t>(nbr)), emb.row(static_cast<std::size_t>(r))), r});
        }
        std::sort(scored.begin(), scored.end());
        rev.clear();
        for (int t2 = 0; t2 < 2 * params_.m; ++t2) rev.push_back(scored[static_cast<std::size_t>(t2)].id);
        std::sort(rev.begin(), rev.end());
      }
    }
    std::sort(links_[i].begin(), links_[i].end());
  }
}

std::vector<int> AnnGraph::search(const EmbeddingMatrix& emb, std::span<const float> query,
                                  int k) const {
  if (links_.empty()) return {};
  std::vector<Scored> near = beam_search(emb, links_, query, std::max(params_.ef_search, k),
                                         static_cast<int>(links_.size()));
  std::vector<int> out;
  for (const Scored& s : near) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(s.id);
  }
  return out;
}

TreeIndex::TreeIndex(std::vector<Entry> entries, EmbeddingMatrix embeddings)
    : entries_(std::move(entries)), embeddings_(std::move(embeddings)) {
  if (entries_.size() != embeddings_.rows()) {
    throw InternalError("index entries and embedding rows disagree");
  }
}

void TreeIndex::enable_ann(const AnnParams& params) {
  ann_.build(embeddings_, params);
}

std::vector<int> TreeIndex::nearest(std::span<const float> query, int k, bool use_exact) const {
  if (entries_.empty()) throw DataError("empty index");
  if (k < 1) throw UsageError("k must be >= 1");
  if (static_cast<int>(query.size()) != embeddings_.dim()) {
    throw UsageError("query dimension does not match index");
  }
  int take = std::min<int>(k, static_cast<int>(entries_.size()));

  if (!use_exact && ann_enabled()) {
    return ann_.search(embeddings_, query, take);
  }

  std::vector<std::pair<double, int>> scored(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    scored[i] = {dot(query, embeddings_.row(i)), static_cast<int>(i)};
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> out(static_cast<std::size_t>(take));
  for (int i = 0; i < take; ++i) out[static_cast<std::size_t>(i)] = scored[static_cast<std::size_t>(i)].second;
  return out;
}

TreeIndex build_index(const EncodingTree& tree, const std::vector<Summary>& summaries,
                      EmbeddingMatrix embeddings, bool ann_enabled, const AnnParams& ann_params) {
  std::vector<int> ids = tree.ids();
  if (summaries.size() != ids.size()) throw InternalError("missing summary for some tree node");
  if (embeddings.rows() != ids.size()) throw InternalError("index embedding count mismatch");
  if (embeddings.dim() < 1) throw InternalError("index embeddings have no dimension");

  std::vector<TreeIndex::Entry> entries;
  entries.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (summaries[i].id != ids[i]) throw InternalError("summaries out of tree-id order");
    entries.push_back({ids[i], tree.node(ids[i]).depth});
  }
  TreeIndex index(std::move(entries), std::move(embeddings));

  if (ann_enabled) {
    index.enable_ann(ann_params);
    // Recall gate vs the exact scan on seeded unit-vector probes.
    const int probes = 50;
    const int at = 10;
    SplitMix64 rng(0x70726f6265u);  // "probe"
    double hit = 0.0, total = 0.0;
    std::vector<float> q(static_cast<std::size_t>(index.dim()));
    for (int p = 0; p < probes; ++p) {
      double norm2 = 0.0;
      std::vector<double> raw(q.size());
      for (auto& x : raw) {
        x = rng.next_symmetric();
        norm2 += x * x;
      }
      double norm = std::sqrt(norm2);
      if (norm == 0.0) continue;
      for (std::size_t j = 0; j < q.size(); ++j) q[j] = static_cast<float>(raw[j] / norm);

      std::vector<int> exact = index.nearest(q, at, true);
      std::vector<int> ann = index.nearest(q, at, false);
      std::vector<char> in_exact(index.size(), 0);
      for (int e : exact) in_exact[static_cast<std::size_t>(e)] = 1;
      for (int a : ann) hit += in_exact[static_cast<std::size_t>(a)];
      total += static_cast<double>(exact.size());
    }
    double recall = total > 0 ? hit / total : 1.0;
    if (recall < 0.95) {
      throw InternalError("ann recall " + std::to_string(recall) + " below the 0.95 gate");
    }
  }
  return index;
}

json IndexManifest::to_json() const {
  return json{{"format_version", format_version},
              {"dim", dim},
              {"count", count},
              {"levels", levels},
              {"lambda", lambda},
              {"bandwidth", bandwidth},
              {"bandwidth_mode", bandwidth_mode},
              {"seed", seed},
              {"k_default", k_default},
              {"exact_threshold", exact_threshold},
              {"subsample_cap", subsample_cap},
              {"node_embeddings_source", node_embeddings_source},
              {"embedder", embedder},
              {"summarizer", summarizer},
              {"embedder_id", embedder_id},
              {"summarizer_id", summarizer_id},
              {"ann", json{{"enabled", ann}, {"m", ann_m}, {"ef", ann_ef}}},
              {"graph", json{{"nodes", graph_nodes}, {"edges", graph_edges}}},
              {"embeddings_checksum", embeddings_checksum}};
}

IndexManifest IndexManifest::from_json(const json& j) {
  IndexManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1) {
      throw DataError("unsupported index format version " + std::to_string(m.format_version));
    }
    m.dim = j.at("dim").get<int>();
    m.count = j.at("count").get<long long>();
    m.levels = j.at("levels").get<int>();
    m.lambda = j.at("lambda").get<double>();
    m.bandwidth = j.at("bandwidth").get<double>();
    m.bandwidth_mode = j.at("bandwidth_mode").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.k_default = j.at("k_default").get<int>();
    m.exact_threshold = j.at("exact_threshold").get<int>();
    m.subsample_cap = j.at("subsample_cap").get<int>();
    m.node_embeddings_source = j.at("node_embeddings_source").get<std::string>();
    m.embedder = j.at("embedder");
    m.summarizer = j.at("summarizer");
    m.embedder_id = j.at("embedder_id").get<std::string>();
    m.summarizer_id = j.at("summarizer_id").get<std::string>();
    m.ann = j.at("ann").at("enabled").get<bool>();
    m.ann_m = j.at("ann").at("m").get<int>();
    m.ann_ef = j.at("ann").at("ef").get<int>();
    m.graph_nodes = j.at("graph").at("nodes").get<long long>();
    m.graph_edges = j.at("graph").at("edges").get<long long>();
    m.embeddings_checksum = j.at("embeddings_checksum").get<std::string>();
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed manifest: ") + ex.what());
  }
  return m;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i) & 0xff));
}

std::uint32_t get_u32(const std::string& data, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[at + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

std::uint64_t get_u64(const std::string& data, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[at + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

std::string embeddings_bytes(const EmbeddingMatrix& emb) {
  std::string out;
  out.reserve(20 + emb.data().size() * 4);
  out += "TRET";
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(emb.dim()));
  put_u64(out, static_cast<std::uint64_t>(emb.rows()));
  for (float f : emb.data()) {
    put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("short write to " + path.string());
}

std::string checksum_hex(std::string_view bytes) {
  std::uint64_t h = fnv1a64(bytes);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void write_embeddings_file(const std::filesystem::path& path, const EmbeddingMatrix& emb) {
  write_file(path, embeddings_bytes(emb));
}

EmbeddingMatrix read_embeddings_file(const std::filesystem::path& path) {
  std::string data = read_file(path);
  if (data.size() < 20) throw DataError("truncated embedding file " + path.string());
  if (data.compare(0, 4, "TRET") != 0) throw DataError("bad magic in " + path.string());
  std::uint32_t version = get_u32(data, 4);
  if (version != 1) throw DataError("unsupported embedding file version " + std::to_string(version));
  std::uint32_t dim = get_u32(data, 8);
  std::uint64_t count = get_u64(data, 12);
  if (dim == 0) throw DataError("embedding file has zero dimension");
  std::size_t expected = 20 + static_cast<std::size_t>(count) * dim * 4;
  if (data.size() < expected) throw DataError("truncated embedding file " + path.string());
  if (data.size() > expected) throw DataError("trailing bytes in embedding file " + path.string());

  EmbeddingMatrix emb(static_cast<int>(dim), count);
  std::size_t at = 20;
  for (float& f : emb.data()) {
    f = std::bit_cast<float>(get_u32(data, at));
    at += 4;
  }
  return emb;
}

void save_index(const std::filesystem::path& dir, const TreeIndex& index, const EncodingTree& tree,
                const TextualAttributedGraph& g, const std::vector<Summary>& summaries,
                IndexManifest manifest) {
  std::filesystem::create_directories(dir);

  std::string emb_bytes = embeddings_bytes(index.embeddings());
  manifest.dim = index.dim();
  manifest.count = static_cast<long long>(index.size());
  manifest.levels = tree.target_levels();
  manifest.graph_nodes = g.node_count();
  manifest.graph_edges = g.edge_count();
  manifest.embeddings_checksum = checksum_hex(emb_bytes);

  write_file(dir / "graph.jsonl", to_jsonl(g));
  write_file(dir / "tree.json", tree.to_json().dump(2) + "\n");
  std::string lines;
  for (const auto& s : summaries) {
    lines += json{{"id", s.id}, {"text", s.text}, {"source", s.source}}.dump();
    lines += '\n';
  }
  write_file(dir / "summaries.jsonl", lines);
  write_file(dir / "embeddings.bin", emb_bytes);
  write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

LoadedIndex load_index(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.json")) {
    throw DataError("no index at " + dir.string());
  }
  json mj = json::parse(read_file(dir / "manifest.json"), nullptr, false);
  if (mj.is_discarded()) throw DataError("malformed manifest.json");
  IndexManifest manifest = IndexManifest::from_json(mj);

  auto graph = std::make_unique<TextualAttributedGraph>(load_graph(dir / "graph.jsonl"));

  json tj = json::parse(read_file(dir / "tree.json"), nullptr, false);
  if (tj.is_discarded()) throw DataError("malformed tree.json");
  EncodingTree tree = EncodingTree::from_json(tj, *graph);

  std::string emb_bytes = read_file(dir / "embeddings.bin");
  if (checksum_hex(emb_bytes) != manifest.embeddings_checksum) {
    throw DataError("checksum failure for embeddings.bin");
  }
  EmbeddingMatrix emb = read_embeddings_file(dir / "embeddings.bin");
  if (emb.dim() != manifest.dim) throw DataError("dimension mismatch between manifest and embeddings.bin");
  if (static_cast<long long>(emb.rows()) != manifest.count) {
    throw DataError("embedding count disagrees with manifest");
  }

  std::vector<Summary> summaries;
  {
    std::istringstream in(read_file(dir / "summaries.jsonl"));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) {
        throw DataError("summaries.jsonl line " + std::to_string(line_no) + ": malformed record");
      }
      Summary s;
      try {
        s.id = rec.at("id").get<int>();
        s.text = rec.at("text").get<std::string>();
        s.source = rec.at("source").get<std::string>();
      } catch (const json::exception& ex) {
        throw DataError("summaries.jsonl line " + std::to_string(line_no) + ": " + ex.what());
      }
      s.token_count = whitespace_tokens(s.text);
      summaries.push_back(std::move(s));
    }
  }

  TreeIndex index = build_index(tree, summaries, std::move(emb), false);
  if (manifest.ann) {
    index.enable_ann(AnnParams{manifest.ann_m, manifest.ann_ef, manifest.ann_ef});
  }

  return LoadedIndex{std::move(graph), std::move(tree), std::move(summaries), std::move(index),
                     std::move(manifest)};
}

}  // namespace tret
