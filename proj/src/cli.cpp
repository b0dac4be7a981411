#include "tret/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "tret/entropy.hpp"
#include "tret/errors.hpp"
#include "tret/graph.hpp"
#include "tret/index.hpp"
#include "tret/providers.hpp"
#include "tret/retriever.hpp"
#include "tret/testkit.hpp"
#include "tret/text.hpp"
#include "tret/tree.hpp"

namespace tret {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : std::string();
}

double parse_positive_real(const std::string& text, const char* what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw UsageError(std::string(what) + " must be a positive number");
  }
  if (used != text.size() || !std::isfinite(value) || value <= 0.0) {
    throw UsageError(std::string(what) + " must be a positive number");
  }
  return value;
}

long long elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                               since)
      .count();
}

}  // namespace

bool BuildConfig::bandwidth_is_auto() const { return bandwidth == "auto"; }

double BuildConfig::fixed_bandwidth() const { return parse_positive_real(bandwidth, "bandwidth"); }

void BuildConfig::validate() const {
  if (levels < 1) throw UsageError("levels must be >= 1");
  if (lambda < 0.0 || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  if (k < 1) throw UsageError("k must be >= 1");
  if (embed_dim < 1) throw UsageError("embedding dim must be >= 1");
  if (embedder != "hash" && embedder != "http") {
    throw UsageError("embedder must be hash or http");
  }
  if (summarizer != "extractive" && summarizer != "http") {
    throw UsageError("summarizer must be extractive or http");
  }
  if (token_budget < 8) throw UsageError("summary token budget must be >= 8");
  if (exact_threshold < 1 || exact_threshold > 20) {
    throw UsageError("exact threshold must be between 1 and 20");
  }
  if (subsample_cap < 1) throw UsageError("subsample cap must be >= 1");
  if (ann_m < 1 || ann_ef < 1) throw UsageError("ann parameters must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
  if (timeout_ms < 1 || attempts < 1 || backoff_ms < 0) {
    throw UsageError("bad http retry configuration");
  }
  if (!bandwidth_is_auto()) fixed_bandwidth();
}

namespace {

struct QueryConfig {
  std::string index_dir;
  std::string query;
  int k = 0;  // 0 = manifest default
  bool k_given = false;
  bool as_json = false;
  bool answer = false;
  std::string embedder;  // override check only
  int embed_dim = 0;     // override check only
  int timeout_ms = 30000;
  int attempts = 3;
  int backoff_ms = 200;
};

struct EvalConfig {
  std::string index_dir;
  std::string qa_path;
  int k = 0;
  bool k_given = false;
  std::string mode = "contains";  // contains | strict
  int timeout_ms = 30000;
  int attempts = 3;
  int backoff_ms = 200;
};

struct EntropyConfig {
  std::string index_dir;
  std::string node_embeddings;
};

struct GenConfig {
  std::string kind = "sbm";  // sbm | path | barbell | random
  int n = 0;
  std::uint64_t seed = 42;
  std::string out_dir;
  std::string layout;  // defaults per kind
  int dim = 16;
  int blocks = 2;
  double p_in = 0.5;
  double p_out = 0.05;
  double noise = 0.1;
  double edge_prob = 0.3;  // random kind
};

EmbedderSpec build_embedder_spec(const BuildConfig& cfg) {
  EmbedderSpec spec;
  spec.kind = cfg.embedder;
  spec.dim = cfg.embed_dim;
  spec.seed = cfg.seed;
  if (spec.kind == "http") {
    spec.base_url = env_or_empty("TRET_API_BASE");
    spec.api_key = env_or_empty("TRET_API_KEY");
    spec.model = env_or_empty("TRET_EMBED_MODEL");
    spec.timeout_ms = cfg.timeout_ms;
    spec.attempts = cfg.attempts;
    spec.backoff_ms = cfg.backoff_ms;
  }
  spec.validate();
  return spec;
}

SummarizerSpec build_summarizer_spec(const BuildConfig& cfg) {
  SummarizerSpec spec;
  spec.kind = cfg.summarizer;
  spec.token_budget = cfg.token_budget;
  if (spec.kind == "http") {
    spec.base_url = env_or_empty("TRET_API_BASE");
    spec.api_key = env_or_empty("TRET_API_KEY");
    spec.model = env_or_empty("TRET_CHAT_MODEL");
    spec.timeout_ms = cfg.timeout_ms;
    spec.attempts = cfg.attempts;
    spec.backoff_ms = cfg.backoff_ms;
  }
  spec.validate();
  return spec;
}

// Manifest copies never carry credentials.
json embedder_spec_json(const EmbedderSpec& spec) {
  json j{{"kind", spec.kind}, {"dim", spec.dim}};
  if (spec.kind == "hash") {
    j["seed"] = spec.seed;
  } else {
    j["model"] = spec.model;
    j["base_url"] = spec.base_url;
    j["batch_size"] = spec.batch_size;
  }
  return j;
}

json summarizer_spec_json(const SummarizerSpec& spec) {
  json j{{"kind", spec.kind}};
  if (spec.kind == "extractive") {
    j["token_budget"] = spec.token_budget;
  } else {
    j["model"] = spec.model;
    j["base_url"] = spec.base_url;
    j["prompt_template_version"] = spec.prompt_template_version;
  }
  return j;
}

// Reconstructs the build-time embedder for query encoding; credentials and
// endpoint overrides come from the environment.
EmbedderSpec embedder_spec_from_manifest(const IndexManifest& manifest, int timeout_ms,
                                         int attempts, int backoff_ms) {
  const json& j = manifest.embedder;
  EmbedderSpec spec;
  try {
    spec.kind = j.at("kind").get<std::string>();
    spec.dim = j.at("dim").get<int>();
    if (spec.kind == "hash") {
      spec.seed = j.at("seed").get<std::uint64_t>();
    } else {
      spec.model = j.at("model").get<std::string>();
      spec.base_url = j.at("base_url").get<std::string>();
      spec.batch_size = j.value("batch_size", 64);
    }
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed embedder spec in manifest: ") + ex.what());
  }
  if (spec.kind == "http") {
    std::string base = env_or_empty("TRET_API_BASE");
    if (!base.empty()) spec.base_url = base;
    spec.api_key = env_or_empty("TRET_API_KEY");
    spec.timeout_ms = timeout_ms;
    spec.attempts = attempts;
    spec.backoff_ms = backoff_ms;
  }
  spec.validate();
  return spec;
}

int tree_stat_pass_through(const EncodingTree& tree) {
  int count = 0;
  for (int id : tree.ids()) count += tree.is_pass_through(id) ? 1 : 0;
  return count;
}

int tree_stat_leaves(const EncodingTree& tree) {
  int count = 0;
  for (int id : tree.ids()) count += tree.node(id).is_leaf() ? 1 : 0;
  return count;
}

int cmd_build(const BuildConfig& cfg, std::ostream& out) {
  cfg.validate();

  const fs::path out_dir(cfg.out_dir);
  const bool dir_existed = fs::exists(out_dir);
  if (dir_existed) {
    if (!fs::is_directory(out_dir)) {
      throw DataError("output path is not a directory: " + out_dir.string());
    }
    if (!fs::is_empty(out_dir) && !fs::exists(out_dir / "manifest.json")) {
      throw DataError("refusing to overwrite non-index directory " + out_dir.string());
    }
  }

  TextualAttributedGraph g = load_graph(cfg.graph_path);

  EmbedderSpec espec = build_embedder_spec(cfg);
  auto embedder = make_embedder(espec);
  SummarizerSpec sspec = build_summarizer_spec(cfg);
  auto summarizer = make_summarizer(sspec);

  auto t0 = std::chrono::steady_clock::now();
  EmbeddingMatrix node_emb(espec.dim, 0);
  std::string node_source = "provider";
  if (!cfg.node_embeddings.empty()) {
    node_emb = read_embeddings_file(cfg.node_embeddings);
    node_source = "file";
    if (node_emb.rows() != static_cast<std::size_t>(g.node_count())) {
      throw DataError("node embeddings file has " + std::to_string(node_emb.rows()) +
                      " rows for " + std::to_string(g.node_count()) + " graph nodes");
    }
  } else {
    std::vector<std::string> texts;
    texts.reserve(static_cast<std::size_t>(g.node_count()));
    for (int v = 0; v < g.node_count(); ++v) texts.push_back(g.node_text(v));
    node_emb = embedder->embed(texts);
  }
  const long long embedding_ms = elapsed_ms(t0);

  auto t1 = std::chrono::steady_clock::now();
  double bandwidth = cfg.bandwidth_is_auto()
                         ? select_bandwidth(node_emb, default_bandwidth_grid())
                         : cfg.fixed_bandwidth();

  EntropyParams params;
  params.lambda = cfg.lambda;
  params.bandwidth = bandwidth;
  params.dim = node_emb.dim();
  params.subsample_cap = cfg.subsample_cap;
  params.subsample_seed = cfg.seed;

  SolverConfig solver;
  solver.exact_threshold = cfg.exact_threshold;
  solver.seed = cfg.seed;

  EncodingTree tree = build_encoding_tree(g, node_emb, params, cfg.levels, solver);
  S2EntropyEngine engine(g, node_emb, params);
  S2EntropyEngine::Breakdown entropy = engine.total(tree);
  const long long partitioning_ms = elapsed_ms(t1);

  auto t2 = std::chrono::steady_clock::now();
  bool wrote_any = false;
  try {
    std::vector<Summary> summaries = summarize_tree(tree, g, *summarizer, cfg.threads);
    EmbeddingMatrix tree_emb = embed_tree(summaries, *embedder);
    AnnParams ann_params{cfg.ann_m, cfg.ann_ef, cfg.ann_ef};
    TreeIndex index = build_index(tree, summaries, std::move(tree_emb), cfg.ann, ann_params);

    IndexManifest manifest;
    manifest.lambda = cfg.lambda;
    manifest.bandwidth = bandwidth;
    manifest.bandwidth_mode = cfg.bandwidth_is_auto() ? "auto" : "fixed";
    manifest.seed = cfg.seed;
    manifest.k_default = cfg.k;
    manifest.exact_threshold = cfg.exact_threshold;
    manifest.subsample_cap = cfg.subsample_cap;
    manifest.node_embeddings_source = node_source;
    manifest.embedder = embedder_spec_json(espec);
    manifest.summarizer = summarizer_spec_json(sspec);
    manifest.embedder_id = embedder->id();
    manifest.summarizer_id = summarizer->id();
    manifest.ann = cfg.ann;
    manifest.ann_m = cfg.ann_m;
    manifest.ann_ef = cfg.ann_ef;

    wrote_any = true;
    save_index(out_dir, index, tree, g, summaries, manifest);
    const long long summarization_indexing_ms = elapsed_ms(t2);

    json report{
        {"output", out_dir.string()},
        {"graph",
         json{{"nodes", g.node_count()},
              {"edges", g.edge_count()},
              {"duplicate_edges_dropped", g.duplicate_edges_dropped()}}},
        {"tree",
         json{{"nodes", tree.node_count()},
              {"height", tree.height()},
              {"leaves", tree_stat_leaves(tree)},
              {"pass_through", tree_stat_pass_through(tree)}}},
        {"entropy",
         json{{"structural", entropy.structural},
              {"semantic_weighted", entropy.semantic_weighted},
              {"total", entropy.total()}}},
        {"params",
         json{{"levels", cfg.levels},
              {"lambda", cfg.lambda},
              {"bandwidth", bandwidth},
              {"bandwidth_mode", cfg.bandwidth_is_auto() ? "auto" : "fixed"},
              {"seed", cfg.seed},
              {"embedder_id", embedder->id()},
              {"summarizer_id", summarizer->id()}}},
        {"index", json{{"count", index.size()}, {"dim", index.dim()}, {"ann", cfg.ann}}},
        {"stages_ms",
         json{{"embedding", embedding_ms},
              {"partitioning", partitioning_ms},
              {"summarization_indexing", summarization_indexing_ms}}},
    };
    out << report.dump(2) << "\n";
    return 0;
  } catch (...) {
    std::error_code ec;
    if (wrote_any) {
      for (const char* name :
           {"manifest.json", "tree.json", "graph.jsonl", "summaries.jsonl", "embeddings.bin"}) {
        fs::remove(out_dir / name, ec);
      }
    }
    if (!dir_existed) fs::remove_all(out_dir, ec);
    throw;
  }
}

json hits_json(const RetrievalResult& r) {
  json arr = json::array();
  for (const Hit& h : r.hits) {
    arr.push_back(json{{"id", h.id}, {"level", h.level}, {"sim", h.sim}});
  }
  return arr;
}

int cmd_query(const QueryConfig& cfg, std::ostream& out) {
  if (cfg.k_given && cfg.k < 1) throw UsageError("k must be >= 1");

  LoadedIndex ix = load_index(cfg.index_dir);
  const std::string manifest_kind = ix.manifest.embedder.value("kind", "hash");
  const int manifest_dim = ix.manifest.embedder.value("dim", 0);
  if (!cfg.embedder.empty() && cfg.embedder != manifest_kind) {
    throw UsageError("embedder '" + cfg.embedder + "' does not match the index manifest ('" +
                     manifest_kind + "')");
  }
  if (cfg.embed_dim > 0 && cfg.embed_dim != manifest_dim) {
    throw UsageError("embedding dim " + std::to_string(cfg.embed_dim) +
                     " does not match the index manifest (" + std::to_string(manifest_dim) + ")");
  }

  auto embedder = make_embedder(
      embedder_spec_from_manifest(ix.manifest, cfg.timeout_ms, cfg.attempts, cfg.backoff_ms));
  EmbeddingMatrix qe = embedder->embed({cfg.query});

  const int k = cfg.k_given ? cfg.k : ix.manifest.k_default;
  RetrievalResult r = retrieve(ix.index, ix.tree, *ix.graph, qe.row(0), k);

  json answer = nullptr;
  if (cfg.answer) {
    ChatSpec cspec;
    cspec.base_url = env_or_empty("TRET_API_BASE");
    cspec.api_key = env_or_empty("TRET_API_KEY");
    cspec.model = env_or_empty("TRET_CHAT_MODEL");
    cspec.timeout_ms = cfg.timeout_ms;
    cspec.attempts = cfg.attempts;
    cspec.backoff_ms = cfg.backoff_ms;
    if (cspec.base_url.empty() || cspec.model.empty()) {
      throw ProviderError("chat provider not configured (set TRET_API_BASE and TRET_CHAT_MODEL)");
    }
    auto chat = make_chat(cspec);
    answer = answer_query(cfg.query, r, chat.get()).text;
  }

  if (cfg.as_json) {
    json nodes = json::array();
    for (int v = 0; v < r.subgraph.node_count(); ++v) {
      nodes.push_back(json{{"id", r.subgraph.node_id(v)}, {"text", r.subgraph.node_text(v)}});
    }
    json edges = json::array();
    for (const auto& e : r.subgraph.edges()) {
      edges.push_back(json{{"src", r.subgraph.node_id(e.u)},
                           {"dst", r.subgraph.node_id(e.v)},
                           {"text", e.text}});
    }
    json doc{{"hits", hits_json(r)},
             {"nodes", std::move(nodes)},
             {"edges", std::move(edges)},
             {"textualization", r.textualization},
             {"tokens", json{{"context", r.context_tokens}, {"full_graph", r.full_graph_tokens}}},
             {"answer", std::move(answer)}};
    out << doc.dump(2) << "\n";
    return 0;
  }

  out << "hits:\n";
  for (const Hit& h : r.hits) {
    std::ostringstream sim;
    sim.setf(std::ios::fixed);
    sim.precision(4);
    sim << h.sim;
    out << "  node " << h.id << "  level " << h.level << "  sim " << sim.str() << "\n";
  }
  out << "\n" << r.textualization << "\n";
  out << "\n[context " << r.context_tokens << " tokens, full graph " << r.full_graph_tokens
      << "]\n";
  if (!answer.is_null()) out << "\nanswer: " << answer.get<std::string>() << "\n";
  return 0;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int cmd_eval(const EvalConfig& cfg, std::ostream& out) {
  if (cfg.k_given && cfg.k < 1) throw UsageError("k must be >= 1");
  if (cfg.mode != "contains" && cfg.mode != "strict") {
    throw UsageError("eval mode must be contains or strict");
  }

  struct QaItem {
    std::string q;
    std::vector<std::string> answers;
  };
  std::vector<QaItem> items;
  {
    std::ifstream in(cfg.qa_path);
    if (!in) throw DataError("cannot open " + cfg.qa_path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json rec = json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.is_object()) {
        throw DataError("qa line " + std::to_string(line_no) + ": malformed record");
      }
      QaItem item;
      try {
        item.q = rec.at("q").get<std::string>();
        for (const auto& a : rec.at("answers")) item.answers.push_back(a.get<std::string>());
      } catch (const json::exception& ex) {
        throw DataError("qa line " + std::to_string(line_no) + ": " + ex.what());
      }
      if (item.answers.empty()) {
        throw DataError("qa line " + std::to_string(line_no) + ": no answers");
      }
      items.push_back(std::move(item));
    }
  }
  if (items.empty()) throw DataError("empty qa file");

  LoadedIndex ix = load_index(cfg.index_dir);
  auto embedder = make_embedder(
      embedder_spec_from_manifest(ix.manifest, cfg.timeout_ms, cfg.attempts, cfg.backoff_ms));
  const int k = cfg.k_given ? cfg.k : ix.manifest.k_default;

  std::unique_ptr<ChatProvider> chat;
  if (cfg.mode == "strict") {
    ChatSpec cspec;
    cspec.base_url = env_or_empty("TRET_API_BASE");
    cspec.api_key = env_or_empty("TRET_API_KEY");
    cspec.model = env_or_empty("TRET_CHAT_MODEL");
    cspec.timeout_ms = cfg.timeout_ms;
    cspec.attempts = cfg.attempts;
    cspec.backoff_ms = cfg.backoff_ms;
    if (cspec.base_url.empty() || cspec.model.empty()) {
      throw ProviderError("strict mode needs a chat provider (set TRET_API_BASE and TRET_CHAT_MODEL)");
    }
    chat = make_chat(cspec);
  }

  int correct = 0;
  double sum_context = 0.0, sum_full = 0.0, sum_reduction = 0.0;
  json per_query = json::array();
  for (const QaItem& item : items) {
    EmbeddingMatrix qe = embedder->embed({item.q});
    RetrievalResult r = retrieve(ix.index, ix.tree, *ix.graph, qe.row(0), k);

    bool ok = false;
    if (cfg.mode == "contains") {
      for (const std::string& gold : item.answers) {
        if (r.textualization.find(gold) != std::string::npos) {
          ok = true;
          break;
        }
      }
    } else {
      std::string text = trimmed(answer_query(item.q, r, chat.get()).text);
      for (const std::string& gold : item.answers) {
        if (text == trimmed(gold)) {
          ok = true;
          break;
        }
      }
    }
    correct += ok ? 1 : 0;

    double reduction =
        r.full_graph_tokens > 0
            ? 1.0 - static_cast<double>(r.context_tokens) / static_cast<double>(r.full_graph_tokens)
            : 0.0;
    sum_context += static_cast<double>(r.context_tokens);
    sum_full += static_cast<double>(r.full_graph_tokens);
    sum_reduction += reduction;
    per_query.push_back(json{{"q", item.q},
                             {"correct", ok},
                             {"context_tokens", r.context_tokens},
                             {"full_graph_tokens", r.full_graph_tokens},
                             {"reduction", reduction}});
  }

  const double n = static_cast<double>(items.size());
  json report{{"mode", cfg.mode},
              {"k", k},
              {"queries", items.size()},
              {"correct", correct},
              {"accuracy", static_cast<double>(correct) / n},
              {"tokens",
               json{{"mean_context", sum_context / n},
                    {"mean_full_graph", sum_full / n},
                    {"mean_reduction", sum_reduction / n}}},
              {"per_query", std::move(per_query)}};
  out << report.dump(2) << "\n";
  return 0;
}

int cmd_entropy(const EntropyConfig& cfg, std::ostream& out) {
  LoadedIndex ix = load_index(cfg.index_dir);

  EmbeddingMatrix node_emb(1, 0);
  if (!cfg.node_embeddings.empty()) {
    node_emb = read_embeddings_file(cfg.node_embeddings);
  } else if (ix.manifest.node_embeddings_source == "file") {
    throw DataError(
        "index was built from an embeddings file; pass --node-embeddings to recompute entropy");
  } else {
    auto embedder = make_embedder(embedder_spec_from_manifest(ix.manifest, 30000, 3, 200));
    std::vector<std::string> texts;
    for (int v = 0; v < ix.graph->node_count(); ++v) texts.push_back(ix.graph->node_text(v));
    node_emb = embedder->embed(texts);
  }
  if (node_emb.rows() != static_cast<std::size_t>(ix.graph->node_count())) {
    throw DataError("node embeddings row count does not match the graph");
  }

  EntropyParams params;
  params.lambda = ix.manifest.lambda;
  params.bandwidth = ix.manifest.bandwidth;
  params.dim = node_emb.dim();
  params.subsample_cap = ix.manifest.subsample_cap;
  params.subsample_seed = ix.manifest.seed;

  S2EntropyEngine engine(*ix.graph, node_emb, params);
  S2EntropyEngine::Breakdown entropy = engine.total(ix.tree);

  json report{{"structural", entropy.structural},
              {"semantic_weighted", entropy.semantic_weighted},
              {"total", entropy.total()},
              {"lambda", ix.manifest.lambda},
              {"bandwidth", ix.manifest.bandwidth},
              {"levels", ix.manifest.levels},
              {"tree_nodes", ix.tree.node_count()}};
  out << report.dump(2) << "\n";
  return 0;
}

int cmd_gen(const GenConfig& cfg, std::ostream& out) {
  if (cfg.n < 1) throw UsageError("n must be >= 1");
  if (cfg.dim < 1) throw UsageError("dim must be >= 1");
  if (cfg.out_dir.empty()) throw UsageError("gen needs --out");

  std::unique_ptr<TextualAttributedGraph> graph;
  EmbeddingMatrix emb(cfg.dim, 0);
  std::vector<int> labels;
  int u = -1, v = -1;

  if (cfg.kind == "random") {
    graph = std::make_unique<TextualAttributedGraph>(
        testkit::gen_random_graph(cfg.n, cfg.edge_prob, cfg.seed));
    emb = testkit::gen_random_embeddings(cfg.n, cfg.dim, cfg.seed);
    labels.assign(static_cast<std::size_t>(cfg.n), 0);
  } else {
    std::string layout = cfg.layout;
    if (layout.empty()) layout = cfg.kind == "sbm" ? "aligned" : "endpoints-identical";
    testkit::PlantedConfig pc;
    pc.blocks = cfg.blocks;
    pc.p_in = cfg.p_in;
    pc.p_out = cfg.p_out;
    pc.dim = cfg.dim;
    pc.noise = cfg.noise;
    testkit::PlantedInstance inst = testkit::gen_planted(cfg.kind, cfg.n, cfg.seed, layout, pc);
    graph = std::move(inst.graph);
    emb = std::move(inst.embeddings);
    labels = std::move(inst.labels);
    u = inst.u;
    v = inst.v;
  }

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  {
    std::ofstream gout(dir / "graph.jsonl", std::ios::binary | std::ios::trunc);
    if (!gout) throw DataError("cannot write " + (dir / "graph.jsonl").string());
    gout << to_jsonl(*graph);
  }
  write_embeddings_file(dir / "embeddings.bin", emb);
  {
    json lj{{"kind", cfg.kind}, {"n", cfg.n}, {"seed", cfg.seed}, {"labels", labels}};
    lj["u"] = u;
    lj["v"] = v;
    std::ofstream lout(dir / "labels.json", std::ios::binary | std::ios::trunc);
    if (!lout) throw DataError("cannot write " + (dir / "labels.json").string());
    lout << lj.dump(2) << "\n";
  }

  json report{{"out", dir.string()},
              {"kind", cfg.kind},
              {"nodes", graph->node_count()},
              {"edges", graph->edge_count()},
              {"dim", emb.dim()}};
  out << report.dump(2) << "\n";
  return 0;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case Error::Category::usage:
      return 2;
    case Error::Category::data:
      return 3;
    case Error::Category::provider:
      return 4;
    case Error::Category::internal:
      return 5;
  }
  return 5;
}

// key=value lines applied to options the command line left untouched.
// CLI11's own set_config only fires on the root app, not on subcommands.
void apply_config_file(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string entry = CLI::detail::trim_copy(line);
    if (entry.empty() || entry[0] == '#') continue;
    auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config file line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = CLI::detail::trim_copy(entry.substr(0, eq));
    std::string value = CLI::detail::trim_copy(entry.substr(eq + 1));
    CLI::Option* op = sub.get_option_no_throw("--" + key);
    if (op == nullptr && key.size() == 1) op = sub.get_option_no_throw("-" + key);
    if (op == nullptr) throw UsageError("config file: unknown key '" + key + "'");
    if (op->count() > 0) continue;
    try {
      op->add_result(value);
      op->run_callback();
    } catch (const CLI::ParseError& e) {
      throw UsageError("config file: bad value for '" + key + "': " + e.what());
    }
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hierarchical entropy index and retrieval over textual attributed graphs"};
  app.require_subcommand(1);

  BuildConfig bc;
  auto* build = app.add_subcommand("build", "build an index directory from graph.jsonl");
  build->add_option("graph", bc.graph_path, "input graph.jsonl")->required();
  build->add_option("-o,--out", bc.out_dir, "index output directory")->required();
  build->add_option("-L,--levels", bc.levels, "encoding tree height");
  build->add_option("--lambda", bc.lambda, "semantic entropy weight");
  build->add_option("--bandwidth", bc.bandwidth, "KDE bandwidth, a number or 'auto'");
  build->add_option("-k", bc.k, "default retrieval k stored in the manifest");
  build->add_option("--seed", bc.seed, "build seed");
  build->add_option("--embedder", bc.embedder, "hash | http");
  build->add_option("--embed-dim", bc.embed_dim, "embedding dimension");
  build->add_option("--summarizer", bc.summarizer, "extractive | http");
  build->add_option("--budget", bc.token_budget, "summary token budget");
  build->add_option("--exact-threshold", bc.exact_threshold,
                    "max cluster size for exhaustive bipartition");
  build->add_option("--subsample-cap", bc.subsample_cap,
                    "semantic entropy subsample threshold");
  build->add_flag("--ann", bc.ann, "build the approximate search layer");
  build->add_option("--ann-m", bc.ann_m, "ANN neighbors per node");
  build->add_option("--ann-ef", bc.ann_ef, "ANN beam width");
  build->add_option("--threads", bc.threads, "summarization worker threads");
  build->add_option("--node-embeddings", bc.node_embeddings,
                    "embeddings.bin sidecar supplying graph node embeddings");
  build->add_option("--timeout-ms", bc.timeout_ms, "http timeout");
  build->add_option("--attempts", bc.attempts, "http attempts");
  build->add_option("--backoff-ms", bc.backoff_ms, "http backoff base");
  std::string build_cfg;
  build->add_option("--config", build_cfg, "config file with key=value lines; flags win");

  QueryConfig qc;
  auto* query = app.add_subcommand("query", "retrieve context for a question");
  query->add_option("--index", qc.index_dir, "index directory")->required();
  query->add_option("query", qc.query, "query text")->required();
  auto* k_opt = query->add_option("-k", qc.k, "hits to retrieve (manifest default)");
  query->add_flag("--json", qc.as_json, "machine-readable output");
  query->add_flag("--answer", qc.answer, "call the chat provider on the assembled prompt");
  query->add_option("--embedder", qc.embedder, "must match the index manifest");
  query->add_option("--embed-dim", qc.embed_dim, "must match the index manifest");
  query->add_option("--timeout-ms", qc.timeout_ms, "http timeout");
  query->add_option("--attempts", qc.attempts, "http attempts");
  query->add_option("--backoff-ms", qc.backoff_ms, "http backoff base");
  std::string query_cfg;
  query->add_option("--config", query_cfg, "config file with key=value lines; flags win");

  EvalConfig ec;
  auto* eval = app.add_subcommand("eval", "score a qa.jsonl file against the index");
  eval->add_option("--index", ec.index_dir, "index directory")->required();
  eval->add_option("qa", ec.qa_path, "qa.jsonl with {\"q\":...,\"answers\":[...]} lines")
      ->required();
  auto* ek_opt = eval->add_option("-k", ec.k, "hits per query (manifest default)");
  eval->add_option("--mode", ec.mode, "contains | strict");
  eval->add_option("--timeout-ms", ec.timeout_ms, "http timeout");
  eval->add_option("--attempts", ec.attempts, "http attempts");
  eval->add_option("--backoff-ms", ec.backoff_ms, "http backoff base");
  std::string eval_cfg;
  eval->add_option("--config", eval_cfg, "config file with key=value lines; flags win");

  EntropyConfig nc;
  auto* entropy = app.add_subcommand("entropy", "recompute the index tree's entropy totals");
  entropy->add_option("--index", nc.index_dir, "index directory")->required();
  entropy->add_option("--node-embeddings", nc.node_embeddings,
                      "embeddings.bin sidecar for file-sourced builds");

  GenConfig gc;
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  gen->add_option("--kind", gc.kind, "sbm | path | barbell | random")->required();
  gen->add_option("-n", gc.n, "node count")->required();
  gen->add_option("--seed", gc.seed, "instance seed");
  gen->add_option("-o,--out", gc.out_dir, "output directory")->required();
  gen->add_option("--layout", gc.layout, "semantic layout (defaults per kind)");
  gen->add_option("--dim", gc.dim, "embedding dimension");
  gen->add_option("--blocks", gc.blocks, "sbm block count");
  gen->add_option("--p-in", gc.p_in, "sbm in-block edge probability");
  gen->add_option("--p-out", gc.p_out, "sbm cross-block edge probability");
  gen->add_option("--noise", gc.noise, "embedding jitter scale");
  gen->add_option("--edge-prob", gc.edge_prob, "random kind edge probability");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error[usage]: " << e.what() << "\n";
    return 2;
  }

  try {
    apply_config_file(*build, build_cfg);
    apply_config_file(*query, query_cfg);
    apply_config_file(*eval, eval_cfg);
    qc.k_given = k_opt->count() > 0;
    ec.k_given = ek_opt->count() > 0;

    if (build->parsed()) return cmd_build(bc, out);
    if (query->parsed()) return cmd_query(qc, out);
    if (eval->parsed()) return cmd_eval(ec, out);
    if (entropy->parsed()) return cmd_entropy(nc, out);
    if (gen->parsed()) return cmd_gen(gc, out);
    err << "error[usage]: no subcommand\n";
    return 2;
  } catch (const Error& e) {
    err << "error[" << e.category_name() << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error[internal]: " << e.what() << "\n";
    return 5;
  }
}

}  // namespace tret
