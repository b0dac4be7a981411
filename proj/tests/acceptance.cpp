// Acceptance gate: ten criteria, one PASS/FAIL line each, nonzero exit if
// any fail. Tolerances and instance parameters are pinned here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "helpers.hpp"
#include "tret/cli.hpp"
#include "tret/embedding.hpp"
#include "tret/entropy.hpp"
#include "tret/errors.hpp"
#include "tret/index.hpp"
#include "tret/providers.hpp"
#include "tret/retriever.hpp"
#include "tret/rng.hpp"
#include "tret/testkit.hpp"
#include "tret/tree.hpp"

using namespace tret;
namespace fs = std::filesystem;

namespace {

constexpr double kOracleTol = 1e-9;      // criterion 1, 3, 4 numeric agreement
constexpr double kTimeC1 = 30.0;         // seconds
constexpr double kTimeC2 = 60.0;
constexpr double kTimeC5 = 120.0;

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

void report(int number, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << "\n";
  if (!ok) ++g_failures;
}

EntropyParams make_params(double lambda, double h, int dim) {
  EntropyParams p;
  p.lambda = lambda;
  p.bandwidth = h;
  p.dim = dim;
  return p;
}

// 1. The independent oracle and the production evaluator agree on total
// tree entropy for >= 200 random (graph, embeddings, tree, params) tuples.
void criterion1() {
  Timer t;
  const double lambdas[] = {0.0, 0.5, 1.0};
  const double bandwidths[] = {0.3, 0.8};
  const int dims[] = {2, 3, 8};
  int cases = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    int n = 2 + static_cast<int>(seed % 11);
    int dim = dims[seed % 3];
    TextualAttributedGraph g = testkit::gen_random_graph(n, 0.35, seed * 7 + 1);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(n, dim, seed * 13 + 5);
    EncodingTree tree = testkit::gen_random_tree(g, 1 + static_cast<int>(seed % 4), seed);
    EntropyParams p = make_params(lambdas[(seed / 3) % 3], bandwidths[seed % 2], dim);

    double official = total_tree_entropy(tree, g, emb, p);
    double oracle = testkit::oracle_total_entropy(tree, g, emb, p);
    worst = std::max(worst, std::abs(official - oracle));
    ++cases;
  }
  double secs = t.seconds();
  bool ok = cases >= 200 && worst <= kOracleTol && secs < kTimeC1;
  report(1, "oracle and evaluator agree on total entropy", ok,
         std::to_string(cases) + " cases, max delta " + fmt(worst) + ", " + fmt(secs) + "s");
}

// 2. The solver's exact path returns the same optimal bipartition (sides and
// objective, bitwise) as brute-force enumeration for >= 100 graphs covering
// cluster sizes 2..12.
void criterion2() {
  Timer t;
  const double lambdas[] = {0.0, 0.5, 1.0};
  int cases = 0, mismatches = 0;
  bool size_seen[13] = {};
  for (std::uint64_t seed = 0; seed < 110; ++seed) {
    int n = 2 + static_cast<int>(seed % 11);
    size_seen[n] = true;
    TextualAttributedGraph g = testkit::gen_random_graph(n, 0.35, seed + 1000);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(n, 4, seed + 2000);
    EntropyParams p = make_params(lambdas[seed % 3], 0.4, 4);

    std::vector<int> cluster(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cluster[static_cast<std::size_t>(i)] = i;

    SplitResult got = solve_bipartition(g, emb, p, cluster, g.total_volume(), SolverConfig{});
    SplitResult want = testkit::enumerate_bipartitions(g, cluster, emb, p);
    if (got.objective != want.objective || got.side_a != want.side_a ||
        got.side_b != want.side_b) {
      ++mismatches;
    }
    ++cases;
  }
  bool covered = true;
  for (int n = 2; n <= 12; ++n) covered = covered && size_seen[n];
  double secs = t.seconds();
  bool ok = cases >= 100 && covered && mismatches == 0 && secs < kTimeC2;
  report(2, "exact bipartitions equal exhaustive enumeration", ok,
         std::to_string(cases) + " graphs, sizes 2..12, " + std::to_string(mismatches) +
             " mismatches, " + fmt(secs) + "s");
}

// 3. Inserting a pass-through node never changes total entropy, and the
// inserted node's term is purely structural.
void criterion3() {
  Timer t;
  int cases = 0, bad = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; cases < 100 && seed < 200; ++seed) {
    int n = 4 + static_cast<int>(seed % 11);
    TextualAttributedGraph g = testkit::gen_random_graph(n, 0.3, seed + 50);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(n, 4, seed + 60);
    EncodingTree tree = testkit::gen_random_tree(g, 3, seed);
    EntropyParams p = make_params(1.0, 0.4, 4);
    S2EntropyEngine engine(g, emb, p);
    double before = engine.total(tree).total();

    std::vector<int> betas;
    for (int id : tree.ids()) {
      if (tree.node(id).parent >= 0) betas.push_back(id);
    }
    for (std::size_t pick = 0; pick < betas.size() && pick < 3; ++pick) {
      int beta = betas[pick * betas.size() / std::min<std::size_t>(3, betas.size())];
      EncodingTree copy = tree;
      int alpha = copy.node(beta).parent;
      int inserted = regulate(copy, alpha, beta);
      double after = engine.total(copy).total();
      worst = std::max(worst, std::abs(after - before));
      bool pass_through = copy.is_pass_through(inserted);
      const TreeNode& node = copy.node(inserted);
      double structural =
          engine.structural(node.cut, node.volume, copy.node(node.parent).volume);
      bool term_clean = engine.node_term(copy, inserted) == structural;
      if (std::abs(after - before) > kOracleTol || !pass_through || !term_clean) ++bad;
      ++cases;
    }
  }
  bool ok = cases >= 100 && bad == 0;
  report(3, "regulation preserves total entropy", ok,
         std::to_string(cases) + " insertions, max delta " + fmt(worst) + ", " +
             std::to_string(bad) + " violations");
}

// 4. prune_delta predicts the from-scratch entropy change of an applied
// prune for >= 100 internal nodes.
void criterion4() {
  Timer t;
  int cases = 0, bad = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; cases < 100 && seed < 300; ++seed) {
    int n = 10 + static_cast<int>(seed % 7);
    TextualAttributedGraph g = testkit::gen_random_graph(n, 0.3, seed + 400);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(n, 4, seed + 500);
    EncodingTree tree = testkit::gen_random_tree(g, 4, seed);
    EntropyParams p = make_params(seed % 2 == 0 ? 1.0 : 0.0, 0.4, 4);
    S2EntropyEngine engine(g, emb, p);
    double before = engine.total(tree).total();

    for (int id : tree.ids()) {
      const TreeNode& node = tree.node(id);
      if (node.parent < 0 || node.is_leaf()) continue;
      double delta = prune_delta(tree, id, engine);
      EncodingTree copy = tree;
      prune_node(copy, id);
      double after = engine.total(copy).total();
      double err = std::abs((before + delta) - after);
      worst = std::max(worst, err);
      if (err > kOracleTol) ++bad;
      ++cases;
    }
  }
  bool ok = cases >= 100 && bad == 0;
  report(4, "incremental prune deltas match scratch recomputation", ok,
         std::to_string(cases) + " prunes, max error " + fmt(worst) + ", " +
             std::to_string(bad) + " violations");
}

// 5. Full builds on 50 graphs up to 200 nodes produce structurally valid,
// regulated trees of exactly the requested height.
void criterion5() {
  Timer t;
  int cases = 0, bad = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    int n = 20 + static_cast<int>(seed * 180 / 49);
    int levels = 2 + static_cast<int>(seed % 3);
    TextualAttributedGraph g;
    EmbeddingMatrix emb;
    if (seed % 2 == 0) {
      testkit::PlantedConfig cfg;
      cfg.blocks = 4;
      cfg.p_in = 0.1;
      cfg.p_out = 0.02;
      cfg.dim = 8;
      testkit::PlantedInstance inst = testkit::gen_planted("sbm", n, seed, "aligned", cfg);
      g = std::move(*inst.graph);
      emb = std::move(inst.embeddings);
    } else {
      g = testkit::gen_random_graph(n, std::min(1.0, 4.0 / n), seed + 700);
      emb = testkit::gen_random_embeddings(n, 8, seed + 800);
    }
    EntropyParams p = make_params(1.0, 0.3, 8);
    try {
      EncodingTree tree = build_encoding_tree(g, emb, p, levels, SolverConfig{});
      tree.validate(true);
      if (tree.height() != levels) ++bad;
    } catch (const std::exception&) {
      ++bad;
    }
    ++cases;
  }
  double secs = t.seconds();
  bool ok = cases == 50 && bad == 0 && secs < kTimeC5;
  report(5, "builds up to 200 nodes validate as regulated trees", ok,
         std::to_string(cases) + " builds, " + std::to_string(bad) + " failures, " + fmt(secs) +
             "s");
}

// 6. Catalytic effect: on the shipped path instance the semantically
// identical distant pair separates at lambda 0 and co-clusters (together
// with bridging nodes) once lambda is large enough.
void criterion6() {
  testkit::CatalyticInstance inst = testkit::shipped_path_instance();
  EntropyParams base = make_params(0.0, inst.bandwidth, inst.embeddings.dim());
  testkit::SweepResult sweep = testkit::catalytic_sweep(inst, inst.lambda_grid, base);

  double sim = dot(inst.embeddings.row(static_cast<std::size_t>(inst.u)),
                   inst.embeddings.row(static_cast<std::size_t>(inst.v)));
  int dist = testkit::geodesic_distance(*inst.graph, inst.u, inst.v);

  bool separated_at_zero = !sweep.rows.empty() && !sweep.rows.front().co_clustered &&
                           sweep.rows.front().lambda == 0.0;
  bool co_clusters = sweep.lambda0.has_value() && *sweep.lambda0 <= 10.0;
  bool bridging = false;
  for (const auto& row : sweep.rows) {
    if (row.co_clustered && !row.bridging.empty()) bridging = true;
  }
  bool instance_ok = sim > 1.0 - inst.delta && dist > inst.gamma;

  bool ok = separated_at_zero && co_clusters && bridging && instance_ok && sweep.monotone;
  std::string detail = "sim(u,v)=" + fmt(sim) + ", d_G=" + std::to_string(dist);
  if (sweep.lambda0) detail += ", lambda0=" + fmt(*sweep.lambda0);
  report(6, "catalytic co-clustering of the distant identical pair", ok, detail);
}

// 7. Ablation: with aligned semantics, lambda 1 recovers the planted
// partition at least as well as lambda 0 on average (20 seeded instances).
void criterion7() {
  testkit::PlantedConfig cfg;
  cfg.blocks = 2;
  cfg.p_in = 0.12;
  cfg.p_out = 0.10;
  cfg.dim = 16;
  cfg.noise = 0.05;
  const double bandwidth = 0.3;
  const int levels = 2;

  auto level1_labels = [](const EncodingTree& tree, int n) {
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    int cluster = 0;
    for (int child : tree.node(tree.root()).children) {
      for (int v : tree.members(child)) labels[static_cast<std::size_t>(v)] = cluster;
      ++cluster;
    }
    return labels;
  };

  double mean0 = 0.0, mean1 = 0.0;
  const int seeds = 20;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    testkit::PlantedInstance inst = testkit::gen_planted("sbm", 40, seed, "aligned", cfg);
    for (double lambda : {0.0, 1.0}) {
      EntropyParams p = make_params(lambda, bandwidth, cfg.dim);
      EncodingTree tree =
          build_encoding_tree(*inst.graph, inst.embeddings, p, levels, SolverConfig{});
      double ri = testkit::rand_index(level1_labels(tree, 40), inst.labels);
      (lambda == 0.0 ? mean0 : mean1) += ri / seeds;
    }
  }
  bool ok = mean1 >= mean0;
  report(7, "semantic term improves planted-partition recovery", ok,
         "mean rand index lambda=1: " + fmt(mean1) + " vs lambda=0: " + fmt(mean0));
}

// 8. Retrieval context stays under half the full-graph textualization for
// at least 90% of 50 seeded queries against a 1000-node index.
void criterion8() {
  testkit::PlantedConfig cfg;
  cfg.blocks = 8;
  cfg.p_in = 0.02;
  cfg.p_out = 0.002;
  cfg.dim = 64;
  testkit::PlantedInstance inst = testkit::gen_planted("sbm", 1000, 11, "aligned", cfg);

  EntropyParams p = make_params(1.0, 0.3, 64);
  EncodingTree tree = build_encoding_tree(*inst.graph, inst.embeddings, p, 3, SolverConfig{});

  SummarizerSpec sspec;
  auto summarizer = make_summarizer(sspec);
  std::vector<Summary> summaries = summarize_tree(tree, *inst.graph, *summarizer);
  EmbedderSpec espec;
  espec.dim = 64;
  auto embedder = make_embedder(espec);
  TreeIndex index = build_index(tree, summaries, embed_tree(summaries, *embedder));

  SplitMix64 rng(0x71756572u);
  int under_half = 0;
  double worst = 0.0;
  const int queries = 50;
  for (int q = 0; q < queries; ++q) {
    std::vector<float> query(64);
    double norm2 = 0.0;
    for (auto& x : query) {
      x = static_cast<float>(rng.next_symmetric());
      norm2 += static_cast<double>(x) * x;
    }
    double norm = std::sqrt(norm2);
    for (auto& x : query) x = static_cast<float>(x / norm);
    RetrievalResult r = retrieve(index, tree, *inst.graph, query, 6);
    double ratio =
        static_cast<double>(r.context_tokens) / static_cast<double>(r.full_graph_tokens);
    if (ratio < 0.5) ++under_half;
    worst = std::max(worst, ratio);
  }
  bool ok = under_half >= (queries * 9 + 9) / 10;
  report(8, "retrieved context stays under half the full graph", ok,
         std::to_string(under_half) + "/" + std::to_string(queries) +
             " queries under 50%, worst ratio " + fmt(worst));
}

// 9. Two end-to-end CLI builds of the same graph are byte-identical across
// every index artifact.
void criterion9() {
  test::TempDir dir;
  test::write_file(dir / "graph.jsonl", test::bridge_jsonl());
  std::ostringstream sink, errs;
  auto build = [&](const std::string& out) {
    std::vector<std::string> args = {"build",  (dir / "graph.jsonl").string(),
                                     "-o",     out,
                                     "-L",     "3",
                                     "--lambda", "1.0",
                                     "--bandwidth", "auto"};
    return run_cli(args, sink, errs);
  };
  int rc1 = build((dir / "one").string());
  int rc2 = build((dir / "two").string());

  bool identical = rc1 == 0 && rc2 == 0;
  std::string mismatch;
  for (const char* name :
       {"manifest.json", "tree.json", "graph.jsonl", "summaries.jsonl", "embeddings.bin"}) {
    if (test::read_file(dir / "one" / name) != test::read_file(dir / "two" / name)) {
      identical = false;
      mismatch += std::string(name) + " ";
    }
  }
  report(9, "repeat builds are byte-identical", identical,
         identical ? "5/5 artifacts equal" : ("differs: " + mismatch + errs.str()));
}

// 10. Saved indexes load back identically, and every corruption mode is
// rejected with a data error.
void criterion10() {
  TextualAttributedGraph g = test::bridge_graph();
  EmbeddingMatrix node_emb = testkit::gen_random_embeddings(6, 8, 42);
  EntropyParams p = make_params(1.0, 0.3, 8);
  EncodingTree tree = build_encoding_tree(g, node_emb, p, 2, SolverConfig{});

  SummarizerSpec sspec;
  auto summarizer = make_summarizer(sspec);
  std::vector<Summary> summaries = summarize_tree(tree, g, *summarizer);
  EmbedderSpec espec;
  espec.dim = 8;
  auto embedder = make_embedder(espec);
  EmbeddingMatrix emb = embed_tree(summaries, *embedder);
  TreeIndex index = build_index(tree, summaries, emb);

  IndexManifest manifest;
  manifest.lambda = 1.0;
  manifest.bandwidth = 0.3;
  manifest.bandwidth_mode = "fixed";
  manifest.embedder = nlohmann::json{{"kind", "hash"}, {"dim", 8}, {"seed", 42}};
  manifest.summarizer = nlohmann::json{{"kind", "extractive"}, {"token_budget", 200}};
  manifest.embedder_id = embedder->id();
  manifest.summarizer_id = summarizer->id();

  test::TempDir dir;
  fs::path good = dir / "good";
  save_index(good, index, tree, g, summaries, manifest);

  bool round_trip = false;
  std::string detail;
  try {
    LoadedIndex loaded = load_index(good);
    round_trip = loaded.tree.to_json() == tree.to_json() &&
                 loaded.index.embeddings().data() == emb.data() &&
                 loaded.summaries.size() == summaries.size() &&
                 loaded.manifest.dim == 8 &&
                 loaded.manifest.count == static_cast<long long>(index.size()) &&
                 loaded.manifest.levels == 2 && loaded.manifest.lambda == 1.0 &&
                 loaded.manifest.bandwidth == 0.3 && loaded.manifest.bandwidth_mode == "fixed" &&
                 loaded.manifest.embedder_id == manifest.embedder_id &&
                 loaded.manifest.graph_nodes == 6 && loaded.manifest.graph_edges == 7;
    for (std::size_t i = 0; round_trip && i < summaries.size(); ++i) {
      round_trip = loaded.summaries[i].id == summaries[i].id &&
                   loaded.summaries[i].text == summaries[i].text &&
                   loaded.summaries[i].source == summaries[i].source;
    }
    if (!round_trip) detail = "loaded fields disagree";
  } catch (const std::exception& ex) {
    detail = std::string("load failed: ") + ex.what();
  }

  auto corrupt = [&](const std::string& label, auto&& mutate) {
    fs::path copy = dir / label;
    fs::copy(good, copy, fs::copy_options::recursive);
    mutate(copy);
    try {
      load_index(copy);
      detail += " [" + label + " not rejected]";
      return false;
    } catch (const DataError&) {
      return true;
    } catch (const std::exception&) {
      detail += " [" + label + " wrong category]";
      return false;
    }
  };

  int rejected = 0;
  rejected += corrupt("flip", [](const fs::path& d) {
    std::string bytes = test::read_file(d / "embeddings.bin");
    bytes[bytes.size() - 1] = static_cast<char>(bytes[bytes.size() - 1] ^ 0x1);
    test::write_file(d / "embeddings.bin", bytes);
  });
  rejected += corrupt("magic", [](const fs::path& d) {
    std::string bytes = test::read_file(d / "embeddings.bin");
    bytes[0] = 'X';
    test::write_file(d / "embeddings.bin", bytes);
  });
  rejected += corrupt("truncate", [](const fs::path& d) {
    std::string bytes = test::read_file(d / "embeddings.bin");
    test::write_file(d / "embeddings.bin", bytes.substr(0, bytes.size() / 2));
  });
  rejected += corrupt("dim", [](const fs::path& d) {
    nlohmann::json mj = nlohmann::json::parse(test::read_file(d / "manifest.json"));
    mj["dim"] = 5;
    test::write_file(d / "manifest.json", mj.dump(2) + "\n");
  });
  rejected += corrupt("missing-manifest", [](const fs::path& d) {
    fs::remove(d / "manifest.json");
  });

  bool ok = round_trip && rejected == 5;
  report(10, "index round trip and corruption detection", ok,
         detail.empty() ? ("round trip ok, " + std::to_string(rejected) + "/5 corruptions rejected")
                        : detail);
}

}  // namespace

int main() {
  unsetenv("TRET_API_BASE");
  unsetenv("TRET_API_KEY");
  unsetenv("TRET_CHAT_MODEL");
  unsetenv("TRET_EMBED_MODEL");

  Timer total;
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::cout << (g_failures == 0 ? "all criteria passed" : "criteria failed") << " in "
            << fmt(total.seconds()) << "s\n";
  return g_failures == 0 ? 0 : 1;
}
