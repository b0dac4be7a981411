#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"
#include "tret/entropy.hpp"
#include "tret/errors.hpp"
#include "tret/testkit.hpp"
#include "tret/tree.hpp"

using namespace tret;

namespace {

EntropyParams make_params(double lambda, double h, int dim) {
  EntropyParams p;
  p.lambda = lambda;
  p.bandwidth = h;
  p.dim = dim;
  return p;
}

// Fresh evaluation of a two-sided split, same expression shape as the solver.
double split_objective(const TextualAttributedGraph& g, const EmbeddingMatrix& emb,
                       const EntropyParams& p, const std::vector<int>& side_a,
                       const std::vector<int>& side_b, long long parent_vol) {
  auto side_term = [&](const std::vector<int>& side) {
    double t = structural_term_raw(set_cut(g, side), set_volume(g, side), parent_vol,
                                   g.total_volume());
    if (p.lambda > 0.0) t += p.lambda * semantic_entropy(side, emb, p);
    return t;
  };
  return side_term(side_a) + side_term(side_b);
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("two nodes force the singleton split") {
  TextualAttributedGraph g({{"p", ""}, {"q", ""}}, {{"p", "q", ""}});
  EmbeddingMatrix emb = testkit::gen_random_embeddings(2, 4, 1);
  SplitResult r = solve_bipartition(g, emb, make_params(1.0, 0.4, 4), std::vector<int>{1, 0},
                                    g.total_volume(), SolverConfig{});
  CHECK(r.side_a == std::vector<int>{0});
  CHECK(r.side_b == std::vector<int>{1});
}

TEST_CASE("exact solver matches exhaustive enumeration bit for bit") {
  const double lambdas[] = {0.0, 0.5, 1.0};
  SolverConfig cfg;
  for (std::uint64_t seed = 0; seed < 33; ++seed) {
    int n = 2 + static_cast<int>(seed % 11);
    TextualAttributedGraph g = testkit::gen_random_graph(n, 0.35, seed + 100);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(n, 4, seed + 500);
    EntropyParams p = make_params(lambdas[seed % 3], 0.4, 4);

    std::vector<int> cluster(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cluster[static_cast<std::size_t>(i)] = i;

    SplitResult got = solve_bipartition(g, emb, p, cluster, g.total_volume(), cfg);
    SplitResult want = testkit::enumerate_bipartitions(g, cluster, emb, p);
    CHECK(got.objective == want.objective);
    CHECK(got.side_a == want.side_a);
    CHECK(got.side_b == want.side_b);
  }
}

TEST_CASE("side_a carries the smallest cluster index") {
  TextualAttributedGraph g = test::bridge_graph();
  EmbeddingMatrix emb = testkit::gen_random_embeddings(6, 4, 2);
  SplitResult r = solve_bipartition(g, emb, make_params(0.0, 0.4, 4),
                                    std::vector<int>{5, 4, 3, 2, 1, 0}, 14, SolverConfig{});
  REQUIRE(!r.side_a.empty());
  CHECK(r.side_a.front() == 0);
  CHECK(std::is_sorted(r.side_a.begin(), r.side_a.end()));
  CHECK(std::is_sorted(r.side_b.begin(), r.side_b.end()));
}

TEST_CASE("bridge graph splits at the bridge under lambda zero") {
  TextualAttributedGraph g = test::bridge_graph();
  EmbeddingMatrix emb = testkit::gen_random_embeddings(6, 4, 3);
  std::vector<int> all = {0, 1, 2, 3, 4, 5};
  SplitResult r = solve_bipartition(g, emb, make_params(0.0, 0.4, 4), all, 14, SolverConfig{});
  CHECK(r.side_a == std::vector<int>{0, 1, 2});
  CHECK(r.side_b == std::vector<int>{3, 4, 5});
}

TEST_CASE("local search lands on a single-move local optimum") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const int n = 16;
    TextualAttributedGraph g = testkit::gen_random_graph(n, 0.3, seed);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(n, 4, seed + 40);
    EntropyParams p = make_params(1.0, 0.4, 4);

    std::vector<int> cluster(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) cluster[static_cast<std::size_t>(i)] = i;

    SolverConfig cfg;  // exact_threshold 12 < 16, so the seeded search runs
    SplitResult r = solve_bipartition(g, emb, p, cluster, g.total_volume(), cfg);

    double base = split_objective(g, emb, p, r.side_a, r.side_b, g.total_volume());
    CHECK(r.objective == doctest::Approx(base).epsilon(1e-12));

    auto relocated = [&](const std::vector<int>& from, const std::vector<int>& to, int node) {
      std::vector<int> a = from, b = to;
      a.erase(std::find(a.begin(), a.end(), node));
      b.insert(std::lower_bound(b.begin(), b.end(), node), node);
      return split_objective(g, emb, p, a, b, g.total_volume());
    };
    if (r.side_a.size() > 1) {
      for (int node : r.side_a) CHECK(relocated(r.side_a, r.side_b, node) >= base - 1e-9);
    }
    if (r.side_b.size() > 1) {
      for (int node : r.side_b) CHECK(relocated(r.side_b, r.side_a, node) >= base - 1e-9);
    }
  }
}

TEST_CASE("partition_node attaches both sides") {
  TextualAttributedGraph g = test::bridge_graph();
  EmbeddingMatrix emb = testkit::gen_random_embeddings(6, 4, 5);
  EncodingTree t(g);
  auto [left, right] = partition_node(t, t.root(), emb, make_params(0.0, 0.4, 4), SolverConfig{});
  CHECK(t.node(t.root()).children == std::vector<int>{left, right});
  CHECK(t.members(left) == std::vector<int>{0, 1, 2});
  CHECK(t.members(right) == std::vector<int>{3, 4, 5});
  CHECK(t.node(left).min_member < t.node(right).min_member);
  t.validate(false);
}

TEST_CASE("prune_delta predicts the scratch recomputation") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    TextualAttributedGraph g = testkit::gen_random_graph(14, 0.3, seed);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(14, 4, seed + 9);
    EncodingTree tree = testkit::gen_random_tree(g, 4, seed);
    for (double lambda : {0.0, 1.0}) {
      EntropyParams p = make_params(lambda, 0.4, 4);
      S2EntropyEngine engine(g, emb, p);
      double before = engine.total(tree).total();
      for (int id : tree.ids()) {
        const TreeNode& node = tree.node(id);
        if (node.parent < 0 || node.is_leaf()) continue;
        double delta = prune_delta(tree, id, engine);
        EncodingTree copy = tree;
        prune_node(copy, id);
        double after = engine.total(copy).total();
        CHECK(std::abs((before + delta) - after) <= 1e-9);
      }
    }
  }
}

TEST_CASE("regulate preserves total entropy") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    TextualAttributedGraph g = testkit::gen_random_graph(12, 0.3, seed + 3);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(12, 4, seed + 17);
    EncodingTree tree = testkit::gen_random_tree(g, 3, seed);
    EntropyParams p = make_params(1.0, 0.4, 4);
    S2EntropyEngine engine(g, emb, p);
    double before = engine.total(tree).total();

    std::vector<int> ids = tree.ids();
    int beta = -1;
    for (int id : ids) {
      if (tree.node(id).parent >= 0) beta = id;
    }
    REQUIRE(beta >= 0);
    int alpha = tree.node(beta).parent;
    int inserted = regulate(tree, alpha, beta);
    CHECK(tree.is_pass_through(inserted));
    CHECK(engine.total(tree).total() == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("built bridge tree is regulated and hits the pinned entropy") {
  TextualAttributedGraph g = test::bridge_graph();
  EmbeddingMatrix emb = testkit::gen_random_embeddings(6, 4, 8);
  EntropyParams p = make_params(0.0, 0.1, 4);
  EncodingTree tree = build_encoding_tree(g, emb, p, 2, SolverConfig{});
  tree.validate(true);
  CHECK(tree.height() == 2);
  CHECK(tree.node_count() == 9);
  S2EntropyEngine engine(g, emb, p);
  CHECK(engine.total(tree).total() == doctest::Approx(1.6995138503199656).epsilon(1e-12));
}

TEST_CASE("build is deterministic") {
  TextualAttributedGraph g = testkit::gen_random_graph(24, 0.2, 7);
  EmbeddingMatrix emb = testkit::gen_random_embeddings(24, 8, 7);
  EntropyParams p = make_params(1.0, 0.3, 8);
  EncodingTree a = build_encoding_tree(g, emb, p, 3, SolverConfig{});
  EncodingTree b = build_encoding_tree(g, emb, p, 3, SolverConfig{});
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("build invariants on random graphs") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    int n = 10 + static_cast<int>(seed) * 9;
    TextualAttributedGraph g = testkit::gen_random_graph(n, 0.15, seed + 31);
    EmbeddingMatrix emb = testkit::gen_random_embeddings(n, 8, seed + 77);
    EncodingTree tree = build_encoding_tree(g, emb, make_params(1.0, 0.3, 8), 3, SolverConfig{});
    tree.validate(true);
    CHECK(tree.height() == 3);
    std::vector<int> ids = tree.ids();
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == static_cast<int>(i));
  }
}

TEST_CASE("single-node graph builds a pass-through chain") {
  TextualAttributedGraph g({{"only", "one node"}}, {});
  EmbeddingMatrix emb = testkit::gen_random_embeddings(1, 4, 1);
  EncodingTree tree = build_encoding_tree(g, emb, make_params(1.0, 0.4, 4), 3, SolverConfig{});
  tree.validate(true);
  CHECK(tree.node_count() == 4);
  CHECK(tree.height() == 3);
  int id = tree.root();
  for (int depth = 0; depth < 3; ++depth) {
    REQUIRE(tree.node(id).children.size() == 1);
    id = tree.node(id).children.front();
  }
  CHECK(tree.node(id).is_leaf());
}

}  // TEST_SUITE
