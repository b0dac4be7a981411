#include <algorithm>
#include <set>

#include <doctest.h>

#include "helpers.hpp"
#include "tret/errors.hpp"
#include "tret/graph.hpp"
#include "tret/rng.hpp"
#include "tret/testkit.hpp"

using namespace tret;

TEST_SUITE("graph") {

TEST_CASE("triangle basics") {
  TextualAttributedGraph g = test::triangle_graph();
  CHECK(g.node_count() == 3);
  CHECK(g.edge_count() == 3);
  CHECK(g.total_volume() == 6);
  for (int v = 0; v < 3; ++v) CHECK(g.degree(v) == 2);
  CHECK(g.node_id(0) == "a");
  CHECK(g.node_text(2) == "gamma");
  auto nb = g.neighbors(0);
  CHECK(std::is_sorted(nb.begin(), nb.end()));
}

TEST_CASE("duplicate and reversed edges collapse") {
  std::vector<NodeRecord> nodes = {{"x", ""}, {"y", ""}, {"z", ""}};
  std::vector<RawEdge> edges = {{"x", "y", "first"}, {"y", "x", "second"}, {"x", "y", "third"},
                                {"y", "z", ""}};
  TextualAttributedGraph g(std::move(nodes), edges);
  CHECK(g.edge_count() == 2);
  CHECK(g.duplicate_edges_dropped() == 2);
  const auto* e = g.find_edge(1, 0);
  REQUIRE(e != nullptr);
  CHECK(e->u == 0);
  CHECK(e->v == 1);
  CHECK(e->text == "first");
}

TEST_CASE("construction rejects bad input") {
  CHECK_THROWS_WITH_AS(
      TextualAttributedGraph({{"a", ""}, {"a", ""}}, {}),
      "duplicate node id \"a\"", DataError);
  CHECK_THROWS_AS(TextualAttributedGraph({{"a", ""}}, {{"a", "b", ""}}), DataError);
  CHECK_THROWS_WITH_AS(
      TextualAttributedGraph({{"a", ""}}, {{"a", "a", ""}}),
      "self-loop on node \"a\"", DataError);
}

TEST_CASE("index lookup") {
  TextualAttributedGraph g = test::bridge_graph();
  CHECK(g.index_of("a") == 0);
  CHECK(g.index_of("f") == 5);
  CHECK(g.index_of("nope") == -1);
  CHECK(g.require_index("d") == 3);
  CHECK_THROWS_AS(g.require_index("nope"), DataError);
}

TEST_CASE("edge lookup is symmetric") {
  TextualAttributedGraph g = test::bridge_graph();
  CHECK(g.has_edge(2, 3));
  CHECK(g.has_edge(3, 2));
  CHECK_FALSE(g.has_edge(0, 5));
  CHECK(g.find_edge(0, 5) == nullptr);
  const auto* e = g.find_edge(3, 2);
  REQUIRE(e != nullptr);
  CHECK(e->text == "bridge");
}

TEST_CASE("bridge volumes and cuts") {
  TextualAttributedGraph g = test::bridge_graph();
  CHECK(g.total_volume() == 14);
  NodeSet fruit = NodeSet::from_ids(g, {"a", "b", "c"});
  CHECK(fruit.volume() == 7);
  CHECK(fruit.cut() == 1);
  NodeSet tools = NodeSet::from_ids(g, {"f", "e", "d"});
  CHECK(tools.members() == std::vector<int>{3, 4, 5});
  CHECK(tools.volume() == 7);
  CHECK(tools.cut() == 1);
  CHECK(fruit.contains(1));
  CHECK_FALSE(fruit.contains(4));
}

TEST_CASE("cut symmetry and volume split on random graphs") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    TextualAttributedGraph g = testkit::gen_random_graph(14, 0.3, seed);
    SplitMix64 rng(seed * 977);
    std::vector<int> side, rest;
    for (int v = 0; v < g.node_count(); ++v) {
      (rng.next_unit() < 0.5 ? side : rest).push_back(v);
    }
    if (side.empty() || rest.empty()) continue;
    CHECK(set_cut(g, side) == set_cut(g, rest));
    CHECK(set_volume(g, side) + set_volume(g, rest) == g.total_volume());
  }
}

TEST_CASE("set_volume rejects bad indices") {
  TextualAttributedGraph g = test::triangle_graph();
  std::vector<int> bad = {0, 7};
  CHECK_THROWS_AS(set_volume(g, bad), DataError);
}

TEST_CASE("induced subgraph keeps internal structure") {
  TextualAttributedGraph g = test::bridge_graph();
  NodeSet fruit = NodeSet::from_ids(g, {"a", "b", "c"});
  TextualAttributedGraph sub = induced_subgraph(g, fruit);
  CHECK(sub.node_count() == 3);
  CHECK(sub.edge_count() == 3);
  CHECK(sub.node_text(sub.require_index("a")) == "red apple fruit");
  const auto* e = sub.find_edge(sub.require_index("a"), sub.require_index("b"));
  REQUIRE(e != nullptr);
  CHECK(e->text == "both fruit");
  CHECK(sub.has_edge(sub.require_index("c"), sub.require_index("a")));
}

TEST_CASE("induced subgraph of empty set fails") {
  TextualAttributedGraph g = test::triangle_graph();
  CHECK_THROWS_WITH_AS(induced_subgraph(g, NodeSet::from_indices(g, {})), "empty extraction",
                       DataError);
}

TEST_CASE("jsonl round trip") {
  TextualAttributedGraph g = test::bridge_graph();
  TextualAttributedGraph h = parse_graph_jsonl(to_jsonl(g));
  CHECK(h.node_count() == g.node_count());
  CHECK(h.edge_count() == g.edge_count());
  for (int v = 0; v < g.node_count(); ++v) {
    CHECK(h.node_id(v) == g.node_id(v));
    CHECK(h.node_text(v) == g.node_text(v));
  }
  for (const auto& e : g.edges()) {
    const auto* other = h.find_edge(e.u, e.v);
    REQUIRE(other != nullptr);
    CHECK(other->text == e.text);
  }
}

TEST_CASE("jsonl parser reports line numbers") {
  CHECK_THROWS_WITH_AS(parse_graph_jsonl("{\"kind\":\"node\",\"id\":\"a\",\"text\":\"\"}\nnot json\n"),
                       "line 2: malformed record", DataError);
  CHECK_THROWS_AS(parse_graph_jsonl("{\"kind\":\"mystery\",\"id\":\"a\"}\n"), DataError);
  CHECK_THROWS_AS(parse_graph_jsonl("{\"kind\":\"node\",\"text\":\"missing id\"}\n"), DataError);
  CHECK_THROWS_AS(parse_graph_jsonl("{\"kind\":\"node\",\"id\":7,\"text\":\"\"}\n"), DataError);
}

TEST_CASE("jsonl parser skips blank lines") {
  TextualAttributedGraph g = parse_graph_jsonl(
      "\n{\"kind\":\"node\",\"id\":\"a\",\"text\":\"t\"}\n   \n{\"kind\":\"node\",\"id\":\"b\",\"text\":\"\"}\n"
      "{\"kind\":\"edge\",\"src\":\"a\",\"dst\":\"b\",\"text\":\"\"}\n\n");
  CHECK(g.node_count() == 2);
  CHECK(g.edge_count() == 1);
}

TEST_CASE("load_graph missing file") {
  CHECK_THROWS_AS(load_graph("/nonexistent/graph.jsonl"), DataError);
}

}  // TEST_SUITE
