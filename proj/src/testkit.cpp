#include "tret/testkit.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "tret/errors.hpp"
#include "tret/rng.hpp"

namespace tret::testkit {

namespace {

long long naive_volume(const TextualAttributedGraph& g, const std::vector<char>& in) {
  long long vol = 0;
  for (const auto& e : g.edges()) {
    vol += in[static_cast<std::size_t>(e.u)];
    vol += in[static_cast<std::size_t>(e.v)];
  }
  return vol;
}

long long naive_cut(const TextualAttributedGraph& g, const std::vector<char>& in) {
  long long cut = 0;
  for (const auto& e : g.edges()) {
    if (in[static_cast<std::size_t>(e.u)] != in[static_cast<std::size_t>(e.v)]) ++cut;
  }
  return cut;
}

// Same guard as the optimized term: zero cut contributes exactly zero.
double naive_structural(long long cut, long long vol, long long parent_vol, long long total_vol) {
  if (cut == 0) return 0.0;
  return -(static_cast<double>(cut) / static_cast<double>(total_vol)) *
         std::log2(static_cast<double>(vol) / static_cast<double>(parent_vol));
}

// Plain Eq. 4: densities without log-sum-exp, normalizer via pow.
double naive_semantic(const std::vector<int>& members, const EmbeddingMatrix& emb,
                      const EntropyParams& params) {
  const double h2 = params.bandwidth * params.bandwidth;
  const double norm = std::pow(2.0 * std::numbers::pi * h2, -0.5 * emb.dim());
  const double n = static_cast<double>(members.size());
  double acc = 0.0;
  for (int v : members) {
    double density = 0.0;
    for (int w : members) {
      double d2 = squared_distance(emb.row(static_cast<std::size_t>(v)),
                                   emb.row(static_cast<std::size_t>(w)));
      density += norm * std::exp(-d2 / (2.0 * h2));
    }
    acc += std::log(density / n);
  }
  return -acc / n;
}

}  // namespace

double oracle_total_entropy(const EncodingTree& tree, const TextualAttributedGraph& g,
                            const EmbeddingMatrix& embeddings, const EntropyParams& params) {
  tree.validate(false);
  const long long total_vol = 2LL * static_cast<long long>(g.edges().size());
  double total = 0.0;
  for (int id : tree.ids()) {
    const TreeNode& node = tree.node(id);
    if (node.parent < 0) continue;

    std::vector<int> members = tree.members(id);
    std::vector<int> parent_members = tree.members(node.parent);
    std::vector<char> in(static_cast<std::size_t>(g.node_count()), 0);
    for (int v : members) in[static_cast<std::size_t>(v)] = 1;
    std::vector<char> in_parent(static_cast<std::size_t>(g.node_count()), 0);
    for (int v : parent_members) in_parent[static_cast<std::size_t>(v)] = 1;

    total += naive_structural(naive_cut(g, in), naive_volume(g, in),
                              naive_volume(g, in_parent), total_vol);
    if (params.lambda > 0.0 && node.children.size() != 1) {
      total += params.lambda * naive_semantic(members, embeddings, params);
    }
  }
  return total;
}

namespace {

bool id_lex_less(const TextualAttributedGraph& g, std::span<const int> a, std::span<const int> b) {
  auto na = a.size(), nb = b.size();
  for (std::size_t i = 0; i < std::min(na, nb); ++i) {
    int c = g.node_id(a[i]).compare(g.node_id(b[i]));
    if (c != 0) return c < 0;
  }
  return na < nb;
}

}  // namespace

SplitResult enumerate_bipartitions(const TextualAttributedGraph& g, std::vector<int> cluster,
                                   const EmbeddingMatrix& embeddings,
                                   const EntropyParams& params) {
  const int n = static_cast<int>(cluster.size());
  if (n < 2 || n > 20) throw UsageError("cluster size out of range for exhaustive enumeration");
  std::sort(cluster.begin(), cluster.end());

  std::vector<char> in(static_cast<std::size_t>(g.node_count()), 0);
  for (int v : cluster) in[static_cast<std::size_t>(v)] = 1;
  const long long parent_vol = naive_volume(g, in);
  const long long total_vol = 2LL * static_cast<long long>(g.edges().size());

  // Cut and volume per side in one edge scan; a cross-side edge counts
  // toward both cuts, an edge leaving the cluster toward its side's only.
  std::vector<char> side(static_cast<std::size_t>(g.node_count()), 0);  // 1 = A, 2 = B

  SplitResult best;
  best.objective = std::numeric_limits<double>::infinity();

  std::vector<int> side_a, side_b;
  const std::uint64_t mask_end = (1ull << (n - 1)) - 1;
  for (std::uint64_t mask = 0; mask < mask_end; ++mask) {
    side_a.clear();
    side_b.clear();
    side_a.push_back(cluster[0]);
    for (int i = 1; i < n; ++i) {
      if (mask >> (i - 1) & 1) {
        side_a.push_back(cluster[static_cast<std::size_t>(i)]);
      } else {
        side_b.push_back(cluster[static_cast<std::size_t>(i)]);
      }
    }

    for (int v : side_a) side[static_cast<std::size_t>(v)] = 1;
    for (int v : side_b) side[static_cast<std::size_t>(v)] = 2;
    long long vol[3] = {0, 0, 0};
    long long cut[3] = {0, 0, 0};
    for (const auto& e : g.edges()) {
      int su = side[static_cast<std::size_t>(e.u)];
      int sv = side[static_cast<std::size_t>(e.v)];
      ++vol[su];
      ++vol[sv];
      if (su != sv) {
        ++cut[su];
        ++cut[sv];
      }
    }
    for (int v : side_a) side[static_cast<std::size_t>(v)] = 0;
    for (int v : side_b) side[static_cast<std::size_t>(v)] = 0;

    double term_a = naive_structural(cut[1], vol[1], parent_vol, total_vol);
    if (params.lambda > 0.0) term_a += params.lambda * semantic_entropy(side_a, embeddings, params);
    double term_b = naive_structural(cut[2], vol[2], parent_vol, total_vol);
    if (params.lambda > 0.0) term_b += params.lambda * semantic_entropy(side_b, embeddings, params);
    double obj = term_a + term_b;

    if (obj < best.objective || (obj == best.objective && id_lex_less(g, side_a, best.side_a))) {
      best.objective = obj;
      best.side_a = side_a;
      best.side_b = side_b;
    }
  }
  return best;
}

namespace {

std::vector<float> unit_axis(int dim, int axis) {
  std::vector<float> row(static_cast<std::size_t>(dim), 0.0f);
  row[static_cast<std::size_t>(axis % dim)] = 1.0f;
  return row;
}

std::vector<float> jittered_unit(std::span<const float> center, double noise, SplitMix64& rng) {
  std::vector<double> acc(center.begin(), center.end());
  for (double& a : acc) a += noise * rng.next_symmetric();
  double norm = 0.0;
  for (double a : acc) norm += a * a;
  norm = std::sqrt(norm);
  std::vector<float> row(acc.size(), 0.0f);
  if (norm < 1e-12) {
    row[0] = 1.0f;
    return row;
  }
  for (std::size_t i = 0; i < acc.size(); ++i) row[i] = static_cast<float>(acc[i] / norm);
  return row;
}

}  // namespace

PlantedInstance gen_planted(const std::string& kind, int n, std::uint64_t seed,
                            const std::string& semantic_layout, const PlantedConfig& config) {
  if (n < 4) throw UsageError("planted instances need n >= 4");
  if (config.dim < 1) throw UsageError("planted embedding dim must be >= 1");

  PlantedInstance out;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  SplitMix64 rng(seed);

  std::vector<NodeRecord> nodes;
  std::vector<RawEdge> edges;
  EmbeddingMatrix emb(config.dim, 0);

  auto make_nodes = [&](auto label_of) {
    for (int i = 0; i < n; ++i) {
      int label = label_of(i);
      out.labels[static_cast<std::size_t>(i)] = label;
      nodes.push_back(NodeRecord{std::to_string(i),
                                 "node " + std::to_string(i) + " group " + std::to_string(label)});
    }
  };

  if (kind == "sbm") {
    if (semantic_layout != "aligned" && semantic_layout != "misaligned") {
      throw UsageError("sbm layout must be aligned or misaligned");
    }
    const int blocks = std::max(2, config.blocks);
    make_nodes([&](int i) { return static_cast<int>(static_cast<long long>(i) * blocks / n); });
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        double p = out.labels[static_cast<std::size_t>(a)] == out.labels[static_cast<std::size_t>(b)]
                       ? config.p_in
                       : config.p_out;
        if (rng.next_unit() < p) edges.push_back(RawEdge{std::to_string(a), std::to_string(b), ""});
      }
    }
    SplitMix64 emb_rng(mix_seed(seed, 0x73656d));
    for (int i = 0; i < n; ++i) {
      int group = out.labels[static_cast<std::size_t>(i)];
      if (semantic_layout == "misaligned") {
        group = static_cast<int>(emb_rng.next_below(static_cast<std::uint64_t>(blocks)));
      }
      std::vector<float> center = unit_axis(config.dim, group);
      emb.append_row(jittered_unit(center, config.noise, emb_rng));
    }
  } else if (kind == "path" || kind == "barbell") {
    if (semantic_layout != "endpoints-identical") {
      throw UsageError(kind + " layout must be endpoints-identical");
    }
    out.u = 0;
    out.v = n - 1;
    make_nodes([&](int i) { return (i == 0 || i == n - 1) ? 0 : 1; });
    if (kind == "path") {
      for (int i = 0; i + 1 < n; ++i) {
        edges.push_back(RawEdge{std::to_string(i), std::to_string(i + 1), ""});
      }
    } else {
      const int half = n / 2;
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          if ((a < half) == (b < half)) {
            edges.push_back(RawEdge{std::to_string(a), std::to_string(b), ""});
          }
        }
      }
      edges.push_back(RawEdge{std::to_string(half - 1), std::to_string(half), ""});
    }
    SplitMix64 emb_rng(mix_seed(seed, 0x73656d));
    for (int i = 0; i < n; ++i) {
      if (i == 0 || i == n - 1) {
        emb.append_row(unit_axis(config.dim, 0));
      } else if (config.dim > 1) {
        std::vector<float> center = unit_axis(config.dim, 1 + (i - 1) % (config.dim - 1));
        emb.append_row(jittered_unit(center, config.noise, emb_rng));
      } else {
        emb.append_row(unit_axis(config.dim, 0));
      }
    }
  } else {
    throw UsageError("unknown planted kind: " + kind);
  }

  out.graph = std::make_unique<TextualAttributedGraph>(std::move(nodes), edges);
  out.embeddings = std::move(emb);
  return out;
}

CatalyticInstance shipped_path_instance() {
  const int dim = 8;
  std::vector<NodeRecord> nodes = {
      {"u", "terminal concept"},  {"w1", "relay one"}, {"w2", "relay two"},
      {"w3", "relay three"},      {"v", "terminal concept"},
  };
  std::vector<RawEdge> edges = {
      {"u", "w1", ""}, {"w1", "w2", ""}, {"w2", "w3", ""}, {"w3", "v", ""}};

  CatalyticInstance inst;
  inst.graph = std::make_unique<TextualAttributedGraph>(std::move(nodes), edges);
  EmbeddingMatrix emb(dim, 0);
  emb.append_row(unit_axis(dim, 0));  // u
  emb.append_row(unit_axis(dim, 1));  // w1
  emb.append_row(unit_axis(dim, 2));  // w2
  emb.append_row(unit_axis(dim, 3));  // w3
  emb.append_row(unit_axis(dim, 0));  // v, identical to u
  inst.embeddings = std::move(emb);
  inst.u = 0;
  inst.v = 4;
  inst.delta = 0.05;
  inst.gamma = 3;
  inst.bandwidth = 0.3;
  for (int i = 0; i <= 40; ++i) inst.lambda_grid.push_back(0.25 * i);
  return inst;
}

SweepResult catalytic_sweep(const CatalyticInstance& instance, std::span<const double> lambda_grid,
                            const EntropyParams& base_params) {
  if (lambda_grid.empty()) throw UsageError("empty lambda grid");
  const TextualAttributedGraph& g = *instance.graph;
  std::vector<int> cluster(static_cast<std::size_t>(g.node_count()));
  for (std::size_t i = 0; i < cluster.size(); ++i) cluster[i] = static_cast<int>(i);

  SweepResult out;
  bool seen = false;
  for (double lambda : lambda_grid) {
    EntropyParams params = base_params;
    params.lambda = lambda;
    SplitResult split = enumerate_bipartitions(g, cluster, instance.embeddings, params);

    SweepRow row;
    row.lambda = lambda;
    row.objective = split.objective;
    const std::vector<int>& with_u =
        std::binary_search(split.side_a.begin(), split.side_a.end(), instance.u) ? split.side_a
                                                                                 : split.side_b;
    row.pair_side = with_u;
    row.co_clustered = std::binary_search(with_u.begin(), with_u.end(), instance.v);
    if (row.co_clustered) {
      for (int w : with_u) {
        if (w != instance.u && w != instance.v) row.bridging.push_back(w);
      }
      if (!seen) out.lambda0 = lambda;
      seen = true;
    } else if (seen) {
      out.monotone = false;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

int geodesic_distance(const TextualAttributedGraph& g, int u, int v) {
  if (u == v) return 0;
  std::vector<int> dist(static_cast<std::size_t>(g.node_count()), -1);
  dist[static_cast<std::size_t>(u)] = 0;
  std::deque<int> queue{u};
  while (!queue.empty()) {
    int x = queue.front();
    queue.pop_front();
    for (int w : g.neighbors(x)) {
      if (dist[static_cast<std::size_t>(w)] >= 0) continue;
      dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(x)] + 1;
      if (w == v) return dist[static_cast<std::size_t>(w)];
      queue.push_back(w);
    }
  }
  return -1;
}

TextualAttributedGraph gen_random_graph(int n, double edge_prob, std::uint64_t seed) {
  if (n < 1) throw UsageError("graph size must be >= 1");
  SplitMix64 rng(seed);
  std::vector<NodeRecord> nodes;
  nodes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes.push_back(NodeRecord{std::to_string(i), "node " + std::to_string(i)});
  }
  std::vector<RawEdge> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (rng.next_unit() < edge_prob) {
        edges.push_back(RawEdge{std::to_string(a), std::to_string(b), ""});
      }
    }
  }
  return TextualAttributedGraph(std::move(nodes), edges);
}

EmbeddingMatrix gen_random_embeddings(int n, int dim, std::uint64_t seed) {
  if (n < 0 || dim < 1) throw UsageError("bad embedding shape");
  SplitMix64 rng(seed);
  EmbeddingMatrix emb(dim, 0);
  std::vector<double> acc(static_cast<std::size_t>(dim));
  std::vector<float> row(static_cast<std::size_t>(dim));
  for (int i = 0; i < n; ++i) {
    double norm = 0.0;
    for (double& a : acc) {
      a = rng.next_symmetric();
      norm += a * a;
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < acc.size(); ++j) {
      row[j] = norm < 1e-12 ? (j == 0 ? 1.0f : 0.0f) : static_cast<float>(acc[j] / norm);
    }
    emb.append_row(row);
  }
  return emb;
}

namespace {

int subtree_max_leaf_depth(const EncodingTree& tree, int id) {
  const TreeNode& n = tree.node(id);
  if (n.is_leaf()) return n.depth;
  int deepest = 0;
  for (int c : n.children) deepest = std::max(deepest, subtree_max_leaf_depth(tree, c));
  return deepest;
}

}  // namespace

EncodingTree gen_random_tree(const TextualAttributedGraph& g, int max_height, std::uint64_t seed) {
  if (max_height < 1) throw UsageError("tree height must be >= 1");
  EncodingTree tree(g);
  SplitMix64 rng(seed);

  struct Item {
    int id;
    int depth;
  };
  std::vector<Item> work;
  if (g.node_count() >= 2) work.push_back({tree.root(), 0});

  bool first = true;
  while (!work.empty()) {
    Item item = work.back();
    work.pop_back();
    std::vector<int> members = tree.members(item.id);
    const int size = static_cast<int>(members.size());
    if (size < 2 || item.depth >= max_height) continue;
    if (!first && rng.next_unit() < 0.25) continue;  // leave a multi-member leaf
    first = false;

    int parts = 2 + static_cast<int>(rng.next_below(3));
    parts = std::min(parts, size);
    for (int i = size - 1; i > 0; --i) {
      int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(j)]);
    }
    // parts-1 distinct cut points over 1..size-1
    std::vector<int> cuts;
    while (static_cast<int>(cuts.size()) < parts - 1) {
      int c = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size - 1)));
      if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    cuts.push_back(0);
    cuts.push_back(size);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      std::vector<int> part(members.begin() + cuts[p], members.begin() + cuts[p + 1]);
      int child = tree.add_child(item.id, std::move(part));
      work.push_back({child, item.depth + 1});
    }
  }

  // A few pass-through insertions, capped by max_height.
  std::vector<int> candidates;
  for (int id : tree.ids()) {
    if (id != tree.root()) candidates.push_back(id);
  }
  int inserts = static_cast<int>(rng.next_below(3));
  for (int k = 0; k < inserts && !candidates.empty(); ++k) {
    int pick = candidates[static_cast<std::size_t>(
        rng.next_below(static_cast<std::uint64_t>(candidates.size())))];
    if (subtree_max_leaf_depth(tree, pick) + 1 > max_height) continue;
    tree.regulate_above(pick);
  }

  tree.validate(false);
  return tree;
}

double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw UsageError("labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  long long agree = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool same_a = a[i] == a[j];
      bool same_b = b[i] == b[j];
      agree += same_a == same_b;
      ++pairs;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

}  // namespace tret::testkit
