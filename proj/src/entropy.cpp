#include "tret/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>

#include "tret/errors.hpp"
#include "tret/rng.hpp"
#include "tret/tree.hpp"

namespace tret {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double log_normalizer(int dim, double bandwidth) {
  return -0.5 * dim * std::log(kTwoPi * bandwidth * bandwidth);
}

}  // namespace

void EntropyParams::validate() const {
  if (lambda < 0.0 || !std::isfinite(lambda)) throw UsageError("lambda must be >= 0");
  if (bandwidth <= 0.0 || !std::isfinite(bandwidth)) throw UsageError("bandwidth must be > 0");
  if (subsample_cap < 1) throw UsageError("subsample cap must be >= 1");
}

double kde_log_density(std::span<const float> point, const EmbeddingMatrix& embeddings,
                       std::span<const int> cluster, const EntropyParams& params) {
  if (cluster.empty()) throw InternalError("kde over empty cluster");
  const double inv_two_h2 = 1.0 / (2.0 * params.bandwidth * params.bandwidth);

  std::vector<double> exponents;
  exponents.reserve(cluster.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (int v : cluster) {
    double e = -squared_distance(point, embeddings.row(static_cast<std::size_t>(v))) * inv_two_h2;
    exponents.push_back(e);
    peak = std::max(peak, e);
  }

  double acc = 0.0;
  for (double e : exponents) acc += std::exp(e - peak);
  double lse = peak + std::log(acc);
  return lse - std::log(static_cast<double>(cluster.size())) +
         log_normalizer(embeddings.dim(), params.bandwidth);
}

namespace {

double semantic_entropy_exact(std::span<const int> cluster, const EmbeddingMatrix& embeddings,
                              const EntropyParams& params) {
  double acc = 0.0;
  for (int v : cluster) {
    acc += kde_log_density(embeddings.row(static_cast<std::size_t>(v)), embeddings, cluster, params);
  }
  return -acc / static_cast<double>(cluster.size());
}

}  // namespace

double semantic_entropy(std::span<const int> cluster, const EmbeddingMatrix& embeddings,
                        const EntropyParams& params) {
  if (cluster.empty()) throw InternalError("semantic entropy of empty cluster");
  if (static_cast<int>(cluster.size()) <= params.subsample_cap) {
    return semantic_entropy_exact(cluster, embeddings, params);
  }

  // Seeded uniform subsample; the seed is tied to the member set so the
  // same cluster always draws the same sample regardless of discovery order.
  std::vector<int> pool(cluster.begin(), cluster.end());
  std::sort(pool.begin(), pool.end());
  SplitMix64 rng(mix_seed(params.subsample_seed, hash_indices(pool)));
  for (int i = 0; i < params.subsample_cap; ++i) {
    auto j = i + static_cast<int>(rng.next_below(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(params.subsample_cap));
  std::sort(pool.begin(), pool.end());
  return semantic_entropy_exact(pool, embeddings, params);
}

double semantic_entropy(const NodeSet& cluster, const EmbeddingMatrix& embeddings,
                        const EntropyParams& params) {
  return semantic_entropy(std::span<const int>(cluster.members()), embeddings, params);
}

double structural_term_raw(long long cut, long long vol, long long parent_vol,
                           long long total_vol) {
  if (cut == 0) return 0.0;
  return -(static_cast<double>(cut) / static_cast<double>(total_vol)) *
         std::log2(static_cast<double>(vol) / static_cast<double>(parent_vol));
}

double structural_term(const TextualAttributedGraph& g, const NodeSet& child_set,
                       const NodeSet& parent_set) {
  for (int v : child_set.members()) {
    if (!parent_set.contains(v)) {
      throw InternalError("structural term: child set is not a subset of its parent");
    }
  }
  return structural_term_raw(child_set.cut(), child_set.volume(), parent_set.volume(),
                             g.total_volume());
}

double s2_term(const TextualAttributedGraph& g, const NodeSet& child_set,
               const NodeSet& parent_set, const EmbeddingMatrix& embeddings,
               const EntropyParams& params, bool pass_through) {
  double term = structural_term(g, child_set, parent_set);
  if (!pass_through && params.lambda > 0.0) {
    term += params.lambda * semantic_entropy(child_set, embeddings, params);
  }
  return term;
}

double select_bandwidth(const EmbeddingMatrix& embeddings, std::span<const double> grid) {
  if (grid.empty()) throw UsageError("bandwidth grid is empty");
  const auto n = embeddings.rows();
  if (n < 2) {
    double fallback = grid[(grid.size() - 1) / 2];
    std::cerr << "warning: fewer than 2 embeddings; bandwidth defaults to " << fallback << "\n";
    return fallback;
  }

  std::vector<double> dist2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = squared_distance(embeddings.row(i), embeddings.row(j));
      dist2[i * n + j] = d2;
      dist2[j * n + i] = d2;
    }
  }

  double best_h = grid[0];
  double best_score = -std::numeric_limits<double>::infinity();
  for (double h : grid) {
    if (h <= 0.0) throw UsageError("bandwidth grid values must be > 0");
    const double inv_two_h2 = 1.0 / (2.0 * h * h);
    const double norm = log_normalizer(embeddings.dim(), h);
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Leave-one-out: density at row i from all other rows.
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) peak = std::max(peak, -dist2[i * n + j] * inv_two_h2);
      }
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) acc += std::exp(-dist2[i * n + j] * inv_two_h2 - peak);
      }
      score += peak + std::log(acc) - std::log(static_cast<double>(n - 1)) + norm;
    }
    score /= static_cast<double>(n);
    if (score > best_score) {
      best_score = score;
      best_h = h;
    }
  }
  return best_h;
}

S2EntropyEngine::S2EntropyEngine(const TextualAttributedGraph& g,
                                 const EmbeddingMatrix& embeddings, EntropyParams params)
    : graph_(g), embeddings_(embeddings), params_(params) {
  params_.validate();
  params_.dim = embeddings.dim();
  if (embeddings.rows() != static_cast<std::size_t>(g.node_count())) {
    throw InternalError("embedding row count does not match graph node count");
  }
}

double S2EntropyEngine::semantic(const std::vector<int>& sorted_members) {
  {
    std::lock_guard<std::mutex> lock(memo_mutex_);
    auto it = memo_.find(sorted_members);
    if (it != memo_.end()) return it->second;
  }
  double value = semantic_entropy(std::span<const int>(sorted_members), embeddings_, params_);
  std::lock_guard<std::mutex> lock(memo_mutex_);
  return memo_.emplace(sorted_members, value).first->second;
}

double S2EntropyEngine::structural(long long cut, long long vol, long long parent_vol) const {
  return structural_term_raw(cut, vol, parent_vol, graph_.total_volume());
}

double S2EntropyEngine::node_term(const EncodingTree& tree, int id) {
  const TreeNode& node = tree.node(id);
  if (node.parent < 0) throw InternalError("root has no entropy term");
  const TreeNode& parent = tree.node(node.parent);
  double term = structural(node.cut, node.volume, parent.volume);
  if (!tree.is_pass_through(id) && params_.lambda > 0.0) {
    term += params_.lambda * semantic(tree.members(id));
  }
  return term;
}

S2EntropyEngine::Breakdown S2EntropyEngine::total(const EncodingTree& tree) {
  Breakdown out;
  for (int id : tree.ids()) {
    const TreeNode& node = tree.node(id);
    if (node.parent < 0) continue;
    out.structural += structural(node.cut, node.volume, tree.node(node.parent).volume);
    if (!tree.is_pass_through(id) && params_.lambda > 0.0) {
      out.semantic_weighted += params_.lambda * semantic(tree.members(id));
    }
  }
  return out;
}

double total_tree_entropy(const EncodingTree& tree, const TextualAttributedGraph& g,
                          const EmbeddingMatrix& embeddings, const EntropyParams& params) {
  S2EntropyEngine engine(g, embeddings, params);
  return engine.total(tree).total();
}

}  // namespace tret
