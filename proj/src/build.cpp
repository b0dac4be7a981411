#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tret/errors.hpp"
#include "tret/rng.hpp"
#include "tret/tree.hpp"

namespace tret {

namespace {

// Objective term of one candidate side under a parent of volume
// parent_vol, per the official evaluators. Shape matters: the exhaustive
// reference in the testkit computes the same expression so that exact-path
// results compare bit-for-bit.
double side_term(const TextualAttributedGraph& g, const EmbeddingMatrix& embeddings,
                 const EntropyParams& params, std::span<const int> side, long long parent_vol) {
  double t = structural_term_raw(set_cut(g, side), set_volume(g, side), parent_vol,
                                 g.total_volume());
  if (params.lambda > 0.0) t += params.lambda * semantic_entropy(side, embeddings, params);
  return t;
}

bool id_lex_less(const TextualAttributedGraph& g, std::span<const int> a, std::span<const int> b) {
  auto na = a.size(), nb = b.size();
  for (std::size_t i = 0; i < std::min(na, nb); ++i) {
    int c = g.node_id(a[i]).compare(g.node_id(b[i]));
    if (c != 0) return c < 0;
  }
  return na < nb;
}

// All 2^(n-1)-1 bipartitions with cluster[0] pinned to side A; bit i-1 of
// the mask moves cluster[i] into A. Ties break toward the
// lexicographically smallest side-A id list.
SplitResult exact_bipartition(const TextualAttributedGraph& g, const EmbeddingMatrix& embeddings,
                              const EntropyParams& params, std::span<const int> cluster,
                              long long parent_vol) {
  const int n = static_cast<int>(cluster.size());
  SplitResult best;
  best.objective = std::numeric_limits<double>::infinity();

  std::vector<int> side_a, side_b;
  const std::uint64_t mask_end = (1ull << (n - 1)) - 1;  // all-ones leaves B empty
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
    double obj = side_term(g, embeddings, params, side_a, parent_vol) +
                 side_term(g, embeddings, params, side_b, parent_vol);
    if (obj < best.objective ||
        (obj == best.objective && id_lex_less(g, side_a, best.side_a))) {
      best.objective = obj;
      best.side_a = side_a;
      best.side_b = side_b;
    }
  }
  return best;
}

// Incremental state for single-node relocation over a fixed cluster.
// Kernel sums track, for every point, its summed Gaussian kernel against
// each side; semantic entropy of a side then needs only the members' logs.
class LocalSearchState {
 public:
  LocalSearchState(const TextualAttributedGraph& g, const EmbeddingMatrix& embeddings,
                   const EntropyParams& params, std::span<const int> cluster,
                   long long parent_vol)
      : g_(g),
        emb_(embeddings),
        params_(params),
        cluster_(cluster.begin(), cluster.end()),
        parent_vol_(parent_vol),
        n_(static_cast<int>(cluster.size())),
        pos_(static_cast<std::size_t>(g.node_count()), -1),
        inv_two_h2_(1.0 / (2.0 * params.bandwidth * params.bandwidth)),
        log_norm_(0.5 * embeddings.dim() *
                  std::log(2.0 * std::numbers::pi * params.bandwidth * params.bandwidth)) {
    for (int i = 0; i < n_; ++i) pos_[static_cast<std::size_t>(cluster_[static_cast<std::size_t>(i)])] = i;
    if (params.lambda > 0.0 && static_cast<long long>(n_) * n_ <= kKernelCacheCells) {
      kernel_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 0.0);
      for (int i = 0; i < n_; ++i) {
        for (int j = i; j < n_; ++j) {
          double k = kernel_value(i, j);
          kernel_[idx(i, j)] = k;
          kernel_[idx(j, i)] = k;
        }
      }
    }
  }

  // side[i]: 0 = A, 1 = B.
  void reset(const std::vector<char>& side) {
    side_ = side;
    count_[0] = count_[1] = 0;
    vol_[0] = vol_[1] = 0;
    cut_[0] = cut_[1] = 0;
    for (int i = 0; i < n_; ++i) {
      int s = side_[static_cast<std::size_t>(i)];
      ++count_[s];
      vol_[s] += g_.degree(cluster_[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < n_; ++i) {
      int v = cluster_[static_cast<std::size_t>(i)];
      int s = side_[static_cast<std::size_t>(i)];
      for (int w : g_.neighbors(v)) {
        int p = pos_[static_cast<std::size_t>(w)];
        if (p < 0 || side_[static_cast<std::size_t>(p)] != s) ++cut_[s];
      }
    }
    refresh_kernel_sums();
    objective_ = full_objective();
  }

  void refresh_kernel_sums() {
    sums_[0].assign(static_cast<std::size_t>(n_), 0.0);
    sums_[1].assign(static_cast<std::size_t>(n_), 0.0);
    if (params_.lambda > 0.0) {
      for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
          sums_[side_[static_cast<std::size_t>(j)]][static_cast<std::size_t>(i)] += kernel(i, j);
        }
      }
    }
    objective_ = full_objective();
  }

  double objective() const { return objective_; }
  int side_count(int s) const { return count_[s]; }
  char side_of(int i) const { return side_[static_cast<std::size_t>(i)]; }

  // Objective if position p moved to the other side; state untouched.
  double try_move(int p) {
    const int from = side_[static_cast<std::size_t>(p)];
    const int to = 1 - from;
    const int v = cluster_[static_cast<std::size_t>(p)];

    long long a = 0, b = 0, c = 0;  // v's neighbors: same side, other side, outside cluster
    for (int w : g_.neighbors(v)) {
      int q = pos_[static_cast<std::size_t>(w)];
      if (q < 0) {
        ++c;
      } else if (side_[static_cast<std::size_t>(q)] == from) {
        ++a;
      } else {
        ++b;
      }
    }
    long long new_cut_from = cut_[from] + a - b - c;
    long long new_cut_to = cut_[to] + a - b + c;
    long long deg = g_.degree(v);

    double sumlog_from = 0.0, sumlog_to = 0.0;
    if (params_.lambda > 0.0) {
      column_.resize(static_cast<std::size_t>(n_));
      for (int i = 0; i < n_; ++i) column_[static_cast<std::size_t>(i)] = kernel(i, p);
      for (int i = 0; i < n_; ++i) {
        int s = side_[static_cast<std::size_t>(i)];
        if (i == p) continue;
        if (s == from) {
          sumlog_from += std::log(sums_[from][static_cast<std::size_t>(i)] -
                                  column_[static_cast<std::size_t>(i)]);
        } else if (s == to) {
          sumlog_to += std::log(sums_[to][static_cast<std::size_t>(i)] +
                                column_[static_cast<std::size_t>(i)]);
        }
      }
      sumlog_to += std::log(sums_[to][static_cast<std::size_t>(p)] +
                            column_[static_cast<std::size_t>(p)]);
    }

    double term_from = side_objective(new_cut_from, vol_[from] - deg, count_[from] - 1, sumlog_from);
    double term_to = side_objective(new_cut_to, vol_[to] + deg, count_[to] + 1, sumlog_to);
    return term_from + term_to;
  }

  void apply_move(int p, double new_objective) {
    const int from = side_[static_cast<std::size_t>(p)];
    const int to = 1 - from;
    const int v = cluster_[static_cast<std::size_t>(p)];

    long long a = 0, b = 0, c = 0;
    for (int w : g_.neighbors(v)) {
      int q = pos_[static_cast<std::size_t>(w)];
      if (q < 0) {
        ++c;
      } else if (side_[static_cast<std::size_t>(q)] == from) {
        ++a;
      } else {
        ++b;
      }
    }
    cut_[from] += a - b - c;
    cut_[to] += a - b + c;
    long long deg = g_.degree(v);
    vol_[from] -= deg;
    vol_[to] += deg;
    --count_[from];
    ++count_[to];

    if (params_.lambda > 0.0) {
      for (int i = 0; i < n_; ++i) {
        double k = kernel(i, p);
        sums_[from][static_cast<std::size_t>(i)] -= k;
        sums_[to][static_cast<std::size_t>(i)] += k;
      }
    }
    side_[static_cast<std::size_t>(p)] = static_cast<char>(to);
    objective_ = new_objective;
  }

  std::pair<std::vector<int>, std::vector<int>> sides() const {
    std::vector<int> a, bvec;
    for (int i = 0; i < n_; ++i) {
      (side_[static_cast<std::size_t>(i)] == 0 ? a : bvec)
          .push_back(cluster_[static_cast<std::size_t>(i)]);
    }
    return {std::move(a), std::move(bvec)};
  }

 private:
  static constexpr long long kKernelCacheCells = 2048LL * 2048LL;

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(j);
  }

  double kernel_value(int i, int j) const {
    double d2 = squared_distance(emb_.row(static_cast<std::size_t>(cluster_[static_cast<std::size_t>(i)])),
                                 emb_.row(static_cast<std::size_t>(cluster_[static_cast<std::size_t>(j)])));
    return std::exp(-d2 * inv_two_h2_);
  }

  double kernel(int i, int j) const {
    return kernel_.empty() ? kernel_value(i, j) : kernel_[idx(i, j)];
  }

  // H_sem from per-point kernel sums: ln(n_s) + (d/2)ln(2*pi*h^2)
  // - mean(ln sums); exact for the non-subsampled Eq. 4.
  double side_objective(long long cut, long long vol, int count, double sumlog) const {
    double t = structural_term_raw(cut, vol, parent_vol_, g_.total_volume());
    if (params_.lambda > 0.0) {
      double h_sem = std::log(static_cast<double>(count)) + log_norm_ -
                     sumlog / static_cast<double>(count);
      t += params_.lambda * h_sem;
    }
    return t;
  }

  double full_objective() const {
    double sumlog[2] = {0.0, 0.0};
    if (params_.lambda > 0.0) {
      for (int i = 0; i < n_; ++i) {
        int s = side_[static_cast<std::size_t>(i)];
        sumlog[s] += std::log(sums_[s][static_cast<std::size_t>(i)]);
      }
    }
    return side_objective(cut_[0], vol_[0], count_[0], sumlog[0]) +
           side_objective(cut_[1], vol_[1], count_[1], sumlog[1]);
  }

  const TextualAttributedGraph& g_;
  const EmbeddingMatrix& emb_;
  const EntropyParams& params_;
  std::vector<int> cluster_;
  long long parent_vol_;
  int n_;
  std::vector<int> pos_;
  double inv_two_h2_;
  double log_norm_;

  std::vector<double> kernel_;  // n x n cache when it fits
  std::vector<char> side_;
  std::vector<double> sums_[2];
  std::vector<double> column_;
  int count_[2] = {0, 0};
  long long vol_[2] = {0, 0};
  long long cut_[2] = {0, 0};
  double objective_ = 0.0;
};

void fix_empty_side(std::vector<char>& side) {
  int zeros = 0;
  for (char s : side) zeros += s == 0;
  if (zeros == 0) side.front() = 0;
  if (zeros == static_cast<int>(side.size())) side.back() = 1;
}

// Sign split of the dominant Laplacian-complement eigenvector restricted
// to the cluster; approximates the Fiedler bisection.
std::vector<char> spectral_seed(const TextualAttributedGraph& g, std::span<const int> cluster,
                                std::span<const int> pos, std::uint64_t seed, int iterations) {
  const int n = static_cast<int>(cluster.size());
  SplitMix64 rng(seed);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& xi : x) xi = rng.next_symmetric();

  std::vector<int> internal_degree(static_cast<std::size_t>(n), 0);
  int dmax = 0;
  for (int i = 0; i < n; ++i) {
    for (int w : g.neighbors(cluster[static_cast<std::size_t>(i)])) {
      if (pos[static_cast<std::size_t>(w)] >= 0) ++internal_degree[static_cast<std::size_t>(i)];
    }
    dmax = std::max(dmax, internal_degree[static_cast<std::size_t>(i)]);
  }

  std::vector<double> y(static_cast<std::size_t>(n));
  for (int it = 0; it < iterations; ++it) {
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    for (double& xi : x) xi -= mean;
    double norm = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
    if (norm < 1e-12) {
      for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = i % 2 ? 1.0 : -1.0;
      continue;
    }
    for (double& xi : x) xi /= norm;

    for (int i = 0; i < n; ++i) {
      double acc = static_cast<double>(dmax - internal_degree[static_cast<std::size_t>(i)]) *
                   x[static_cast<std::size_t>(i)];
      for (int w : g.neighbors(cluster[static_cast<std::size_t>(i)])) {
        int q = pos[static_cast<std::size_t>(w)];
        if (q >= 0) acc += x[static_cast<std::size_t>(q)];
      }
      y[static_cast<std::size_t>(i)] = acc;
    }
    std::swap(x, y);
  }

  std::vector<char> side(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) side[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] >= 0.0 ? 0 : 1;
  int zeros = 0;
  for (char s : side) zeros += s == 0;
  if (zeros == 0 || zeros == n) {
    // Median split by eigenvector rank.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::tie(x[static_cast<std::size_t>(a)], a) < std::tie(x[static_cast<std::size_t>(b)], b);
    });
    for (int r = 0; r < n; ++r) side[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r < n / 2 ? 0 : 1;
  }
  return side;
}

std::vector<char> kmeans_seed(const EmbeddingMatrix& emb, std::span<const int> cluster,
                              std::uint64_t seed, int iterations) {
  const int n = static_cast<int>(cluster.size());
  const int d = emb.dim();
  SplitMix64 rng(seed);

  auto row = [&](int i) { return emb.row(static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)])); };

  int c0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
  int c1 = 0;
  double far = -1.0;
  for (int i = 0; i < n; ++i) {
    double d2 = squared_distance(row(i), row(c0));
    if (d2 > far) {
      far = d2;
      c1 = i;
    }
  }
  std::vector<double> centers[2];
  centers[0].assign(row(c0).begin(), row(c0).end());
  centers[1].assign(row(c1).begin(), row(c1).end());

  std::vector<char> assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      double d2[2] = {0.0, 0.0};
      for (int s = 0; s < 2; ++s) {
        auto r = row(i);
        for (int j = 0; j < d; ++j) {
          double diff = static_cast<double>(r[static_cast<std::size_t>(j)]) - centers[s][static_cast<std::size_t>(j)];
          d2[s] += diff * diff;
        }
      }
      char want = d2[1] < d2[0] ? 1 : 0;
      if (want != assign[static_cast<std::size_t>(i)]) {
        assign[static_cast<std::size_t>(i)] = want;
        changed = true;
      }
    }

    int counts[2] = {0, 0};
    for (char s : assign) ++counts[s];
    for (int s = 0; s < 2; ++s) {
      if (counts[s] > 0) continue;
      // Reseed an emptied center with the point farthest from the other.
      int other = 1 - s;
      int pick = 0;
      double worst = -1.0;
      for (int i = 0; i < n; ++i) {
        double d2 = 0.0;
        auto r = row(i);
        for (int j = 0; j < d; ++j) {
          double diff = static_cast<double>(r[static_cast<std::size_t>(j)]) - centers[other][static_cast<std::size_t>(j)];
          d2 += diff * diff;
        }
        if (d2 > worst) {
          worst = d2;
          pick = i;
        }
      }
      assign[static_cast<std::size_t>(pick)] = static_cast<char>(s);
      ++counts[s];
      --counts[other];
      changed = true;
    }

    for (int s = 0; s < 2; ++s) std::fill(centers[s].begin(), centers[s].end(), 0.0);
    for (int i = 0; i < n; ++i) {
      auto r = row(i);
      auto& ctr = centers[assign[static_cast<std::size_t>(i)]];
      for (int j = 0; j < d; ++j) ctr[static_cast<std::size_t>(j)] += r[static_cast<std::size_t>(j)];
    }
    for (int s = 0; s < 2; ++s) {
      for (double& cj : centers[s]) cj /= counts[s];
    }
    if (!changed) break;
  }
  fix_empty_side(assign);
  return assign;
}

std::vector<char> random_seed(int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<char> side(static_cast<std::size_t>(n));
  for (char& s : side) s = static_cast<char>(rng.next() & 1);
  fix_empty_side(side);
  return side;
}

SplitResult local_search_bipartition(const TextualAttributedGraph& g,
                                     const EmbeddingMatrix& embeddings,
                                     const EntropyParams& params, std::span<const int> cluster,
                                     long long parent_vol, const SolverConfig& cfg) {
  const int n = static_cast<int>(cluster.size());
  std::vector<int> pos(static_cast<std::size_t>(g.node_count()), -1);
  for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(cluster[static_cast<std::size_t>(i)])] = i;

  const std::uint64_t base = mix_seed(cfg.seed, hash_indices(cluster));
  LocalSearchState state(g, embeddings, params, cluster, parent_vol);

  std::vector<char> seeds[3] = {
      spectral_seed(g, cluster, pos, mix_seed(base, 1), cfg.power_iterations),
      kmeans_seed(embeddings, cluster, mix_seed(base, 2), cfg.kmeans_iterations),
      random_seed(n, mix_seed(base, 3)),
  };

  double best_obj = std::numeric_limits<double>::infinity();
  int best_seed = 0;
  for (int s = 0; s < 3; ++s) {
    state.reset(seeds[s]);
    if (state.objective() < best_obj) {
      best_obj = state.objective();
      best_seed = s;
    }
  }
  state.reset(seeds[best_seed]);

  // First-improvement relocation, ascending scan, strict decreases only.
  // Kernel sums are refreshed at every pass start so accumulated drift
  // cannot leak across passes.
  for (int pass = 0; pass < cfg.max_passes; ++pass) {
    if (pass > 0) state.refresh_kernel_sums();
    bool moved = false;
    for (int p = 0; p < n; ++p) {
      if (state.side_count(state.side_of(p)) <= 1) continue;
      double candidate = state.try_move(p);
      if (candidate < state.objective()) {
        state.apply_move(p, candidate);
        moved = true;
      }
    }
    if (!moved) break;
  }

  auto [a, bvec] = state.sides();
  SplitResult out;
  if (a.empty() || bvec.empty()) throw InternalError("local search produced an empty side");
  if (bvec.front() < a.front()) std::swap(a, bvec);
  out.side_a = std::move(a);
  out.side_b = std::move(bvec);
  out.objective = side_term(g, embeddings, params, out.side_a, parent_vol) +
                  side_term(g, embeddings, params, out.side_b, parent_vol);
  return out;
}

}  // namespace

SplitResult solve_bipartition(const TextualAttributedGraph& g, const EmbeddingMatrix& embeddings,
                              const EntropyParams& params, std::span<const int> cluster,
                              long long parent_volume, const SolverConfig& cfg) {
  if (cluster.size() < 2) throw InternalError("cannot bipartition fewer than 2 nodes");
  std::vector<int> sorted(cluster.begin(), cluster.end());
  std::sort(sorted.begin(), sorted.end());
  if (static_cast<int>(sorted.size()) <= cfg.exact_threshold) {
    return exact_bipartition(g, embeddings, params, sorted, parent_volume);
  }
  return local_search_bipartition(g, embeddings, params, sorted, parent_volume, cfg);
}

std::pair<int, int> partition_node(EncodingTree& tree, int alpha,
                                   const EmbeddingMatrix& embeddings, const EntropyParams& params,
                                   const SolverConfig& cfg) {
  std::vector<int> members = tree.members(alpha);
  if (members.size() < 2) throw InternalError("cannot partition a singleton tree node");
  if (!tree.node(alpha).is_leaf()) throw InternalError("node already partitioned");

  SplitResult split =
      solve_bipartition(tree.graph(), embeddings, params, members, tree.node(alpha).volume, cfg);
  int a = tree.add_child(alpha, std::move(split.side_a));
  int b = tree.add_child(alpha, std::move(split.side_b));
  return {a, b};
}

double prune_delta(const EncodingTree& tree, int alpha, S2EntropyEngine& engine) {
  const TreeNode& node = tree.node(alpha);
  if (node.parent < 0) throw InternalError("cannot prune the root");
  if (node.is_leaf()) throw InternalError("cannot prune a leaf");
  const TreeNode& parent = tree.node(node.parent);
  const EntropyParams& params = engine.params();

  double delta = -engine.structural(node.cut, node.volume, parent.volume);
  if (!tree.is_pass_through(alpha) && params.lambda > 0.0) {
    delta -= params.lambda * engine.semantic(tree.members(alpha));
  }

  for (int c : node.children) {
    const TreeNode& child = tree.node(c);
    delta += engine.structural(child.cut, child.volume, parent.volume) -
             engine.structural(child.cut, child.volume, node.volume);
  }

  // The parent loses its pass-through exemption when its only child is
  // replaced by several; its semantic term then joins the total.
  if (node.parent != tree.root() && parent.children.size() == 1 && node.children.size() >= 2 &&
      params.lambda > 0.0) {
    delta += params.lambda * engine.semantic(tree.members(node.parent));
  }
  return delta;
}

void prune_node(EncodingTree& tree, int alpha) {
  tree.prune(alpha);
}

int regulate(EncodingTree& tree, int alpha, int beta) {
  if (tree.node(beta).parent != alpha) {
    throw InternalError("regulate expects a parent-child pair");
  }
  return tree.regulate_above(beta);
}

namespace {

// Max leaf depth inside every live subtree, keyed by node id.
void subtree_leaf_depths(const EncodingTree& tree, int id, std::vector<int>& out) {
  const TreeNode& n = tree.node(id);
  if (n.is_leaf()) {
    out[static_cast<std::size_t>(id)] = n.depth;
    return;
  }
  int deepest = 0;
  for (int c : n.children) {
    subtree_leaf_depths(tree, c, out);
    deepest = std::max(deepest, out[static_cast<std::size_t>(c)]);
  }
  out[static_cast<std::size_t>(id)] = deepest;
}

}  // namespace

EncodingTree build_encoding_tree(const TextualAttributedGraph& g,
                                 const EmbeddingMatrix& embeddings, const EntropyParams& params,
                                 int levels, const SolverConfig& cfg) {
  if (levels < 1) throw UsageError("levels must be >= 1");
  if (embeddings.rows() != static_cast<std::size_t>(g.node_count())) {
    throw DataError("embedding row count does not match graph node count");
  }
  params.validate();

  EncodingTree tree(g);
  tree.set_target_levels(levels);

  // Stage 1: recursive bipartition until every leaf is a singleton.
  std::vector<int> stack;
  if (g.node_count() >= 2) stack.push_back(tree.root());
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    auto [a, b] = partition_node(tree, id, embeddings, params, cfg);
    if (tree.members(b).size() >= 2) stack.push_back(b);
    if (tree.members(a).size() >= 2) stack.push_back(a);
  }

  // Stage 2: prune the minimum-entropy-increase internal node lying on an
  // over-long root-to-leaf path until height fits.
  S2EntropyEngine engine(g, embeddings, params);
  while (tree.height() > levels) {
    const std::vector<int> live = tree.ids();
    std::vector<int> deepest(
        static_cast<std::size_t>(*std::max_element(live.begin(), live.end())) + 1, 0);
    subtree_leaf_depths(tree, tree.root(), deepest);

    int best = -1;
    double best_delta = 0.0;
    for (int id : live) {
      const TreeNode& n = tree.node(id);
      if (id == tree.root() || n.is_leaf()) continue;
      if (deepest[static_cast<std::size_t>(id)] <= levels) continue;
      double delta = prune_delta(tree, id, engine);
      if (best < 0 || delta < best_delta) {
        best = id;
        best_delta = delta;
      }
    }
    if (best < 0) throw InternalError("no prunable node on an over-long path");
    prune_node(tree, best);
  }

  // Stage 3: pass-through chains bring every leaf to depth exactly L.
  if (tree.node(tree.root()).is_leaf()) {
    // Single-node graph: the root doubles as a leaf; hang the chain below.
    tree.add_child(tree.root(), tree.members(tree.root()));
  }
  std::vector<int> leaves;
  for (int id : tree.ids()) {
    if (id != tree.root() && tree.node(id).is_leaf()) leaves.push_back(id);
  }
  for (int leaf : leaves) {
    while (tree.node(leaf).depth < levels) tree.regulate_above(leaf);
  }

  tree.validate(true);
  EncodingTree canonical = tree.renumbered();
  canonical.validate(true);
  return canonical;
}

}  // namespace tret
