#include "tret/tree.hpp"

#include <algorithm>
#include <numeric>

#include "tret/errors.hpp"

namespace tret {

EncodingTree::EncodingTree(const TextualAttributedGraph& g) : graph_(&g) {
  if (g.node_count() == 0) throw DataError("empty graph has no encoding tree");
  std::vector<int> all(static_cast<std::size_t>(g.node_count()));
  std::iota(all.begin(), all.end(), 0);
  TreeNode root;
  root.parent = -1;
  root.depth = 0;
  root.volume = set_volume(g, all);
  root.cut = 0;
  root.min_member = 0;
  root.members_store = std::move(all);
  nodes_.push_back(std::move(root));
  root_ = 0;
  live_count_ = 1;
}

std::vector<int> EncodingTree::ids() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(live_count_));
  for (int i = 0; i < static_cast<int>(nodes_.size()); ++i) {
    if (nodes_[static_cast<std::size_t>(i)].alive) out.push_back(i);
  }
  return out;
}

const TreeNode& EncodingTree::node(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()) || !nodes_[static_cast<std::size_t>(id)].alive) {
    throw InternalError("tree node " + std::to_string(id) + " does not exist");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

TreeNode& EncodingTree::node_mut(int id) {
  return const_cast<TreeNode&>(node(id));
}

void EncodingTree::collect_members(int id, std::vector<int>& out) const {
  const TreeNode& n = node(id);
  if (n.is_leaf()) {
    out.insert(out.end(), n.members_store.begin(), n.members_store.end());
    return;
  }
  for (int c : n.children) collect_members(c, out);
}

std::vector<int> EncodingTree::members(int id) const {
  std::vector<int> out;
  collect_members(id, out);
  std::sort(out.begin(), out.end());
  return out;
}

int EncodingTree::height() const {
  int h = 0;
  for (const TreeNode& n : nodes_) {
    if (n.alive && n.is_leaf()) h = std::max(h, n.depth);
  }
  return h;
}

int EncodingTree::new_node() {
  nodes_.emplace_back();
  ++live_count_;
  return static_cast<int>(nodes_.size()) - 1;
}

int EncodingTree::add_child(int parent_id, std::vector<int> members) {
  if (members.empty()) throw InternalError("tree node needs at least one member");
  std::sort(members.begin(), members.end());
  const int parent_depth = node(parent_id).depth;
  int id = new_node();
  TreeNode& n = nodes_[static_cast<std::size_t>(id)];
  n.parent = parent_id;
  n.depth = parent_depth + 1;
  n.volume = set_volume(*graph_, members);
  n.cut = set_cut(*graph_, members);
  n.min_member = members.front();
  n.members_store = std::move(members);

  auto& siblings = nodes_[static_cast<std::size_t>(parent_id)].children;
  siblings.push_back(id);
  std::sort(siblings.begin(), siblings.end(),
            [this](int a, int b) { return nodes_[static_cast<std::size_t>(a)].min_member <
                                          nodes_[static_cast<std::size_t>(b)].min_member; });
  nodes_[static_cast<std::size_t>(parent_id)].members_store.clear();
  nodes_[static_cast<std::size_t>(parent_id)].members_store.shrink_to_fit();
  return id;
}

void EncodingTree::shift_depth(int id, int delta) {
  TreeNode& n = node_mut(id);
  n.depth += delta;
  for (int c : n.children) shift_depth(c, delta);
}

void EncodingTree::prune(int id) {
  TreeNode& n = node_mut(id);
  if (n.parent < 0) throw InternalError("cannot prune the root");
  if (n.is_leaf()) throw InternalError("cannot prune a leaf");
  TreeNode& parent = node_mut(n.parent);

  auto& siblings = parent.children;
  siblings.erase(std::find(siblings.begin(), siblings.end(), id));
  for (int c : n.children) {
    node_mut(c).parent = n.parent;
    shift_depth(c, -1);
    siblings.push_back(c);
  }
  std::sort(siblings.begin(), siblings.end(),
            [this](int a, int b) { return nodes_[static_cast<std::size_t>(a)].min_member <
                                          nodes_[static_cast<std::size_t>(b)].min_member; });
  n.alive = false;
  n.children.clear();
  --live_count_;
}

int EncodingTree::regulate_above(int child_id) {
  TreeNode& child = node_mut(child_id);
  if (child.parent < 0) throw InternalError("cannot regulate above the root");
  int parent_id = child.parent;
  int id = new_node();
  TreeNode& gamma = nodes_[static_cast<std::size_t>(id)];
  TreeNode& child2 = nodes_[static_cast<std::size_t>(child_id)];

  gamma.parent = parent_id;
  gamma.depth = child2.depth;
  gamma.volume = child2.volume;
  gamma.cut = child2.cut;
  gamma.min_member = child2.min_member;
  gamma.children.push_back(child_id);

  auto& siblings = nodes_[static_cast<std::size_t>(parent_id)].children;
  *std::find(siblings.begin(), siblings.end(), child_id) = id;
  child2.parent = id;
  shift_depth(child_id, 1);
  return id;
}

void EncodingTree::validate(bool require_regulated) const {
  const int n = graph_->node_count();
  std::vector<int> root_members = members(root_);
  if (static_cast<int>(root_members.size()) != n) {
    throw InternalError("root set does not cover the graph");
  }
  for (int i = 0; i < n; ++i) {
    if (root_members[static_cast<std::size_t>(i)] != i) {
      throw InternalError("root set does not cover the graph");
    }
  }

  int max_leaf_depth = 0;
  for (int id : ids()) {
    const TreeNode& nd = node(id);
    if (id == root_) {
      if (nd.parent != -1 || nd.depth != 0) throw InternalError("malformed root");
    } else {
      const TreeNode& p = node(nd.parent);
      if (nd.depth != p.depth + 1) throw InternalError("depth inconsistent with parent link");
      if (std::find(p.children.begin(), p.children.end(), id) == p.children.end()) {
        throw InternalError("parent does not list its child");
      }
    }
    for (int c : nd.children) {
      if (node(c).parent != id) throw InternalError("child does not point back to parent");
    }
    if (!nd.is_leaf()) {
      // Disjoint union: children member counts add up and the union
      // reproduces the parent set exactly.
      std::vector<int> mine = members(id);
      std::size_t total = 0;
      for (int c : nd.children) total += members(c).size();
      if (total != mine.size()) throw InternalError("children do not partition their parent");
      if (nd.volume != set_volume(*graph_, mine) || nd.cut != set_cut(*graph_, mine)) {
        throw InternalError("stale volume/cut cache");
      }
    } else {
      if (nd.members_store.empty()) throw InternalError("leaf without members");
      max_leaf_depth = std::max(max_leaf_depth, nd.depth);
    }
  }

  if (require_regulated) {
    if (target_levels_ < 1) throw InternalError("regulated tree needs target levels >= 1");
    std::vector<std::vector<char>> seen(static_cast<std::size_t>(target_levels_) + 1,
                                        std::vector<char>(static_cast<std::size_t>(n), 0));
    for (int id : ids()) {
      const TreeNode& nd = node(id);
      if (nd.is_leaf()) {
        if (nd.depth != target_levels_ || nd.members_store.size() != 1) {
          throw InternalError("leaf is not a singleton at the target depth");
        }
      }
      if (nd.depth > target_levels_) throw InternalError("node deeper than target");
      for (int v : members(id)) {
        if (seen[static_cast<std::size_t>(nd.depth)][static_cast<std::size_t>(v)]++) {
          throw InternalError("level sets overlap");
        }
      }
    }
    for (int depth = 0; depth <= target_levels_; ++depth) {
      for (int v = 0; v < n; ++v) {
        if (!seen[static_cast<std::size_t>(depth)][static_cast<std::size_t>(v)]) {
          throw InternalError("level does not cover the graph");
        }
      }
    }
  }
}

EncodingTree EncodingTree::renumbered() const {
  std::vector<int> order = ids();
  std::sort(order.begin(), order.end(), [this](int a, int b) {
    const TreeNode& na = nodes_[static_cast<std::size_t>(a)];
    const TreeNode& nb = nodes_[static_cast<std::size_t>(b)];
    if (na.depth != nb.depth) return na.depth < nb.depth;
    return na.min_member < nb.min_member;
  });
  std::vector<int> remap(nodes_.size(), -1);
  for (int i = 0; i < static_cast<int>(order.size()); ++i) {
    remap[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;
  }

  EncodingTree out;
  out.graph_ = graph_;
  out.target_levels_ = target_levels_;
  out.root_ = remap[static_cast<std::size_t>(root_)];
  out.live_count_ = static_cast<int>(order.size());
  out.nodes_.resize(order.size());
  for (int old_id : order) {
    const TreeNode& src = nodes_[static_cast<std::size_t>(old_id)];
    TreeNode dst = src;
    dst.parent = src.parent < 0 ? -1 : remap[static_cast<std::size_t>(src.parent)];
    for (int& c : dst.children) c = remap[static_cast<std::size_t>(c)];
    std::sort(dst.children.begin(), dst.children.end());
    out.nodes_[static_cast<std::size_t>(remap[static_cast<std::size_t>(old_id)])] = std::move(dst);
  }
  return out;
}

nlohmann::json EncodingTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (int id : ids()) {
    const TreeNode& n = node(id);
    nlohmann::json rec;
    rec["id"] = id;
    rec["parent"] = n.parent < 0 ? nlohmann::json(nullptr) : nlohmann::json(n.parent);
    rec["children"] = n.children;
    rec["depth"] = n.depth;
    rec["pass_through"] = n.children.size() == 1;
    if (n.is_leaf()) {
      if (n.members_store.size() != 1) throw InternalError("serializing non-singleton leaf");
      rec["leaf_member"] = graph_->node_id(n.members_store.front());
    }
    nodes.push_back(std::move(rec));
  }
  return nlohmann::json{{"L", target_levels_}, {"nodes", std::move(nodes)}};
}

EncodingTree EncodingTree::from_json(const nlohmann::json& j, const TextualAttributedGraph& g) {
  if (!j.is_object() || !j.contains("L") || !j.contains("nodes") || !j["nodes"].is_array()) {
    throw DataError("tree.json: expected {\"L\":int,\"nodes\":[...]}");
  }
  EncodingTree out;
  out.graph_ = &g;
  out.target_levels_ = j["L"].get<int>();
  const auto& arr = j["nodes"];
  out.nodes_.resize(arr.size());
  out.live_count_ = static_cast<int>(arr.size());
  out.root_ = -1;

  for (const auto& rec : arr) {
    int id = rec.at("id").get<int>();
    if (id < 0 || id >= static_cast<int>(arr.size())) throw DataError("tree.json: id out of range");
    TreeNode& n = out.nodes_[static_cast<std::size_t>(id)];
    n.depth = rec.at("depth").get<int>();
    n.children = rec.at("children").get<std::vector<int>>();
    if (rec.at("parent").is_null()) {
      n.parent = -1;
      if (out.root_ >= 0) throw DataError("tree.json: multiple roots");
      out.root_ = id;
    } else {
      n.parent = rec.at("parent").get<int>();
    }
    if (rec.contains("leaf_member")) {
      n.members_store = {g.require_index(rec.at("leaf_member").get<std::string>())};
    } else if (n.children.empty()) {
      throw DataError("tree.json: leaf without leaf_member");
    }
  }
  if (out.root_ < 0) throw DataError("tree.json: no root");

  for (int id : out.ids()) {
    std::vector<int> m = out.members(id);
    if (m.empty()) throw DataError("tree.json: node with empty set");
    TreeNode& n = out.nodes_[static_cast<std::size_t>(id)];
    n.volume = set_volume(g, m);
    n.cut = set_cut(g, m);
    n.min_member = m.front();
  }
  out.validate(false);
  return out;
}

}  // namespace tret
