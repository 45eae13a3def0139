#include "spacebound/oracle.hpp"

#include <algorithm>
#include <queue>

namespace spacebound {
namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct CostGreater {
  bool operator()(const NodeHandle& a, const NodeHandle& b) const { return cost_less(b, a); }
};

using MinQueue = std::priority_queue<NodeHandle, std::vector<NodeHandle>, CostGreater>;

}  // namespace

std::uint64_t node_fingerprint(const NodeHandle& u) {
  return mix64(u.path_lo ^ mix64(u.path_hi ^ mix64(u.depth)));
}

OracleReport dfs_enumerate(const TreeView& view) {
  OracleReport rep;
  NodeHandle v = view.root();
  enum class Dir { Down, FromLeft, FromRight } dir = Dir::Down;
  while (true) {
    if (dir == Dir::Down) {
      rep.node_count += 1;
      rep.node_checksum += node_fingerprint(v);
      rep.first_touch_order.push_back(v);
      if (static_cast<int>(v.depth) > rep.height) rep.height = static_cast<int>(v.depth);
      if (view.is_leaf(v)) {
        rep.leaves.push_back(v);
        rep.leaf_checksum += node_fingerprint(v);
        dir = v.is_left_child() ? Dir::FromLeft : Dir::FromRight;
        if (v.is_root()) break;
        v = *view.parent(v);
      } else if (view.has_child(v, Side::Left)) {
        v = *view.child(v, Side::Left);
      } else {
        v = *view.child(v, Side::Right);
      }
    } else if (dir == Dir::FromLeft && view.has_child(v, Side::Right)) {
      v = *view.child(v, Side::Right);
      dir = Dir::Down;
    } else {
      dir = v.is_left_child() ? Dir::FromLeft : Dir::FromRight;
      if (v.is_root()) break;
      v = *view.parent(v);
    }
  }
  std::vector<std::uint64_t> costs;
  costs.reserve(rep.first_touch_order.size());
  for (const NodeHandle& u : rep.first_touch_order) costs.push_back(u.cost);
  std::sort(costs.begin(), costs.end());
  if (costs.size() > 64) costs.resize(64);
  rep.smallest_costs = std::move(costs);
  return rep;
}

OracleReport dfs_enumerate(const TreeModel& model) { return dfs_enumerate(TreeView(model)); }

COracleResult c_oracle(const TreeModel& model, std::uint64_t n, int h) {
  if (n < 1) throw std::invalid_argument("c_oracle requires n >= 1");
  if (h < 0) throw std::invalid_argument("c_oracle requires h >= 0");
  MinQueue pq;
  pq.push(model.root());
  COracleResult best;
  std::uint64_t size = 0;
  int height = 0;
  bool leaf_seen = false;
  NodeHandle last;
  bool have_last = false;
  while (!pq.empty()) {
    NodeHandle u = pq.top();
    pq.pop();
    if (have_last && !cost_less(last, u))
      throw std::logic_error("heap order violated: expansion popped a non-increasing cost");
    std::uint64_t new_size = size + 1;
    int new_height = std::max(height, static_cast<int>(u.depth));
    if (new_size > n || new_height > h) {
      best.c_value = last.cost;
      best.c_node = last;
      best.size = size;
      best.height = height;
      best.contains_leaf = leaf_seen;
      best.exhausted = false;
      return best;
    }
    size = new_size;
    height = new_height;
    leaf_seen = leaf_seen || model.is_leaf(u);
    last = u;
    have_last = true;
    for (Side s : {Side::Left, Side::Right})
      if (auto c = model.child(u, s)) pq.push(*c);
  }
  // Finite tree exhausted before either bound bit: report the max cost.
  best.c_value = last.cost;
  best.c_node = last;
  best.size = size;
  best.height = height;
  best.contains_leaf = leaf_seen;
  best.exhausted = true;
  return best;
}

std::uint64_t kth_smallest_cost(const TreeModel& model, std::uint64_t k) {
  if (k < 1) throw std::out_of_range("kth_smallest_cost requires k >= 1");
  MinQueue pq;
  pq.push(model.root());
  std::uint64_t popped = 0;
  while (!pq.empty()) {
    NodeHandle u = pq.top();
    pq.pop();
    if (++popped == k) return u.cost;
    for (Side s : {Side::Left, Side::Right})
      if (auto c = model.child(u, s)) pq.push(*c);
  }
  throw std::out_of_range("k exceeds the tree size");
}

MinLeaf best_first_min_leaf(const TreeModel& model) {
  MinQueue pq;
  pq.push(model.root());
  while (!pq.empty()) {
    NodeHandle u = pq.top();
    pq.pop();
    if (model.is_leaf(u)) return {u, u.cost};
    for (Side s : {Side::Left, Side::Right})
      if (auto c = model.child(u, s)) pq.push(*c);
  }
  throw std::logic_error("tree has no leaves");
}

}  // namespace spacebound
