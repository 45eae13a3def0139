#include "spacebound/branch_bound.hpp"

#include <stdexcept>

namespace spacebound {
namespace {

// Per-processor minimum over the actual model leaves encountered in the
// final threshold sweep.
struct MinLeafVisitor {
  const TreeModel* model = nullptr;
  std::vector<std::uint64_t> best_cost;
  std::vector<NodeHandle> best_leaf;

  MinLeafVisitor(const TreeModel& m, int p) : model(&m), best_cost(p, ~0ull), best_leaf(p) {}

  void on_first_touch(int, const NodeHandle&) {}
  void on_view_leaf(int i, const NodeHandle& u) {
    if (model->is_leaf(u) && u.cost < best_cost[i]) {
      best_cost[i] = u.cost;
      best_leaf[i] = u;
    }
  }
  int extra_words(int) const { return 5; }
};

}  // namespace

BBOutcome bb_solve(Machine& mach, const TreeModel& model, const BBConfig& cfg) {
  Metrics start = mach.metrics();
  BBOutcome out;
  NodeHandle root = model.root();
  if (model.is_leaf(root)) {
    out.leaf = root;
    out.leaf_cost = root.cost;
    return out;
  }

  // c_0 = c(2,1) is the cheaper child of the root, determined in O(1).
  NodeHandle left = *model.child(root, Side::Left);
  NodeHandle right = *model.child(root, Side::Right);
  NodeHandle c_node = cost_less(left, right) ? left : right;
  mach.charge(Phase::Collective, 1);
  BBIterationRecord cur{2, 1, c_node.cost, 2, 1, model.is_leaf(c_node)};
  out.history.push_back(cur);

  std::uint64_t n_i = 2;
  int h_i = 1;
  int k = 0;
  while (!cur.contains_leaf) {
    bool doubled = false;
    if (cur.size == n_i) {
      n_i *= 2;
      doubled = true;
    }
    if (cur.height == h_i) {
      h_i *= 2;
      doubled = true;
    }
    if (!doubled)
      throw std::logic_error("branch-and-bound stalled: neither bound was exact");
    SelectOutcome sel = select_cost(mach, model, {n_i, h_i}, cfg.select);
    cur = {n_i, h_i, sel.c_value, sel.size, sel.height, sel.contains_leaf};
    c_node = sel.c_node;
    out.history.push_back(cur);
    ++k;
  }
  out.iterations = k;

  // One deterministic backtrack over T_{c_k}; a min-with-argmin collective
  // puts the winning leaf at a known processor, fetched in one step.
  TreeView view(model, c_node);
  MinLeafVisitor vis(model, mach.p());
  EpochConfig ecfg = EpochConfig::deterministic(mach.p(), cfg.select.dd_mult, cfg.select.kappa);
  BacktrackEngine<MinLeafVisitor> engine(mach, view, ecfg, vis, cfg.select.engine);
  engine.run(deterministic_termination());
  auto [min_cost, arg] = mach.min_with_argmin(vis.best_cost);
  mach.charge(Phase::Collective, 1);
  if (arg < 0 || min_cost == ~0ull)
    throw std::logic_error("terminating threshold subtree contained no leaf");
  out.leaf = vis.best_leaf[arg];
  out.leaf_cost = min_cost;
  out.steps_total = mach.metrics().steps_total - start.steps_total;
  return out;
}

}  // namespace spacebound
