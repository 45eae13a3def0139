#include "spacebound/selection.hpp"

#include <algorithm>

namespace spacebound {
namespace {

// Per-processor exploration counters for goodness checks: first-touch count,
// deepest touch, and whether an actual model leaf was seen.
struct CountingVisitor {
  const TreeModel* model = nullptr;
  std::vector<std::uint64_t> touched;
  std::vector<std::uint64_t> max_depth;
  std::vector<std::uint8_t> leaf_seen;

  explicit CountingVisitor(const TreeModel& m, int p)
      : model(&m), touched(p, 0), max_depth(p, 0), leaf_seen(p, 0) {}

  void on_first_touch(int i, const NodeHandle& u) {
    ++touched[i];
    if (u.depth > max_depth[i]) max_depth[i] = u.depth;
    if (model->is_leaf(u)) leaf_seen[i] = 1;
  }
  void on_view_leaf(int, const NodeHandle&) {}
  int extra_words(int) const { return 3; }
};

// Frontier inspection plus reservoir sampling: a frontier child is
// discovered exactly when its parent is first-touched.
struct ReservoirVisitor {
  const TreeModel* model = nullptr;
  Machine* mach = nullptr;
  const TreeView* view = nullptr;  // the T_L view being explored
  const CostWindow* window = nullptr;
  std::vector<std::uint64_t> count;
  std::vector<std::uint64_t> frontier;
  std::vector<NodeHandle> sample;

  ReservoirVisitor(const TreeModel& m, Machine& mc, const TreeView& v, const CostWindow& w)
      : model(&m), mach(&mc), view(&v), window(&w),
        count(mc.p(), 0), frontier(mc.p(), 0), sample(mc.p()) {}

  void on_first_touch(int i, const NodeHandle& u) {
    for (Side s : {Side::Left, Side::Right}) {
      auto c = model->child(u, s);
      if (!c || view->contains(*c)) continue;  // not a frontier child
      ++frontier[i];
      if (!window->contains(*c)) continue;
      ++count[i];
      if (mach->rand_below(i, count[i]) == 0) sample[i] = *c;
    }
  }
  void on_view_leaf(int, const NodeHandle&) {}
  int extra_words(int) const { return 6; }  // sample handle + two counters
};

EpochCallback termination_for(Variant v) {
  return v == Variant::Deterministic ? deterministic_termination() : randomized_termination();
}

}  // namespace

GoodResult is_good(Machine& mach, const TreeModel& model, const NodeHandle& u,
                   const SelectParams& params, const SelectConfig& cfg) {
  if (params.n < 1 || params.h < 0)
    throw std::invalid_argument("selection bounds require n >= 1 and h >= 0");
  Metrics start = mach.metrics();
  TreeView view(model, u);
  CountingVisitor vis(model, mach.p());
  BacktrackEngine<CountingVisitor> engine(mach, view, cfg.epoch_for(mach.p()), vis, cfg.engine);

  GoodResult out;
  bool decided = false;
  EpochCallback terminate = termination_for(cfg.variant);
  EpochCallback cb = [&](const EngineView& ev) {
    std::uint64_t size = mach.sum(vis.touched);
    std::uint64_t depth = mach.max(vis.max_depth);
    if (size > params.n || depth > static_cast<std::uint64_t>(params.h)) {
      out.good = false;
      out.size = size;
      out.height = static_cast<int>(depth);
      decided = true;
      return true;
    }
    if (terminate(ev)) {
      out.good = true;
      out.size = size;
      out.height = static_cast<int>(depth);
      out.contains_leaf = mach.any_of(vis.leaf_seen);
      decided = true;
      return true;
    }
    return false;
  };
  VisitReport rep = engine.run(cb);
  if (!decided) {
    // Single-node subtree retired at init: n >= 1 and h >= 0 always admit it.
    out.good = rep.completed;
    out.size = mach.sum(vis.touched);
    out.height = static_cast<int>(mach.max(vis.max_depth));
    out.contains_leaf = mach.any_of(vis.leaf_seen);
  }
  out.steps = mach.metrics().steps_total - start.steps_total;
  return out;
}

SampleResult sample_distinguished(Machine& mach, const TreeModel& model, const CostBound& L,
                                  const CostWindow& window, const SelectConfig& cfg) {
  Metrics start = mach.metrics();
  int p = mach.p();
  SampleResult res;
  std::vector<std::uint64_t> count(p, 0);
  std::vector<std::uint64_t> frontier(p, 0);
  std::vector<NodeHandle> sample(p);

  NodeHandle root = model.root();
  if (L.below_node(root)) {
    // T_L is empty; the frontier is the root alone, inspected by P0.
    frontier[0] = 1;
    if (window.contains(root)) {
      count[0] = 1;
      sample[0] = root;
    }
    mach.charge(Phase::Traversal, 1);
  } else {
    TreeView view(model, L.node);
    ReservoirVisitor vis(model, mach, view, window);
    BacktrackEngine<ReservoirVisitor> engine(mach, view, cfg.epoch_for(p), vis, cfg.engine);
    engine.run(termination_for(cfg.variant));
    count = std::move(vis.count);
    frontier = std::move(vis.frontier);
    sample = std::move(vis.sample);
  }

  // Tournament reduction: log p rounds; the survivor adopts its partner's
  // sample with probability q_partner / (q_self + q_partner) and accumulates
  // the counts, so every round keeps the invariant "uniform over the merged
  // group".
  int rounds = ceil_log2(p);
  if (rounds > 0) mach.charge(Phase::Collective, rounds);
  for (int round = 0; round < rounds; ++round) {
    int stride = 1 << (round + 1);
    int half = 1 << round;
    for (int a = 0; a + half < p; a += stride) {
      int b = a + half;
      std::uint64_t qa = count[a], qb = count[b];
      if (qb == 0) continue;
      if (qa == 0 || mach.rand_below(a, qa + qb) < qb) sample[a] = sample[b];
      count[a] = qa + qb;
    }
  }
  res.count = count[0];
  if (res.count > 0) res.node = sample[0];
  res.frontier_total = mach.sum(frontier);
  res.steps = mach.metrics().steps_total - start.steps_total;
  return res;
}

SelectOutcome select_cost(Machine& mach, const TreeModel& model, const SelectParams& params,
                          const SelectConfig& cfg) {
  if (params.n < 1 || params.h < 0)
    throw std::invalid_argument("selection bounds require n >= 1 and h >= 0");
  Metrics start = mach.metrics();
  SelectOutcome out;
  CostBound lower = CostBound::neg_inf();
  GoodResult lower_record;
  int epoch = 0;
  while (true) {
    CostBound x_l = lower;
    CostBound x_u = CostBound::pos_inf();
    int iterations = 0;
    std::uint64_t entering_candidates = 0;
    std::uint64_t entering_frontier = 0;
    bool first = true;
    while (true) {
      SampleResult s = sample_distinguished(mach, model, lower, {x_l, x_u}, cfg);
      if (first) {
        entering_candidates = s.count;
        entering_frontier = s.frontier_total;
        first = false;
      }
      if (s.count == 0) break;
      ++iterations;
      GoodResult g = is_good(mach, model, *s.node, params, cfg);
      IterationTrace tr;
      tr.epoch = epoch;
      tr.iteration = iterations;
      tr.x_l = x_l;
      tr.x_u = x_u;
      tr.splitter_cost = s.node->cost;
      tr.good = g.good;
      tr.candidates = s.count;
      out.iterations.push_back(tr);
      if (g.good) {
        x_l = CostBound::at(*s.node);
        lower_record = g;
      } else {
        x_u = CostBound::at(*s.node);
      }
    }
    out.k_history.push_back(iterations);
    out.epoch_candidates.push_back(entering_candidates);
    if (x_l.equals(lower)) {
      // No good frontier node: the lower bound is c(n,h).
      if (lower.kind != CostBound::Kind::Finite)
        throw std::logic_error("selection ended before any good node; the root is always good");
      out.c_value = lower.node.cost;
      out.c_node = lower.node;
      out.size = lower_record.size;
      out.height = lower_record.height;
      out.contains_leaf = lower_record.contains_leaf;
      out.exhausted = entering_frontier == 0;
      break;
    }
    lower = x_l;
    ++epoch;
  }
  out.steps_total = mach.metrics().steps_total - start.steps_total;
  return out;
}

}  // namespace spacebound
