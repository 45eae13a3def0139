#pragma once
// Generalized selection on heap-ordered trees: find the largest cost c such
// that the threshold subtree T_c has at most n nodes and height at most h.
//
// Goodness of a candidate is decided by a bounded backtrack exploration of
// its threshold subtree; candidates are drawn uniformly from the frontier of
// the current lower-bound subtree via per-processor reservoir sampling
// merged in a log p tournament; a binary search over random splitters closes
// each epoch.

#include <cstdint>
#include <optional>
#include <vector>

#include "spacebound/backtrack.hpp"
#include "spacebound/machine.hpp"
#include "spacebound/tree.hpp"

namespace spacebound {

struct SelectParams {
  std::uint64_t n = 1;  // node-count bound, >= 1
  int h = 0;            // height bound, >= 0
};

// A point on the extended cost axis: -inf, a node's cost, or +inf.
struct CostBound {
  enum class Kind : std::uint8_t { NegInf, Finite, PosInf };
  Kind kind = Kind::NegInf;
  NodeHandle node;

  static CostBound neg_inf() { return {}; }
  static CostBound pos_inf() {
    CostBound b;
    b.kind = Kind::PosInf;
    return b;
  }
  static CostBound at(const NodeHandle& u) {
    CostBound b;
    b.kind = Kind::Finite;
    b.node = u;
    return b;
  }

  bool below_node(const NodeHandle& u) const {  // bound < cost(u)
    switch (kind) {
      case Kind::NegInf: return true;
      case Kind::PosInf: return false;
      case Kind::Finite: return cost_compare(node, u) < 0;
    }
    return false;
  }
  bool above_node(const NodeHandle& u) const {  // cost(u) < bound
    switch (kind) {
      case Kind::NegInf: return false;
      case Kind::PosInf: return true;
      case Kind::Finite: return cost_compare(u, node) < 0;
    }
    return false;
  }
  bool equals(const CostBound& o) const {
    if (kind != o.kind) return false;
    return kind != Kind::Finite || same_node(node, o.node);
  }
};

// Open interval (lo, hi) of candidate costs; splitters already decided sit
// on the boundary and are never resampled.
struct CostWindow {
  CostBound lo, hi;
  bool contains(const NodeHandle& u) const { return lo.below_node(u) && hi.above_node(u); }
};

struct SelectConfig {
  Variant variant = Variant::Deterministic;
  int dd_mult = 8;      // deterministic delta_d multiplier
  int rand_delta_d = 8; // randomized delta_d
  int kappa = 2;
  EngineOptions engine;

  EpochConfig epoch_for(int p) const {
    return variant == Variant::Deterministic ? EpochConfig::deterministic(p, dd_mult, kappa)
                                             : EpochConfig::randomized(rand_delta_d, kappa);
  }
};

struct GoodResult {
  bool good = false;
  std::uint64_t size = 0;   // exact when good; the detected overshoot otherwise
  int height = 0;
  bool contains_leaf = false;
  std::uint64_t steps = 0;
};

// Explores T_{cost(u)} and stops at the first of: complete visit (good),
// more than n nodes, or height above h.
GoodResult is_good(Machine& mach, const TreeModel& model, const NodeHandle& u,
                   const SelectParams& params, const SelectConfig& cfg = {});

struct SampleResult {
  std::optional<NodeHandle> node;  // uniform over the distinguished nodes
  std::uint64_t count = 0;         // how many there are
  std::uint64_t frontier_total = 0;
  std::uint64_t steps = 0;
};

// A node is distinguished iff it lies on the frontier of T_L (outside, with
// its parent inside; the root when T_L is empty) and its cost falls in the
// open window.
SampleResult sample_distinguished(Machine& mach, const TreeModel& model, const CostBound& L,
                                  const CostWindow& window, const SelectConfig& cfg = {});

struct IterationTrace {
  int epoch = 0;
  int iteration = 0;  // K within the epoch, 1-based
  CostBound x_l, x_u;
  std::uint64_t splitter_cost = 0;
  bool good = false;
  std::uint64_t candidates = 0;
};

struct SelectOutcome {
  std::uint64_t c_value = 0;
  NodeHandle c_node;
  std::uint64_t size = 0;  // |T_c|, exact
  int height = 0;          // height of T_c, exact
  bool contains_leaf = false;
  bool exhausted = false;  // the finite tree ran out before either bound bit
  std::vector<int> k_history;                   // iterations per epoch
  std::vector<std::uint64_t> epoch_candidates;  // candidate count entering each epoch
  std::vector<IterationTrace> iterations;
  std::uint64_t steps_total = 0;
};

SelectOutcome select_cost(Machine& mach, const TreeModel& model, const SelectParams& params,
                          const SelectConfig& cfg = {});

}  // namespace spacebound
