#pragma once
// Branch-and-bound by repeated generalized selection with doubling bounds
// (n_i, h_i), stopping at the first threshold subtree that contains a leaf,
// then extracting the minimum-cost leaf with one more backtrack sweep.

#include <cstdint>
#include <vector>

#include "spacebound/machine.hpp"
#include "spacebound/selection.hpp"
#include "spacebound/tree.hpp"

namespace spacebound {

struct BBIterationRecord {
  std::uint64_t n = 0;
  int h = 0;
  std::uint64_t c_value = 0;
  std::uint64_t size = 0;
  int height = 0;
  bool contains_leaf = false;
};

struct BBOutcome {
  NodeHandle leaf;
  std::uint64_t leaf_cost = 0;
  int iterations = 0;  // terminating index k; the c_0 round is iteration 0
  std::vector<BBIterationRecord> history;
  std::uint64_t steps_total = 0;
};

struct BBConfig {
  SelectConfig select;
};

BBOutcome bb_solve(Machine& mach, const TreeModel& model, const BBConfig& cfg = {});

}  // namespace spacebound
