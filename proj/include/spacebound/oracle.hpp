#pragma once
// Sequential reference implementations. These are allowed O(n) memory; they
// are references for correctness checks, not subjects of the space claims.

#include <cstdint>
#include <vector>

#include "spacebound/tree.hpp"
#include "spacebound/view.hpp"

namespace spacebound {

struct OracleReport {
  std::uint64_t node_count = 0;
  std::uint64_t node_checksum = 0;  // order-independent hash over all nodes
  std::uint64_t leaf_checksum = 0;
  std::vector<NodeHandle> leaves;            // in DFS order
  std::vector<NodeHandle> first_touch_order; // every node once, in DFS order
  int height = 0;
  std::vector<std::uint64_t> smallest_costs;  // sorted prefix, up to 64 entries
};

// Order-independent node fingerprint shared with the simulator reports.
std::uint64_t node_fingerprint(const NodeHandle& u);

// Exact node and leaf sets by iterative DFS that uses parent recomputation
// only (constant auxiliary space besides the report being built).
OracleReport dfs_enumerate(const TreeView& view);
OracleReport dfs_enumerate(const TreeModel& model);

struct COracleResult {
  std::uint64_t c_value = 0;
  NodeHandle c_node;        // the node whose cost is c(n,h)
  std::uint64_t size = 0;   // |T_c|
  int height = 0;           // height of T_c
  bool contains_leaf = false;
  bool exhausted = false;   // the finite tree ran out before either bound bit
};

// Largest cost c such that T_c has at most n nodes and height at most h,
// by expanding nodes in strictly increasing cost order from the root.
COracleResult c_oracle(const TreeModel& model, std::uint64_t n, int h);

std::uint64_t kth_smallest_cost(const TreeModel& model, std::uint64_t k);

struct MinLeaf {
  NodeHandle leaf;
  std::uint64_t cost = 0;
};

// Min-cost leaf by best-first expansion, stopping at the first leaf popped.
MinLeaf best_first_min_leaf(const TreeModel& model);

}  // namespace spacebound
