#pragma once
// Implicit full binary trees with distinct, min-heap-ordered node costs.
//
// A NodeHandle is a fixed four-word record (two words of packed root-to-node
// turns, one word of depth, one word of cost value). Parent and child
// handles, including their costs, are recomputed with a bounded number of
// word operations, so navigation needs no memory beyond the handle itself.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spacebound {

inline constexpr int kMaxDepth = 120;

enum class Side : int { Left = 0, Right = 1 };

struct NodeHandle {
  std::uint64_t path_lo = 0;  // turn taken at depth d is bit d (0=left, 1=right)
  std::uint64_t path_hi = 0;  // turns at depths 64..119
  std::uint64_t depth = 0;    // edge count from root
  std::uint64_t cost = 0;     // cost value; ties broken by (depth, path)

  bool path_bit(unsigned d) const {
    return d < 64 ? (path_lo >> d) & 1u : (path_hi >> (d - 64)) & 1u;
  }
  bool is_root() const { return depth == 0; }
  bool is_left_child() const { return depth > 0 && !path_bit(static_cast<unsigned>(depth - 1)); }
  bool is_right_child() const { return depth > 0 && path_bit(static_cast<unsigned>(depth - 1)); }
};

static_assert(sizeof(NodeHandle) == 4 * sizeof(std::uint64_t),
              "NodeHandle must stay a four-word record");

inline bool same_node(const NodeHandle& a, const NodeHandle& b) {
  return a.depth == b.depth && a.path_lo == b.path_lo && a.path_hi == b.path_hi;
}

// Total order on costs: value first, then (depth, path) lexicographically.
// Distinct nodes never compare equal, so all node costs are distinct.
inline int cost_compare(const NodeHandle& a, const NodeHandle& b) {
  if (a.cost != b.cost) return a.cost < b.cost ? -1 : 1;
  if (a.depth != b.depth) return a.depth < b.depth ? -1 : 1;
  if (a.path_hi != b.path_hi) return a.path_hi < b.path_hi ? -1 : 1;
  if (a.path_lo != b.path_lo) return a.path_lo < b.path_lo ? -1 : 1;
  return 0;
}

inline bool cost_less(const NodeHandle& a, const NodeHandle& b) { return cost_compare(a, b) < 0; }

// True iff a is an ancestor of b or the same node.
inline bool is_ancestor_or_self(const NodeHandle& a, const NodeHandle& b) {
  if (a.depth > b.depth) return false;
  if (a.depth == 0) return true;
  std::uint64_t d = a.depth;
  std::uint64_t mask_lo = d >= 64 ? ~0ull : ((1ull << d) - 1);
  if ((a.path_lo & mask_lo) != (b.path_lo & mask_lo)) return false;
  if (d <= 64) return true;
  std::uint64_t mask_hi = (1ull << (d - 64)) - 1;
  return (a.path_hi & mask_hi) == (b.path_hi & mask_hi);
}

std::string path_string(const NodeHandle& u);  // "LRR..."; "." for the root

enum class Family { Complete, LeftSpine, RandomFull, Fixed };
enum class FixtureId { T7, T3, Sel1 };

const char* family_name(Family f);
const char* fixture_name(FixtureId id);

// Deterministic generator defining tree shape and heap-ordered costs.
// Shape and costs are pure functions of the constructor arguments, so a
// model can be shared or rebuilt freely across simulated processors.
class TreeModel {
 public:
  static TreeModel complete(int height);
  static TreeModel left_spine(int height);
  static TreeModel random_full(std::uint64_t seed, int height_cap, double leaf_prob);
  static TreeModel fixture(FixtureId id);

  NodeHandle root() const;
  std::optional<NodeHandle> child(const NodeHandle& u, Side side) const;
  std::optional<NodeHandle> parent(const NodeHandle& u) const;
  bool is_leaf(const NodeHandle& u) const;

  // Walks a turn string like "LRL" from the root. Test and CLI convenience.
  NodeHandle node_at(std::string_view turns) const;

  Family family() const { return family_; }
  std::uint64_t seed() const { return seed_; }
  int height_cap() const { return height_; }
  double leaf_prob() const { return rho_; }
  FixtureId fixture_id() const { return fixture_; }

  std::string descriptor_json() const;
  static TreeModel from_descriptor(std::string_view json_text);

 private:
  TreeModel(Family f, std::uint64_t seed, int height, double rho, FixtureId fx);

  bool internal_at(const NodeHandle& u) const;
  std::uint64_t increment(const NodeHandle& parent, Side side) const;
  std::uint64_t fixture_cost(std::uint64_t depth, std::uint64_t bits, bool& internal) const;

  Family family_;
  std::uint64_t seed_;
  int height_;
  double rho_;
  std::uint64_t rho_bits_;  // leaf_prob scaled to a 64-bit threshold
  FixtureId fixture_;
};

}  // namespace spacebound
