#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "spacebound/oracle.hpp"
#include "spacebound/tree.hpp"

using namespace spacebound;

TEST_CASE("T7 fixture table") {
  TreeModel t7 = TreeModel::fixture(FixtureId::T7);
  NodeHandle a = t7.root();
  CHECK(a.depth == 0);
  CHECK(a.cost == 1);
  CHECK_FALSE(t7.is_leaf(a));

  NodeHandle b = *t7.child(a, Side::Left);
  NodeHandle c = *t7.child(a, Side::Right);
  CHECK(b.cost == 2);
  CHECK(c.cost == 7);

  NodeHandle d = *t7.child(b, Side::Left);
  NodeHandle e = *t7.child(b, Side::Right);
  NodeHandle f = *t7.child(c, Side::Left);
  NodeHandle g = *t7.child(c, Side::Right);
  CHECK(d.cost == 3);
  CHECK(e.cost == 5);
  CHECK(f.cost == 8);
  CHECK(g.cost == 9);
  CHECK(t7.is_leaf(d));
  CHECK_FALSE(t7.is_leaf(b));

  CHECK_FALSE(t7.child(d, Side::Left).has_value());
  CHECK(same_node(*t7.parent(e), b));
  CHECK(t7.parent(e)->cost == 2);
  CHECK_FALSE(t7.parent(a).has_value());

  CHECK(path_string(e) == "LR");
  CHECK(same_node(t7.node_at("LR"), e));
}

TEST_CASE("T3 fixture") {
  TreeModel t3 = TreeModel::fixture(FixtureId::T3);
  CHECK(t3.root().cost == 5);
  CHECK(t3.child(t3.root(), Side::Left)->cost == 7);
  CHECK(t3.child(t3.root(), Side::Right)->cost == 9);
  CHECK(t3.is_leaf(*t3.child(t3.root(), Side::Left)));
}

TEST_CASE("complete family") {
  TreeModel z = TreeModel::complete(0);
  CHECK(z.is_leaf(z.root()));

  TreeModel c4 = TreeModel::complete(4);
  OracleReport rep = dfs_enumerate(c4);
  CHECK(rep.node_count == 31);  // 2^(H+1) - 1
  CHECK(rep.leaves.size() == 16);
  for (const NodeHandle& u : rep.leaves) CHECK(u.depth == 4);
  for (const NodeHandle& u : rep.first_touch_order)
    CHECK(c4.is_leaf(u) == (u.depth == 4));
}

TEST_CASE("left-spine family") {
  TreeModel sp = TreeModel::left_spine(6);
  OracleReport rep = dfs_enumerate(sp);
  CHECK(rep.node_count == 13);  // 2H + 1
  CHECK(rep.leaves.size() == 7);
  // exactly one internal node per depth below the cap
  std::vector<int> internals(7, 0);
  for (const NodeHandle& u : rep.first_touch_order)
    if (!sp.is_leaf(u)) ++internals[u.depth];
  for (int d = 0; d < 6; ++d) CHECK(internals[d] == 1);
  CHECK(internals[6] == 0);
}

TEST_CASE("random-full determinism and full-binary shape") {
  TreeModel m1 = TreeModel::random_full(42, 12, 0.4);
  TreeModel m2 = TreeModel::random_full(42, 12, 0.4);
  OracleReport r1 = dfs_enumerate(m1);
  OracleReport r2 = dfs_enumerate(m2);
  CHECK(r1.node_count == r2.node_count);
  CHECK(r1.node_checksum == r2.node_checksum);
  REQUIRE(r1.first_touch_order.size() == r2.first_touch_order.size());
  for (std::size_t i = 0; i < r1.first_touch_order.size(); ++i) {
    CHECK(same_node(r1.first_touch_order[i], r2.first_touch_order[i]));
    CHECK(r1.first_touch_order[i].cost == r2.first_touch_order[i].cost);
  }

  // full binary: every node has 0 or 2 children
  for (const NodeHandle& u : r1.first_touch_order) {
    bool l = m1.child(u, Side::Left).has_value();
    bool r = m1.child(u, Side::Right).has_value();
    CHECK(l == r);
  }

  CHECK(same_node(TreeModel::random_full(7, 10, 0.5).root(),
                  TreeModel::random_full(7, 10, 0.5).root()));
}

TEST_CASE("heap order property sweep") {
  // cost(child) > cost(parent) for 10^5 random edges, and the increments
  // stay in [1, 2^16]
  std::uint64_t state = 0x1234;
  auto rnd = [&state]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return state >> 11;
  };
  int edges = 0;
  for (std::uint64_t seed = 0; edges < 100000; ++seed) {
    TreeModel m = TreeModel::random_full(seed, 60, 0.45);
    NodeHandle u = m.root();
    while (!m.is_leaf(u)) {
      Side s = rnd() & 1 ? Side::Right : Side::Left;
      NodeHandle c = *m.child(u, s);
      REQUIRE(cost_less(u, c));
      REQUIRE(c.cost - u.cost >= 1);
      REQUIRE(c.cost - u.cost <= 65536);
      REQUIRE(same_node(*m.parent(c), u));
      REQUIRE(m.parent(c)->cost == u.cost);  // exact cost round-trip
      ++edges;
      u = c;
      if (rnd() % 8 == 0) break;
    }
  }
}

TEST_CASE("cost order is total and distinct") {
  TreeModel m = TreeModel::random_full(99, 14, 0.42);
  OracleReport rep = dfs_enumerate(m);
  std::vector<NodeHandle> nodes = rep.first_touch_order;
  std::sort(nodes.begin(), nodes.end(),
            [](const NodeHandle& a, const NodeHandle& b) { return cost_less(a, b); });
  for (std::size_t i = 1; i < nodes.size(); ++i)
    CHECK(cost_compare(nodes[i - 1], nodes[i]) < 0);
}

TEST_CASE("depth capacity is enforced") {
  CHECK_THROWS_AS(TreeModel::complete(kMaxDepth + 1), std::invalid_argument);
  CHECK_NOTHROW(TreeModel::left_spine(kMaxDepth));
  // deep navigation works at the cap
  TreeModel sp = TreeModel::left_spine(kMaxDepth);
  NodeHandle u = sp.root();
  while (!sp.is_leaf(u)) u = *sp.child(u, Side::Left);
  CHECK(u.depth == kMaxDepth);
}

TEST_CASE("ancestor predicate") {
  TreeModel m = TreeModel::complete(80);
  NodeHandle u = m.node_at("LRLLRR");
  NodeHandle deep = m.node_at("LRLLRRLLLRRL");
  CHECK(is_ancestor_or_self(u, deep));
  CHECK(is_ancestor_or_self(u, u));
  CHECK_FALSE(is_ancestor_or_self(deep, u));
  CHECK_FALSE(is_ancestor_or_self(m.node_at("R"), deep));
  // across the 64-bit word boundary
  std::string long_path(70, 'L');
  NodeHandle a = m.node_at(long_path);
  NodeHandle b = m.node_at(long_path + "RRL");
  CHECK(is_ancestor_or_self(a, b));
  CHECK_FALSE(is_ancestor_or_self(b, a));
}

TEST_CASE("descriptor round-trip") {
  TreeModel m = TreeModel::random_full(1234, 33, 0.47);
  TreeModel back = TreeModel::from_descriptor(m.descriptor_json());
  CHECK(back.descriptor_json() == m.descriptor_json());
  CHECK(dfs_enumerate(back).node_checksum == dfs_enumerate(m).node_checksum);

  TreeModel fx = TreeModel::fixture(FixtureId::Sel1);
  TreeModel fx2 = TreeModel::from_descriptor(fx.descriptor_json());
  CHECK(dfs_enumerate(fx2).node_count == 9);
}
