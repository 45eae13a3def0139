#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "spacebound/oracle.hpp"
#include "spacebound/tree.hpp"

using namespace spacebound;

TEST_CASE("dfs_enumerate golden values") {
  TreeModel t7 = TreeModel::fixture(FixtureId::T7);
  OracleReport rep = dfs_enumerate(t7);
  CHECK(rep.node_count == 7);
  REQUIRE(rep.leaves.size() == 4);
  std::vector<std::uint64_t> leaf_costs;
  for (const NodeHandle& u : rep.leaves) leaf_costs.push_back(u.cost);
  std::sort(leaf_costs.begin(), leaf_costs.end());
  CHECK(leaf_costs == std::vector<std::uint64_t>{3, 5, 8, 9});
  CHECK(rep.smallest_costs == std::vector<std::uint64_t>{1, 2, 3, 5, 7, 8, 9});

  CHECK(dfs_enumerate(TreeModel::complete(9)).node_count == 1023);
  CHECK(dfs_enumerate(TreeModel::left_spine(20)).node_count == 41);
}

TEST_CASE("c_oracle on T7") {
  TreeModel t7 = TreeModel::fixture(FixtureId::T7);

  COracleResult r = c_oracle(t7, 3, 2);
  CHECK(r.c_value == 3);
  CHECK(r.size == 3);
  CHECK(r.height == 2);
  CHECK(r.contains_leaf);
  CHECK_FALSE(r.exhausted);

  CHECK(c_oracle(t7, 1, 0).c_value == 1);   // only the root fits
  CHECK(c_oracle(t7, 7, 0).c_value == 1);   // height bound binds
  CHECK(c_oracle(t7, 2, 1).c_value == 2);
  CHECK(c_oracle(t7, 4, 2).c_value == 5);
  CHECK(c_oracle(t7, 4, 2).size == 4);

  COracleResult whole = c_oracle(t7, 100, 10);
  CHECK(whole.exhausted);
  CHECK(whole.c_value == 9);
  CHECK(whole.size == 7);
}

TEST_CASE("c_oracle maximality on random models") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    TreeModel m = TreeModel::random_full(seed, 14, 0.45);
    OracleReport rep = dfs_enumerate(m);
    std::vector<std::uint64_t> costs;
    for (const NodeHandle& u : rep.first_touch_order) costs.push_back(u.cost);
    std::sort(costs.begin(), costs.end());

    std::uint64_t n = 1 + seed % 24;
    int h = static_cast<int>(seed % 9);
    COracleResult r = c_oracle(m, n, h);
    CHECK(r.size <= n);
    CHECK(r.height <= h);
    if (!r.exhausted) {
      // T_c has exactly n nodes or exactly height h
      CHECK((r.size == n || r.height == h));
      // the next larger cost violates a bound
      auto it = std::upper_bound(costs.begin(), costs.end(), r.c_value);
      REQUIRE(it != costs.end());
      std::uint64_t size2 = 0;
      int height2 = 0;
      for (const NodeHandle& u : rep.first_touch_order)
        if (u.cost <= *it) {
          ++size2;
          height2 = std::max(height2, static_cast<int>(u.depth));
        }
      CHECK((size2 > n || height2 > h));
    }
  }
}

TEST_CASE("kth smallest cost") {
  TreeModel t7 = TreeModel::fixture(FixtureId::T7);
  CHECK(kth_smallest_cost(t7, 1) == 1);   // the root, by heap order
  CHECK(kth_smallest_cost(t7, 4) == 5);
  CHECK(kth_smallest_cost(t7, 7) == 9);   // the maximum
  CHECK_THROWS_AS(kth_smallest_cost(t7, 8), std::out_of_range);
  CHECK_THROWS_AS(kth_smallest_cost(t7, 0), std::out_of_range);
}

TEST_CASE("best-first minimum leaf") {
  TreeModel t7 = TreeModel::fixture(FixtureId::T7);
  MinLeaf ml = best_first_min_leaf(t7);
  CHECK(ml.cost == 3);
  CHECK(path_string(ml.leaf) == "LL");

  CHECK(best_first_min_leaf(TreeModel::fixture(FixtureId::T3)).cost == 7);

  // agreement with an exhaustive leaf scan
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    TreeModel m = TreeModel::random_full(seed, 16, 0.44);
    OracleReport rep = dfs_enumerate(m);
    std::uint64_t best = ~0ull;
    for (const NodeHandle& u : rep.leaves) best = std::min(best, u.cost);
    CHECK(best_first_min_leaf(m).cost == best);
  }
}
