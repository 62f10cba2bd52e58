#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "vcubeps/rng.hpp"
#include "vcubeps/topology.hpp"

using namespace vcubeps;
using namespace vcubeps::topology;

namespace {

// Reference implementation straight from the recursive definition
// c_{i,s} = i^2^(s-1) || c_{i^2^(s-1),k}, k = 1..s-1. The production code
// uses the closed form; this one is the test oracle.
std::vector<NodeId> cluster_members_recursive(NodeId i, int s) {
  const NodeId neighbor = i ^ (NodeId{1} << (s - 1));
  std::vector<NodeId> out{neighbor};
  for (int k = 1; k < s; ++k) {
    auto tail = cluster_members_recursive(neighbor, k);
    out.insert(out.end(), tail.begin(), tail.end());
  }
  return out;
}

}  // namespace

TEST_CASE("cluster table for 8 nodes matches the published table") {
  auto cfg = HypercubeConfig::from_dimension(3);
  // Complete c_{i,s} table, N = 8.
  const std::map<std::pair<NodeId, int>, std::vector<NodeId>> expected = {
      {{0, 1}, {1}},          {{1, 1}, {0}},          {{2, 1}, {3}},
      {{3, 1}, {2}},          {{4, 1}, {5}},          {{5, 1}, {4}},
      {{6, 1}, {7}},          {{7, 1}, {6}},          {{0, 2}, {2, 3}},
      {{1, 2}, {3, 2}},       {{2, 2}, {0, 1}},       {{3, 2}, {1, 0}},
      {{4, 2}, {6, 7}},       {{5, 2}, {7, 6}},       {{6, 2}, {4, 5}},
      {{7, 2}, {5, 4}},       {{0, 3}, {4, 5, 6, 7}}, {{1, 3}, {5, 4, 7, 6}},
      {{2, 3}, {6, 7, 4, 5}}, {{3, 3}, {7, 6, 5, 4}}, {{4, 3}, {0, 1, 2, 3}},
      {{5, 3}, {1, 0, 3, 2}}, {{6, 3}, {2, 3, 0, 1}}, {{7, 3}, {3, 2, 1, 0}},
  };
  for (const auto& [key, want] : expected)
    CHECK(cluster_members(key.first, key.second, cfg) == want);
}

TEST_CASE("closed form agrees with the recursive definition up to d=8") {
  for (int d = 1; d <= 8; ++d) {
    auto cfg = HypercubeConfig::from_dimension(d);
    for (NodeId i = 0; i < cfg.size; ++i)
      for (int s = 1; s <= d; ++s)
        REQUIRE(cluster_members(i, s, cfg) == cluster_members_recursive(i, s));
  }
}

TEST_CASE("cluster partition, size law, symmetry, consistency (d <= 8)") {
  for (int d = 1; d <= 8; ++d) {
    auto cfg = HypercubeConfig::from_dimension(d);
    for (NodeId i = 0; i < cfg.size; ++i) {
      std::set<NodeId> seen;
      for (int s = 1; s <= d; ++s) {
        auto c = cluster_members(i, s, cfg);
        REQUIRE(c.size() == (std::size_t{1} << (s - 1)));
        REQUIRE(c.front() == (i ^ (NodeId{1} << (s - 1))));
        for (NodeId j : c) {
          REQUIRE(j != i);
          REQUIRE(seen.insert(j).second);  // pairwise disjoint
          REQUIRE(cluster_index(i, j, cfg) == s);
          REQUIRE(cluster_index(j, i, cfg) == s);  // xor symmetry
        }
      }
      REQUIRE(seen.size() == cfg.size - 1);  // union = all others
    }
  }
}

TEST_CASE("cluster_index examples") {
  auto cfg = HypercubeConfig::from_dimension(3);
  CHECK(cluster_index(0, 1, cfg) == 1);
  CHECK(cluster_index(0, 2, cfg) == 2);
  CHECK(cluster_index(0, 3, cfg) == 2);
  CHECK(cluster_index(0, 7, cfg) == 3);
  for (NodeId i = 0; i < 8; ++i) CHECK(cluster_index(i, i ^ 1u, cfg) == 1);
  CHECK_THROWS_AS(cluster_index(3, 3, cfg), ArgumentError);
  CHECK_THROWS_AS(cluster_members(0, 4, cfg), ArgumentError);
  CHECK_THROWS_AS(cluster_members(9, 1, cfg), ArgumentError);
}

TEST_CASE("children: wildcard and subscriber examples") {
  auto cfg = HypercubeConfig::from_dimension(3);
  CHECK(children_all(0, 3, cfg) == std::vector<NodeId>{1, 2, 4});
  CHECK(children_all(0, 2, cfg) == std::vector<NodeId>{1, 2});
  CHECK(children_all(4, 2, cfg) == std::vector<NodeId>{5, 6});
  CHECK(children_all(1, 0, cfg).empty());

  std::set<NodeId> t2 = {0, 2, 3, 5, 7};
  auto is_sub = [&t2](NodeId n) { return t2.count(n) > 0; };
  CHECK(children(2, is_sub, 3, cfg) == std::vector<NodeId>{3, 0, 7});
  CHECK(children(7, is_sub, 2, cfg) == std::vector<NodeId>{5});

  std::set<NodeId> t1 = {0, 3, 4};
  auto is_t1 = [&t1](NodeId n) { return t1.count(n) > 0; };
  CHECK(children(0, is_t1, 3, cfg) == std::vector<NodeId>{3, 4});
  CHECK(children(4, is_t1, 2, cfg).empty());
  CHECK(children(0, is_t1, 0, cfg).empty());
}

TEST_CASE("sub_vcube examples and brute-force prefix classes (d <= 4)") {
  auto cfg = HypercubeConfig::from_dimension(3);
  CHECK(sub_vcube(0, 3, cfg) == std::vector<NodeId>{0, 1, 2, 3});
  CHECK(sub_vcube(1, 3, cfg) == std::vector<NodeId>{0, 1, 2, 3});
  CHECK(sub_vcube(5, 3, cfg) == std::vector<NodeId>{4, 5, 6, 7});
  CHECK(sub_vcube(6, 3, cfg) == std::vector<NodeId>{4, 5, 6, 7});

  for (int d = 1; d <= 4; ++d) {
    auto c = HypercubeConfig::from_dimension(d);
    for (NodeId i = 0; i < c.size; ++i) {
      for (int k = 1; k <= d; ++k) {
        std::vector<NodeId> expect;
        for (NodeId j = 0; j < c.size; ++j)
          if ((j >> (k - 1)) == (i >> (k - 1))) expect.push_back(j);
        REQUIRE(sub_vcube(i, k, c) == expect);
        REQUIRE(expect.size() == (std::size_t{1} << (k - 1)));
      }
      REQUIRE(sub_vcube(i, 1, c) == std::vector<NodeId>{i});
    }
  }
}

namespace {

// Walk the broadcast tree rooted at r: r uses h = d, a child reached from
// parent p uses h = cluster_index(p, child) - 1.
void walk_tree(NodeId at, int h, const MemberPred& pred,
               const HypercubeConfig& cfg, std::vector<NodeId>& order,
               std::size_t& edges, int depth, int& max_depth) {
  max_depth = std::max(max_depth, depth);
  for (NodeId c : children(at, pred, h, cfg)) {
    ++edges;
    order.push_back(c);
    walk_tree(c, cluster_index(at, c, cfg) - 1, pred, cfg, order, edges,
              depth + 1, max_depth);
  }
}

}  // namespace

TEST_CASE("tree property: full-membership spanning tree, any root, d <= 6") {
  for (int d = 1; d <= 6; ++d) {
    auto cfg = HypercubeConfig::from_dimension(d);
    for (NodeId r = 0; r < cfg.size; ++r) {
      std::vector<NodeId> reached{r};
      std::size_t edges = 0;
      int max_depth = 0;
      walk_tree(r, d, wildcard, cfg, reached, edges, 0, max_depth);
      REQUIRE(edges == cfg.size - 1);
      std::set<NodeId> uniq(reached.begin(), reached.end());
      REQUIRE(uniq.size() == cfg.size);  // spanning, no duplicates
      REQUIRE(max_depth <= d);
    }
  }
}

TEST_CASE("subscriber tree reaches every member exactly once (random M)") {
  RngStream rng(42, "topology-subscriber-tree");
  for (int d = 2; d <= 6; ++d) {
    auto cfg = HypercubeConfig::from_dimension(d);
    for (int trial = 0; trial < 40; ++trial) {
      const auto k = static_cast<std::uint32_t>(
          rng.uniform_int(1, static_cast<std::int64_t>(cfg.size)));
      auto ids = rng.sample_ids(cfg.size, k);
      std::set<NodeId> members(ids.begin(), ids.end());
      const NodeId root = ids[0];
      auto pred = [&members](NodeId n) { return members.count(n) > 0; };

      std::vector<NodeId> reached{root};
      std::size_t edges = 0;
      int max_depth = 0;
      walk_tree(root, d, pred, cfg, reached, edges, 0, max_depth);

      std::set<NodeId> uniq(reached.begin(), reached.end());
      REQUIRE(uniq.size() == reached.size());  // nobody visited twice
      // consistent membership known by all => every member reached and no
      // non-member appears anywhere in the tree
      for (NodeId m : members) REQUIRE(uniq.count(m) == 1);
      for (NodeId n : reached) REQUIRE(members.count(n) == 1);
    }
  }
}
