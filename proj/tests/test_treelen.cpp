#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "iwdg/error.hpp"
#include "iwdg/treelen.hpp"

using namespace iwdg;

namespace {

// Smallest connected vertex set of the lattice inside the bounding box that
// contains all terminals, by exhaustive subset search; tree length = size - 1.
// A minimal rectilinear Steiner tree can always be projected into the box.
int brute_force_steiner(const std::vector<Site>& terms) {
  const int d = terms[0].dim();
  Site lo = terms[0], hi = terms[0];
  for (const Site& t : terms)
    for (int k = 0; k < d; ++k) lo[k] = std::min(lo[k], t[k]), hi[k] = std::max(hi[k], t[k]);
  const Box box(lo, hi);
  const std::size_t n = box.size();
  if (n > 20) throw std::logic_error("oracle box too large");
  std::uint32_t must = 0;
  for (const Site& t : terms) must |= 1U << box.index_of(t);
  const BoxAdjacency adj(box);
  int best = std::numeric_limits<int>::max();
  for (std::uint32_t set = 0; set < (1U << n); ++set) {
    if ((set & must) != must) continue;
    const int size = std::popcount(set);
    if (size - 1 >= best) continue;
    // connectivity by BFS from the lowest member
    const std::uint32_t start = static_cast<std::uint32_t>(std::countr_zero(set));
    std::uint32_t seen = 1U << start;
    std::vector<std::uint32_t> stack{start};
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (auto j : adj.neighbors(i)) {
        if (((set >> j) & 1U) && !((seen >> j) & 1U)) {
          seen |= 1U << j;
          stack.push_back(j);
        }
      }
    }
    if (seen == set) best = size - 1;
  }
  return best;
}

// Minimum over all labelled trees via Pruefer sequences.
int brute_force_mst(const std::vector<Site>& t) {
  const std::size_t n = t.size();
  if (n == 1) return 0;
  if (n == 2) return l1_distance(t[0], t[1]);
  int best = std::numeric_limits<int>::max();
  std::vector<std::size_t> seq(n - 2, 0);
  while (true) {
    std::vector<int> degree(n, 1);
    for (auto v : seq) ++degree[v];
    int total = 0;
    for (auto v : seq) {
      for (std::size_t leaf = 0; leaf < n; ++leaf) {
        if (degree[leaf] == 1) {
          total += l1_distance(t[leaf], t[v]);
          --degree[leaf];
          --degree[v];
          break;
        }
      }
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i)
      if (degree[i] == 1) rest.push_back(i);
    total += l1_distance(t[rest[0]], t[rest[1]]);
    best = std::min(best, total);
    std::size_t k = 0;
    while (k < seq.size() && ++seq[k] == n) seq[k++] = 0;
    if (k == seq.size()) break;
  }
  return best;
}

}  // namespace

TEST(TreeLength, SpanningExamples) {
  const std::vector<Site> one = {{3, -1}};
  EXPECT_EQ(mst_tree_length(one), 0);
  const std::vector<Site> two = {{0, 0}, {2, -3}};
  EXPECT_EQ(mst_tree_length(two), 5);
  const std::vector<Site> tri = {{0, 0}, {2, 0}, {1, 2}};
  EXPECT_EQ(mst_tree_length(tri), 5);
}

TEST(TreeLength, SteinerExamples) {
  const std::vector<Site> two = {{0, 0}, {2, -3}};
  EXPECT_EQ(steiner_tree_length(two), 5);
  const std::vector<Site> tri = {{0, 0}, {2, 0}, {1, 2}};
  EXPECT_EQ(steiner_tree_length(tri), 4);
  const std::vector<Site> line = {{0, 0}, {3, 0}, {7, 0}};
  EXPECT_EQ(steiner_tree_length(line), 7);
  const std::vector<Site> dup = {{1, 1}, {1, 1}, {4, 1}};
  EXPECT_EQ(steiner_tree_length(dup), 3);
}

TEST(TreeLength, TwoFactorExamples) {
  const std::vector<Site> two = {{0, 0}, {1, 1}};
  const auto c = check_two_factor(two);
  EXPECT_EQ(c.steiner, 2);
  EXPECT_EQ(c.spanning, 2);
  EXPECT_TRUE(c.ok);
  const std::vector<Site> tri = {{0, 0}, {2, 0}, {1, 2}};
  const auto t = check_two_factor(tri);
  EXPECT_EQ(t.steiner, 4);
  EXPECT_EQ(t.spanning, 5);
  EXPECT_TRUE(t.ok);
}

TEST(TreeLength, Errors) {
  EXPECT_THROW(mst_tree_length(std::vector<Site>{}), std::invalid_argument);
  const std::vector<Site> mixed = {{0, 0}, {0, 0, 0}};
  EXPECT_THROW(steiner_tree_length(mixed), std::invalid_argument);
  std::vector<Site> many;
  for (int i = 0; i < 9; ++i) many.push_back(Site{i, i * i % 5});
  EXPECT_THROW(steiner_tree_length(many), CapExceededError);
}

TEST(TreeLength, HananGrid) {
  const std::vector<Site> t = {{0, 0}, {2, 5}, {2, 1}};
  const auto g = hanan_grid(t);
  EXPECT_EQ(g.size(), 2U * 3U);
  EXPECT_NE(std::find(g.begin(), g.end(), Site{0, 5}), g.end());
}

TEST(TreeLength, RandomFourTerminalSetsAgainstOracles) {
  std::mt19937 gen(17);
  std::uniform_int_distribution<int> c(-5, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Site> t;
    for (int i = 0; i < 4; ++i) t.push_back(Site{c(gen), c(gen)});
    const auto check = check_two_factor(t);
    EXPECT_TRUE(check.ok);
    EXPECT_LE(check.steiner, check.spanning);
    EXPECT_LE(check.spanning, 2 * check.steiner);
    EXPECT_EQ(check.spanning, brute_force_mst(t));
  }
}

TEST(TreeLength, SteinerMatchesExhaustiveSearchInSmallBoxes) {
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> c2(0, 3), c3(0, 2), c1(0, 1);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<Site> t;
    const int k = 3 + trial % 3;
    for (int i = 0; i < k; ++i) t.push_back(Site{c2(gen), c2(gen)});
    EXPECT_EQ(steiner_tree_length(t), brute_force_steiner(t));
  }
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Site> t;
    for (int i = 0; i < 4; ++i) t.push_back(Site{c3(gen), c3(gen), c1(gen)});
    EXPECT_EQ(steiner_tree_length(t), brute_force_steiner(t));
  }
}

TEST(TreeLength, AddingTerminalNeverShortensSteinerTree) {
  std::mt19937 gen(8);
  std::uniform_int_distribution<int> c(-4, 4);
  for (int trial = 0; trial < 80; ++trial) {
    std::vector<Site> t;
    for (int i = 0; i < 3; ++i) t.push_back(Site{c(gen), c(gen), c(gen)});
    const int before = steiner_tree_length(t);
    t.push_back(Site{c(gen), c(gen), c(gen)});
    EXPECT_GE(steiner_tree_length(t), before);
  }
}

TEST(TreeLength, TranslationInvariance) {
  const std::vector<Site> t = {{0, 0}, {3, 1}, {1, 4}, {-2, 2}};
  std::vector<Site> s;
  for (const Site& x : t) s.push_back(x + Site{7, -3});
  EXPECT_EQ(steiner_tree_length(t), steiner_tree_length(s));
  EXPECT_EQ(mst_tree_length(t), mst_tree_length(s));
}
