#include <gtest/gtest.h>

#include <random>
#include <set>
#include <stdexcept>

#include "iwdg/lattice.hpp"

using namespace iwdg;

TEST(Lattice, L1DistanceExamples) {
  EXPECT_EQ(l1_distance({0, 0}, {3, 4}), 7);
  EXPECT_EQ(l1_distance({1, 1}, {1, 1}), 0);
  EXPECT_EQ(l1_distance({-2, 0, 5}, {0, 0, 0}), 7);
  EXPECT_THROW(l1_distance({0, 0}, {0, 0, 0}), std::invalid_argument);
}

TEST(Lattice, MetricAxioms) {
  std::mt19937 gen(3);
  std::uniform_int_distribution<int> c(-5, 5);
  for (int t = 0; t < 500; ++t) {
    const Site a{c(gen), c(gen), c(gen)}, b{c(gen), c(gen), c(gen)}, m{c(gen), c(gen), c(gen)};
    EXPECT_LE(l1_distance(a, b), l1_distance(a, m) + l1_distance(m, b));
    EXPECT_EQ(l1_distance(a, b), l1_distance(b, a));
    EXPECT_EQ(l1_distance(a, b) == 0, a == b);
  }
}

TEST(Lattice, BoxBasics) {
  const Box b = Box::centered(2, 2);
  EXPECT_EQ(b.size(), 25u);
  EXPECT_EQ(Box::centered(3, 3).size(), 343u);
  const auto sites = b.sites();
  for (std::size_t i = 0; i < sites.size(); ++i) {
    EXPECT_EQ(b.index_of(sites[i]), i);
    EXPECT_EQ(b.site_at(i), sites[i]);
    if (i) EXPECT_LT(sites[i - 1], sites[i]);  // lexicographic
  }
  EXPECT_THROW(Box(Site{1, 0}, Site{0, 0}), std::invalid_argument);
}

TEST(Lattice, InteriorEdgeCounts) {
  EXPECT_EQ(interior_edges(Box::centered(1, 1)).size(), 2u);
  EXPECT_EQ(interior_edges(Box::from_extents({2, 2})).size(), 4u);
  EXPECT_EQ(interior_edges(Box::centered(1, 2)).size(), 12u);
  for (int n = 0; n <= 4; ++n) {
    EXPECT_EQ(interior_edges(Box::centered(n, 2)).size(), static_cast<std::size_t>(2 * (2 * n + 1) * 2 * n));
  }
}

TEST(Lattice, BoundaryEdgeCounts) {
  EXPECT_EQ(boundary_edges(Box::centered(0, 2)).size(), 4u);
  EXPECT_EQ(boundary_edges(Box::centered(0, 1)).size(), 2u);
  EXPECT_EQ(boundary_edges(Box::from_extents({2, 2})).size(), 12u);
  EXPECT_EQ(crossing_edges(Box::from_extents({2, 2})).size(), 8u);
}

TEST(Lattice, EdgesAreValidAndDistinct) {
  for (int d = 1; d <= 3; ++d) {
    for (int n = 0; n <= 3; ++n) {
      const Box box = Box::centered(n, d);
      const EdgeSet in = interior_edges(box), cross = crossing_edges(box), all = boundary_edges(box);
      EXPECT_EQ(in.size() + cross.size(), all.size());
      std::set<Edge> uniq(all.begin(), all.end());
      EXPECT_EQ(uniq.size(), all.size());
      for (const Edge& e : all) {
        EXPECT_EQ(l1_distance(e.a, e.b), 1);
        EXPECT_TRUE(box.contains(e.a) || box.contains(e.b));
      }
      // crossing count = sum over sites of outward degree
      std::size_t outward = 0;
      for (const Site& s : box.sites()) {
        for (int k = 0; k < d; ++k) {
          for (int sg : {-1, 1}) outward += !box.contains(s + Site::unit(d, k, sg));
        }
      }
      EXPECT_EQ(cross.size(), outward);
    }
  }
}

TEST(Lattice, SphereBoundExamples) {
  EXPECT_EQ(sphere_count_upper_bound(2, 1), 8u);
  EXPECT_EQ(sphere_count_upper_bound(1, 3), 2u);
  EXPECT_EQ(sphere_count_upper_bound(3, 2), 48u);
  EXPECT_THROW(sphere_count_upper_bound(0, 1), std::invalid_argument);
  EXPECT_THROW(sphere_count_upper_bound(4, 2000000000), std::overflow_error);
}

TEST(Lattice, SphereBoundDominatesExactCount) {
  for (int d = 1; d <= 3; ++d) {
    const Box big = Box::centered(10, d);
    std::vector<std::uint64_t> exact(11, 0);
    for (const Site& s : big.sites()) {
      const int r = l1_distance(s, Site::origin(d));
      if (r <= 10) ++exact[static_cast<std::size_t>(r)];
    }
    EXPECT_EQ(exact[1], static_cast<std::uint64_t>(2 * d));
    if (d == 3) EXPECT_EQ(exact[2], 18u);
    for (int y = 1; y <= 10; ++y) EXPECT_GE(sphere_count_upper_bound(d, y), exact[static_cast<std::size_t>(y)]);
  }
}

TEST(Lattice, AdjacencyMatchesEdgeSets) {
  const Box box = Box::from_extents({3, 4});
  const BoxAdjacency adj(box);
  EXPECT_EQ(adj.interior_edge_count(), interior_edges(box).size());
  EXPECT_EQ(adj.crossing_edge_count(), crossing_edges(box).size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    EXPECT_EQ(adj.neighbors(i).size() + static_cast<std::size_t>(adj.exterior_degree(i)), 4u);
  }
}
