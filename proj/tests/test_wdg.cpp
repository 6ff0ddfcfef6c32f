#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "iwdg/error.hpp"
#include "iwdg/gibbs_exact.hpp"
#include "iwdg/treelen.hpp"
#include "iwdg/wdg.hpp"

using namespace iwdg;

namespace {

// Maximum product of edge weights over all labelled trees (Pruefer decoding).
double brute_force_mwst(const std::vector<std::vector<double>>& w) {
  const std::size_t n = w.size();
  if (n == 1) return 1.0;
  if (n == 2) return w[0][1];
  double best = 0.0;
  std::vector<std::size_t> seq(n - 2, 0);
  while (true) {
    std::vector<int> degree(n, 1);
    for (auto v : seq) ++degree[v];
    double prod = 1.0;
    for (auto v : seq) {
      for (std::size_t leaf = 0; leaf < n; ++leaf) {
        if (degree[leaf] == 1) {
          prod *= w[leaf][v];
          --degree[leaf];
          --degree[v];
          break;
        }
      }
    }
    std::size_t a = n, b = n;
    for (std::size_t i = 0; i < n; ++i)
      if (degree[i] == 1) (a == n ? a : b) = i;
    prod *= w[a][b];
    best = std::max(best, prod);
    std::size_t k = 0;
    while (k < seq.size() && ++seq[k] == n) seq[k++] = 0;
    if (k == seq.size()) break;
  }
  return best;
}

}  // namespace

TEST(Mwst, Examples) {
  const WeightedGraph<int> g([](int a, int b) {
    if (a > b) std::swap(a, b);
    if (a == 0 && b == 1) return 0.5;
    if (a == 1 && b == 2) return 0.5;
    return 0.1;
  });
  const std::vector<int> single = {7};
  const auto t1 = max_weight_spanning_tree<int>(g, single);
  EXPECT_EQ(t1.weight, 1.0);
  EXPECT_TRUE(t1.edges.empty());
  const std::vector<int> tri = {0, 1, 2};
  const auto t3 = max_weight_spanning_tree<int>(g, tri);
  EXPECT_NEAR(t3.weight, 0.25, 1e-15);
  ASSERT_EQ(t3.edges.size(), 2U);
  for (auto [u, v] : t3.edges) EXPECT_FALSE(u + v == 2 && u != 1);  // no a-c edge
}

TEST(Mwst, DisconnectedAndDuplicates) {
  const WeightedGraph<int> g([](int a, int b) { return (a < 10) == (b < 10) ? 0.3 : 0.0; });
  const std::vector<int> split = {1, 2, 11};
  const auto t = max_weight_spanning_tree<int>(g, split);
  EXPECT_EQ(t.weight, 0.0);
  EXPECT_TRUE(t.edges.empty());
  const std::vector<int> dup = {1, 1, 2};
  EXPECT_NEAR(max_weight_spanning_tree<int>(g, dup).weight, 0.3, 1e-15);
  const WeightedGraph<int> bad([](int, int) { return 1.5; });
  const std::vector<int> two = {1, 2};
  EXPECT_THROW(max_weight_spanning_tree<int>(bad, two), std::domain_error);
  EXPECT_THROW(max_weight_spanning_tree<int>(g, std::vector<int>{}), std::invalid_argument);
}

TEST(Mwst, MatchesPrueferEnumeration) {
  std::mt19937 gen(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 5;  // up to 6 vertices
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) w[i][j] = w[j][i] = (trial % 7 == 0 && u(gen) < 0.3) ? 0.0 : u(gen);
    const WeightedGraph<int> g([&w](int a, int b) { return w[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; });
    std::vector<int> verts(n);
    for (std::size_t i = 0; i < n; ++i) verts[i] = static_cast<int>(i);
    const double expect = brute_force_mwst(w);
    EXPECT_NEAR(max_weight_spanning_tree<int>(g, verts).weight, expect, 1e-12 * std::max(1.0, expect));
  }
}

TEST(Mwst, IsingWeightIsEpsilonToHalfSpanningLength) {
  const IsingWdgSpec spec{0.3, 2};
  const auto g = spec.graph();
  std::mt19937 gen(4);
  std::uniform_int_distribution<int> c(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Site> b;
    const int k = 1 + trial % 5;
    for (int i = 0; i < k; ++i) b.push_back(Site{c(gen), c(gen)});
    const double m = max_weight_spanning_tree<Site>(g, b).weight;
    const int lp = mst_tree_length(b);
    EXPECT_NEAR(m, std::pow(0.3, lp / 2.0), 1e-12);
    const int lt = steiner_tree_length(b);
    EXPECT_LE(std::pow(0.3, lt), m * (1 + 1e-12));
    EXPECT_LE(m, std::pow(0.3, lt / 2.0) * (1 + 1e-12));
  }
}

TEST(PowerGraph, Weights) {
  const IsingWdgSpec spec{0.25, 2};
  const auto g = spec.graph();
  const auto g1 = power_graph(g, 1);
  const Site a{0, 0}, b{2, 1}, c{5, 5};
  EXPECT_DOUBLE_EQ(g1.weight({a}, {b}), g.weight(a, b));
  const auto g3 = power_graph(g, 3);
  EXPECT_EQ(g3.weight({a}, {a, b}), 1.0);
  EXPECT_DOUBLE_EQ(g3.weight({a, c}, {b}), std::pow(0.25, 3 / 2.0));
  EXPECT_THROW(g1.weight({a, b}, {c}), std::invalid_argument);
  EXPECT_THROW(power_graph(g, 0), std::invalid_argument);
}

TEST(WeightedDegree, GeometricSeries) {
  const IsingWdgSpec spec{0.25, 1};
  const auto g = spec.graph();
  EXPECT_EQ(weighted_degree<Site>(g, Site{0}, std::vector<Site>{{0}}), 0.0);
  for (int n : {1, 4, 16, 32}) {
    const auto sites = Box::centered(n, 1).sites();
    const double centre = weighted_degree<Site>(g, Site{0}, sites);
    EXPECT_NEAR(centre, 2 * (1 - std::pow(0.5, n)), 1e-12);
    EXPECT_LT(max_weighted_degree_plus_one(g, sites), 1 + 2.0);
  }
}

TEST(WeightedDegree, BoundedIndependentOfBoxSize) {
  const IsingWdgSpec spec{0.1, 2};
  const auto g = spec.graph();
  // sum over Z^2 of eps^{|x|/2}: (1 + q)^2 / (1 - q)^2 with q = sqrt(eps)
  const double q = std::sqrt(0.1);
  const double limit = std::pow((1 + q) / (1 - q), 2);
  double prev = 0;
  for (int n : {2, 4, 8, 16}) {
    const double delta = max_weighted_degree_plus_one(g, Box::centered(n, 2).sites());
    EXPECT_GE(delta, prev);
    EXPECT_LE(delta, limit + 1e-9);
    prev = delta;
  }
}

TEST(IsingSpec, Validation) {
  EXPECT_THROW((IsingWdgSpec{0.0, 2}.validate()), std::invalid_argument);
  EXPECT_THROW((IsingWdgSpec{1.0, 2}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((IsingWdgSpec{0.5, 3}.validate()));
  const auto sg = signed_graph(IsingWdgSpec{0.5, 2});
  EXPECT_DOUBLE_EQ(sg.weight({Site{0, 0}, Sign::Plus}, {Site{0, 2}, Sign::Minus}), 0.5);
  EXPECT_EQ(sg.weight({Site{0, 0}, Sign::Plus}, {Site{0, 0}, Sign::Plus}), 1.0);
}

TEST(EpsilonFit, RecoversGeometricDecay) {
  CumulantTable t(CumulantTable::Provenance::Exact);
  for (int x = 1; x <= 5; ++x) t.insert({{0, 0}, {x, 0}}, 0.7 * std::pow(0.2, x));
  t.insert({{0, 0}, {1, 1}}, 0.01);  // below the envelope at distance 2
  t.insert({{0, 0}, {0, 0}}, 0.9);   // diagonal ignored
  const auto fit = fit_epsilon_from_pairs(t);
  EXPECT_NEAR(fit.epsilon, 0.2, 1e-12);
  EXPECT_NEAR(std::exp(fit.intercept), 0.7, 1e-12);
  EXPECT_EQ(fit.envelope.size(), 5U);
  CumulantTable flat(CumulantTable::Provenance::Exact);
  flat.insert({{0, 0}, {1, 0}}, 0.1);
  EXPECT_THROW(fit_epsilon_from_pairs(flat), UndefinedQuantityError);
}

namespace {

CumulantTable exact_table(const Box& box, const IsingParams& p, int r_max) {
  const ExactMomentTable m(box, p);
  CumulantTable t(CumulantTable::Provenance::Exact);
  for (const auto& key : site_combinations(box, r_max, true)) t.insert(key, m.cumulant(key));
  return t;
}

}  // namespace

TEST(WdgInequality, IndependentSpinsNeedNoConstant) {
  const Box box = Box::from_extents({3, 3});
  const ExactMomentTable m(box, IsingParams{2, 0.0, 0.4, BoundaryCondition::Free});
  CumulantTable t(CumulantTable::Provenance::Exact);
  for (const auto& key : site_combinations(box, 3, false)) t.insert(key, m.cumulant(key));
  const auto rep = check_wdg_inequality(t, IsingWdgSpec{0.3, 2}.graph(), 3);
  ASSERT_EQ(rep.orders.size(), 3U);
  EXPECT_GT(rep.orders[0].c_r, 0.0);
  EXPECT_NEAR(rep.orders[1].c_r, 0.0, 1e-14);
  EXPECT_NEAR(rep.orders[2].c_r, 0.0, 1e-14);
}

TEST(WdgInequality, DiagonalAndWorstCase) {
  const Box box = Box::from_extents({2, 2});
  const IsingParams p{2, 0.3, 0.2, BoundaryCondition::Plus};
  const auto t = exact_table(box, p, 2);
  const auto g = IsingWdgSpec{0.3, 2}.graph();
  const auto rep = check_wdg_inequality(t, g, 2, 4);
  const auto& o2 = rep.orders[1];
  // C_2 is the largest kappa / M over all order-2 entries, including the diagonal
  double expect = 0;
  for (const auto& [key, e] : t.entries()) {
    if (key.size() != 2) continue;
    expect = std::max(expect, std::abs(e.value) / max_weight_spanning_tree<Site>(g, key).weight);
  }
  EXPECT_NEAR(o2.c_r, expect, 1e-14);
  EXPECT_NEAR(std::abs(t.at(o2.worst).value) / max_weight_spanning_tree<Site>(g, o2.worst).weight, o2.c_r, 1e-14);
  std::size_t total = 0;
  for (auto c : o2.margin_histogram) total += c;
  EXPECT_EQ(total, o2.tested);
  EXPECT_GE(o2.margin_histogram[0], 1U);
  EXPECT_THROW(check_wdg_inequality(t, g, 3), std::out_of_range);
}

TEST(WdgInequality, ConstantsStableFrom3x3To4x4) {
  const IsingParams p{2, 0.2, 0.0, BoundaryCondition::Free};
  const auto t4 = exact_table(Box::from_extents({4, 4}), p, 4);
  const auto t3 = exact_table(Box::from_extents({3, 3}), p, 4);
  const auto fit = fit_epsilon_from_pairs(t4);
  EXPECT_GT(fit.epsilon, 0.0);
  EXPECT_LT(fit.epsilon, 1.0);
  const auto g = IsingWdgSpec{fit.epsilon, 2}.graph();
  const auto r3 = check_wdg_inequality(t3, g, 4);
  const auto r4 = check_wdg_inequality(t4, g, 4);
  for (int r = 0; r < 4; ++r) {
    EXPECT_TRUE(std::isfinite(r4.orders[r].c_r));
    EXPECT_LT(r4.orders[r].c_r, 2.0 * r3.orders[r].c_r + 1e-12) << r + 1;
  }
}
