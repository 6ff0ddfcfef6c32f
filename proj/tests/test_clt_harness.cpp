#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "iwdg/clt_harness.hpp"
#include "iwdg/error.hpp"
#include "oracle.hpp"

using namespace iwdg;

TEST(Moments, KnownSample) {
  const std::vector<double> x = {1, 2, 3, 4, 10};
  const auto m = sample_moments(x);
  EXPECT_DOUBLE_EQ(m.mean, 4.0);
  EXPECT_DOUBLE_EQ(m.variance, 12.5);
  // central moments m2 = 10, m3 = 36, m4 = 278.8 (biased)
  EXPECT_NEAR(m.skewness, 36 / std::pow(10.0, 1.5), 1e-12);
  EXPECT_NEAR(m.excess_kurtosis, 278.8 / 100 - 3, 1e-12);
}

TEST(Moments, NormalCdfAndKolmogorov) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_cdf(-3.0), 0.0013498980316301, 1e-13);
  // Q_KS(1.0) = 0.26999967...; with Stephens' factor the argument is (sqrt(n) + 0.12 + 0.11/sqrt(n)) d.
  const std::size_t n = 100;
  const double d = 1.0 / (10.0 + 0.12 + 0.011);
  EXPECT_NEAR(kolmogorov_pvalue(d, n), 0.2699996716735, 1e-9);
  EXPECT_NEAR(kolmogorov_pvalue(0.0, n), 1.0, 1e-15);
  EXPECT_LT(kolmogorov_pvalue(0.5, n), 1e-15);
}

TEST(Moments, KsSeparatesNormalFromSkewed) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(2.0, 3.0);
  std::exponential_distribution<double> ed(1.0);
  std::vector<double> a(2000), b(2000);
  for (auto& v : a) v = nd(gen);
  for (auto& v : b) v = ed(gen);
  EXPECT_GT(ks_normal(a).p_value, 0.01);
  EXPECT_LT(ks_normal(b).p_value, 1e-6);
  EXPECT_GT(ks_normal(b).statistic, ks_normal(a).statistic);
}

TEST(Moments, KsOnLatticeData) {
  std::mt19937_64 gen(5);
  std::binomial_distribution<int> bin(60, 0.5);
  std::poisson_distribution<int> poi(3.0);
  std::vector<double> counts(20000), spins(20000), shifted(20000), skewed(20000);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] = bin(gen);
    spins[i] = 2.0 * bin(gen) - 60.0;  // lattice step 2
    shifted[i] = counts[i] + 0.25;     // same steps, off the integers
    skewed[i] = poi(gen);
  }
  EXPECT_GT(ks_normal(counts).p_value, 0.01);
  EXPECT_GT(ks_normal(spins).p_value, 0.01);
  // Against the continuous normal the steps of width 1/4 sd are rejected.
  EXPECT_LT(ks_normal(shifted).p_value, 1e-6);
  EXPECT_LT(ks_normal(skewed).p_value, 1e-6);
}

TEST(LinearFit, ExactAndWeighted) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
  const auto f = linear_fit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-13);
  EXPECT_NEAR(f.slope_se, 0.0, 1e-12);
  const std::vector<double> se = {0.1, 0.1, 0.1, 0.1};
  const auto w = linear_fit(x, y, se);
  EXPECT_NEAR(w.slope, 2.0, 1e-14);
  // known variances: se(slope) = sigma / sqrt(sum (x - mean)^2)
  EXPECT_NEAR(w.slope_se, 0.1 / std::sqrt(5.0), 1e-14);
  EXPECT_NEAR(w.ci_high - w.slope, 1.96 * w.slope_se, 1e-14);
  const std::vector<double> noisy = {3.1, 4.8, 7.3, 8.9};
  const auto g = linear_fit(x, noisy);
  EXPECT_LT(g.ci_low, g.slope);
  EXPECT_GT(g.ci_high, g.slope);
}

TEST(Statistics, EvaluateMatchesCounts) {
  std::mt19937 gen(1);
  const Box box = Box::centered(3, 2);
  std::vector<std::int8_t> s(box.size());
  for (auto& v : s) v = (gen() & 1U) ? 1 : -1;
  const SpinConfiguration cfg(box, BoundaryCondition::Plus, s);
  EXPECT_EQ(evaluate_statistic(Magnetization{}, cfg), static_cast<double>(cfg.magnetization()));
  const auto iso = LocalPattern::isolated_plus(2);
  EXPECT_EQ(evaluate_statistic(iso, cfg), static_cast<double>(count_local(cfg, iso, box).value));
  const auto chain = GlobalPattern::chain(2, 2);
  EXPECT_EQ(evaluate_statistic(chain, cfg), static_cast<double>(count_global(cfg, chain, box).value));
  EXPECT_EQ(statistic_name(Magnetization{}), "magnetization");
}

TEST(Replicas, DeterministicIndependentAndCorrectAtInfiniteTemperature) {
  ReplicaOptions o;
  o.replicas = 400;
  o.burn_in = 5;
  const IsingParams p{2, 0.0, 0.0, BoundaryCondition::Free};
  const auto a = simulate_replicas(p, 3, o);
  EXPECT_EQ(a, simulate_replicas(p, 3, o));
  o.workers = 3;
  EXPECT_EQ(a, simulate_replicas(p, 3, o));
  std::vector<double> m;
  for (std::size_t k = 0; k < a.size(); ++k) m.push_back(static_cast<double>(a.configuration(k).magnetization()));
  const auto mom = sample_moments(m);
  // Var(S_n) = |Lambda_n| = 49 at beta = 0
  EXPECT_NEAR(mom.variance / 49.0, 1.0, 0.2);
  EXPECT_NEAR(mom.mean, 0.0, 4 * std::sqrt(49.0 / 400));
}

TEST(Normality, SummarizeAndExperimentValidation) {
  std::vector<double> same(300, 2.0);
  EXPECT_THROW(summarize("x", 4, 81, same), UndefinedQuantityError);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd;
  std::vector<double> v(300);
  for (auto& x : v) x = nd(gen);
  const auto row = summarize("x", 4, 81, v);
  EXPECT_TRUE(row.assessed);
  EXPECT_TRUE(row.normal);
  EXPECT_NEAR(row.variance_per_site, row.variance / 81, 1e-15);
  v.resize(100);
  EXPECT_FALSE(summarize("x", 4, 81, v).assessed);

  CltExperiment e;
  e.params = IsingParams{2, 0.2, 0.0, BoundaryCondition::Free};
  e.sizes = {4, 4};
  EXPECT_THROW(e.validate(), std::invalid_argument);
  e.sizes = {2, 4};
  e.replicas.replicas = 5;
  EXPECT_THROW(e.validate(), std::invalid_argument);
  e.replicas.replicas = 50;
  e.statistics = {LocalPattern::isolated_plus(3)};
  EXPECT_THROW(e.validate(), std::invalid_argument);
}

TEST(Normality, SmallExperimentRuns) {
  CltExperiment e;
  e.params = IsingParams{2, 0.0, 0.0, BoundaryCondition::Free};
  e.sizes = {2, 4};
  e.replicas.replicas = 250;
  e.replicas.burn_in = 2;
  e.statistics = {Magnetization{}, LocalPattern::single_site(2, Sign::Plus)};
  const auto rep = run_clt_experiment(e);
  ASSERT_EQ(rep.rows.size(), 4U);
  const auto& r = rep.find("magnetization", 4);
  EXPECT_EQ(r.sites, 81U);
  EXPECT_EQ(r.values.size(), 250U);
  EXPECT_TRUE(r.assessed);
  EXPECT_NEAR(r.variance_per_site, 1.0, 0.25);
  EXPECT_THROW(rep.find("magnetization", 3), std::out_of_range);
}

TEST(VarianceSeries, InfiniteTemperatureIsOne) {
  const IsingParams p{2, 0.0, 0.0, BoundaryCondition::Free};
  SeriesOptions o;
  o.source = CovarianceSource::Exact;
  o.exact_box = Box::centered(2, 2);
  o.radius = 3;
  const auto e = variance_series_estimate(p, Magnetization{}, o);
  EXPECT_NEAR(e.v2, 1.0, 1e-12);
  EXPECT_EQ(e.tail_bound, 0.0);
  SeriesOptions mc;
  mc.radius = 3;
  mc.margin = 2;
  mc.samples = 400;
  mc.thinning = 1;
  mc.burn_in = 10;
  const auto m = variance_series_estimate(p, Magnetization{}, mc);
  EXPECT_NEAR(m.v2, 1.0, 5 * m.std_error + 0.02);
}

TEST(VarianceSeries, OneDimensionalChainMatchesClosedForm) {
  // Free chain at h = 0: <s_0 s_r> = tanh(beta)^r exactly.
  const double beta = 0.2, t = std::tanh(beta);
  const IsingParams p{1, beta, 0.0, BoundaryCondition::Free};
  SeriesOptions o;
  o.source = CovarianceSource::Exact;
  o.exact_box = Box::centered(12, 1);
  for (int r : {4, 8, 12}) {
    o.radius = r;
    const auto e = variance_series_estimate(p, Magnetization{}, o);
    EXPECT_NEAR(e.v2, 1 + 2 * t * (1 - std::pow(t, r)) / (1 - t), 1e-12) << r;
    EXPECT_NEAR(e.epsilon, t * t, 1e-9);
    // the tail bound covers the omitted part of the infinite series
    const double infinite = (1 + t) / (1 - t);
    EXPECT_GE(e.tail_bound, infinite - e.v2 - 1e-12);
  }
}

TEST(VarianceSeries, TwoDimensionalPositiveAndAboveOne) {
  const IsingParams p{2, 0.2, 0.0, BoundaryCondition::Free};
  SeriesOptions o;
  o.source = CovarianceSource::Exact;
  o.exact_box = Box::from_extents({5, 4});
  o.radius = 4;
  const auto e = variance_series_estimate(p, Magnetization{}, o);
  EXPECT_GT(e.v2, 1.0);
  EXPECT_GT(e.epsilon, 0.0);
  EXPECT_LT(e.epsilon, 1.0);
  EXPECT_THROW(variance_series_estimate(p, GlobalPattern::chain(2, 2), o), std::invalid_argument);
  EXPECT_THROW(variance_series_estimate(p, LocalPattern::isolated_plus(2), o), std::invalid_argument);
}

TEST(Criterion, ConditionsOnSyntheticSequences) {
  // magnetization setup: N = a^2 = |Lambda_n|, Delta bounded
  std::vector<double> N, delta, a, v;
  for (int n : {8, 16, 32}) {
    const double sites = std::pow(2 * n + 1, 2);
    N.push_back(sites);
    delta.push_back(3.0);
    a.push_back(std::sqrt(sites));
    v.push_back(1.5 * sites * (1 - 1.0 / n));
  }
  const auto audit = check_criterion_conditions(N, delta, a, 1.0, 3.0, v, 1.5, 0.1);
  EXPECT_TRUE(audit.cond1_converging);
  EXPECT_TRUE(audit.cond2_holds);
  EXPECT_TRUE(audit.cond3_decreasing);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(audit.cond3_ratio[i], std::pow(N[i] / 3.0, 1.0 / 3) * 3.0 / a[i], 1e-12);
  }
  EXPECT_THROW(check_criterion_conditions(N, delta, a, 1.0, 2.0, v), std::invalid_argument);
  const auto no_target = check_criterion_conditions(N, delta, a, 1.0, 3.0, v);
  EXPECT_TRUE(no_target.cond1_converging);
  std::vector<double> bad_a = {1, 1, 1};
  EXPECT_FALSE(check_criterion_conditions(N, delta, bad_a, 1.0, 3.0, v).cond3_decreasing);
}

TEST(Criterion, DegreeBoundDominatesMeasuredDegree) {
  const IsingWdgSpec spec{0.05, 2};
  const double bound = ising_degree_bound(spec);
  const auto g = spec.graph();
  for (int n : {2, 6, 10}) {
    EXPECT_LE(max_weighted_degree_plus_one(g, Box::centered(n, 2).sites()), bound);
  }
  const double q = std::sqrt(0.05);
  EXPECT_GE(bound, std::pow((1 + q) / (1 - q), 2) - 1e-12);
}

TEST(GlobalPatterns, ExactSeparatedOccurrenceCovariance) {
  // X = {x0, x1}, Y = {x0, y1}: at beta = 0 the covariance is 1/8 - 1/16.
  const Box strip = Box::from_extents({2, 9});
  const std::vector<Site> x = {{0, 0}, {1, 1}};
  std::vector<double> covs;
  for (int r : {2, 4, 6}) {
    const std::vector<Site> y = {{0, 0}, {1, 1 + r}};
    EXPECT_NEAR(exact_occurrence_covariance(strip, IsingParams{2, 0.0, 0.0, BoundaryCondition::Free}, x, y), 1.0 / 16,
                1e-14);
    const double c = exact_occurrence_covariance(strip, IsingParams{2, 0.2, 0.0, BoundaryCondition::Free}, x, y);
    EXPECT_GT(c, 0.0);
    covs.push_back(c);
  }
  // decreasing towards a positive limit
  EXPECT_GT(covs[0], covs[1]);
  EXPECT_GT(covs[1], covs[2]);
  EXPECT_LT(covs[1] - covs[2], covs[0] - covs[1]);
}

TEST(GlobalPatterns, SummandCovariancesNonnegativeAtInfiniteTemperature) {
  ReplicaOptions o;
  o.replicas = 300;
  o.burn_in = 2;
  const auto batch = simulate_replicas(IsingParams{2, 0.0, 0.0, BoundaryCondition::Free}, 4, o);
  const auto check = summand_covariance_check(batch, GlobalPattern::chain(2, 2), 40, 9);
  EXPECT_EQ(check.pairs, 40U);
  EXPECT_LE(check.violations, 1U);
}
