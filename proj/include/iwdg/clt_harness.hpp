#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iwdg/gibbs_exact.hpp"
#include "iwdg/lattice.hpp"
#include "iwdg/patterns.hpp"
#include "iwdg/sampler.hpp"
#include "iwdg/wdg.hpp"

namespace iwdg {

// ---- statistics utilities ---------------------------------------------------

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;  // m3 / m2^{3/2}
  double excess_kurtosis = 0.0;  // m4 / m2^2 - 3
};
SampleMoments sample_moments(std::span<const double> x);

double normal_cdf(double z);
// Asymptotic Kolmogorov survival function with Stephens' small-sample
// correction applied to the statistic.
double kolmogorov_pvalue(double d, std::size_t n);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
// Kolmogorov-Smirnov against the normal with the sample mean and variance.
// Integer-lattice data (counts, magnetizations) are compared with that normal
// discretised onto the lattice with a continuity correction; against the
// continuous normal the lattice steps alone reject once the replica count is
// large relative to the spread.
KsResult ks_normal(std::span<const double> x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0;   // 95% interval for the slope
  double ci_high = 0.0;
};
// Least squares; with `y_se` given, weights 1/se^2 and the slope error is
// taken from the known variances.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> y_se = {});

// ---- statistics of a configuration --------------------------------------------

struct Magnetization {
  bool operator==(const Magnetization&) const = default;
};
using Statistic = std::variant<Magnetization, LocalPattern, GlobalPattern>;

std::string statistic_name(const Statistic& s);
// S_n, S_{n,P} or S_{n,P~} over the configuration's box.
double evaluate_statistic(const Statistic& s, const SpinConfiguration& cfg);

// ---- replicas -------------------------------------------------------------------

struct ReplicaOptions {
  std::size_t replicas = 500;
  std::size_t burn_in = 1000;
  UpdateKind update = UpdateKind::SingleFlip;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

// One equilibrated configuration per independent chain on Lambda_n. Chain k
// uses seed + k on stream n.
SampleBatch simulate_replicas(const IsingParams& p, int n, const ReplicaOptions& opts);

struct NormalityThresholds {
  double max_abs_skewness = 0.15;
  double max_abs_excess_kurtosis = 0.3;
  double min_ks_pvalue = 0.01;
  std::size_t min_replicas = 200;
};

struct NormalityRow {
  std::string statistic;
  int n = 0;
  std::size_t sites = 0;
  std::size_t replicas = 0;
  double mean = 0.0;
  double variance = 0.0;
  double variance_per_site = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
  bool assessed = false;  // enough replicas for a verdict
  bool normal = false;
  std::vector<double> values;
};

// Throws UndefinedQuantityError when the values have zero variance.
NormalityRow summarize(std::string statistic, int n, std::size_t sites, std::vector<double> values,
                       const NormalityThresholds& t = {});

struct CltExperiment {
  IsingParams params;
  std::vector<Statistic> statistics = {Magnetization{}};
  std::vector<int> sizes;
  ReplicaOptions replicas;
  NormalityThresholds thresholds;

  void validate() const;
};

struct NormalityReport {
  std::vector<NormalityRow> rows;
  const NormalityRow& find(const std::string& statistic, int n) const;
};

NormalityReport run_clt_experiment(const CltExperiment& exp);

// ---- variance series ---------------------------------------------------------------

enum class CovarianceSource { Exact, MonteCarlo };

struct SeriesOptions {
  int radius = 12;
  CovarianceSource source = CovarianceSource::MonteCarlo;
  // Exact: covariances with the centre of this box (magnetization only).
  // Monte Carlo: a box of radius 2R + margin, averaged over a central region.
  Box exact_box = Box::centered(1, 2);
  int margin = 6;
  std::size_t samples = 4000;
  std::size_t thinning = 5;
  std::size_t burn_in = 1000;
  std::uint64_t seed = 7;
  unsigned workers = 0;
};

struct SeriesEstimate {
  double v2 = 0.0;
  double std_error = 0.0;  // 0 for the exact source
  int radius = 0;
  std::vector<double> shell_sums;  // sum of covariances at L1 distance r
  std::vector<double> shell_se;
  // Shell sums fitted as C q^r; epsilon = q^2 so the tail reads
  // C epsilon^{R/2} / (1 - epsilon^{1/2}).
  double shell_prefactor = 0.0;
  double epsilon = 0.0;
  double tail_bound = 0.0;
};

// Truncated sum of <f_0; f_i> over |i| <= R, with f the spin (magnetization)
// or the occurrence indicator of a local pattern. Throws
// UndefinedQuantityError when the fitted shell sums do not decay.
SeriesEstimate variance_series_estimate(const IsingParams& p, const Statistic& s, const SeriesOptions& opts = {});

// ---- normality criterion audit ---------------------------------------------------------

struct CriterionAudit {
  std::vector<double> cond1_ratio;  // v_n^2 / a_n^2
  std::vector<double> cond2_ratio;  // a_n^2 / (N_n Delta_n)
  std::vector<double> cond3_ratio;  // (N_n / Delta_n)^{1/s} Delta_n / a_n
  bool cond1_converging = false;
  bool cond2_holds = false;
  bool cond3_decreasing = false;
};

// Sequences are indexed by the experiment's sizes. With a finite v2 target,
// condition (1) holds when the last ratio is within `tolerance` of it
// (relative); otherwise when successive differences shrink.
CriterionAudit check_criterion_conditions(std::span<const double> N, std::span<const double> delta,
                                          std::span<const double> a, double c2, double s,
                                          std::span<const double> v_n2,
                                          double v2 = std::numeric_limits<double>::quiet_NaN(),
                                          double tolerance = 0.1);

// 1 + sum_{y >= 1} (sphere bound at y) epsilon^{y/2}: a size-independent
// bound on Delta_n for the Ising dependency graph.
double ising_degree_bound(const IsingWdgSpec& spec);

// ---- global patterns ---------------------------------------------------------------------

struct VarianceScaling {
  std::vector<int> sizes;
  std::vector<double> sites;
  std::vector<double> variances;
  std::vector<double> log_variance_se;
  LinearFit versus_n;      // log Var against log n
  LinearFit versus_sites;  // log Var against log |Lambda_n|
  std::vector<NormalityRow> rows;
};

// Var(S_{n,P~}) across sizes from independent replicas. Requires an all-plus
// pattern with m <= 3 and at least three sizes.
VarianceScaling global_variance_scaling(const IsingParams& p, const GlobalPattern& pattern,
                                        const std::vector<int>& sizes, const ReplicaOptions& opts,
                                        const NormalityThresholds& t = {});

struct SummandCovarianceCheck {
  std::size_t pairs = 0;
  std::size_t violations = 0;  // estimates below -3 standard errors
  double min_z = 0.0;          // smallest cov / se among pairs with se > 0
};

// Covariances of occurrence indicators for random geometrically valid pairs
// (X, Y), half of them sharing their first point, estimated across replicas.
SummandCovarianceCheck summand_covariance_check(const SampleBatch& replicas, const GlobalPattern& pattern,
                                                std::size_t pairs, std::uint64_t seed);

// Cov(prod_{x in X} 1[s_x = +], prod_{y in Y} 1[s_y = +]) by exhaustive
// enumeration.
double exact_occurrence_covariance(const Box& box, const IsingParams& p, std::span<const Site> x,
                                   std::span<const Site> y, const ExactOptions& opts = {});

}  // namespace iwdg
