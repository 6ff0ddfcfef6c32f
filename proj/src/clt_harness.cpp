#include "iwdg/clt_harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "iwdg/error.hpp"
#include "iwdg/parallel.hpp"

namespace iwdg {

SampleMoments sample_moments(std::span<const double> x) {
  if (x.size() < 2) throw InsufficientSamplesError("moments need at least two values");
  const double n = static_cast<double>(x.size());
  SampleMoments m;
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m.variance = m2 / (n - 1.0);
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    m.skewness = m3 / std::pow(m2, 1.5);
    m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return m;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_pvalue(double d, std::size_t n) {
  if (n == 0) throw InsufficientSamplesError("KS test on an empty sample");
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  if (lambda < 0.2) return 1.0;
  double q = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    q += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

namespace {

// Spacing of the integer lattice carrying all values (gcd of offsets from
// the minimum), or 0 when some value is not an integer or the range is too
// wide to walk.
long lattice_step(const std::vector<double>& sorted) {
  long step = 0;
  for (double v : sorted) {
    if (v != std::round(v) || std::abs(v) > 1e12) return 0;
    step = std::gcd(step, static_cast<long>(v - sorted.front()));
  }
  if (step == 0 || (sorted.back() - sorted.front()) / static_cast<double>(step) > 1e6) return 0;
  return step;
}

}  // namespace

KsResult ks_normal(std::span<const double> x) {
  const SampleMoments m = sample_moments(x);
  if (!(m.variance > 0.0)) throw UndefinedQuantityError("KS test against a degenerate normal");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(m.variance);
  const double n = static_cast<double>(sorted.size());
  double dmax = 0.0;
  if (const long step = lattice_step(sorted)) {
    // Lattice-valued data: compare with the normal discretised onto the same
    // lattice (continuity correction), at every lattice point.
    std::size_t below = 0;
    for (double k = sorted.front() - step; k <= sorted.back(); k += step) {
      while (below < sorted.size() && sorted[below] <= k) ++below;
      const double g = normal_cdf((k + 0.5 * step - m.mean) / sd);
      dmax = std::max(dmax, std::abs(static_cast<double>(below) / n - g));
    }
    return KsResult{dmax, kolmogorov_pvalue(dmax, sorted.size())};
  }
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - m.mean) / sd);
    dmax = std::max({dmax, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return KsResult{dmax, kolmogorov_pvalue(dmax, sorted.size())};
}

namespace {

double t_quantile_975(std::size_t df) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                 2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086};
  if (df == 0) return std::numeric_limits<double>::infinity();
  if (df <= 20) return table[df - 1];
  return 1.96 + 2.4 / static_cast<double>(df);
}

}  // namespace

LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> y_se) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear fit needs >= 2 paired points");
  if (!y_se.empty() && y_se.size() != y.size()) throw std::invalid_argument("one standard error per point");
  const std::size_t n = x.size();
  std::vector<double> w(n, 1.0);
  if (!y_se.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(y_se[i] > 0.0)) throw std::invalid_argument("standard errors must be positive");
      w[i] = 1.0 / (y_se[i] * y_se[i]);
    }
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("linear fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double half;
  if (!y_se.empty()) {
    f.slope_se = std::sqrt(1.0 / sxx);
    half = 1.96 * f.slope_se;
  } else {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      ssr += r * r;
    }
    f.slope_se = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;
    half = n > 2 ? t_quantile_975(n - 2) * f.slope_se : 0.0;
  }
  f.ci_low = f.slope - half;
  f.ci_high = f.slope + half;
  return f;
}

std::string statistic_name(const Statistic& s) {
  if (std::holds_alternative<Magnetization>(s)) return "magnetization";
  if (std::holds_alternative<LocalPattern>(s)) return "local:" + pattern_to_json(std::get<LocalPattern>(s));
  return "global:" + pattern_to_json(std::get<GlobalPattern>(s));
}

double evaluate_statistic(const Statistic& s, const SpinConfiguration& cfg) {
  if (std::holds_alternative<Magnetization>(s)) return static_cast<double>(cfg.magnetization());
  if (const auto* l = std::get_if<LocalPattern>(&s)) return static_cast<double>(count_local(cfg, *l, cfg.box()).value);
  return static_cast<double>(count_global(cfg, std::get<GlobalPattern>(s), cfg.box()).value);
}

SampleBatch simulate_replicas(const IsingParams& p, int n, const ReplicaOptions& opts) {
  if (opts.replicas < 1) throw std::invalid_argument("need at least one replica");
  ChainSpec base;
  base.params = p;
  base.box = Box::centered(n, p.d);
  base.seed = opts.seed;
  base.burn_in = opts.burn_in;
  base.thinning = 1;
  base.n_samples = 1;
  base.update = opts.update;
  base.stream = static_cast<std::uint64_t>(n);
  base.validate();
  std::vector<std::optional<SpinConfiguration>> out(opts.replicas);
  parallel_for(opts.replicas, opts.workers, [&](std::size_t k) {
    ChainSpec spec = base;
    spec.seed = opts.seed + k;
    Chain chain(spec);
    chain.burn_in();
    out[k] = chain.configuration();
  });
  base.n_samples = opts.replicas;
  SampleBatch batch(base);
  for (const auto& cfg : out) batch.append(*cfg);
  return batch;
}

NormalityRow summarize(std::string statistic, int n, std::size_t sites, std::vector<double> values,
                       const NormalityThresholds& t) {
  const SampleMoments m = sample_moments(values);
  if (!(m.variance > 0.0)) {
    throw UndefinedQuantityError("statistic " + statistic + " has zero variance at n=" + std::to_string(n));
  }
  const KsResult ks = ks_normal(values);
  NormalityRow row;
  row.statistic = std::move(statistic);
  row.n = n;
  row.sites = sites;
  row.replicas = values.size();
  row.mean = m.mean;
  row.variance = m.variance;
  row.variance_per_site = m.variance / static_cast<double>(sites);
  row.skewness = m.skewness;
  row.excess_kurtosis = m.excess_kurtosis;
  row.ks_statistic = ks.statistic;
  row.ks_pvalue = ks.p_value;
  row.assessed = values.size() >= t.min_replicas;
  row.normal = row.assessed && std::abs(m.skewness) < t.max_abs_skewness &&
               std::abs(m.excess_kurtosis) < t.max_abs_excess_kurtosis && ks.p_value > t.min_ks_pvalue;
  row.values = std::move(values);
  return row;
}

void CltExperiment::validate() const {
  params.validate();
  if (statistics.empty()) throw std::invalid_argument("experiment needs at least one statistic");
  if (sizes.empty()) throw std::invalid_argument("experiment needs at least one box size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw std::invalid_argument("box sizes must be >= 1");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("box sizes must be strictly increasing");
  }
  if (replicas.replicas < 10) throw std::invalid_argument("experiment needs at least 10 replicas");
  for (const auto& s : statistics) {
    if (const auto* l = std::get_if<LocalPattern>(&s)) {
      l->validate();
      if (l->dim() != params.d) throw std::invalid_argument("pattern dimension differs from params.d");
    } else if (const auto* g = std::get_if<GlobalPattern>(&s)) {
      g->validate();
      if (g->dim() != params.d) throw std::invalid_argument("pattern dimension differs from params.d");
    }
  }
}

const NormalityRow& NormalityReport::find(const std::string& statistic, int n) const {
  for (const auto& r : rows) {
    if (r.statistic == statistic && r.n == n) return r;
  }
  throw std::out_of_range("no report row for " + statistic + " at n=" + std::to_string(n));
}

NormalityReport run_clt_experiment(const CltExperiment& exp) {
  exp.validate();
  NormalityReport report;
  for (int n : exp.sizes) {
    const SampleBatch batch = simulate_replicas(exp.params, n, exp.replicas);
    std::vector<SpinConfiguration> cfgs;
    cfgs.reserve(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) cfgs.push_back(batch.configuration(k));
    for (const auto& s : exp.statistics) {
      std::vector<double> values(cfgs.size());
      parallel_for(cfgs.size(), exp.replicas.workers,
                   [&](std::size_t k) { values[k] = evaluate_statistic(s, cfgs[k]); });
      report.rows.push_back(summarize(statistic_name(s), n, batch.sites(), std::move(values), exp.thresholds));
    }
  }
  return report;
}

namespace {

// Fits log shell sums over the leading run of significant shells and fills
// the tail bound.
void fit_tail(SeriesEstimate& est, const std::vector<bool>& significant) {
  // Shell 0 is the variance term and does not follow the decay law.
  std::vector<double> xs, ys;
  for (std::size_t r = 1; r < est.shell_sums.size(); ++r) {
    if (!significant[r] || !(est.shell_sums[r] > 0.0)) break;
    xs.push_back(static_cast<double>(r));
    ys.push_back(std::log(est.shell_sums[r]));
  }
  if (xs.size() < 2) {
    est.shell_prefactor = xs.empty() ? 0.0 : est.shell_sums[1];
    est.epsilon = 0.0;
    est.tail_bound = 0.0;
    return;
  }
  const LinearFit f = linear_fit(xs, ys);
  if (!(f.slope < 0.0)) {
    throw UndefinedQuantityError("fitted covariance shell sums do not decay (slope " + std::to_string(f.slope) + ")");
  }
  const double q = std::exp(f.slope);
  est.shell_prefactor = std::exp(f.intercept);
  est.epsilon = q * q;
  est.tail_bound = est.shell_prefactor * std::pow(est.epsilon, est.radius / 2.0) / (1.0 - std::sqrt(est.epsilon));
}

std::vector<Site> ball_offsets(int d, int radius) {
  std::vector<Site> out;
  for (const Site& s : Box::centered(radius, d).sites()) {
    if (l1_distance(s, Site::origin(d)) <= radius) out.push_back(s);
  }
  return out;
}

SeriesEstimate exact_series(const IsingParams& p, const SeriesOptions& opts) {
  const Box& box = opts.exact_box;
  if (box.dim() != p.d) throw std::invalid_argument("exact box dimension differs from params.d");
  if (box.size() > 26) throw CapExceededError("exact covariance series is limited to 26 sites");
  const ExactMomentTable table(box, p, ExactOptions{box.size(), box.size(), opts.workers});
  Site centre = box.lo();
  for (int k = 0; k < box.dim(); ++k) centre[k] = box.lo()[k] + (box.extent(k) - 1) / 2;
  SeriesEstimate est;
  est.radius = opts.radius;
  est.shell_sums.assign(static_cast<std::size_t>(opts.radius) + 1, 0.0);
  est.shell_se.assign(est.shell_sums.size(), 0.0);
  const double mc = table.moment(std::vector<Site>{centre});
  for (const Site& k : ball_offsets(p.d, opts.radius)) {
    const Site s = centre + k;
    if (!box.contains(s)) continue;
    const double cov = table.moment(std::vector<Site>{centre, s}) - mc * table.moment(std::vector<Site>{s});
    est.shell_sums[static_cast<std::size_t>(l1_distance(k, Site::origin(p.d)))] += cov;
  }
  est.v2 = std::accumulate(est.shell_sums.begin(), est.shell_sums.end(), 0.0);
  std::vector<bool> significant(est.shell_sums.size());
  for (std::size_t r = 0; r < significant.size(); ++r) {
    significant[r] = std::abs(est.shell_sums[r]) > 1e-11 * std::abs(est.shell_sums[0]);
  }
  fit_tail(est, significant);
  return est;
}

SeriesEstimate monte_carlo_series(const IsingParams& p, const Statistic& s, const SeriesOptions& opts) {
  const LocalPattern* pattern = std::get_if<LocalPattern>(&s);
  const int reach = pattern ? pattern->diameter() : 0;
  const int outer = 2 * opts.radius + opts.margin;
  const int central = opts.radius - reach;
  if (central < 0) throw std::invalid_argument("pattern diameter exceeds the series radius");
  ChainSpec spec;
  spec.params = p;
  spec.box = Box::centered(outer, p.d);
  spec.seed = opts.seed;
  spec.burn_in = opts.burn_in;
  spec.thinning = opts.thinning;
  spec.n_samples = opts.samples;
  const SampleBatch batch = run_chain(spec);
  const Box& box = spec.box;
  const Box region = Box::centered(central, p.d);
  const Site origin = Site::origin(p.d);
  const auto base = static_cast<long>(box.index_of(origin));
  const std::vector<Site> ball = ball_offsets(p.d, opts.radius);
  std::vector<long> delta;
  std::vector<std::size_t> shell;
  for (const Site& k : ball) {
    delta.push_back(static_cast<long>(box.index_of(k)) - base);
    shell.push_back(static_cast<std::size_t>(l1_distance(k, origin)));
  }
  std::vector<std::size_t> region_idx;
  for (const Site& x : region.sites()) region_idx.push_back(box.index_of(x));
  // f is needed on the region grown by the radius.
  const Box support = Box::centered(central + opts.radius, p.d);

  const std::size_t shells = static_cast<std::size_t>(opts.radius) + 1;
  const std::size_t n = batch.size();
  std::vector<std::vector<double>> per_sample(shells, std::vector<double>(n, 0.0));
  std::vector<double> mean_f(n, 0.0);
  std::vector<std::size_t> shell_size(shells, 0);
  for (std::size_t r : shell) ++shell_size[r];
  const double inv = 1.0 / static_cast<double>(region_idx.size());

  parallel_for(n, opts.workers, [&](std::size_t k) {
    std::vector<double> f(box.size(), 0.0);
    if (pattern) {
      const SpinConfiguration cfg = batch.configuration(k);
      for (const Site& x : support.sites()) f[box.index_of(x)] = local_indicator(cfg, *pattern, x);
    } else {
      for (std::size_t i = 0; i < box.size(); ++i) f[i] = batch.spin(k, i);
    }
    double m = 0.0;
    std::vector<double> acc(shells, 0.0);
    for (std::size_t x : region_idx) {
      const double fx = f[x];
      m += fx;
      if (fx == 0.0) continue;
      const double* row = f.data() + x;
      for (std::size_t j = 0; j < delta.size(); ++j) acc[shell[j]] += fx * row[delta[j]];
    }
    mean_f[k] = m * inv;
    for (std::size_t r = 0; r < shells; ++r) per_sample[r][k] = acc[r] * inv;
  });

  const double mu = std::accumulate(mean_f.begin(), mean_f.end(), 0.0) / static_cast<double>(n);
  SeriesEstimate est;
  est.radius = opts.radius;
  std::vector<double> total(n, 0.0);
  std::vector<bool> significant(shells);
  for (std::size_t r = 0; r < shells; ++r) {
    const Estimate e = batch_means(per_sample[r]);
    est.shell_sums.push_back(e.mean - static_cast<double>(shell_size[r]) * mu * mu);
    est.shell_se.push_back(e.std_error);
    significant[r] = std::abs(est.shell_sums[r]) > 2.0 * e.std_error;
    for (std::size_t k = 0; k < n; ++k) total[k] += per_sample[r][k];
  }
  const Estimate all = batch_means(total);
  est.v2 = all.mean - static_cast<double>(ball.size()) * mu * mu;
  est.std_error = all.std_error;
  fit_tail(est, significant);
  return est;
}

}  // namespace

SeriesEstimate variance_series_estimate(const IsingParams& p, const Statistic& s, const SeriesOptions& opts) {
  p.validate();
  if (opts.radius < 0) throw std::invalid_argument("series radius must be >= 0");
  if (std::holds_alternative<GlobalPattern>(s)) {
    throw std::invalid_argument("variance series applies to the magnetization and local patterns");
  }
  if (opts.source == CovarianceSource::Exact) {
    if (!std::holds_alternative<Magnetization>(s)) {
      throw std::invalid_argument("the exact covariance source supports the magnetization only");
    }
    return exact_series(p, opts);
  }
  return monte_carlo_series(p, s, opts);
}

CriterionAudit check_criterion_conditions(std::span<const double> N, std::span<const double> delta,
                                          std::span<const double> a, double c2, double s,
                                          std::span<const double> v_n2, double v2, double tolerance) {
  if (!(s >= 3.0)) throw std::invalid_argument("the criterion needs s >= 3");
  const std::size_t k = N.size();
  if (k < 2 || delta.size() != k || a.size() != k || v_n2.size() != k) {
    throw std::invalid_argument("criterion sequences must share a length >= 2");
  }
  CriterionAudit out;
  for (std::size_t i = 0; i < k; ++i) {
    out.cond1_ratio.push_back(v_n2[i] / (a[i] * a[i]));
    out.cond2_ratio.push_back(a[i] * a[i] / (N[i] * delta[i]));
    out.cond3_ratio.push_back(std::pow(N[i] / delta[i], 1.0 / s) * delta[i] / a[i]);
  }
  out.cond2_holds = std::all_of(out.cond2_ratio.begin(), out.cond2_ratio.end(), [&](double r) { return r <= c2; });
  out.cond3_decreasing = true;
  for (std::size_t i = 1; i < k; ++i) out.cond3_decreasing = out.cond3_decreasing && out.cond3_ratio[i] < out.cond3_ratio[i - 1];
  if (std::isfinite(v2)) {
    out.cond1_converging = std::abs(out.cond1_ratio.back() - v2) <= tolerance * std::abs(v2);
  } else {
    out.cond1_converging = true;
    for (std::size_t i = 2; i < k; ++i) {
      out.cond1_converging = out.cond1_converging && std::abs(out.cond1_ratio[i] - out.cond1_ratio[i - 1]) <=
                                                         std::abs(out.cond1_ratio[i - 1] - out.cond1_ratio[i - 2]);
    }
  }
  return out;
}

double ising_degree_bound(const IsingWdgSpec& spec) {
  spec.validate();
  if (!(spec.epsilon < 1.0)) throw std::domain_error("degree bound needs epsilon < 1");
  double sum = 1.0;
  const double root = std::sqrt(spec.epsilon);
  for (int y = 1; y < 100000; ++y) {
    const double term = static_cast<double>(sphere_count_upper_bound(spec.d, y)) * std::pow(root, y);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

VarianceScaling global_variance_scaling(const IsingParams& p, const GlobalPattern& pattern,
                                        const std::vector<int>& sizes, const ReplicaOptions& opts,
                                        const NormalityThresholds& t) {
  pattern.validate();
  if (!pattern.all_plus()) throw std::invalid_argument("variance scaling needs an all-plus pattern");
  if (pattern.m > 3) throw std::invalid_argument("variance scaling supports m <= 3");
  if (pattern.dim() != p.d) throw std::invalid_argument("pattern dimension differs from params.d");
  if (sizes.size() < 3) throw InsufficientSamplesError("variance scaling needs at least three sizes");
  VarianceScaling out;
  const Statistic stat = pattern;
  for (int n : sizes) {
    const SampleBatch batch = simulate_replicas(p, n, opts);
    std::vector<double> values(batch.size());
    parallel_for(batch.size(), opts.workers,
                 [&](std::size_t k) { values[k] = evaluate_statistic(stat, batch.configuration(k)); });
    NormalityRow row = summarize(statistic_name(stat), n, batch.sites(), std::move(values), t);
    const double r = static_cast<double>(row.replicas);
    out.sizes.push_back(n);
    out.sites.push_back(static_cast<double>(row.sites));
    out.variances.push_back(row.variance);
    out.log_variance_se.push_back(std::sqrt(std::max(2.0 / (r - 1.0) + row.excess_kurtosis / r, 1.0 / r)));
    out.rows.push_back(std::move(row));
  }
  std::vector<double> ln, lsites, lvar;
  for (std::size_t i = 0; i < out.sizes.size(); ++i) {
    ln.push_back(std::log(static_cast<double>(out.sizes[i])));
    lsites.push_back(std::log(out.sites[i]));
    lvar.push_back(std::log(out.variances[i]));
  }
  out.versus_n = linear_fit(ln, lvar, out.log_variance_se);
  out.versus_sites = linear_fit(lsites, lvar, out.log_variance_se);
  return out;
}

namespace {

// m sites realising the pattern's orders, coordinates drawn uniformly.
std::vector<Site> random_occurrence_shape(const GlobalPattern& pattern, const Box& box, Rng& rng) {
  const int d = pattern.dim();
  std::vector<Site> x(static_cast<std::size_t>(pattern.m), Site::origin(d));
  for (int k = 0; k < d; ++k) {
    const int extent = box.extent(k);
    std::vector<int> coords;
    while (coords.size() < static_cast<std::size_t>(pattern.m)) {
      const int c = box.lo()[k] + static_cast<int>(rng.below(static_cast<std::size_t>(extent)));
      if (std::find(coords.begin(), coords.end(), c) == coords.end()) coords.push_back(c);
    }
    std::sort(coords.begin(), coords.end());
    for (int i = 0; i < pattern.m; ++i) {
      x[static_cast<std::size_t>(i)][k] = coords[static_cast<std::size_t>(pattern.ranks[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)])];
    }
  }
  return x;
}

}  // namespace

SummandCovarianceCheck summand_covariance_check(const SampleBatch& replicas, const GlobalPattern& pattern,
                                                std::size_t pairs, std::uint64_t seed) {
  pattern.validate();
  const Box& box = replicas.spec().box;
  if (box.dim() != pattern.dim()) throw std::invalid_argument("pattern dimension differs from the box");
  for (int k = 0; k < box.dim(); ++k) {
    if (box.extent(k) < pattern.m) throw std::invalid_argument("box too small for the pattern");
  }
  const std::size_t n = replicas.size();
  if (n < 2) throw InsufficientSamplesError("covariance check needs at least two replicas");
  std::vector<SpinConfiguration> cfgs;
  for (std::size_t k = 0; k < n; ++k) cfgs.push_back(replicas.configuration(k));
  // Element i of a candidate sits at x[i]; geometry is checked against a
  // configuration carrying the pattern's signs there.
  auto geometric = [&](const std::vector<Site>& x) {
    SpinConfiguration cfg(box, replicas.spec().params.bc, +1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!box.contains(x[i])) return false;
      cfg.set(box.index_of(x[i]), static_cast<int>(pattern.signs[i]));
    }
    return global_indicator(cfg, pattern, x) == 1;
  };
  Rng rng(seed, 0x5eed);
  SummandCovarianceCheck out;
  out.min_z = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < pairs; ++t) {
    const std::vector<Site> x = random_occurrence_shape(pattern, box, rng);
    std::vector<Site> y = random_occurrence_shape(pattern, box, rng);
    if (t % 2 == 0) {
      for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<Site> cand = random_occurrence_shape(pattern, box, rng);
        cand[0] = x[0];
        if (std::adjacent_find(cand.begin(), cand.end()) == cand.end() && geometric(cand)) {
          y = cand;
          break;
        }
      }
    }
    std::vector<double> a(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = global_indicator(cfgs[k], pattern, x);
      b[k] = global_indicator(cfgs[k], pattern, y);
    }
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
    std::vector<double> prod(n);
    for (std::size_t k = 0; k < n; ++k) prod[k] = (a[k] - ma) * (b[k] - mb);
    const SampleMoments m = sample_moments(prod);
    const double cov = m.mean;
    const double se = std::sqrt(m.variance / static_cast<double>(n));
    ++out.pairs;
    if (se > 0.0) {
      out.min_z = std::min(out.min_z, cov / se);
      if (cov < -3.0 * se) ++out.violations;
    }
  }
  if (!std::isfinite(out.min_z)) out.min_z = 0.0;
  return out;
}

double exact_occurrence_covariance(const Box& box, const IsingParams& p, std::span<const Site> x,
                                   std::span<const Site> y, const ExactOptions& opts) {
  auto indices = [&](std::span<const Site> sites) {
    std::vector<std::size_t> idx;
    for (const Site& s : sites) {
      if (!box.contains(s)) throw std::invalid_argument("site " + s.str() + " is outside the box");
      idx.push_back(box.index_of(s));
    }
    return idx;
  };
  const std::vector<std::size_t> ix = indices(x), iy = indices(y);
  std::vector<std::size_t> ixy = ix;
  ixy.insert(ixy.end(), iy.begin(), iy.end());
  auto all_plus = [](std::vector<std::size_t> idx) {
    return [idx = std::move(idx)](const SpinConfiguration& cfg) {
      for (std::size_t i : idx) {
        if (cfg.at(i) < 0) return 0.0;
      }
      return 1.0;
    };
  };
  const std::vector<Observable> fs = {all_plus(ix), all_plus(iy), all_plus(ixy)};
  const std::vector<double> e = expectations(box, p, fs, opts);
  return e[2] - e[0] * e[1];
}

}  // namespace iwdg
