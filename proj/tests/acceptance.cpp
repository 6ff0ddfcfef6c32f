// Acceptance run: one PASS/FAIL line per criterion. With arguments, only the
// listed criterion numbers run. Exit status 0 iff every selected criterion
// passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "iwdg/clt_harness.hpp"
#include "iwdg/cumulants.hpp"
#include "iwdg/expansions.hpp"
#include "iwdg/gibbs_exact.hpp"
#include "iwdg/lattice.hpp"
#include "iwdg/patterns.hpp"
#include "iwdg/sampler.hpp"
#include "iwdg/treelen.hpp"
#include "iwdg/wdg.hpp"

using namespace iwdg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const IsingParams kHighT{2, 0.2, 0.0, BoundaryCondition::Free};
const IsingParams kLowT{2, 1.2, 0.0, BoundaryCondition::Plus};

std::string regime_name(const IsingParams& p) {
  return fmt("beta=%.1f %s", p.beta, std::string(to_string(p.bc)).c_str());
}

EpsilonFit pair_fit(const ExactMomentTable& table) {
  CumulantTable pairs(CumulantTable::Provenance::Exact);
  for (const auto& a : site_combinations(table.box(), 2, false)) {
    if (a.size() == 2) pairs.insert(a, table.cumulant(a));
  }
  return fit_epsilon_from_pairs(pairs);
}

// ---- 1 ----------------------------------------------------------------------

Outcome representation_identities() {
  Stopwatch clock;
  const auto checks = run_expansion_suite(ExpansionSuite{});
  const double elapsed = clock.seconds();
  double worst = 0.0;
  std::set<std::string> kinds;
  for (const auto& c : checks) {
    worst = std::max(worst, c.rel_error);
    kinds.insert(c.representation);
  }
  const bool ok = !checks.empty() && worst <= 1e-10 && elapsed < 30.0;
  return {ok, fmt("%zu identities of %zu kinds, max rel error %.2e, %.1f s", checks.size(), kinds.size(), worst,
                  elapsed)};
}

// ---- 2 ----------------------------------------------------------------------

struct DecayConstants {
  double epsilon = 0.0;
  std::vector<double> d;  // d[r], r = 1..4
  std::size_t unresolved = 0;
};

// D_r = max |kappa(A)| / eps^{l_T(A)} over |A| = r <= 4, eps fitted from this
// box's pairs. Cumulants within their rounding bound carry no information
// and are skipped.
DecayConstants decay_constants(const Box& box, const IsingParams& p) {
  const ExactMomentTable table(box, p);
  DecayConstants out;
  out.epsilon = pair_fit(table).epsilon;
  out.d.assign(5, 0.0);
  for (const auto& a : site_combinations(box, 4, false)) {
    const double k = std::abs(table.cumulant(a));
    if (k <= table.cumulant_rounding(a)) {
      ++out.unresolved;
      continue;
    }
    const double bound = std::pow(out.epsilon, steiner_tree_length(a));
    out.d[a.size()] = std::max(out.d[a.size()], k / bound);
  }
  return out;
}

Outcome cumulant_decay() {
  Stopwatch clock;
  bool ok = true;
  std::string detail;
  for (const IsingParams& p : {kHighT, kLowT}) {
    const DecayConstants small = decay_constants(Box::from_extents({4, 4}), p);
    const DecayConstants large = decay_constants(Box::from_extents({5, 4}), p);
    detail += fmt("%s: eps %.4f/%.4f", regime_name(p).c_str(), small.epsilon, large.epsilon);
    for (int r = 1; r <= 4; ++r) {
      const bool finite = std::isfinite(small.d[r]) && std::isfinite(large.d[r]);
      const bool held = finite && large.d[r] <= small.d[r];
      ok = ok && held;
      detail += fmt(" D%d %.4g->%.4g%s", r, small.d[r], large.d[r], held ? "" : " (grows)");
    }
    detail += "; ";
  }
  const double elapsed = clock.seconds();
  ok = ok && elapsed < 300.0;
  detail += fmt("%.1f s", elapsed);
  return {ok, detail};
}

// ---- 3 ----------------------------------------------------------------------

Outcome wdg_inequality() {
  bool ok = true;
  std::string detail;
  const Box box = Box::from_extents({4, 4});
  for (const IsingParams& p : {kHighT, kLowT}) {
    const ExactMomentTable table(box, p);
    const IsingWdgSpec spec{pair_fit(table).epsilon, 2};
    const auto g = spec.graph();
    CumulantTable cumulants(CumulantTable::Provenance::Exact);
    double mwst_error = 0.0;
    std::size_t multisets = 0;
    for (const auto& b : site_combinations(box, 4, true)) {
      cumulants.insert(b, table.cumulant(b));
      std::vector<Site> support = b;
      support.erase(std::unique(support.begin(), support.end()), support.end());
      const double want = std::pow(spec.epsilon, mst_tree_length(support) / 2.0);
      const double got = max_weight_spanning_tree(g, std::span<const Site>(b)).weight;
      mwst_error = std::max(mwst_error, std::abs(got - want) / want);
      ++multisets;
    }
    const WdgReport report = check_wdg_inequality(cumulants, g, 4);
    detail += fmt("%s: %zu multisets, MWST rel error %.1e, C_r", regime_name(p).c_str(), multisets, mwst_error);
    for (const auto& o : report.orders) {
      ok = ok && std::isfinite(o.c_r);
      detail += fmt(" %.3g", o.c_r);
    }
    ok = ok && report.orders.size() == 4 && mwst_error <= 1e-12;
    detail += "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// ---- 4 ----------------------------------------------------------------------

Outcome tree_sandwich() {
  Stopwatch clock;
  Rng rng(20240607);
  std::size_t held = 0;
  const std::size_t trials = 1000;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t size = 1 + rng.below(5);
    std::vector<Site> a;
    while (a.size() < size) {
      const Site s{static_cast<int>(rng.below(13)) - 6, static_cast<int>(rng.below(13)) - 6};
      if (std::find(a.begin(), a.end(), s) == a.end()) a.push_back(s);
    }
    if (check_two_factor(a).ok) ++held;
  }
  const double elapsed = clock.seconds();
  return {held == trials && elapsed < 60.0, fmt("%zu/%zu sets, %.2f s", held, trials, elapsed)};
}

// ---- 5 ----------------------------------------------------------------------

Outcome sampler_correctness() {
  const Box small = Box::from_extents({2, 2});
  const IsingParams p2{2, 0.5, 0.1, BoundaryCondition::Free};
  const auto m = transition_matrix(small, p2, UpdateKind::SingleFlip);
  const auto pi = stationary_distribution(m, std::size_t{1} << small.size());
  const auto gibbs = exact_state_probabilities(small, p2);
  double dev = 0.0;
  for (std::size_t s = 0; s < pi.size(); ++s) dev = std::max(dev, std::abs(pi[s] - gibbs[s]));

  const Box box = Box::centered(1, 2);
  const std::vector<Site> pair = {Site{0, 0}, Site{1, 0}};
  const double exact = ExactMomentTable(box, kHighT).moment(pair);
  const std::size_t i0 = box.index_of(pair[0]), i1 = box.index_of(pair[1]);
  std::size_t covered = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    ChainSpec spec;
    spec.params = kHighT;
    spec.box = box;
    spec.seed = seed;
    spec.burn_in = 1000;
    spec.thinning = 1;
    spec.n_samples = 20000;
    const Estimate e = estimate_observable(
        run_chain(spec), [&](const SpinConfiguration& c) { return static_cast<double>(c.at(i0) * c.at(i1)); });
    if (std::abs(e.mean - exact) <= 3.0 * e.std_error) ++covered;
  }
  const bool ok = dev <= 1e-10 && covered >= 95;
  return {ok, fmt("2x2 stationary vs Gibbs max dev %.1e; <s0 s1>=%.5f covered in %zu/100 seeds", dev, exact, covered)};
}

// ---- 6, 7, 9: one magnetization / isolated-plus experiment ------------------

struct CltRun {
  NormalityReport report;
  SeriesEstimate series;
  double seconds = 0.0;
};

const std::vector<int> kCltSizes = {8, 16, 32};

const CltRun& clt_run() {
  static const CltRun run = [] {
    Stopwatch clock;
    CltRun r;
    CltExperiment exp;
    exp.params = kHighT;
    exp.statistics = {Magnetization{}, LocalPattern::isolated_plus(2)};
    exp.sizes = kCltSizes;
    exp.replicas.replicas = 4000;
    exp.replicas.burn_in = 1000;
    exp.replicas.seed = 11;
    r.report = run_clt_experiment(exp);
    SeriesOptions so;
    so.radius = 12;
    so.source = CovarianceSource::MonteCarlo;
    r.series = variance_series_estimate(kHighT, Magnetization{}, so);
    r.seconds = clock.seconds();
    return r;
  }();
  return run;
}

std::string row_summary(const NormalityRow& row) {
  return fmt("n=%d: %zu replicas, skew %.3f, ex.kurt %.3f, KS p %.3f", row.n, row.replicas, row.skewness,
             row.excess_kurtosis, row.ks_pvalue);
}

Outcome magnetization_clt() {
  const CltRun& run = clt_run();
  const NormalityRow& row = run.report.find(statistic_name(Magnetization{}), 32);
  const double rel = std::abs(row.variance_per_site - run.series.v2) / run.series.v2;
  const bool ok = row.assessed && row.normal && rel <= 0.1;
  return {ok, fmt("%s; Var/|L| %.4f vs series %.4f +- %.4f (R=12, tail %.1e), rel diff %.3f; experiment %.0f s",
                  row_summary(row).c_str(), row.variance_per_site, run.series.v2, run.series.std_error,
                  run.series.tail_bound, rel, run.seconds)};
}

Outcome local_pattern_clt() {
  const CltRun& run = clt_run();
  const std::string name = statistic_name(LocalPattern::isolated_plus(2));
  const NormalityRow& row = run.report.find(name, 32);
  std::string detail = row_summary(row) + fmt("; mean count %.1f, sd %.2f; skew by n:", row.mean, std::sqrt(row.variance));
  for (int n : kCltSizes) detail += fmt(" %.3f", run.report.find(name, n).skewness);
  return {row.assessed && row.normal, detail};
}

Outcome criterion_audit() {
  const CltRun& run = clt_run();
  const ExactMomentTable table(Box::from_extents({4, 4}), kHighT);
  const IsingWdgSpec spec{pair_fit(table).epsilon, 2};
  const auto g = spec.graph();
  std::vector<double> n_sites, delta, a, v_n2;
  for (int n : kCltSizes) {
    const NormalityRow& row = run.report.find(statistic_name(Magnetization{}), n);
    const Box box = Box::centered(n, 2);
    const std::vector<Site> sites = box.sites();
    n_sites.push_back(static_cast<double>(row.sites));
    delta.push_back(max_weighted_degree_plus_one(g, sites));
    a.push_back(std::sqrt(row.variance));
    v_n2.push_back(row.variance_per_site);
  }
  const double bound = ising_degree_bound(spec);
  const CriterionAudit audit =
      check_criterion_conditions(n_sites, delta, a, std::numeric_limits<double>::infinity(), 3.0, v_n2, run.series.v2);
  const bool bounded = std::all_of(delta.begin(), delta.end(), [&](double x) { return x <= bound; });
  std::string detail = fmt("eps %.4f; cond3", spec.epsilon);
  for (double r : audit.cond3_ratio) detail += fmt(" %.4f", r);
  detail += "; Delta_n";
  for (double x : delta) detail += fmt(" %.4f", x);
  detail += fmt(" <= %.4f", bound);
  return {audit.cond3_decreasing && bounded, detail};
}

// ---- 8 ----------------------------------------------------------------------

Outcome global_pattern_scaling() {
  Stopwatch clock;
  ReplicaOptions opts;
  opts.replicas = 4000;
  opts.burn_in = 1000;
  opts.seed = 23;
  const VarianceScaling vs = global_variance_scaling(kHighT, GlobalPattern::chain(2, 2), {8, 12, 16, 20}, opts);
  const NormalityRow& last = vs.rows.back();
  const double slope = vs.versus_sites.slope;
  const bool ok = slope >= 2.7 && slope <= 3.3 && last.assessed && last.normal;
  return {ok, fmt("slope of log Var vs log|L_n| %.3f +- %.3f (vs log n %.3f); %s; %.0f s", slope,
                  vs.versus_sites.slope_se, vs.versus_n.slope, row_summary(last).c_str(), clock.seconds())};
}

// ---- 10 ---------------------------------------------------------------------

Outcome q_quantity_decay() {
  const ExactMomentTable table(Box::from_extents({4, 4}), kLowT);
  const SetLogExpectation e = [&](std::span<const Site> d) { return table.signed_log_moment(d); };
  bool ok = true;
  std::string detail;
  for (int r : {2, 3}) {
    std::map<int, double> envelope;
    for (const auto& a : site_combinations(table.box(), r, false)) {
      if (static_cast<int>(a.size()) != r) continue;
      const int l = steiner_tree_length(a);
      envelope[l] = std::max(envelope[l], std::abs(q_quantity_minus_one(e, a)));
    }
    std::vector<double> ls, logs;
    bool monotone = true;
    double previous = std::numeric_limits<double>::infinity();
    for (const auto& [l, v] : envelope) {
      monotone = monotone && v < previous;
      previous = v;
      ls.push_back(l);
      logs.push_back(std::log(v));
    }
    const LinearFit fit = linear_fit(ls, logs);
    ok = ok && monotone && fit.slope < 0.0 && envelope.size() >= 3;
    detail += fmt("|A|=%d: envelope over l_T %d..%d %s, log slope %.3f; ", r, envelope.begin()->first,
                  envelope.rbegin()->first, monotone ? "decreasing" : "NOT decreasing", fit.slope);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {
      representation_identities, cumulant_decay,    wdg_inequality,   tree_sandwich,      sampler_correctness,
      magnetization_clt,         local_pattern_clt, global_pattern_scaling, criterion_audit, q_quantity_decay};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected.insert(k);
  }
  bool all = true;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (!selected.empty() && !selected.count(k)) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d: %s (%s)\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
