#include "iwdg/wdg.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "iwdg/error.hpp"

namespace iwdg {

void IsingWdgSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension out of range");
}

double IsingWdgSpec::weight(const Site& a, const Site& b) const {
  return std::pow(epsilon, 0.5 * l1_distance(a, b));
}

WeightedGraph<Site> IsingWdgSpec::graph() const {
  validate();
  const IsingWdgSpec spec = *this;
  return WeightedGraph<Site>([spec](const Site& a, const Site& b) { return spec.weight(a, b); });
}

WeightedGraph<SignedSite> signed_graph(const IsingWdgSpec& spec) {
  spec.validate();
  return WeightedGraph<SignedSite>(
      [spec](const SignedSite& a, const SignedSite& b) { return spec.weight(a.site, b.site); });
}

double max_weighted_degree_plus_one(const WeightedGraph<Site>& g, std::span<const Site> vertices) {
  double best = 0.0;
  for (const Site& v : vertices) best = std::max(best, weighted_degree(g, v, vertices));
  return best + 1.0;
}

EpsilonFit fit_epsilon_from_pairs(const CumulantTable& table) {
  std::map<int, double> env;
  for (const auto& [key, e] : table.entries()) {
    if (key.size() != 2 || key[0] == key[1]) continue;
    const int dist = l1_distance(key[0], key[1]);
    env[dist] = std::max(env[dist], std::abs(e.value));
  }
  EpsilonFit fit;
  std::vector<double> xs, ys;
  for (const auto& [dist, v] : env) {
    fit.envelope.emplace_back(dist, v);
    if (v > 0.0) {
      xs.push_back(dist);
      ys.push_back(std::log(v));
    }
  }
  if (xs.size() < 2) throw UndefinedQuantityError("epsilon fit needs nonzero pair cumulants at two distances");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) throw UndefinedQuantityError("pair cumulants do not decay with distance");
  fit.epsilon = std::exp(slope);
  fit.intercept = my - slope * mx;
  return fit;
}

WdgReport check_wdg_inequality(const CumulantTable& table, const WeightedGraph<Site>& g, int r_max,
                               std::size_t histogram_bins) {
  if (r_max < 1) throw std::invalid_argument("r_max must be >= 1");
  if (histogram_bins < 2) throw std::invalid_argument("need at least two histogram bins");
  struct Row {
    const std::vector<Site>* key;
    double kappa;
    double m;
  };
  std::vector<std::vector<Row>> rows(static_cast<std::size_t>(r_max) + 1);
  for (const auto& [key, e] : table.entries()) {
    if (key.size() > static_cast<std::size_t>(r_max)) continue;
    const double m = max_weight_spanning_tree<Site>(g, key).weight;
    rows[key.size()].push_back({&key, std::abs(e.value), m});
  }
  WdgReport report;
  for (int r = 1; r <= r_max; ++r) {
    const auto& rr = rows[static_cast<std::size_t>(r)];
    if (rr.empty()) throw std::out_of_range("cumulant table has no entries of order " + std::to_string(r));
    WdgOrderReport o;
    o.r = r;
    o.tested = rr.size();
    o.margin_histogram.assign(histogram_bins, 0);
    for (const Row& row : rr) {
      const double ratio = row.m > 0.0 ? row.kappa / row.m
                                       : (row.kappa > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (ratio > o.c_r || o.worst.empty()) {
        o.c_r = std::max(o.c_r, ratio);
        if (ratio >= o.c_r) o.worst = *row.key;
      }
    }
    for (const Row& row : rr) {
      const double ratio = row.m > 0.0 ? row.kappa / row.m : (row.kappa > 0.0 ? 1.0 : 0.0);
      const double rel = o.c_r > 0.0 && std::isfinite(o.c_r) ? ratio / o.c_r : (ratio > 0.0 ? 1.0 : 0.0);
      std::size_t bin = histogram_bins - 1;
      if (rel > 0.0) {
        const double decade = std::ceil(-std::log10(rel)) - 1.0;
        if (decade < static_cast<double>(histogram_bins - 1)) bin = static_cast<std::size_t>(std::max(0.0, decade));
      }
      ++o.margin_histogram[bin];
    }
    report.orders.push_back(std::move(o));
  }
  return report;
}

}  // namespace iwdg
