#include "iwdg/expansions.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "iwdg/error.hpp"
#include "iwdg/parallel.hpp"

namespace iwdg {

namespace {

constexpr std::size_t kChunks = 64;

std::uint64_t marked_mask(const Box& box, std::span<const Site> marked) {
  std::uint64_t mask = 0;
  for (const Site& s : marked) {
    if (!box.contains(s)) throw std::invalid_argument("marked site " + s.str() + " is outside the box");
    const std::uint64_t bit = std::uint64_t{1} << box.index_of(s);
    if (mask & bit) throw std::invalid_argument("marked sites must be distinct");
    mask |= bit;
  }
  return mask;
}

void check_sites(const Box& box, const ExpansionOptions& opts) {
  if (box.size() > opts.site_cap || box.size() > 62) {
    throw CapExceededError("box with " + std::to_string(box.size()) + " sites exceeds the expansion cap of " +
                           std::to_string(opts.site_cap));
  }
}

// Splits [0, 2^bits) into fixed chunks and sums body(begin, end) in chunk order.
template <class Body>
double chunked_sum(std::size_t bits, unsigned workers, Body&& body) {
  const std::uint64_t total = std::uint64_t{1} << bits;
  const std::size_t chunks = std::min<std::uint64_t>(kChunks, total);
  const std::uint64_t per = total / chunks;
  std::vector<double> parts(chunks, 0.0);
  parallel_for(chunks, workers, [&](std::size_t c) { parts[c] = body(per * c, per * (c + 1)); });
  return std::accumulate(parts.begin(), parts.end(), 0.0);
}

struct HighTemperatureSetup {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::uint64_t amask = 0;
  std::vector<double> tanh_t;  // per site index; only marked entries used
  std::vector<double> tanh_pow;
};

HighTemperatureSetup high_temperature_setup(const Box& box, std::span<const Site> marked, double beta,
                                            std::span<const double> t, const ExpansionOptions& opts) {
  if (marked.size() != t.size()) throw std::invalid_argument("need one field value per marked site");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (box.size() > 64) throw CapExceededError("box too large for the high-temperature enumeration");
  HighTemperatureSetup s;
  const BoxAdjacency adj(box);
  s.edges = adj.edge_list();
  if (s.edges.size() > opts.edge_cap) {
    throw CapExceededError(std::to_string(s.edges.size()) + " edges exceed the high-temperature edge cap of " +
                           std::to_string(opts.edge_cap));
  }
  s.amask = marked_mask(box, marked);
  s.tanh_t.assign(box.size(), 0.0);
  for (std::size_t k = 0; k < marked.size(); ++k) s.tanh_t[box.index_of(marked[k])] = std::tanh(t[k]);
  s.tanh_pow.resize(s.edges.size() + 1);
  const double tb = std::tanh(beta);
  s.tanh_pow[0] = 1.0;
  for (std::size_t k = 1; k < s.tanh_pow.size(); ++k) s.tanh_pow[k] = s.tanh_pow[k - 1] * tb;
  return s;
}

double odd_product(const HighTemperatureSetup& s, std::uint64_t odd) {
  double w = 1.0;
  while (odd) {
    w *= s.tanh_t[static_cast<std::size_t>(std::countr_zero(odd))];
    odd &= odd - 1;
  }
  return w;
}

std::uint64_t odd_sites_of(const HighTemperatureSetup& s, std::uint64_t edge_bits) {
  std::uint64_t odd = 0;
  for (std::size_t e = 0; e < s.edges.size(); ++e) {
    if ((edge_bits >> e) & 1U) odd ^= (std::uint64_t{1} << s.edges[e].first) ^ (std::uint64_t{1} << s.edges[e].second);
  }
  return odd;
}

}  // namespace

double even_subgraph_sum(const Box& box, std::span<const Site> marked, double beta, std::span<const double> t,
                         const ExpansionOptions& opts) {
  const HighTemperatureSetup s = high_temperature_setup(box, marked, beta, t, opts);
  const std::uint64_t not_marked = ~s.amask;
  // Gray code over edge subsets; flipping one edge toggles the parity of its
  // two endpoints.
  return chunked_sum(s.edges.size(), opts.workers, [&](std::uint64_t begin, std::uint64_t end) {
    std::uint64_t g = begin ^ (begin >> 1);
    std::uint64_t odd = odd_sites_of(s, g);
    int count = std::popcount(g);
    double acc = 0.0;
    for (std::uint64_t k = begin;;) {
      if ((odd & not_marked) == 0) acc += s.tanh_pow[static_cast<std::size_t>(count)] * odd_product(s, odd);
      if (++k == end) break;
      const auto e = static_cast<std::size_t>(std::countr_zero(k));
      const std::uint64_t bit = std::uint64_t{1} << e;
      count += (g & bit) ? -1 : 1;
      g ^= bit;
      odd ^= (std::uint64_t{1} << s.edges[e].first) ^ (std::uint64_t{1} << s.edges[e].second);
    }
    return acc;
  });
}

std::vector<EvenSubgraphTerm> even_subgraph_terms(const Box& box, std::span<const Site> marked, double beta,
                                                  std::span<const double> t, const ExpansionOptions& opts) {
  const HighTemperatureSetup s = high_temperature_setup(box, marked, beta, t, opts);
  std::vector<EvenSubgraphTerm> out;
  const std::uint64_t total = std::uint64_t{1} << s.edges.size();
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    const std::uint64_t odd = odd_sites_of(s, bits);
    if (odd & ~s.amask) continue;
    EvenSubgraphTerm term;
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
      if ((bits >> e) & 1U) term.edges.emplace_back(box.site_at(s.edges[e].first), box.site_at(s.edges[e].second));
    }
    for (std::uint64_t o = odd; o; o &= o - 1) {
      term.odd_sites.push_back(box.site_at(static_cast<std::size_t>(std::countr_zero(o))));
    }
    term.weight = s.tanh_pow[term.edges.size()] * odd_product(s, odd);
    out.push_back(std::move(term));
  }
  return out;
}

bool even_term_parity_ok(const EvenSubgraphTerm& term, std::span<const Site> marked) {
  std::map<Site, int> degree;
  for (const Edge& e : term.edges) {
    ++degree[e.a];
    ++degree[e.b];
  }
  std::vector<Site> odd;
  for (const auto& [site, deg] : degree) {
    if (deg % 2) odd.push_back(site);
  }
  std::vector<Site> listed = term.odd_sites;
  std::sort(listed.begin(), listed.end());
  if (odd != listed) return false;
  return std::all_of(odd.begin(), odd.end(),
                     [&](const Site& s) { return std::find(marked.begin(), marked.end(), s) != marked.end(); });
}

std::vector<Contour> extract_contours(const SpinConfiguration& cfg) {
  if (cfg.bc() != BoundaryCondition::Plus) throw std::invalid_argument("contours require plus boundary conditions");
  const Box& box = cfg.box();
  const int d = box.dim();
  if (d < 2) throw std::invalid_argument("contours require dimension >= 2");

  std::vector<Face> faces;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Site x = box.site_at(i);
    const int sx = cfg.at(i);
    for (int k = 0; k < d; ++k) {
      const Site up = x + Site::unit(d, k, 1);
      const Site down = x + Site::unit(d, k, -1);
      if (box.contains(up)) {
        if (cfg.at(box.index_of(up)) != sx) faces.push_back({x, k});
      } else if (sx < 0) {
        faces.push_back({x, k});
      }
      if (!box.contains(down) && sx < 0) faces.push_back({down, k});
    }
  }
  std::sort(faces.begin(), faces.end());

  // Ridges in doubled coordinates: face (x, k) has ridge centres
  // 2x + e_k +- e_j for j != k.
  std::vector<std::size_t> parent(faces.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  std::map<Site, std::size_t> ridge_owner;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    Site doubled = faces[f].lower;
    for (int k = 0; k < d; ++k) doubled[k] *= 2;
    doubled[faces[f].axis] += 1;
    for (int j = 0; j < d; ++j) {
      if (j == faces[f].axis) continue;
      for (int sign : {-1, 1}) {
        const Site ridge = doubled + Site::unit(d, j, sign);
        auto [it, inserted] = ridge_owner.emplace(ridge, f);
        if (!inserted) parent[find(f)] = find(it->second);
      }
    }
  }

  std::map<std::size_t, std::size_t> slot;
  std::vector<Contour> out;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const std::size_t r = find(f);
    auto [it, inserted] = slot.emplace(r, out.size());
    if (inserted) out.emplace_back();
    out[it->second].faces.push_back(faces[f]);
  }

  // Ray casting along -e_0: a site is enclosed when an odd number of the
  // contour's axis-0 faces lie strictly to its left on the same line.
  for (Contour& c : out) {
    for (std::size_t i = 0; i < box.size(); ++i) {
      const Site s = box.site_at(i);
      int crossings = 0;
      for (const Face& f : c.faces) {
        if (f.axis != 0 || f.lower[0] >= s[0]) continue;
        bool same_line = true;
        for (int k = 1; k < d; ++k) same_line = same_line && f.lower[k] == s[k];
        crossings += same_line;
      }
      if (crossings % 2) c.interior.push_back(s);
    }
  }
  return out;
}

namespace {

// Sums f(contours, cfg) over all plus-bc configurations of the box.
template <class Term>
double sum_over_contour_families(const Box& box, const ExpansionOptions& opts, Term&& term) {
  check_sites(box, opts);
  return chunked_sum(box.size(), opts.workers, [&](std::uint64_t begin, std::uint64_t end) {
    double acc = 0.0;
    for (std::uint64_t bits = begin; bits < end; ++bits) {
      const SpinConfiguration cfg = SpinConfiguration::from_state_bits(box, BoundaryCondition::Plus, bits);
      acc += term(extract_contours(cfg));
    }
    return acc;
  });
}

}  // namespace

double contour_partition_sum(const Box& box, double beta, const ExpansionOptions& opts) {
  return sum_over_contour_families(box, opts, [&](const std::vector<Contour>& gammas) {
    double w = 1.0;
    for (const Contour& g : gammas) w *= std::exp(-2.0 * beta * static_cast<double>(g.length()));
    return w;
  });
}

double sigmaA_contour_sum(const Box& box, double beta, std::span<const Site> a, const ExpansionOptions& opts) {
  for (const Site& s : a) {
    if (!box.contains(s)) throw std::invalid_argument("site " + s.str() + " is outside the box");
  }
  const double xi_a = sum_over_contour_families(box, opts, [&](const std::vector<Contour>& gammas) {
    double w = 1.0;
    for (const Contour& g : gammas) {
      std::size_t inside = 0;
      for (const Site& s : a) inside += std::binary_search(g.interior.begin(), g.interior.end(), s);
      w *= (inside % 2 ? -1.0 : 1.0) * std::exp(-2.0 * beta * static_cast<double>(g.length()));
    }
    return w;
  });
  return xi_a / contour_partition_sum(box, beta, opts);
}

double minus_island_sum(const Box& box, double beta, double h, const IslandQuery& q, const ExpansionOptions& opts) {
  check_sites(box, opts);
  if (!q.t.empty() && q.t.size() != q.marked.size()) throw std::invalid_argument("need one t per marked site");
  const std::uint64_t amask = marked_mask(box, q.marked);
  const BoxAdjacency adj(box);
  const auto edges = adj.edge_list();
  std::vector<double> tilt(box.size(), 1.0);
  for (std::size_t k = 0; k < q.t.size(); ++k) tilt[box.index_of(q.marked[k])] = std::exp(-2.0 * q.t[k]);
  return chunked_sum(box.size(), opts.workers, [&](std::uint64_t begin, std::uint64_t end) {
    double acc = 0.0;
    for (std::uint64_t lm = begin; lm < end; ++lm) {
      long boundary = 0;
      for (const auto& [u, v] : edges) boundary += ((lm >> u) ^ (lm >> v)) & 1U;
      double w = 1.0;
      for (std::uint64_t rest = lm; rest; rest &= rest - 1) {
        const auto i = static_cast<std::size_t>(std::countr_zero(rest));
        boundary += adj.exterior_degree(i);
        w *= tilt[i];
      }
      const int size = std::popcount(lm);
      w *= std::exp(-2.0 * beta * static_cast<double>(boundary) - 2.0 * h * size);
      if (q.signed_sum && std::popcount(lm & amask) % 2) w = -w;
      acc += w;
    }
    return acc;
  });
}

double relative_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

namespace {

ExactOptions exact_options(const ExpansionOptions& opts) {
  ExactOptions e;
  e.site_cap = opts.site_cap;
  e.workers = opts.workers;
  return e;
}

IsingParams params_for(const Box& box, double beta, double h, BoundaryCondition bc) {
  IsingParams p;
  p.d = box.dim();
  p.beta = beta;
  p.h = h;
  p.bc = bc;
  p.validate();
  return p;
}

double correlation(const Box& box, const IsingParams& p, std::span<const Site> a, const ExpansionOptions& opts) {
  std::vector<std::size_t> idx;
  for (const Site& s : a) idx.push_back(box.index_of(s));
  return expectation(
      box, p,
      [&](const SpinConfiguration& cfg) {
        double v = 1.0;
        for (std::size_t i : idx) v *= cfg.at(i);
        return v;
      },
      exact_options(opts));
}

std::string sites_detail(std::span<const Site> a) {
  std::string out = "A=";
  for (std::size_t k = 0; k < a.size(); ++k) out += (k ? ";" : "") + a[k].str();
  return out;
}

IdentityCheck make_check(std::string rep, std::string detail, const Box& box, double beta, double h, double lhs,
                         double rhs) {
  IdentityCheck c{std::move(rep), std::move(detail), box, beta, h, lhs, rhs, 0.0};
  c.rel_error = relative_error(lhs, rhs);
  return c;
}

}  // namespace

IdentityCheck verify_high_temperature(const Box& box, double beta, double h, const ExpansionOptions& opts) {
  const std::size_t n_edges = BoxAdjacency(box).interior_edge_count();
  std::vector<Site> marked;
  std::vector<double> t;
  if (h != 0.0) {
    marked = box.sites();
    t.assign(marked.size(), h);
  }
  double log_lhs = static_cast<double>(box.size()) * std::log(2.0) +
                   static_cast<double>(n_edges) * std::log(std::cosh(beta)) +
                   std::log(even_subgraph_sum(box, marked, beta, t, opts));
  for (double tk : t) log_lhs += std::log(std::cosh(tk));
  const double rhs = partition_function(box, params_for(box, beta, h, BoundaryCondition::Free), exact_options(opts)).value();
  return make_check("high_temperature", h != 0.0 ? "field folded into marks" : "", box, beta, h, std::exp(log_lhs), rhs);
}

IdentityCheck verify_contour(const Box& box, double beta, const ExpansionOptions& opts) {
  const double n_edges = static_cast<double>(boundary_edges(box).size());
  const double lhs = std::exp(beta * n_edges) * contour_partition_sum(box, beta, opts);
  const double rhs = partition_function(box, params_for(box, beta, 0.0, BoundaryCondition::Plus), exact_options(opts)).value();
  return make_check("contour", "", box, beta, 0.0, lhs, rhs);
}

IdentityCheck verify_contour_correlation(const Box& box, double beta, std::span<const Site> a,
                                         const ExpansionOptions& opts) {
  const double lhs = sigmaA_contour_sum(box, beta, a, opts);
  const double rhs = correlation(box, params_for(box, beta, 0.0, BoundaryCondition::Plus), a, opts);
  return make_check("contour_correlation", sites_detail(a), box, beta, 0.0, lhs, rhs);
}

IdentityCheck verify_strong_field(const Box& box, double beta, double h, const ExpansionOptions& opts) {
  const double n_edges = static_cast<double>(boundary_edges(box).size());
  const double lhs =
      std::exp(beta * n_edges + h * static_cast<double>(box.size())) * minus_island_sum(box, beta, h, {}, opts);
  const double rhs = partition_function(box, params_for(box, beta, h, BoundaryCondition::Plus), exact_options(opts)).value();
  return make_check("strong_field", "", box, beta, h, lhs, rhs);
}

IdentityCheck verify_strong_field_correlation(const Box& box, double beta, double h, std::span<const Site> a,
                                              const ExpansionOptions& opts) {
  IslandQuery q;
  q.marked.assign(a.begin(), a.end());
  q.signed_sum = true;
  const double lhs = minus_island_sum(box, beta, h, q, opts) / minus_island_sum(box, beta, h, {}, opts);
  const double rhs = correlation(box, params_for(box, beta, h, BoundaryCondition::Plus), a, opts);
  return make_check("strong_field_correlation", sites_detail(a), box, beta, h, lhs, rhs);
}

IdentityCheck verify_strong_field_mgf(const Box& box, double beta, double h, std::span<const Site> a,
                                      std::span<const double> t, const ExpansionOptions& opts) {
  IslandQuery q;
  q.marked.assign(a.begin(), a.end());
  q.t.assign(t.begin(), t.end());
  const double shift = std::accumulate(t.begin(), t.end(), 0.0);
  const double lhs = std::exp(shift) * minus_island_sum(box, beta, h, q, opts) / minus_island_sum(box, beta, h, {}, opts);
  std::vector<double> extra(box.size(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) extra[box.index_of(a[k])] += t[k];
  const IsingParams p = params_for(box, beta, h, BoundaryCondition::Plus);
  const double rhs = std::exp(partition_function(box, p, exact_options(opts), extra).log -
                              partition_function(box, p, exact_options(opts)).log);
  return make_check("strong_field_mgf", sites_detail(a), box, beta, h, lhs, rhs);
}

std::vector<IdentityCheck> run_expansion_suite(const ExpansionSuite& suite, const ExpansionOptions& opts) {
  std::vector<IdentityCheck> out;
  auto push = [&](IdentityCheck c) {
    c.rhs = c.rhs != 0.0 ? c.rhs * (1.0 + suite.perturbation) : suite.perturbation;
    c.rel_error = relative_error(c.lhs, c.rhs);
    out.push_back(std::move(c));
  };
  for (const auto& ext : suite.extents) {
    const Box box = Box::from_extents(ext);
    std::vector<Site> a{box.site_at(0)};
    if (box.size() > 1) a.push_back(box.site_at(1));
    const std::vector<double> t = {0.3, -0.2};
    for (double beta : suite.betas) {
      for (double h : suite.fields) {
        push(verify_high_temperature(box, beta, h, opts));
        if (h == 0.0 && box.dim() >= 2) {
          push(verify_contour(box, beta, opts));
          push(verify_contour_correlation(box, beta, a, opts));
        }
        push(verify_strong_field(box, beta, h, opts));
        push(verify_strong_field_correlation(box, beta, h, a, opts));
        push(verify_strong_field_mgf(box, beta, h, a, std::span<const double>(t.data(), a.size()), opts));
      }
    }
  }
  return out;
}

}  // namespace iwdg
