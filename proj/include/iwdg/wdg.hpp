#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iwdg/cumulants.hpp"
#include "iwdg/lattice.hpp"

namespace iwdg {

// Complete graph over a (possibly infinite) vertex domain, given by a
// symmetric weight function with values in [0, 1]. Identical vertices are
// joined with weight exactly 1.
template <class Vertex>
class WeightedGraph {
 public:
  using WeightFn = std::function<double(const Vertex&, const Vertex&)>;

  explicit WeightedGraph(WeightFn w) : w_(std::move(w)) {}

  double weight(const Vertex& a, const Vertex& b) const {
    if (a == b) return 1.0;
    const double w = w_(a, b);
    if (!(w >= 0.0 && w <= 1.0)) throw std::domain_error("edge weight outside [0, 1]");
    return w;
  }

 private:
  WeightFn w_;
};

struct SpanningTree {
  double weight = 0.0;  // product of edge weights; 1 for a single vertex
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // positions in the multiset
};

// Maximum over spanning trees of G[B] of the product of edge weights
// (Kruskal on log-weights). Disconnected under nonzero weights: weight 0 and
// no edges.
template <class Vertex>
SpanningTree max_weight_spanning_tree(const WeightedGraph<Vertex>& g, std::span<const Vertex> b) {
  if (b.empty()) throw std::invalid_argument("spanning tree of an empty vertex multiset");
  const std::size_t n = b.size();
  struct Candidate {
    double log_w;
    std::size_t u, v;
  };
  std::vector<Candidate> cand;
  cand.reserve(n * (n - 1) / 2);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double w = g.weight(b[u], b[v]);
      if (w > 0.0) cand.push_back({std::log(w), u, v});
    }
  }
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) { return x.log_w > y.log_w; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  SpanningTree tree;
  double log_total = 0.0;
  for (const auto& c : cand) {
    const std::size_t ru = find(c.u), rv = find(c.v);
    if (ru == rv) continue;
    parent[ru] = rv;
    log_total += c.log_w;
    tree.edges.emplace_back(c.u, c.v);
    if (tree.edges.size() + 1 == n) break;
  }
  if (tree.edges.size() + 1 != n) return SpanningTree{0.0, {}};
  tree.weight = std::exp(log_total);
  return tree;
}

// G^m: vertices are multisets of at most m vertices, w_m(I, J) = max over
// i in I, j in J of w(i, j).
template <class Vertex>
WeightedGraph<std::vector<Vertex>> power_graph(const WeightedGraph<Vertex>& g, int m) {
  if (m < 1) throw std::invalid_argument("graph power must be >= 1");
  return WeightedGraph<std::vector<Vertex>>([g, m](const std::vector<Vertex>& I, const std::vector<Vertex>& J) {
    if (I.empty() || J.empty() || I.size() > static_cast<std::size_t>(m) || J.size() > static_cast<std::size_t>(m)) {
      throw std::invalid_argument("power-graph vertices are multisets of size 1.." + std::to_string(m));
    }
    double best = 0.0;
    for (const Vertex& i : I) {
      for (const Vertex& j : J) best = std::max(best, g.weight(i, j));
    }
    return best;
  });
}

// Sum of w(u, v) over u != v in the restriction.
template <class Vertex>
double weighted_degree(const WeightedGraph<Vertex>& g, const Vertex& v, std::span<const Vertex> restriction) {
  double total = 0.0;
  for (const Vertex& u : restriction) {
    if (!(u == v)) total += g.weight(u, v);
  }
  return total;
}

// Ising dependency weights w(i, j) = epsilon^{dist(i, j) / 2}.
struct IsingWdgSpec {
  double epsilon = 0.5;
  int d = 2;

  void validate() const;
  double weight(const Site& a, const Site& b) const;
  WeightedGraph<Site> graph() const;
};

enum class Sign : signed char { Minus = -1, Plus = 1 };

struct SignedSite {
  Site site;
  Sign sign = Sign::Plus;
  bool operator==(const SignedSite&) const = default;
};

// The sign is ignored: w((i, s), (j, t)) = epsilon^{dist(i, j) / 2}.
WeightedGraph<SignedSite> signed_graph(const IsingWdgSpec& spec);

// Maximal weighted degree plus one over a finite vertex set (Delta_n).
double max_weighted_degree_plus_one(const WeightedGraph<Site>& g, std::span<const Site> vertices);

// Decay rate of the pair cumulants: for each distance, the largest |kappa_2|
// over pairs at that distance; epsilon = exp(slope) of a least-squares fit of
// the log envelope against distance, so |kappa_2| ~ epsilon^{dist}.
struct EpsilonFit {
  double epsilon = 0.0;
  double intercept = 0.0;  // log of the prefactor
  std::vector<std::pair<int, double>> envelope;  // (distance, max |kappa_2|)
};
EpsilonFit fit_epsilon_from_pairs(const CumulantTable& table);

struct WdgOrderReport {
  int r = 0;
  double c_r = 0.0;  // smallest feasible constant (inf if some M(G[B]) = 0 with kappa != 0)
  std::vector<Site> worst;
  std::size_t tested = 0;
  // Counts of |kappa| / (C_r M) in decades: [1e-1, 1], [1e-2, 1e-1), ...,
  // last bin everything below 1e-(bins-1) including exact zeros.
  std::vector<std::size_t> margin_histogram;
};

struct WdgReport {
  std::vector<WdgOrderReport> orders;
};

// For every table entry of size r <= r_max: smallest C_r with
// |kappa(B)| <= C_r M(G[B]).
WdgReport check_wdg_inequality(const CumulantTable& table, const WeightedGraph<Site>& g, int r_max,
                               std::size_t histogram_bins = 8);

}  // namespace iwdg
