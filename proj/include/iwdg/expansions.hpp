#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iwdg/gibbs_exact.hpp"
#include "iwdg/lattice.hpp"

namespace iwdg {

struct ExpansionOptions {
  std::size_t edge_cap = 24;  // 2^edges high-temperature enumeration
  std::size_t site_cap = 20;  // 2^sites configuration / island enumeration
  unsigned workers = 0;
};

// ---- high temperature -----------------------------------------------------

// One (E, B) pair: E an edge subset of the box, B the sites of odd degree in
// E (necessarily a subset of the marked sites).
struct EvenSubgraphTerm {
  EdgeSet edges;
  std::vector<Site> odd_sites;
  double weight = 0.0;  // tanh(beta)^|E| * prod_{j in B} tanh(t_j)
};

// Xi^A = sum over (E, B) of the term weights, where site A[k] carries the
// extra field t[k]. Free boundary conditions, interior edges only. Then
//   sum_w exp(sum_k t_k s_{A[k]} - H_{beta,0}) = 2^N cosh(beta)^|E| prod cosh(t_k) Xi^A.
double even_subgraph_sum(const Box& box, std::span<const Site> marked, double beta,
                         std::span<const double> t, const ExpansionOptions& opts = {});

// Materialises the nonzero terms; for validation on small boxes.
std::vector<EvenSubgraphTerm> even_subgraph_terms(const Box& box, std::span<const Site> marked, double beta,
                                                  std::span<const double> t, const ExpansionOptions& opts = {});

// Recomputes degrees from scratch: odd degree iff listed in odd_sites, and
// every odd site is marked.
bool even_term_parity_ok(const EvenSubgraphTerm& term, std::span<const Site> marked);

// ---- contours ---------------------------------------------------------------

// The unit (d-1)-face separating `lower` from lower + e_axis.
struct Face {
  Site lower;
  int axis = 0;
  auto operator<=>(const Face&) const = default;
  bool operator==(const Face&) const = default;
};

struct Contour {
  std::vector<Face> faces;      // sorted
  std::vector<Site> interior;   // box sites enclosed by the faces, lexicographic
  std::size_t length() const { return faces.size(); }
  bool operator==(const Contour&) const = default;
};

// Connected components of the boundary of the union of unit cubes around the
// minus sites, with the exterior fixed to +1. Faces are connected when they
// share a (d-2)-cell. Requires Plus bc and d >= 2. Sorted by first face.
std::vector<Contour> extract_contours(const SpinConfiguration& cfg);

// Xi^+ = sum over configurations of prod_gamma exp(-2 beta |gamma|).
double contour_partition_sum(const Box& box, double beta, const ExpansionOptions& opts = {});

// <sigma_A>^+ at h = 0 as Xi^{+,A} / Xi^+, with the sign of each term read
// from contour interiors.
double sigmaA_contour_sum(const Box& box, double beta, std::span<const Site> a, const ExpansionOptions& opts = {});

// ---- strong field -------------------------------------------------------------

// Sum over minus islands L of exp(-2 beta |d_e L| - 2h |L|), optionally
// multiplied by (-1)^{|A cap L|} (signed) and by prod_{i in A cap L} exp(-2 t_i)
// (t nonempty, one entry per marked site). d_e L counts edges with at least one
// endpoint in the box and exactly one endpoint in L.
struct IslandQuery {
  std::vector<Site> marked;
  std::vector<double> t;
  bool signed_sum = false;
};
double minus_island_sum(const Box& box, double beta, double h, const IslandQuery& q = {},
                        const ExpansionOptions& opts = {});

// ---- identity checks ----------------------------------------------------------

struct IdentityCheck {
  std::string representation;
  std::string detail;
  Box box;
  double beta = 0.0;
  double h = 0.0;
  double lhs = 0.0;  // from the representation
  double rhs = 0.0;  // from direct enumeration
  double rel_error = 0.0;
};

double relative_error(double a, double b);

// Z = 2^N cosh(beta)^|E| Xi (Free bc). For h != 0 every site is marked with
// t = h, which folds the uniform field into the representation.
IdentityCheck verify_high_temperature(const Box& box, double beta, double h, const ExpansionOptions& opts = {});
// Z^+ = exp(beta |E^b|) Xi^+ at h = 0.
IdentityCheck verify_contour(const Box& box, double beta, const ExpansionOptions& opts = {});
IdentityCheck verify_contour_correlation(const Box& box, double beta, std::span<const Site> a,
                                         const ExpansionOptions& opts = {});
// Z^+ = exp(beta |E^b| + h |Box|) sum_L wt(L).
IdentityCheck verify_strong_field(const Box& box, double beta, double h, const ExpansionOptions& opts = {});
// <sigma_A>^+ from the signed island sum.
IdentityCheck verify_strong_field_correlation(const Box& box, double beta, double h, std::span<const Site> a,
                                              const ExpansionOptions& opts = {});
// E^+[exp(sum t_i s_i)] from the generating-function island sum.
IdentityCheck verify_strong_field_mgf(const Box& box, double beta, double h, std::span<const Site> a,
                                      std::span<const double> t, const ExpansionOptions& opts = {});

struct ExpansionSuite {
  std::vector<std::vector<int>> extents = {{1, 1}, {1, 2}, {2, 2}, {2, 3}, {3, 3}};
  std::vector<double> betas = {0.0, 0.2, 0.5, 1.2};
  std::vector<double> fields = {0.0, 0.5, 1.5};
  // Multiplies every direct-enumeration value by (1 + perturbation); exact
  // zeros are replaced by the perturbation itself.
  double perturbation = 0.0;
};

// High-temperature checks at h = 0 (and folded-field checks at h != 0),
// contour checks at h = 0, strong-field checks at every h; plus correlation
// variants for the two first sites of each box.
std::vector<IdentityCheck> run_expansion_suite(const ExpansionSuite& suite, const ExpansionOptions& opts = {});

}  // namespace iwdg
