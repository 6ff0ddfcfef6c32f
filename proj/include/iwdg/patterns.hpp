#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iwdg/gibbs_exact.hpp"
#include "iwdg/lattice.hpp"
#include "iwdg/wdg.hpp"

namespace iwdg {

// Finite shape around the origin with a prescribed sign at each offset.
struct LocalPattern {
  std::vector<Site> shape;
  std::vector<Sign> signs;

  void validate() const;
  int dim() const { return shape.front().dim(); }
  std::size_t size() const { return shape.size(); }
  // max L1 distance between two offsets of the shape
  int diameter() const;

  // + at the origin, - at the 2d nearest neighbours.
  static LocalPattern isolated_plus(int d);
  static LocalPattern single_site(int d, Sign sign);
};

// d total orders on {0..m-1} stored as ranks: ranks[k][i] is the position of
// element i in the k-th order.
struct GlobalPattern {
  int m = 0;
  std::vector<std::vector<int>> ranks;
  std::vector<Sign> signs;

  void validate() const;
  int dim() const { return static_cast<int>(ranks.size()); }
  bool all_plus() const;

  // orders[k] lists the elements 1..m from smallest to largest.
  static GlobalPattern from_orders(const std::vector<std::vector<int>>& orders, std::vector<Sign> signs);
  // Both orders natural, all signs equal: a north-east chain.
  static GlobalPattern chain(int d, int m, Sign sign = Sign::Plus);
};

using Pattern = std::variant<LocalPattern, GlobalPattern>;

// {"local": {"shape": [[0,0],...], "signs": "+-..."}} or
// {"global": {"m": 2, "orders": [[1,2],[1,2]], "signs": "++"}}
Pattern parse_pattern(std::string_view json_text);
std::string pattern_to_json(const Pattern& p);

struct PatternCount {
  std::int64_t value = 0;
  Box box;
};

// 1 iff sigma_{i+j} = s(j) for every offset j. Throws BoundaryReadError when
// an offset falls outside the box under free boundary conditions.
int local_indicator(const SpinConfiguration& cfg, const LocalPattern& p, const Site& position);

// Sum of indicators over positions in `box`. Under free boundary conditions,
// positions whose shape leaves the configuration box are skipped; under +/-
// conditions the exterior is read through the boundary condition.
PatternCount count_local(const SpinConfiguration& cfg, const LocalPattern& p, const Box& box);

// 1 iff some labelling of X satisfies the sign and order conditions.
int global_indicator(const SpinConfiguration& cfg, const GlobalPattern& p, std::span<const Site> x);

inline constexpr double kDefaultGlobalBudget = 4e9;

// Number of m-subsets of `box` that are occurrences. Enumerates subsets in
// lexicographic site order with per-level sign and order pruning; throws
// CapExceededError when C(#candidate sites, m) exceeds `budget`.
PatternCount count_global(const SpinConfiguration& cfg, const GlobalPattern& p, const Box& box,
                          double budget = kDefaultGlobalBudget);

// Power-graph weight between the occurrences at two positions:
// max over offsets j1, j2 of w(i1 + j1, i2 + j2).
double local_pattern_weight(const LocalPattern& p, const IsingWdgSpec& spec, const Site& i1, const Site& i2);
// Between two site sets: epsilon^{min cross distance / 2}.
double global_pattern_weight(const IsingWdgSpec& spec, std::span<const Site> x, std::span<const Site> y);

}  // namespace iwdg
