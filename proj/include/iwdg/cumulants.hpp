#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iwdg/lattice.hpp"

namespace iwdg {

class SampleBatch;
struct Estimate;

inline constexpr int kMaxCumulantOrder = 6;
inline constexpr int kMaxEstimatedOrder = 4;

// Blocks of a set partition of {0, ..., r-1}, each block sorted.
using SetPartition = std::vector<std::vector<int>>;

// All set partitions of {0..r-1}, generated from restricted growth strings
// and cached per r. Bell(6) = 203.
const std::vector<SetPartition>& set_partitions(int r);

// Throws std::invalid_argument unless 1 <= r <= kMaxCumulantOrder.
void check_cumulant_order(int r);

// moment(idx) must return E[prod_{i in idx} X_i] for a nonempty sorted
// index subset of {0..r-1}.
using MomentOracle = std::function<double(std::span<const int>)>;

// kappa(X_0..X_{r-1}) = sum_pi (-1)^{|pi|-1} (|pi|-1)! prod_B E[prod_B X].
double cumulant_from_moments(const MomentOracle& moment, int r);
// sum_pi (|pi|-1)! prod_B |E[prod_B X]|: the scale that rounding errors in
// the sum above are relative to.
double cumulant_term_magnitude(const MomentOracle& moment, int r);

// Plug-in cumulant of the spins at `sites` (a multiset, r <= 4) from the
// empirical moments of the batch; the error bar is the batch-means spread of
// per-batch plug-in values.
Estimate estimated_cumulant(const SampleBatch& batch, std::span<const Site> sites,
                            std::size_t n_batches = 20);

// Q(Y_j; j in A) = prod over nonempty subsets delta of <prod_delta Y>^{(-1)^{|delta|}}.
// Throws UndefinedQuantityError when a sub-expectation vanishes.
using SetExpectation = std::function<double(std::span<const Site>)>;
double q_quantity(const SetExpectation& expectation, std::span<const Site> A);

// An expectation held as sign * exp(log), for values within rounding of 1.
struct SignedLog {
  double log = 0.0;
  int sign = 1;  // 0 for a vanishing expectation
};
using SetLogExpectation = std::function<SignedLog(std::span<const Site>)>;
// Q - 1 accumulated in log space, so that |Q - 1| far below the double
// resolution near 1 stays meaningful.
double q_quantity_minus_one(const SetLogExpectation& expectation, std::span<const Site> A);

// Cumulant of the indicators (sigma+1)/2 from the spin cumulant, r >= 2.
double spin_to_indicator_cumulant(double kappa_sigma, int r);

// Joint cumulants keyed by site multisets.
class CumulantTable {
 public:
  enum class Provenance { Exact, Estimated };

  struct Entry {
    double value = 0.0;
    std::optional<double> std_error;
  };

  explicit CumulantTable(Provenance provenance) : provenance_(provenance) {}

  Provenance provenance() const { return provenance_; }

  // Keys are canonicalised (sorted); exact tables reject error bars and
  // estimated tables require them.
  void insert(std::vector<Site> sites, double value, std::optional<double> std_error = std::nullopt);
  const Entry* find(std::vector<Site> sites) const;
  const Entry& at(std::vector<Site> sites) const;
  std::size_t size() const { return entries_.size(); }

  const std::map<std::vector<Site>, Entry>& entries() const { return entries_; }

  // sites,value,std_error,provenance. Sites joined by ';', coordinates of a
  // site joined by ' '.
  void write_csv(std::ostream& out) const;
  static CumulantTable read_csv(std::istream& in);

 private:
  Provenance provenance_;
  std::map<std::vector<Site>, Entry> entries_;
};

std::string format_site_multiset(std::span<const Site> sites);
std::vector<Site> parse_site_multiset(const std::string& text);

// Sorted site sets (or multisets) with 1..max_size elements drawn from the
// box, in lexicographic order of box indices.
std::vector<std::vector<Site>> site_combinations(const Box& box, int max_size, bool with_repetition);

}  // namespace iwdg
