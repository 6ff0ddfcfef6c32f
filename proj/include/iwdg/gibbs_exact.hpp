#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iwdg/cumulants.hpp"
#include "iwdg/lattice.hpp"

namespace iwdg {

enum class BoundaryCondition { Free, Plus, Minus };

std::string_view to_string(BoundaryCondition bc);
BoundaryCondition parse_boundary_condition(std::string_view text);

// Value of the frozen exterior spins: +1 or -1. Throws BoundaryReadError
// under Free.
int ghost_spin(BoundaryCondition bc);

struct IsingParams {
  int d = 2;
  double beta = 0.0;
  double h = 0.0;
  BoundaryCondition bc = BoundaryCondition::Free;

  void validate() const;
};

class SpinConfiguration {
 public:
  SpinConfiguration(Box box, BoundaryCondition bc, int fill = +1);
  SpinConfiguration(Box box, BoundaryCondition bc, std::vector<std::int8_t> spins);

  // Configuration whose bit i (site index i) set means spin -1.
  static SpinConfiguration from_state_bits(const Box& box, BoundaryCondition bc, std::uint64_t bits);

  const Box& box() const { return box_; }
  BoundaryCondition bc() const { return bc_; }
  std::size_t size() const { return spins_.size(); }

  // Spin at any site; exterior sites resolve through the boundary condition.
  int spin(const Site& s) const;
  bool readable(const Site& s) const;

  int at(std::size_t index) const { return spins_[index]; }
  void set(std::size_t index, int value) { spins_[index] = static_cast<std::int8_t>(value >= 0 ? 1 : -1); }
  void flip(std::size_t index) { spins_[index] = static_cast<std::int8_t>(-spins_[index]); }

  std::span<const std::int8_t> spins() const { return spins_; }
  long magnetization() const;

  bool operator==(const SpinConfiguration&) const = default;

 private:
  Box box_;
  BoundaryCondition bc_;
  std::vector<std::int8_t> spins_;
};

// -beta * sum_{edges} s_i s_j - h * sum_i s_i, with interior edges under Free
// and interior-plus-crossing edges otherwise.
double hamiltonian(const SpinConfiguration& cfg, const IsingParams& p);

struct ExactOptions {
  std::size_t site_cap = 25;        // exhaustive enumeration limit
  std::size_t table_site_cap = 24;  // limit for materialised 2^N tables
  unsigned workers = 0;             // 0: process default
};

// A positive real held as its natural logarithm.
struct LogValue {
  double log = 0.0;
  double value() const;
  // value = mantissa * 10^exponent with 1 <= mantissa < 10.
  std::pair<double, long> mantissa_exponent() const;
};

using Observable = std::function<double(const SpinConfiguration&)>;

// Z = sum over configurations of exp(-H). `extra_field`, when nonempty, adds
// a per-site field (indexed like the box) on top of p.h.
LogValue partition_function(const Box& box, const IsingParams& p, const ExactOptions& opts = {},
                            std::span<const double> extra_field = {});

double expectation(const Box& box, const IsingParams& p, const Observable& f,
                   const ExactOptions& opts = {});
std::vector<double> expectations(const Box& box, const IsingParams& p,
                                 std::span<const Observable> fs, const ExactOptions& opts = {});

// Gibbs probabilities indexed by state bits (bit i set means spin i is -1).
std::vector<double> exact_state_probabilities(const Box& box, const IsingParams& p,
                                              const ExactOptions& opts = {});

// All correlations <sigma_A>, A a subset of the box, from one enumeration
// followed by a Walsh-Hadamard transform of the Gibbs vector.
class ExactMomentTable {
 public:
  ExactMomentTable(const Box& box, const IsingParams& p, const ExactOptions& opts = {});

  const Box& box() const { return box_; }
  const IsingParams& params() const { return params_; }

  // <prod_{i in mask} sigma_i>
  double moment(std::uint64_t mask) const { return moments_[mask]; }
  // Moment of a site multiset; repeated sites cancel in pairs.
  double moment(std::span<const Site> sites) const;
  std::uint64_t mask_of(std::span<const Site> sites) const;
  // <sigma_A> as sign and log|.|; in an ordered phase the log comes from the
  // minority indicators and resolves values within rounding of +-1.
  SignedLog signed_log_moment(std::span<const Site> sites) const;

  // Joint cumulant of the spins at a multiset of at most 6 sites. In an
  // ordered phase (mean spin beyond +-1/2) cumulants of order >= 2 are taken
  // from minority-spin indicators, whose moments are sums of nonnegative
  // terms; the +-1 moments are then all close to 1 and cancel badly.
  double cumulant(std::span<const Site> sites) const;
  // Rough bound on the floating-point error of cumulant(sites); values
  // below it are indistinguishable from zero.
  double cumulant_rounding(std::span<const Site> sites) const;

  // +1 or -1 when minority indicators are in use, else 0.
  int minority_spin() const { return minority_; }

 private:
  Box box_;
  IsingParams params_;
  std::vector<double> moments_;
  int minority_ = 0;
  std::vector<double> minority_moments_;  // P(sigma_i = minority for i in mask)

  enum class Mode { Value, Magnitude, PerturbedMagnitude };
  double cumulant_impl(std::span<const Site> sites, Mode mode) const;
};

// Convenience: builds a moment table for a single query.
double exact_joint_cumulant(const Box& box, const IsingParams& p, std::span<const Site> sites,
                            const ExactOptions& opts = {});

}  // namespace iwdg
