#include "iwdg/gibbs_exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "enumerate.hpp"
#include "iwdg/cumulants.hpp"
#include "iwdg/error.hpp"

namespace iwdg {

std::string_view to_string(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::Free: return "free";
    case BoundaryCondition::Plus: return "plus";
    case BoundaryCondition::Minus: return "minus";
  }
  return "?";
}

BoundaryCondition parse_boundary_condition(std::string_view text) {
  if (text == "free") return BoundaryCondition::Free;
  if (text == "plus" || text == "+") return BoundaryCondition::Plus;
  if (text == "minus" || text == "-") return BoundaryCondition::Minus;
  throw std::invalid_argument("unknown boundary condition '" + std::string(text) + "'");
}

int ghost_spin(BoundaryCondition bc) {
  switch (bc) {
    case BoundaryCondition::Plus: return +1;
    case BoundaryCondition::Minus: return -1;
    case BoundaryCondition::Free: break;
  }
  throw BoundaryReadError("exterior spin read under free boundary conditions");
}

void IsingParams::validate() const {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("dimension out of range");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be finite and >= 0");
  if (!std::isfinite(h)) throw std::invalid_argument("h must be finite");
}

SpinConfiguration::SpinConfiguration(Box box, BoundaryCondition bc, int fill)
    : box_(std::move(box)), bc_(bc), spins_(box_.size(), static_cast<std::int8_t>(fill >= 0 ? 1 : -1)) {}

SpinConfiguration::SpinConfiguration(Box box, BoundaryCondition bc, std::vector<std::int8_t> spins)
    : box_(std::move(box)), bc_(bc), spins_(std::move(spins)) {
  if (spins_.size() != box_.size()) throw std::invalid_argument("spin vector does not match the box");
  for (auto s : spins_) {
    if (s != 1 && s != -1) throw std::invalid_argument("spins must be +1 or -1");
  }
}

SpinConfiguration SpinConfiguration::from_state_bits(const Box& box, BoundaryCondition bc,
                                                     std::uint64_t bits) {
  SpinConfiguration cfg(box, bc, +1);
  for (std::size_t i = 0; i < cfg.size() && i < 64; ++i) {
    if ((bits >> i) & 1U) cfg.spins_[i] = -1;
  }
  return cfg;
}

bool SpinConfiguration::readable(const Site& s) const {
  return box_.contains(s) || bc_ != BoundaryCondition::Free;
}

int SpinConfiguration::spin(const Site& s) const {
  if (box_.contains(s)) return spins_[box_.index_of(s)];
  if (s.dim() != box_.dim()) throw std::invalid_argument("site dimension mismatch");
  return ghost_spin(bc_);
}

long SpinConfiguration::magnetization() const {
  long m = 0;
  for (auto s : spins_) m += s;
  return m;
}

double hamiltonian(const SpinConfiguration& cfg, const IsingParams& p) {
  if (cfg.bc() != p.bc) throw std::invalid_argument("configuration and parameters disagree on the boundary condition");
  if (cfg.box().dim() != p.d) throw std::invalid_argument("configuration and parameters disagree on the dimension");
  const BoxAdjacency adj(cfg.box());
  const int ghost = p.bc == BoundaryCondition::Free ? 0 : ghost_spin(p.bc);
  double bonds = 0.0;
  double field = 0.0;
  for (std::size_t i = 0; i < adj.size(); ++i) {
    const int si = cfg.at(i);
    for (std::uint32_t j : adj.neighbors(i)) {
      if (j > i) bonds += si * cfg.at(j);
    }
    bonds += si * ghost * adj.exterior_degree(i);
    field += si;
  }
  return -p.beta * bonds - p.h * field;
}

double LogValue::value() const { return std::exp(log); }

std::pair<double, long> LogValue::mantissa_exponent() const {
  const double l10 = log / std::log(10.0);
  long e = static_cast<long>(std::floor(l10));
  double m = std::pow(10.0, l10 - static_cast<double>(e));
  if (m >= 10.0) {
    m /= 10.0;
    ++e;
  }
  return {m, e};
}

LogValue partition_function(const Box& box, const IsingParams& p, const ExactOptions& opts,
                            std::span<const double> extra_field) {
  p.validate();
  if (box.dim() != p.d) throw std::invalid_argument("box dimension differs from params.d");
  if (!extra_field.empty() && extra_field.size() != box.size()) {
    throw std::invalid_argument("extra field must have one entry per site");
  }
  std::vector<detail::LogSumExp> parts(detail::chunk_count(box.size()));
  detail::enumerate_chunked(box, p, opts, extra_field, [&](std::size_t c, auto&& run) {
    detail::LogSumExp acc;
    run([&](std::uint64_t, const SpinConfiguration&, double mh) { acc.add(mh); });
    parts[c] = acc;
  });
  detail::LogSumExp total;
  for (const auto& part : parts) detail::merge_into(total, part);
  return LogValue{total.log()};
}

namespace {

struct WeightedSums {
  double max = -std::numeric_limits<double>::infinity();
  double z = 0.0;
  std::vector<double> sums;
};

}  // namespace

std::vector<double> expectations(const Box& box, const IsingParams& p, std::span<const Observable> fs,
                                 const ExactOptions& opts) {
  p.validate();
  if (box.dim() != p.d) throw std::invalid_argument("box dimension differs from params.d");
  const std::size_t k = fs.size();
  std::vector<WeightedSums> parts(detail::chunk_count(box.size()));
  detail::enumerate_chunked(box, p, opts, {}, [&](std::size_t c, auto&& run) {
    WeightedSums acc;
    acc.sums.assign(k, 0.0);
    run([&](std::uint64_t, const SpinConfiguration& cfg, double mh) {
      double w = 1.0;
      if (mh > acc.max) {
        const double scale = acc.z == 0.0 ? 0.0 : std::exp(acc.max - mh);
        acc.z *= scale;
        for (auto& s : acc.sums) s *= scale;
        acc.max = mh;
      } else {
        w = std::exp(mh - acc.max);
      }
      acc.z += w;
      for (std::size_t q = 0; q < k; ++q) acc.sums[q] += w * fs[q](cfg);
    });
    parts[c] = std::move(acc);
  });
  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& part : parts) mx = std::max(mx, part.max);
  double z = 0.0;
  std::vector<double> sums(k, 0.0);
  for (const auto& part : parts) {
    if (part.z == 0.0) continue;
    const double scale = std::exp(part.max - mx);
    z += part.z * scale;
    for (std::size_t q = 0; q < k; ++q) sums[q] += part.sums[q] * scale;
  }
  for (auto& s : sums) s /= z;
  return sums;
}

double expectation(const Box& box, const IsingParams& p, const Observable& f, const ExactOptions& opts) {
  return expectations(box, p, std::span<const Observable>(&f, 1), opts).front();
}

std::vector<double> exact_state_probabilities(const Box& box, const IsingParams& p, const ExactOptions& opts) {
  p.validate();
  if (box.dim() != p.d) throw std::invalid_argument("box dimension differs from params.d");
  if (box.size() > opts.table_site_cap) {
    throw CapExceededError("box with " + std::to_string(box.size()) +
                           " sites exceeds the table cap of " + std::to_string(opts.table_site_cap));
  }
  std::vector<double> weights(std::size_t{1} << box.size());
  detail::enumerate_chunked(box, p, opts, {}, [&](std::size_t, auto&& run) {
    run([&](std::uint64_t state, const SpinConfiguration&, double mh) { weights[state] = mh; });
  });
  const double mx = *std::max_element(weights.begin(), weights.end());
  double z = 0.0;
  for (auto& w : weights) {
    w = std::exp(w - mx);
    z += w;
  }
  for (auto& w : weights) w /= z;
  return weights;
}

ExactMomentTable::ExactMomentTable(const Box& box, const IsingParams& p, const ExactOptions& opts)
    : box_(box), params_(p), moments_(exact_state_probabilities(box, p, opts)) {
  std::vector<double> probs = moments_;
  // In-place Walsh-Hadamard transform: afterwards moments_[A] equals
  // sum_w p(w) (-1)^{|w & A|} = <sigma_A>.
  const std::size_t n = moments_.size();
  for (std::size_t len = 1; len < n; len <<= 1) {
    for (std::size_t i = 0; i < n; i += len << 1) {
      for (std::size_t j = i; j < i + len; ++j) {
        const double a = moments_[j];
        const double b = moments_[j + len];
        moments_[j] = a + b;
        moments_[j + len] = a - b;
      }
    }
  }
  // Renormalise so that <1> is exactly 1 despite rounding in the
  // probabilities.
  const double total = moments_[0];
  for (double& m : moments_) m /= total;

  double mean_spin = 0.0;
  const std::size_t sites = box_.size();
  for (std::size_t i = 0; i < sites; ++i) mean_spin += moments_[std::size_t{1} << i];
  mean_spin /= static_cast<double>(sites);
  if (std::abs(mean_spin) <= 0.5) return;

  minority_ = mean_spin > 0 ? -1 : +1;
  // Superset sums: f[B] = sum over states whose minority set contains B.
  const std::size_t full = n - 1;
  minority_moments_.resize(n);
  for (std::size_t s = 0; s < n; ++s) minority_moments_[s] = minority_ < 0 ? probs[s] : probs[s ^ full];
  probs = {};
  for (std::size_t bit = 1; bit < n; bit <<= 1) {
    for (std::size_t m = 0; m < n; ++m) {
      if (!(m & bit)) minority_moments_[m] += minority_moments_[m | bit];
    }
  }
  const double norm = minority_moments_[0];
  for (double& m : minority_moments_) m /= norm;
}

std::uint64_t ExactMomentTable::mask_of(std::span<const Site> sites) const {
  std::uint64_t mask = 0;
  for (const Site& s : sites) mask ^= std::uint64_t{1} << box_.index_of(s);
  return mask;
}

double ExactMomentTable::moment(std::span<const Site> sites) const { return moments_[mask_of(sites)]; }

SignedLog ExactMomentTable::signed_log_moment(std::span<const Site> sites) const {
  const std::uint64_t mask = mask_of(sites);
  const int k = std::popcount(mask);
  if (minority_ == 0 || k > 16) {
    const double m = moments_[mask];
    return {std::log(std::abs(m)), m > 0 ? 1 : (m < 0 ? -1 : 0)};
  }
  // sigma_i = -minority * (1 - 2 eta_i), and prod_i (1 - 2 eta_i) expands
  // over submasks S as (-2)^{|S|} eta_S.
  double x = 0.0;
  for (std::uint64_t sub = mask; sub != 0; sub = (sub - 1) & mask) {
    x += std::ldexp(std::popcount(sub) % 2 == 0 ? 1.0 : -1.0, std::popcount(sub)) * minority_moments_[sub];
  }
  const int sign = (k % 2 == 1 && minority_ > 0) ? -1 : 1;
  if (x > -0.5) return {std::log1p(x), sign};
  const double v = 1.0 + x;
  return {std::log(std::abs(v)), v > 0 ? sign : (v < 0 ? -sign : 0)};
}

double ExactMomentTable::cumulant(std::span<const Site> sites) const { return cumulant_impl(sites, Mode::Value); }

double ExactMomentTable::cumulant_rounding(std::span<const Site> sites) const {
  // Moment errors pushed through the partition sum, plus the sum's own
  // roundings.
  const double mag = cumulant_impl(sites, Mode::Magnitude);
  const double perturbed = cumulant_impl(sites, Mode::PerturbedMagnitude);
  const double eps = std::numeric_limits<double>::epsilon();
  return (perturbed - mag) + static_cast<double>(sites.size() + 2) * eps * mag;
}

double ExactMomentTable::cumulant_impl(std::span<const Site> sites, Mode mode) const {
  std::vector<std::uint64_t> bits;
  bits.reserve(sites.size());
  for (const Site& s : sites) bits.push_back(std::uint64_t{1} << box_.index_of(s));
  const int r = static_cast<int>(sites.size());
  const auto combine = mode == Mode::Value ? cumulant_from_moments : cumulant_term_magnitude;
  // Each table entry carries O(N) roundings from its transform: absolute for
  // the signed +-1 sums, relative for the nonnegative indicator sums.
  const double slack = static_cast<double>(box_.size()) * std::numeric_limits<double>::epsilon();
  if (minority_ != 0 && r >= 2) {
    // sigma = 2 * minority * eta + const, and cumulants of order >= 2 ignore
    // the constant. eta^2 = eta, so repeated sites merge.
    const double k = combine(
        [&](std::span<const int> idx) {
          std::uint64_t mask = 0;
          for (int i : idx) mask |= bits[static_cast<std::size_t>(i)];
          const double m = minority_moments_[mask];
          return mode == Mode::PerturbedMagnitude ? m * (1 + slack) : m;
        },
        r);
    return (mode == Mode::Value ? std::pow(2.0 * minority_, r) : std::pow(2.0, r)) * k;
  }
  return combine(
      [&](std::span<const int> idx) {
        std::uint64_t mask = 0;
        for (int i : idx) mask ^= bits[static_cast<std::size_t>(i)];
        const double m = moments_[mask];
        return mode == Mode::PerturbedMagnitude ? std::abs(m) + slack : m;
      },
      r);
}

double exact_joint_cumulant(const Box& box, const IsingParams& p, std::span<const Site> sites,
                            const ExactOptions& opts) {
  const int r = static_cast<int>(sites.size());
  check_cumulant_order(r);
  std::vector<std::size_t> idx;
  for (const Site& s : sites) idx.push_back(box.index_of(s));
  // One enumeration yields every subset moment.
  const std::size_t subsets = std::size_t{1} << r;
  std::vector<Observable> fs;
  fs.reserve(subsets);
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    fs.emplace_back([&idx, mask](const SpinConfiguration& cfg) {
      int prod = 1;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        if ((mask >> i) & 1U) prod *= cfg.at(idx[i]);
      }
      return static_cast<double>(prod);
    });
  }
  const std::vector<double> m = expectations(box, p, fs, opts);
  return cumulant_from_moments(
      [&](std::span<const int> sub) {
        std::size_t mask = 0;
        for (int i : sub) mask |= std::size_t{1} << i;
        return m[mask];
      },
      r);
}

}  // namespace iwdg
