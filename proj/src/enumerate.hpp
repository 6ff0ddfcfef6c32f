#pragma once

// Gray-code enumeration of all spin configurations of a box with an
// incrementally maintained -H. Internal to the library.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "iwdg/error.hpp"
#include "iwdg/gibbs_exact.hpp"
#include "iwdg/parallel.hpp"

namespace iwdg::detail {

// Running sum of exp(x_k) kept as max + scaled sum.
struct LogSumExp {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  // Returns the factor previously accumulated values were rescaled by.
  double add(double x) {
    if (x > max) {
      const double scale = std::isinf(max) ? 0.0 : std::exp(max - x);
      sum = sum * scale + 1.0;
      max = x;
      return scale;
    }
    sum += std::exp(x - max);
    return 1.0;
  }
  double log() const { return max + std::log(sum); }
};

inline void merge_into(LogSumExp& acc, const LogSumExp& part) {
  if (part.sum == 0.0) return;
  if (acc.sum == 0.0) {
    acc = part;
    return;
  }
  if (part.max > acc.max) {
    acc.sum = acc.sum * std::exp(acc.max - part.max) + part.sum;
    acc.max = part.max;
  } else {
    acc.sum += part.sum * std::exp(part.max - acc.max);
  }
}

// -H = beta * K + h * M + sum_i extra_i s_i, with K (bond sum plus ghost
// couplings) and M (magnetization) integers kept exactly, so states related
// by a symmetry get bit-identical energies. Only the extra-field part is a
// running double, resynchronised periodically.
struct EnergyTerms {
  std::vector<int> ghost_coupling;  // ghost * exterior degree
  std::vector<double> extra;        // empty when absent
};

inline EnergyTerms energy_terms(const BoxAdjacency& adj, const IsingParams& p, std::span<const double> extra) {
  EnergyTerms t;
  t.ghost_coupling.assign(adj.size(), 0);
  const int ghost = p.bc == BoundaryCondition::Free ? 0 : ghost_spin(p.bc);
  for (std::size_t i = 0; i < adj.size(); ++i) t.ghost_coupling[i] = ghost * static_cast<int>(adj.exterior_degree(i));
  t.extra.assign(extra.begin(), extra.end());
  return t;
}

inline constexpr std::size_t kChunkBits = 6;

inline std::size_t chunk_count(std::size_t n_sites) {
  return std::size_t{1} << std::min<std::size_t>(kChunkBits, n_sites);
}

inline void check_cap(const Box& box, const ExactOptions& opts) {
  if (box.size() > opts.site_cap || box.size() > 62) {
    throw CapExceededError("box with " + std::to_string(box.size()) +
                           " sites exceeds the enumeration cap of " +
                           std::to_string(opts.site_cap));
  }
}

// Calls visit(state_bits, cfg, minus_h) for every configuration in the Gray
// index range [begin, end). `cfg` is mutated in place between calls.
template <class Visit>
void enumerate_range(const BoxAdjacency& adj, const IsingParams& p, const EnergyTerms& terms,
                     std::uint64_t begin, std::uint64_t end, Visit&& visit) {
  constexpr std::uint64_t kResync = 4096;
  const std::size_t n = adj.size();
  const bool has_extra = !terms.extra.empty();
  std::uint64_t state = begin ^ (begin >> 1);
  SpinConfiguration cfg = SpinConfiguration::from_state_bits(adj.box(), p.bc, state);
  long k_sum = 0, m_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int si = cfg.at(i);
    m_sum += si;
    k_sum += terms.ghost_coupling[i] * si;
    for (std::uint32_t j : adj.neighbors(i)) {
      if (j > i) k_sum += si * cfg.at(j);
    }
  }
  auto extra_sum = [&] {
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) e += terms.extra[i] * cfg.at(i);
    return e;
  };
  double e_sum = has_extra ? extra_sum() : 0.0;
  auto minus_h = [&] { return p.beta * static_cast<double>(k_sum) + p.h * static_cast<double>(m_sum) + e_sum; };
  visit(state, static_cast<const SpinConfiguration&>(cfg), minus_h());
  for (std::uint64_t k = begin + 1; k < end; ++k) {
    const auto i = static_cast<std::size_t>(std::countr_zero(k));
    const int si = cfg.at(i);
    int local = terms.ghost_coupling[i];
    for (std::uint32_t j : adj.neighbors(i)) local += cfg.at(j);
    k_sum -= 2L * si * local;
    m_sum -= 2L * si;
    cfg.flip(i);
    state ^= std::uint64_t{1} << i;
    if (has_extra) e_sum = (k - begin) % kResync == 0 ? extra_sum() : e_sum - 2.0 * si * terms.extra[i];
    visit(state, static_cast<const SpinConfiguration&>(cfg), minus_h());
  }
}

// Splits the 2^N Gray indices into a fixed number of chunks (independent of
// the worker count) and runs make_visitor(chunk) on each.
template <class PerChunk>
void enumerate_chunked(const Box& box, const IsingParams& p, const ExactOptions& opts,
                       std::span<const double> extra, PerChunk&& per_chunk) {
  check_cap(box, opts);
  const BoxAdjacency adj(box);
  const EnergyTerms terms = energy_terms(adj, p, extra);
  const std::uint64_t total = std::uint64_t{1} << box.size();
  const std::size_t chunks = chunk_count(box.size());
  const std::uint64_t per = total / chunks;
  parallel_for(chunks, opts.workers, [&](std::size_t c) {
    const std::uint64_t b = per * c;
    per_chunk(c, [&](auto&& visit) { enumerate_range(adj, p, terms, b, b + per, visit); });
  });
}

}  // namespace iwdg::detail
