#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "iwdg/gibbs_exact.hpp"
#include "iwdg/lattice.hpp"

namespace iwdg {

// Seedable 64-bit generator. Stream-split rule: the engine state is seeded
// from the sequence {splitmix64(seed), splitmix64(seed ^ golden), stream,
// splitmix64(stream)}, so (seed, stream) pairs give unrelated sequences and
// chain k of a family uses (base_seed + k, stream).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class UpdateKind { SingleFlip, ClusterAtZeroField };

struct ChainSpec {
  IsingParams params;
  Box box = Box::centered(0, 2);
  std::uint64_t seed = 0;
  std::size_t burn_in = 1000;
  std::size_t thinning = 10;
  std::size_t n_samples = 1;
  UpdateKind update = UpdateKind::SingleFlip;
  std::uint64_t stream = 0;

  void validate() const;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// A single Markov chain. One sweep is |box| single-site Metropolis updates in
// lexicographic order (proposal: a fresh uniform spin value, accepted with
// probability min(1, exp(-dH))), or, for ClusterAtZeroField, a number of Wolff
// moves. During burn-in a cluster sweep runs until the cumulative cluster size
// reaches |box|; burn_in() then freezes the average move count so that later
// sweeps have a fixed length (a state-dependent stopping rule would bias the
// recorded configurations).
class Chain {
 public:
  explicit Chain(const ChainSpec& spec);

  void sweep();
  void sweeps(std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) sweep();
  }
  // spec.burn_in sweeps, then one fixed-length sweep for cluster chains.
  void burn_in();
  std::size_t cluster_moves_per_sweep() const { return moves_per_sweep_; }
  // One Wolff step; returns the cluster size (0 when the flip was rejected
  // because the cluster reached the frozen boundary).
  std::size_t cluster_step();

  const SpinConfiguration& configuration() const { return cfg_; }
  const ChainSpec& spec() const { return spec_; }

 private:
  void metropolis_sweep();

  ChainSpec spec_;
  BoxAdjacency adj_;
  SpinConfiguration cfg_;
  Rng rng_;
  int ghost_ = 0;
  // accept_[s_i > 0][neighbour sum + 2d]
  std::vector<double> accept_;
  double bond_probability_ = 0.0;
  std::vector<std::uint8_t> in_cluster_;
  std::vector<std::uint32_t> stack_;
  std::size_t last_cluster_size_ = 0;
  std::size_t moves_per_sweep_ = 0;  // 0 while calibrating
  std::size_t calibration_moves_ = 0;
  std::size_t calibration_sweeps_ = 0;
};

// Samples stored as packed sign bits (bit set means +1), lexicographic sites.
class SampleBatch {
 public:
  SampleBatch(ChainSpec spec);

  const ChainSpec& spec() const { return spec_; }
  std::size_t size() const { return count_; }
  std::size_t sites() const { return spec_.box.size(); }

  void append(const SpinConfiguration& cfg);
  int spin(std::size_t sample, std::size_t site_index) const {
    const std::uint64_t w = bits_[sample * words_ + site_index / 64];
    return ((w >> (site_index % 64)) & 1U) ? 1 : -1;
  }
  SpinConfiguration configuration(std::size_t sample) const;

  bool operator==(const SampleBatch& o) const { return count_ == o.count_ && bits_ == o.bits_; }

 private:
  ChainSpec spec_;
  std::size_t words_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> bits_;
};

// burn_in sweeps, then n_samples configurations spaced by `thinning` sweeps.
SampleBatch run_chain(const ChainSpec& spec);

// Mean with batch-means standard error over n_batches contiguous batches.
// Requires at least n_batches >= 10 values.
Estimate batch_means(std::span<const double> values, std::size_t n_batches = 20);
Estimate estimate_observable(const SampleBatch& batch, const Observable& f, std::size_t n_batches = 20);

// Exact kernels for small boxes (<= 10 sites). Row-major, rows sum to one,
// indexed by state bits (bit i set means spin i is -1).
std::vector<double> transition_matrix(const Box& box, const IsingParams& p, UpdateKind kind);
// Stationary vector of a row-stochastic matrix by direct linear solve.
std::vector<double> stationary_distribution(std::span<const double> matrix, std::size_t states);

// Binary spool. Header (32 bytes, little endian): "IWDG", u16 version, u16 d,
// u64 count, i16 lo[4], i16 hi[4]. Records: ceil(|box|/8) bytes of packed
// sign bits, bit (i % 8) of byte i/8 set when site i is +1.
inline constexpr std::uint16_t kSpoolVersion = 1;
void write_spool(std::ostream& out, const SampleBatch& batch);
void write_spool(const std::string& path, const SampleBatch& batch);

struct SpoolContents {
  Box box = Box::centered(0, 2);
  std::vector<SpinConfiguration> configurations;
};
SpoolContents read_spool(std::istream& in, BoundaryCondition bc);
SpoolContents read_spool(const std::string& path, BoundaryCondition bc);

}  // namespace iwdg
