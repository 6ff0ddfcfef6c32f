#include "iwdg/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "iwdg/error.hpp"

namespace iwdg {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(seed ^ 0x9e3779b97f4a7c15ULL);
  const std::uint64_t c = splitmix64(stream);
  return std::seed_seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                       static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                       static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                       static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
  auto seq = make_seed_seq(seed, stream);
  engine_.seed(seq);
}

void ChainSpec::validate() const {
  params.validate();
  if (box.dim() != params.d) throw std::invalid_argument("chain box dimension differs from params.d");
  if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
  if (n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  if (update == UpdateKind::ClusterAtZeroField && params.h != 0.0) {
    throw std::invalid_argument("cluster updates require h = 0");
  }
}

Chain::Chain(const ChainSpec& spec)
    : spec_(spec), adj_(spec.box), cfg_(spec.box, spec.params.bc, +1), rng_(spec.seed, spec.stream) {
  spec_.validate();
  ghost_ = spec_.params.bc == BoundaryCondition::Free ? 0 : ghost_spin(spec_.params.bc);
  const int d = spec_.params.d;
  const int width = 4 * d + 1;
  accept_.assign(static_cast<std::size_t>(2 * width), 0.0);
  for (int up = 0; up < 2; ++up) {
    const int s = up ? 1 : -1;
    for (int sum = -2 * d; sum <= 2 * d; ++sum) {
      const double dh = 2.0 * s * (spec_.params.beta * sum + spec_.params.h);
      // Flip probability per proposal: one half (a fresh value differs from
      // the current one) times the Metropolis acceptance.
      accept_[static_cast<std::size_t>(up * width + sum + 2 * d)] = 0.5 * std::min(1.0, std::exp(-dh));
    }
  }
  bond_probability_ = -std::expm1(-2.0 * spec_.params.beta);
  in_cluster_.assign(adj_.size(), 0);
  for (std::size_t i = 0; i < adj_.size(); ++i) {
    if (rng_.uniform() < 0.5) cfg_.flip(i);
  }
}

void Chain::metropolis_sweep() {
  const int d = spec_.params.d;
  const int width = 4 * d + 1;
  for (std::size_t i = 0; i < adj_.size(); ++i) {
    int sum = ghost_ * adj_.exterior_degree(i);
    for (std::uint32_t j : adj_.neighbors(i)) sum += cfg_.at(j);
    const int up = cfg_.at(i) > 0 ? 1 : 0;
    if (rng_.uniform() < accept_[static_cast<std::size_t>(up * width + sum + 2 * d)]) cfg_.flip(i);
  }
}

std::size_t Chain::cluster_step() {
  const std::size_t seed = rng_.below(adj_.size());
  const int s = cfg_.at(seed);
  stack_.clear();
  std::vector<std::uint32_t> members;
  members.push_back(static_cast<std::uint32_t>(seed));
  stack_.push_back(static_cast<std::uint32_t>(seed));
  in_cluster_[seed] = 1;
  bool pinned = false;
  while (!stack_.empty()) {
    const std::uint32_t i = stack_.back();
    stack_.pop_back();
    if (ghost_ == s) {
      for (int e = 0; e < adj_.exterior_degree(i); ++e) {
        if (rng_.uniform() < bond_probability_) pinned = true;
      }
    }
    for (std::uint32_t j : adj_.neighbors(i)) {
      if (!in_cluster_[j] && cfg_.at(j) == s && rng_.uniform() < bond_probability_) {
        in_cluster_[j] = 1;
        members.push_back(j);
        stack_.push_back(j);
      }
    }
  }
  last_cluster_size_ = members.size();
  for (std::uint32_t i : members) {
    in_cluster_[i] = 0;
    if (!pinned) cfg_.flip(i);
  }
  return pinned ? 0 : members.size();
}

void Chain::sweep() {
  if (spec_.update == UpdateKind::SingleFlip) {
    metropolis_sweep();
    return;
  }
  if (moves_per_sweep_ > 0) {
    for (std::size_t k = 0; k < moves_per_sweep_; ++k) cluster_step();
    return;
  }
  // Calibration counts attempted sites, flipped or not, so pinned clusters
  // still make progress.
  std::size_t touched = 0;
  while (touched < adj_.size()) {
    cluster_step();
    touched += last_cluster_size_;
    ++calibration_moves_;
  }
  ++calibration_sweeps_;
}

void Chain::burn_in() {
  sweeps(spec_.burn_in);
  if (spec_.update != UpdateKind::ClusterAtZeroField) return;
  if (calibration_sweeps_ == 0) sweep();
  moves_per_sweep_ = std::max<std::size_t>(
      1, (calibration_moves_ + calibration_sweeps_ / 2) / calibration_sweeps_);
  sweep();
}

SampleBatch::SampleBatch(ChainSpec spec) : spec_(std::move(spec)), words_((spec_.box.size() + 63) / 64) {}

void SampleBatch::append(const SpinConfiguration& cfg) {
  if (cfg.box() != spec_.box) throw std::invalid_argument("sample box differs from the batch box");
  bits_.resize(bits_.size() + words_, 0);
  std::uint64_t* row = bits_.data() + count_ * words_;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    if (cfg.at(i) > 0) row[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  ++count_;
}

SpinConfiguration SampleBatch::configuration(std::size_t sample) const {
  if (sample >= count_) throw std::out_of_range("sample index out of range");
  std::vector<std::int8_t> spins(sites());
  for (std::size_t i = 0; i < spins.size(); ++i) spins[i] = static_cast<std::int8_t>(spin(sample, i));
  return SpinConfiguration(spec_.box, spec_.params.bc, std::move(spins));
}

SampleBatch run_chain(const ChainSpec& spec) {
  spec.validate();
  Chain chain(spec);
  SampleBatch batch(spec);
  chain.burn_in();
  for (std::size_t k = 0; k < spec.n_samples; ++k) {
    if (k > 0) chain.sweeps(spec.thinning);
    batch.append(chain.configuration());
  }
  return batch;
}

Estimate batch_means(std::span<const double> values, std::size_t n_batches) {
  if (n_batches < 10) throw std::invalid_argument("batch means needs at least 10 batches");
  if (values.size() < n_batches) {
    throw InsufficientSamplesError("need at least " + std::to_string(n_batches) + " samples, got " +
                                   std::to_string(values.size()));
  }
  const std::size_t per = values.size() / n_batches;
  double total = 0.0;
  for (double v : values) total += v;
  const double mean = total / static_cast<double>(values.size());
  double used_mean = 0.0;
  std::vector<double> means(n_batches, 0.0);
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t k = 0; k < per; ++k) means[b] += values[b * per + k];
    means[b] /= static_cast<double>(per);
    used_mean += means[b];
  }
  used_mean /= static_cast<double>(n_batches);
  double ss = 0.0;
  for (double m : means) ss += (m - used_mean) * (m - used_mean);
  const double var_of_mean = ss / static_cast<double>(n_batches - 1) / static_cast<double>(n_batches);
  return {mean, std::sqrt(var_of_mean)};
}

Estimate estimate_observable(const SampleBatch& batch, const Observable& f, std::size_t n_batches) {
  std::vector<double> values;
  values.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) values.push_back(f(batch.configuration(k)));
  return batch_means(values, n_batches);
}

namespace {

constexpr std::size_t kMaxKernelSites = 10;

std::vector<double> single_flip_matrix(const Box& box, const IsingParams& p) {
  const BoxAdjacency adj(box);
  const std::size_t n = box.size();
  const std::size_t states = std::size_t{1} << n;
  const int ghost = p.bc == BoundaryCondition::Free ? 0 : ghost_spin(p.bc);
  std::vector<double> m(states * states, 0.0);
  std::vector<double> dist(states), next(states);
  for (std::size_t start = 0; start < states; ++start) {
    std::fill(dist.begin(), dist.end(), 0.0);
    dist[start] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t s = 0; s < states; ++s) {
        if (dist[s] == 0.0) continue;
        const int si = ((s >> i) & 1U) ? -1 : 1;
        int sum = ghost * adj.exterior_degree(i);
        for (std::uint32_t j : adj.neighbors(i)) sum += ((s >> j) & 1U) ? -1 : 1;
        const double dh = 2.0 * si * (p.beta * sum + p.h);
        const double flip = 0.5 * std::min(1.0, std::exp(-dh));
        next[s ^ (std::size_t{1} << i)] += dist[s] * flip;
        next[s] += dist[s] * (1.0 - flip);
      }
      std::swap(dist, next);
    }
    std::copy(dist.begin(), dist.end(), m.begin() + static_cast<std::ptrdiff_t>(start * states));
  }
  return m;
}

std::vector<double> cluster_matrix(const Box& box, const IsingParams& p) {
  if (p.h != 0.0) throw std::invalid_argument("cluster updates require h = 0");
  const BoxAdjacency adj(box);
  const std::size_t n = box.size();
  const std::size_t states = std::size_t{1} << n;
  const int ghost = p.bc == BoundaryCondition::Free ? 0 : ghost_spin(p.bc);
  const double q = -std::expm1(-2.0 * p.beta);
  const auto edges = adj.edge_list();
  std::vector<double> m(states * states, 0.0);
  for (std::size_t s = 0; s < states; ++s) {
    auto spin = [&](std::size_t i) { return ((s >> i) & 1U) ? -1 : 1; };
    // Aligned bonds: interior pairs, then one entry per aligned ghost bond.
    std::vector<std::pair<std::size_t, std::size_t>> bonds;  // second == n marks a ghost bond
    for (auto [i, j] : edges) {
      if (spin(i) == spin(j)) bonds.emplace_back(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (ghost == spin(i)) {
        for (int e = 0; e < adj.exterior_degree(i); ++e) bonds.emplace_back(i, n);
      }
    }
    if (bonds.size() > 24) throw CapExceededError("too many aligned bonds for the exact cluster kernel");
    for (std::uint64_t act = 0; act < (std::uint64_t{1} << bonds.size()); ++act) {
      const int k = std::popcount(act);
      const double prob = std::pow(q, k) * std::pow(1.0 - q, static_cast<double>(bonds.size()) - k);
      if (prob == 0.0) continue;
      for (std::size_t seed = 0; seed < n; ++seed) {
        std::uint64_t cluster = std::uint64_t{1} << seed;
        bool grown = true;
        while (grown) {
          grown = false;
          for (std::size_t b = 0; b < bonds.size(); ++b) {
            if (!((act >> b) & 1U) || bonds[b].second == n) continue;
            const auto [i, j] = bonds[b];
            const bool in_i = (cluster >> i) & 1U;
            const bool in_j = (cluster >> j) & 1U;
            if (in_i != in_j) {
              cluster |= (std::uint64_t{1} << i) | (std::uint64_t{1} << j);
              grown = true;
            }
          }
        }
        bool pinned = false;
        for (std::size_t b = 0; b < bonds.size(); ++b) {
          if (((act >> b) & 1U) && bonds[b].second == n && ((cluster >> bonds[b].first) & 1U)) pinned = true;
        }
        const std::size_t target = pinned ? s : (s ^ cluster);
        m[s * states + target] += prob / static_cast<double>(n);
      }
    }
  }
  return m;
}

}  // namespace

std::vector<double> transition_matrix(const Box& box, const IsingParams& p, UpdateKind kind) {
  p.validate();
  if (box.size() > kMaxKernelSites) throw CapExceededError("exact kernels are limited to 10 sites");
  return kind == UpdateKind::SingleFlip ? single_flip_matrix(box, p) : cluster_matrix(box, p);
}

std::vector<double> stationary_distribution(std::span<const double> matrix, std::size_t states) {
  if (matrix.size() != states * states) throw std::invalid_argument("matrix size mismatch");
  // Solve pi (P - I) = 0 with sum(pi) = 1: rows of A are the columns of P - I,
  // the last equation replaced by normalisation.
  std::vector<double> a(states * states);
  std::vector<double> b(states, 0.0);
  for (std::size_t r = 0; r < states; ++r) {
    for (std::size_t c = 0; c < states; ++c) {
      a[r * states + c] = matrix[c * states + r] - (r == c ? 1.0 : 0.0);
    }
  }
  for (std::size_t c = 0; c < states; ++c) a[(states - 1) * states + c] = 1.0;
  b[states - 1] = 1.0;
  for (std::size_t col = 0; col < states; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < states; ++r) {
      if (std::abs(a[r * states + col]) > std::abs(a[piv * states + col])) piv = r;
    }
    if (a[piv * states + col] == 0.0) throw std::runtime_error("singular stationary system");
    if (piv != col) {
      for (std::size_t c = 0; c < states; ++c) std::swap(a[piv * states + c], a[col * states + c]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < states; ++r) {
      const double f = a[r * states + col] / a[col * states + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < states; ++c) a[r * states + c] -= f * a[col * states + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(states);
  for (std::size_t r = states; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < states; ++c) acc -= a[r * states + c] * x[c];
    x[r] = acc / a[r * states + r];
  }
  return x;
}

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>(u & 0xFFU));
    u = static_cast<U>(u >> 8);
  }
}

template <class T>
T get_le(std::istream& in) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated spool file");
    u = static_cast<U>(u | (static_cast<U>(static_cast<unsigned char>(c)) << (8 * i)));
  }
  return static_cast<T>(u);
}

void write_header(std::ostream& out, const Box& box, std::uint64_t count) {
  out.write("IWDG", 4);
  put_le<std::uint16_t>(out, kSpoolVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(box.dim()));
  put_le<std::uint64_t>(out, count);
  for (const Site* corner : {&box.lo(), &box.hi()}) {
    for (int k = 0; k < kMaxDim; ++k) {
      const int v = k < box.dim() ? (*corner)[k] : 0;
      if (v < INT16_MIN || v > INT16_MAX) throw std::out_of_range("box corner does not fit the spool header");
      put_le<std::int16_t>(out, static_cast<std::int16_t>(v));
    }
  }
}

}  // namespace

void write_spool(std::ostream& out, const SampleBatch& batch) {
  const Box& box = batch.spec().box;
  write_header(out, box, batch.size());
  const std::size_t bytes = (box.size() + 7) / 8;
  std::vector<char> record(bytes);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    std::fill(record.begin(), record.end(), 0);
    for (std::size_t i = 0; i < box.size(); ++i) {
      if (batch.spin(k, i) > 0) record[i / 8] = static_cast<char>(record[i / 8] | (1 << (i % 8)));
    }
    out.write(record.data(), static_cast<std::streamsize>(bytes));
  }
}

void write_spool(const std::string& path, const SampleBatch& batch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open spool file " + path);
  write_spool(out, batch);
}

SpoolContents read_spool(std::istream& in, BoundaryCondition bc) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "IWDG") throw std::runtime_error("not an IWDG spool file");
  const auto version = get_le<std::uint16_t>(in);
  if (version != kSpoolVersion) throw std::runtime_error("unsupported spool version " + std::to_string(version));
  const auto d = get_le<std::uint16_t>(in);
  if (d < 1 || d > kMaxDim) throw std::runtime_error("bad spool dimension");
  const auto count = get_le<std::uint64_t>(in);
  std::vector<int> lo(kMaxDim), hi(kMaxDim);
  for (auto& v : lo) v = get_le<std::int16_t>(in);
  for (auto& v : hi) v = get_le<std::int16_t>(in);
  lo.resize(d);
  hi.resize(d);
  SpoolContents out{Box(Site(lo), Site(hi)), {}};
  const std::size_t n = out.box.size();
  const std::size_t bytes = (n + 7) / 8;
  std::vector<char> record(bytes);
  out.configurations.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    in.read(record.data(), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("truncated spool file");
    std::vector<std::int8_t> spins(n);
    for (std::size_t i = 0; i < n; ++i) {
      spins[i] = (static_cast<unsigned char>(record[i / 8]) >> (i % 8)) & 1U ? 1 : -1;
    }
    out.configurations.emplace_back(out.box, bc, std::move(spins));
  }
  return out;
}

SpoolContents read_spool(const std::string& path, BoundaryCondition bc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open spool file " + path);
  return read_spool(in, bc);
}

}  // namespace iwdg
