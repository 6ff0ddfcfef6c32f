#include "iwdg/cumulants.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "iwdg/error.hpp"
#include "iwdg/sampler.hpp"

namespace iwdg {

namespace {

std::vector<SetPartition> generate_partitions(int r) {
  std::vector<SetPartition> out;
  // Restricted growth string a: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  std::vector<int> a(static_cast<std::size_t>(r), 0);
  for (;;) {
    int blocks = 0;
    for (int v : a) blocks = std::max(blocks, v + 1);
    SetPartition p(static_cast<std::size_t>(blocks));
    for (int i = 0; i < r; ++i) p[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])].push_back(i);
    out.push_back(std::move(p));
    int i = r - 1;
    for (; i > 0; --i) {
      int prefix_max = 0;
      for (int k = 0; k < i; ++k) prefix_max = std::max(prefix_max, a[static_cast<std::size_t>(k)]);
      if (a[static_cast<std::size_t>(i)] <= prefix_max) {
        ++a[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < r; ++k) a[static_cast<std::size_t>(k)] = 0;
        break;
      }
    }
    if (i == 0) break;
  }
  return out;
}

}  // namespace

void check_cumulant_order(int r) {
  if (r < 1 || r > kMaxCumulantOrder) {
    throw std::invalid_argument("cumulant order must be in [1, " + std::to_string(kMaxCumulantOrder) +
                                "], got " + std::to_string(r));
  }
}

const std::vector<SetPartition>& set_partitions(int r) {
  check_cumulant_order(r);
  static const auto cache = [] {
    std::array<std::vector<SetPartition>, kMaxCumulantOrder + 1> c;
    for (int k = 1; k <= kMaxCumulantOrder; ++k) c[static_cast<std::size_t>(k)] = generate_partitions(k);
    return c;
  }();
  return cache[static_cast<std::size_t>(r)];
}

double cumulant_from_moments(const MomentOracle& moment, int r) {
  static constexpr std::array<double, 7> kFactorial{1, 1, 2, 6, 24, 120, 720};
  double kappa = 0.0;
  for (const SetPartition& p : set_partitions(r)) {
    const std::size_t k = p.size();
    double term = (k % 2 == 1 ? 1.0 : -1.0) * kFactorial[k - 1];
    for (const auto& block : p) term *= moment(block);
    kappa += term;
  }
  return kappa;
}

double cumulant_term_magnitude(const MomentOracle& moment, int r) {
  static constexpr std::array<double, 7> kFactorial{1, 1, 2, 6, 24, 120, 720};
  double total = 0.0;
  for (const SetPartition& p : set_partitions(r)) {
    double term = kFactorial[p.size() - 1];
    for (const auto& block : p) term *= std::abs(moment(block));
    total += term;
  }
  return total;
}

Estimate estimated_cumulant(const SampleBatch& batch, std::span<const Site> sites, std::size_t n_batches) {
  const int r = static_cast<int>(sites.size());
  if (r < 1 || r > kMaxEstimatedOrder) {
    throw std::invalid_argument("estimated cumulants support orders 1.." + std::to_string(kMaxEstimatedOrder));
  }
  if (n_batches < 10) throw std::invalid_argument("need at least 10 batches");
  if (batch.size() < n_batches) {
    throw InsufficientSamplesError("estimated cumulant needs at least " + std::to_string(n_batches) + " samples");
  }
  std::vector<std::size_t> idx;
  for (const Site& s : sites) idx.push_back(batch.spec().box.index_of(s));
  const std::size_t subsets = std::size_t{1} << r;

  auto cumulant_of = [&](std::size_t begin, std::size_t end) {
    std::vector<double> sums(subsets, 0.0);
    for (std::size_t k = begin; k < end; ++k) {
      for (std::size_t mask = 1; mask < subsets; ++mask) {
        int prod = 1;
        for (int i = 0; i < r; ++i) {
          if ((mask >> i) & 1U) prod *= batch.spin(k, idx[static_cast<std::size_t>(i)]);
        }
        sums[mask] += prod;
      }
    }
    const double count = static_cast<double>(end - begin);
    return cumulant_from_moments(
        [&](std::span<const int> sub) {
          std::size_t mask = 0;
          for (int i : sub) mask |= std::size_t{1} << i;
          return sums[mask] / count;
        },
        r);
  };

  const double value = cumulant_of(0, batch.size());
  const std::size_t per = batch.size() / n_batches;
  std::vector<double> per_batch(n_batches);
  double mean = 0.0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    per_batch[b] = cumulant_of(b * per, (b + 1) * per);
    mean += per_batch[b];
  }
  mean /= static_cast<double>(n_batches);
  double ss = 0.0;
  for (double v : per_batch) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / static_cast<double>(n_batches - 1) / static_cast<double>(n_batches));
  return {value, se};
}

double q_quantity(const SetExpectation& expectation, std::span<const Site> A) {
  const int r = static_cast<int>(A.size());
  check_cumulant_order(r);
  double q = 1.0;
  std::vector<Site> delta;
  for (std::size_t mask = 1; mask < (std::size_t{1} << r); ++mask) {
    delta.clear();
    for (int i = 0; i < r; ++i) {
      if ((mask >> i) & 1U) delta.push_back(A[static_cast<std::size_t>(i)]);
    }
    const double e = expectation(delta);
    if (e == 0.0 || !std::isfinite(e)) {
      throw UndefinedQuantityError("Q is undefined: vanishing expectation of a sub-product");
    }
    q = delta.size() % 2 == 0 ? q * e : q / e;
  }
  return q;
}

double q_quantity_minus_one(const SetLogExpectation& expectation, std::span<const Site> A) {
  const int r = static_cast<int>(A.size());
  check_cumulant_order(r);
  double log_q = 0.0;
  int sign = 1;
  std::vector<Site> delta;
  for (std::size_t mask = 1; mask < (std::size_t{1} << r); ++mask) {
    delta.clear();
    for (int i = 0; i < r; ++i) {
      if ((mask >> i) & 1U) delta.push_back(A[static_cast<std::size_t>(i)]);
    }
    const SignedLog e = expectation(delta);
    if (e.sign == 0 || !std::isfinite(e.log)) {
      throw UndefinedQuantityError("Q is undefined: vanishing expectation of a sub-product");
    }
    log_q += delta.size() % 2 == 0 ? e.log : -e.log;
    sign *= e.sign;
  }
  return sign > 0 ? std::expm1(log_q) : -std::exp(log_q) - 1.0;
}

double spin_to_indicator_cumulant(double kappa_sigma, int r) {
  if (r < 2) throw std::invalid_argument("the indicator shift changes the mean; order must be >= 2");
  return std::ldexp(kappa_sigma, -r);
}

namespace {

std::vector<Site> canonical(std::vector<Site> sites) {
  if (sites.empty()) throw std::invalid_argument("cumulant key must be a nonempty multiset");
  std::sort(sites.begin(), sites.end());
  return sites;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void CumulantTable::insert(std::vector<Site> sites, double value, std::optional<double> std_error) {
  if (provenance_ == Provenance::Exact && std_error) {
    throw std::invalid_argument("exact cumulants carry no error bar");
  }
  if (provenance_ == Provenance::Estimated && !std_error) {
    throw std::invalid_argument("estimated cumulants require an error bar");
  }
  entries_[canonical(std::move(sites))] = Entry{value, std_error};
}

const CumulantTable::Entry* CumulantTable::find(std::vector<Site> sites) const {
  auto it = entries_.find(canonical(std::move(sites)));
  return it == entries_.end() ? nullptr : &it->second;
}

const CumulantTable::Entry& CumulantTable::at(std::vector<Site> sites) const {
  const std::string key = format_site_multiset(sites);
  const Entry* e = find(std::move(sites));
  if (!e) throw std::out_of_range("cumulant table has no entry for " + key);
  return *e;
}

std::string format_site_multiset(std::span<const Site> sites) {
  std::string out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i) out += ';';
    for (int k = 0; k < sites[i].dim(); ++k) {
      if (k) out += ' ';
      out += std::to_string(sites[i][k]);
    }
  }
  return out;
}

std::vector<Site> parse_site_multiset(const std::string& text) {
  std::vector<Site> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    std::istringstream coords(part);
    std::vector<int> c;
    int v;
    while (coords >> v) c.push_back(v);
    if (!coords.eof() || c.empty()) throw std::invalid_argument("malformed site '" + part + "'");
    out.emplace_back(c);
  }
  if (out.empty()) throw std::invalid_argument("empty site multiset");
  return out;
}

void CumulantTable::write_csv(std::ostream& out) const {
  const char* prov = provenance_ == Provenance::Exact ? "exact" : "estimated";
  out << "sites,value,std_error,provenance\n";
  for (const auto& [key, e] : entries_) {
    out << format_site_multiset(key) << ',' << fmt17(e.value) << ',' << (e.std_error ? fmt17(*e.std_error) : "")
        << ',' << prov << '\n';
  }
}

CumulantTable CumulantTable::read_csv(std::istream& in) {
  std::string line;
  do {
    if (!std::getline(in, line)) throw std::runtime_error("empty cumulant CSV");
  } while (!line.empty() && line[0] == '#');
  if (line != "sites,value,std_error,provenance") throw std::runtime_error("unexpected cumulant CSV header");
  std::optional<CumulantTable> table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() == 3) cols.emplace_back();
    if (cols.size() != 4) throw std::runtime_error("malformed cumulant CSV row: " + line);
    const Provenance p = cols[3] == "exact" ? Provenance::Exact : Provenance::Estimated;
    if (cols[3] != "exact" && cols[3] != "estimated") throw std::runtime_error("bad provenance: " + cols[3]);
    if (!table) table.emplace(p);
    if (table->provenance() != p) throw std::runtime_error("mixed provenance in cumulant CSV");
    std::optional<double> se;
    if (!cols[2].empty()) se = std::stod(cols[2]);
    table->insert(parse_site_multiset(cols[0]), std::stod(cols[1]), se);
  }
  if (!table) throw std::runtime_error("cumulant CSV has no rows");
  return std::move(*table);
}

std::vector<std::vector<Site>> site_combinations(const Box& box, int max_size, bool with_repetition) {
  if (max_size < 1) throw std::invalid_argument("combination size must be >= 1");
  const std::vector<Site> sites = box.sites();
  std::vector<std::vector<Site>> out;
  std::vector<std::size_t> pick;
  auto extend = [&](auto&& self, std::size_t from) -> void {
    if (!pick.empty()) {
      std::vector<Site> key;
      for (std::size_t i : pick) key.push_back(sites[i]);
      out.push_back(std::move(key));
    }
    if (pick.size() == static_cast<std::size_t>(max_size)) return;
    for (std::size_t i = from; i < sites.size(); ++i) {
      pick.push_back(i);
      self(self, with_repetition ? i : i + 1);
      pick.pop_back();
    }
  };
  extend(extend, 0);
  return out;
}

}  // namespace iwdg
