#include "iwdg/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "iwdg/error.hpp"
#include "json.hpp"

namespace iwdg {

namespace {

Sign sign_of(char c) {
  if (c == '+') return Sign::Plus;
  if (c == '-') return Sign::Minus;
  throw std::invalid_argument(std::string("pattern signs must be '+' or '-', got '") + c + "'");
}

std::string sign_string(const std::vector<Sign>& signs) {
  std::string out;
  for (Sign s : signs) out += s == Sign::Plus ? '+' : '-';
  return out;
}

}  // namespace

void LocalPattern::validate() const {
  if (shape.empty()) throw std::invalid_argument("local pattern shape must be nonempty");
  if (shape.size() != signs.size()) throw std::invalid_argument("local pattern needs one sign per shape site");
  const int d = shape.front().dim();
  bool has_origin = false;
  for (const Site& s : shape) {
    if (s.dim() != d) throw std::invalid_argument("local pattern offsets must share a dimension");
    if (s == Site::origin(d)) has_origin = true;
  }
  if (!has_origin) throw std::invalid_argument("local pattern shape must contain the origin");
  std::vector<Site> sorted = shape;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("local pattern shape has duplicate offsets");
  }
}

int LocalPattern::diameter() const {
  int best = 0;
  for (const Site& a : shape) {
    for (const Site& b : shape) best = std::max(best, l1_distance(a, b));
  }
  return best;
}

LocalPattern LocalPattern::isolated_plus(int d) {
  LocalPattern p;
  p.shape.push_back(Site::origin(d));
  p.signs.push_back(Sign::Plus);
  for (int k = 0; k < d; ++k) {
    for (int s : {-1, 1}) {
      p.shape.push_back(Site::unit(d, k, s));
      p.signs.push_back(Sign::Minus);
    }
  }
  return p;
}

LocalPattern LocalPattern::single_site(int d, Sign sign) { return LocalPattern{{Site::origin(d)}, {sign}}; }

void GlobalPattern::validate() const {
  if (m < 1) throw std::invalid_argument("global pattern size must be >= 1");
  if (ranks.empty() || ranks.size() > static_cast<std::size_t>(kMaxDim)) {
    throw std::invalid_argument("global pattern needs 1..4 orders");
  }
  if (signs.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("global pattern needs m signs");
  for (const auto& r : ranks) {
    if (r.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("each order must rank m elements");
    std::vector<int> sorted = r;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < m; ++i) {
      if (sorted[static_cast<std::size_t>(i)] != i) throw std::invalid_argument("orders must be permutations");
    }
  }
}

bool GlobalPattern::all_plus() const {
  return std::all_of(signs.begin(), signs.end(), [](Sign s) { return s == Sign::Plus; });
}

GlobalPattern GlobalPattern::from_orders(const std::vector<std::vector<int>>& orders, std::vector<Sign> signs) {
  GlobalPattern p;
  p.m = static_cast<int>(signs.size());
  p.signs = std::move(signs);
  for (const auto& order : orders) {
    if (order.size() != static_cast<std::size_t>(p.m)) throw std::invalid_argument("order length must equal m");
    std::vector<int> rank(static_cast<std::size_t>(p.m), -1);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const int e = order[pos];
      if (e < 1 || e > p.m || rank[static_cast<std::size_t>(e - 1)] != -1) {
        throw std::invalid_argument("orders must list each of 1..m exactly once");
      }
      rank[static_cast<std::size_t>(e - 1)] = static_cast<int>(pos);
    }
    p.ranks.push_back(std::move(rank));
  }
  p.validate();
  return p;
}

GlobalPattern GlobalPattern::chain(int d, int m, Sign sign) {
  std::vector<int> natural(static_cast<std::size_t>(m));
  std::iota(natural.begin(), natural.end(), 1);
  return from_orders(std::vector<std::vector<int>>(static_cast<std::size_t>(d), natural),
                     std::vector<Sign>(static_cast<std::size_t>(m), sign));
}

Pattern parse_pattern(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("pattern is not valid JSON: ") + e.what());
  }
  try {
    if (j.contains("local")) {
      const auto& l = j.at("local");
      LocalPattern p;
      for (const auto& c : l.at("shape")) p.shape.emplace_back(c.get<std::vector<int>>());
      for (char c : l.at("signs").get<std::string>()) p.signs.push_back(sign_of(c));
      p.validate();
      return p;
    }
    if (j.contains("global")) {
      const auto& g = j.at("global");
      const int m = g.at("m").get<int>();
      std::vector<Sign> signs;
      for (char c : g.at("signs").get<std::string>()) signs.push_back(sign_of(c));
      if (signs.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("global pattern needs m signs");
      return GlobalPattern::from_orders(g.at("orders").get<std::vector<std::vector<int>>>(), std::move(signs));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed pattern: ") + e.what());
  }
  throw std::invalid_argument("pattern document needs a 'local' or 'global' key");
}

std::string pattern_to_json(const Pattern& p) {
  nlohmann::json j;
  if (const auto* l = std::get_if<LocalPattern>(&p)) {
    nlohmann::json shape = nlohmann::json::array();
    for (const Site& s : l->shape) {
      std::vector<int> c;
      for (int k = 0; k < s.dim(); ++k) c.push_back(s[k]);
      shape.push_back(c);
    }
    j["local"] = {{"shape", shape}, {"signs", sign_string(l->signs)}};
  } else {
    const auto& g = std::get<GlobalPattern>(p);
    std::vector<std::vector<int>> orders;
    for (const auto& rank : g.ranks) {
      std::vector<int> order(rank.size());
      for (std::size_t i = 0; i < rank.size(); ++i) order[static_cast<std::size_t>(rank[i])] = static_cast<int>(i) + 1;
      orders.push_back(order);
    }
    j["global"] = {{"m", g.m}, {"orders", orders}, {"signs", sign_string(g.signs)}};
  }
  return j.dump();
}

int local_indicator(const SpinConfiguration& cfg, const LocalPattern& p, const Site& position) {
  // Check readability first so the error does not depend on the spins.
  for (const Site& off : p.shape) {
    const Site s = position + off;
    if (!cfg.readable(s)) throw BoundaryReadError("pattern site " + s.str() + " lies outside the box under free bc");
  }
  for (std::size_t k = 0; k < p.shape.size(); ++k) {
    if (cfg.spin(position + p.shape[k]) != static_cast<int>(p.signs[k])) return 0;
  }
  return 1;
}

PatternCount count_local(const SpinConfiguration& cfg, const LocalPattern& p, const Box& box) {
  p.validate();
  PatternCount out{0, box};
  const Box& cbox = cfg.box();
  const bool free = cfg.bc() == BoundaryCondition::Free;
  const std::size_t n = box.size();
  for (std::size_t q = 0; q < n; ++q) {
    const Site pos = box.site_at(q);
    bool match = true;
    bool skip = false;
    for (std::size_t k = 0; k < p.shape.size(); ++k) {
      const Site s = pos + p.shape[k];
      int v;
      if (cbox.contains(s)) {
        v = cfg.at(cbox.index_of(s));
      } else if (free) {
        skip = true;
        break;
      } else {
        v = ghost_spin(cfg.bc());
      }
      if (v != static_cast<int>(p.signs[k])) match = false;
    }
    if (!skip && match) ++out.value;
  }
  return out;
}

int global_indicator(const SpinConfiguration& cfg, const GlobalPattern& p, std::span<const Site> x) {
  p.validate();
  if (x.size() != static_cast<std::size_t>(p.m)) throw std::invalid_argument("site set size must equal m");
  const int d = p.dim();
  for (const Site& s : x) {
    if (s.dim() != d) throw std::invalid_argument("site dimension differs from the number of orders");
  }
  // Distinct coordinates along every axis are forced; then the labelling is
  // fixed by the ranks along axis 0.
  std::vector<std::size_t> by_axis0(x.size());
  std::iota(by_axis0.begin(), by_axis0.end(), std::size_t{0});
  for (int k = 0; k < d; ++k) {
    std::vector<int> c;
    for (const Site& s : x) c.push_back(s[k]);
    std::sort(c.begin(), c.end());
    if (std::adjacent_find(c.begin(), c.end()) != c.end()) return 0;
  }
  std::sort(by_axis0.begin(), by_axis0.end(), [&](std::size_t a, std::size_t b) { return x[a][0] < x[b][0]; });
  std::vector<int> label_of_rank0(static_cast<std::size_t>(p.m));
  for (int i = 0; i < p.m; ++i) label_of_rank0[static_cast<std::size_t>(p.ranks[0][static_cast<std::size_t>(i)])] = i;
  std::vector<int> label(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) label[by_axis0[r]] = label_of_rank0[r];
  for (std::size_t a = 0; a < x.size(); ++a) {
    if (cfg.spin(x[a]) != static_cast<int>(p.signs[static_cast<std::size_t>(label[a])])) return 0;
    for (std::size_t b = 0; b < x.size(); ++b) {
      if (a == b) continue;
      for (int k = 1; k < d; ++k) {
        const bool site_le = x[a][k] <= x[b][k];
        const bool order_le = p.ranks[static_cast<std::size_t>(k)][static_cast<std::size_t>(label[a])] <=
                              p.ranks[static_cast<std::size_t>(k)][static_cast<std::size_t>(label[b])];
        if (site_le != order_le) return 0;
      }
    }
  }
  return 1;
}

namespace {

struct GlobalCounter {
  const Box& box;
  const GlobalPattern& p;
  std::vector<int> label_of_rank0;
  std::vector<Site> sites;                    // all box sites, lexicographic
  std::vector<std::vector<std::size_t>> cand;  // candidate indices per level
  std::vector<std::size_t> chosen;
  std::int64_t count = 0;

  bool compatible(std::size_t level, std::size_t site) const {
    const Site& s = sites[site];
    const int lbl = label_of_rank0[level];
    for (std::size_t prev = 0; prev < level; ++prev) {
      const Site& t = sites[chosen[prev]];
      const int plbl = label_of_rank0[prev];
      if (t[0] == s[0]) return false;
      for (int k = 1; k < p.dim(); ++k) {
        if (t[k] == s[k]) return false;
        const bool site_lt = t[k] < s[k];
        const bool order_lt = p.ranks[static_cast<std::size_t>(k)][static_cast<std::size_t>(plbl)] <
                              p.ranks[static_cast<std::size_t>(k)][static_cast<std::size_t>(lbl)];
        if (site_lt != order_lt) return false;
      }
    }
    return true;
  }

  void recurse(std::size_t level, std::size_t min_index) {
    if (level == static_cast<std::size_t>(p.m)) {
      ++count;
      return;
    }
    const auto& c = cand[level];
    for (auto it = std::lower_bound(c.begin(), c.end(), min_index); it != c.end(); ++it) {
      if (!compatible(level, *it)) continue;
      chosen[level] = *it;
      recurse(level + 1, *it + 1);
    }
  }
};

}  // namespace

PatternCount count_global(const SpinConfiguration& cfg, const GlobalPattern& p, const Box& box, double budget) {
  p.validate();
  if (box.dim() != p.dim()) throw std::invalid_argument("box dimension differs from the number of orders");
  GlobalCounter gc{box, p, {}, box.sites(), {}, {}, 0};
  gc.label_of_rank0.resize(static_cast<std::size_t>(p.m));
  for (int i = 0; i < p.m; ++i) gc.label_of_rank0[static_cast<std::size_t>(p.ranks[0][static_cast<std::size_t>(i)])] = i;
  std::vector<std::size_t> plus, minus;
  for (std::size_t q = 0; q < gc.sites.size(); ++q) {
    (cfg.spin(gc.sites[q]) > 0 ? plus : minus).push_back(q);
  }
  double combos = 1.0;
  for (int level = 0; level < p.m; ++level) {
    const Sign s = p.signs[static_cast<std::size_t>(gc.label_of_rank0[static_cast<std::size_t>(level)])];
    gc.cand.push_back(s == Sign::Plus ? plus : minus);
  }
  const double pool = static_cast<double>(std::max(plus.size(), minus.size()));
  for (int i = 0; i < p.m; ++i) combos *= (pool - i) / (i + 1);
  if (combos > budget) {
    throw CapExceededError("global pattern count needs ~" + std::to_string(combos) + " subsets, over budget");
  }
  gc.chosen.resize(static_cast<std::size_t>(p.m));
  gc.recurse(0, 0);
  return PatternCount{gc.count, box};
}

double local_pattern_weight(const LocalPattern& p, const IsingWdgSpec& spec, const Site& i1, const Site& i2) {
  p.validate();
  std::vector<Site> a, b;
  for (const Site& j : p.shape) {
    a.push_back(i1 + j);
    b.push_back(i2 + j);
  }
  const auto g = power_graph(spec.graph(), static_cast<int>(p.size()));
  return g.weight(a, b);
}

double global_pattern_weight(const IsingWdgSpec& spec, std::span<const Site> x, std::span<const Site> y) {
  const int m = static_cast<int>(std::max(x.size(), y.size()));
  const auto g = power_graph(spec.graph(), m);
  return g.weight(std::vector<Site>(x.begin(), x.end()), std::vector<Site>(y.begin(), y.end()));
}

}  // namespace iwdg
