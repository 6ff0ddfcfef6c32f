#include "iwdg/treelen.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "iwdg/error.hpp"

namespace iwdg {

namespace {

std::vector<Site> distinct_terminals(std::span<const Site> terminals) {
  if (terminals.empty()) throw std::invalid_argument("terminal set must be nonempty");
  const int d = terminals.front().dim();
  for (const Site& s : terminals) {
    if (s.dim() != d) throw std::invalid_argument("terminals must share a dimension");
  }
  std::vector<Site> out(terminals.begin(), terminals.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

int mst_tree_length(std::span<const Site> terminals) {
  const std::vector<Site> t = distinct_terminals(terminals);
  const std::size_t n = t.size();
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> best(n, kInf);
  std::vector<bool> done(n, false);
  best[0] = 0;
  int total = 0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && (u == n || best[i] < best[u])) u = i;
    }
    done[u] = true;
    total += best[u];
    for (std::size_t v = 0; v < n; ++v) {
      if (!done[v]) best[v] = std::min(best[v], l1_distance(t[u], t[v]));
    }
  }
  return total;
}

std::vector<Site> hanan_grid(std::span<const Site> terminals) {
  const std::vector<Site> t = distinct_terminals(terminals);
  const int d = t.front().dim();
  std::vector<std::vector<int>> axis(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    std::set<int> vals;
    for (const Site& s : t) vals.insert(s[k]);
    axis[static_cast<std::size_t>(k)].assign(vals.begin(), vals.end());
  }
  std::vector<Site> out;
  std::vector<std::size_t> pos(static_cast<std::size_t>(d), 0);
  for (;;) {
    Site s = Site::origin(d);
    for (int k = 0; k < d; ++k) s[k] = axis[static_cast<std::size_t>(k)][pos[static_cast<std::size_t>(k)]];
    out.push_back(s);
    int k = d - 1;
    for (; k >= 0; --k) {
      auto& p = pos[static_cast<std::size_t>(k)];
      if (++p < axis[static_cast<std::size_t>(k)].size()) break;
      p = 0;
    }
    if (k < 0) break;
  }
  return out;
}

int steiner_tree_length(std::span<const Site> terminals, int cap) {
  const std::vector<Site> t = distinct_terminals(terminals);
  const std::size_t k = t.size();
  if (k > static_cast<std::size_t>(cap)) {
    throw CapExceededError("Steiner tree length is limited to " + std::to_string(cap) + " terminals");
  }
  if (k <= 2) return k == 1 ? 0 : l1_distance(t[0], t[1]);

  // Shortest paths on the Hanan grid graph are L1 distances, so the
  // Dreyfus-Wagner recursion runs on the metric closure directly.
  const std::vector<Site> grid = hanan_grid(t);
  const std::size_t v = grid.size();
  std::vector<int> dist(v * v);
  for (std::size_t a = 0; a < v; ++a) {
    for (std::size_t b = 0; b < v; ++b) dist[a * v + b] = l1_distance(grid[a], grid[b]);
  }
  // dp[S][x]: cheapest tree spanning terminal subset S (over the first k-1
  // terminals) plus grid vertex x.
  const std::size_t m = k - 1;
  const std::size_t full = (std::size_t{1} << m) - 1;
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  std::vector<int> dp((full + 1) * v, kInf);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t x = 0; x < v; ++x) dp[(std::size_t{1} << i) * v + x] = l1_distance(t[i], grid[x]);
  }
  std::vector<int> merged(v);
  for (std::size_t s = 1; s <= full; ++s) {
    if ((s & (s - 1)) == 0) continue;
    for (std::size_t x = 0; x < v; ++x) {
      int best = kInf;
      for (std::size_t sub = (s - 1) & s; sub > 0; sub = (sub - 1) & s) {
        if (sub < (s ^ sub)) continue;  // each split once
        best = std::min(best, dp[sub * v + x] + dp[(s ^ sub) * v + x]);
      }
      merged[x] = best;
    }
    for (std::size_t x = 0; x < v; ++x) {
      int best = kInf;
      for (std::size_t u = 0; u < v; ++u) best = std::min(best, merged[u] + dist[u * v + x]);
      dp[s * v + x] = best;
    }
  }
  int answer = kInf;
  for (std::size_t x = 0; x < v; ++x) answer = std::min(answer, dp[full * v + x] + l1_distance(t[m], grid[x]));
  return answer;
}

TwoFactorCheck check_two_factor(std::span<const Site> terminals) {
  TwoFactorCheck out;
  out.steiner = steiner_tree_length(terminals);
  out.spanning = mst_tree_length(terminals);
  out.ok = out.steiner <= out.spanning && out.spanning <= 2 * out.steiner;
  return out;
}

}  // namespace iwdg
