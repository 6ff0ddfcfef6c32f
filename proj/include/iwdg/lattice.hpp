#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace iwdg {

inline constexpr int kMaxDim = 4;

// A point of Z^d, 1 <= d <= kMaxDim. Unused trailing coordinates are zero.
class Site {
 public:
  Site() = default;
  Site(std::initializer_list<int> coords);
  explicit Site(std::span<const int> coords);

  static Site origin(int dim);
  static Site unit(int dim, int axis, int sign = 1);

  int dim() const { return dim_; }
  int operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
  int& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }

  Site operator+(const Site& o) const;
  Site operator-(const Site& o) const;

  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;

  // "(x,y,...)"
  std::string str() const;

 private:
  std::array<int, kMaxDim> c_{};
  int dim_ = 0;
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept;
};

// Graph distance in Z^d. Throws std::invalid_argument on dimension mismatch.
int l1_distance(const Site& a, const Site& b);

// Unordered nearest-neighbour pair, stored with a < b.
struct Edge {
  Site a;
  Site b;
  Edge(Site x, Site y);
  auto operator<=>(const Edge&) const = default;
  bool operator==(const Edge&) const = default;
};

using EdgeSet = std::vector<Edge>;

// Axis-aligned box with inclusive corners. Sites are indexed in
// lexicographic order (last coordinate fastest).
class Box {
 public:
  Box(Site lo, Site hi);

  // Lambda_n = [-n, n]^d
  static Box centered(int n, int dim);
  // [0, e_0 - 1] x ... x [0, e_{d-1} - 1]
  static Box from_extents(std::span<const int> extents);
  static Box from_extents(std::initializer_list<int> extents);

  const Site& lo() const { return lo_; }
  const Site& hi() const { return hi_; }
  int dim() const { return lo_.dim(); }
  int extent(int axis) const { return hi_[axis] - lo_[axis] + 1; }
  std::size_t size() const { return size_; }

  bool contains(const Site& s) const;
  std::size_t index_of(const Site& s) const;
  Site site_at(std::size_t index) const;
  std::vector<Site> sites() const;
  Box translated(const Site& shift) const;

  bool operator==(const Box&) const = default;

 private:
  Site lo_;
  Site hi_;
  std::array<std::size_t, kMaxDim> stride_{};
  std::size_t size_ = 0;
};

// All nearest-neighbour pairs with both endpoints in the box.
EdgeSet interior_edges(const Box& box);
// Nearest-neighbour pairs with exactly one endpoint in the box.
EdgeSet crossing_edges(const Box& box);
// Nearest-neighbour pairs with at least one endpoint in the box.
EdgeSet boundary_edges(const Box& box);

// 2^d * C(d + y - 1, d - 1): an upper bound on the number of sites at L1
// distance y from a point. Throws std::overflow_error instead of wrapping.
std::uint64_t sphere_count_upper_bound(int d, int y);

// Index-based neighbour structure used by the hot loops.
class BoxAdjacency {
 public:
  explicit BoxAdjacency(const Box& box);

  const Box& box() const { return box_; }
  std::size_t size() const { return box_.size(); }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {nbrs_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  // Number of nearest neighbours of site i lying outside the box.
  int exterior_degree(std::size_t i) const { return exterior_[i]; }
  std::size_t interior_edge_count() const { return nbrs_.size() / 2; }
  std::size_t crossing_edge_count() const;
  // Interior edges as index pairs (i < j), in lexicographic order of i.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_list() const;

 private:
  Box box_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> nbrs_;
  std::vector<int> exterior_;
};

}  // namespace iwdg
