#include "iwdg/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace iwdg {

Site::Site(std::initializer_list<int> coords)
    : Site(std::span<const int>(coords.begin(), coords.size())) {}

Site::Site(std::span<const int> coords) {
  if (coords.empty() || coords.size() > static_cast<std::size_t>(kMaxDim)) {
    throw std::invalid_argument("site dimension must be in [1, " +
                                std::to_string(kMaxDim) + "]");
  }
  dim_ = static_cast<int>(coords.size());
  std::copy(coords.begin(), coords.end(), c_.begin());
}

Site Site::origin(int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("bad dimension");
  Site s;
  s.dim_ = dim;
  return s;
}

Site Site::unit(int dim, int axis, int sign) {
  Site s = origin(dim);
  if (axis < 0 || axis >= dim) throw std::invalid_argument("bad axis");
  s.c_[static_cast<std::size_t>(axis)] = sign;
  return s;
}

Site Site::operator+(const Site& o) const {
  if (dim_ != o.dim_) throw std::invalid_argument("site dimension mismatch");
  Site r = *this;
  for (int k = 0; k < dim_; ++k) r[k] += o[k];
  return r;
}

Site Site::operator-(const Site& o) const {
  if (dim_ != o.dim_) throw std::invalid_argument("site dimension mismatch");
  Site r = *this;
  for (int k = 0; k < dim_; ++k) r[k] -= o[k];
  return r;
}

std::string Site::str() const {
  std::string out = "(";
  for (int k = 0; k < dim_; ++k) {
    if (k) out += ',';
    out += std::to_string(c_[static_cast<std::size_t>(k)]);
  }
  return out + ")";
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
  std::size_t h = static_cast<std::size_t>(s.dim());
  for (int k = 0; k < s.dim(); ++k) {
    h ^= static_cast<std::size_t>(s[k]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

int l1_distance(const Site& a, const Site& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("site dimension mismatch");
  int d = 0;
  for (int k = 0; k < a.dim(); ++k) d += std::abs(a[k] - b[k]);
  return d;
}

Edge::Edge(Site x, Site y) : a(std::move(x)), b(std::move(y)) {
  if (l1_distance(a, b) != 1) throw std::invalid_argument("edge endpoints must be adjacent");
  if (b < a) std::swap(a, b);
}

Box::Box(Site lo, Site hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.dim() != hi_.dim() || lo_.dim() < 1) {
    throw std::invalid_argument("box corners must share a dimension >= 1");
  }
  size_ = 1;
  for (int k = dim() - 1; k >= 0; --k) {
    if (lo_[k] > hi_[k]) throw std::invalid_argument("box corners must satisfy lo <= hi");
    stride_[static_cast<std::size_t>(k)] = size_;
    size_ *= static_cast<std::size_t>(hi_[k] - lo_[k] + 1);
  }
}

Box Box::centered(int n, int dim) {
  if (n < 0) throw std::invalid_argument("box radius must be >= 0");
  Site lo = Site::origin(dim);
  Site hi = Site::origin(dim);
  for (int k = 0; k < dim; ++k) {
    lo[k] = -n;
    hi[k] = n;
  }
  return Box(lo, hi);
}

Box Box::from_extents(std::span<const int> extents) {
  std::vector<int> zeros(extents.size(), 0);
  std::vector<int> hi(extents.begin(), extents.end());
  for (auto& x : hi) {
    if (x < 1) throw std::invalid_argument("box extents must be >= 1");
    x -= 1;
  }
  return Box(Site(zeros), Site(hi));
}

Box Box::from_extents(std::initializer_list<int> extents) {
  return from_extents(std::span<const int>(extents.begin(), extents.size()));
}

bool Box::contains(const Site& s) const {
  if (s.dim() != dim()) return false;
  for (int k = 0; k < dim(); ++k) {
    if (s[k] < lo_[k] || s[k] > hi_[k]) return false;
  }
  return true;
}

std::size_t Box::index_of(const Site& s) const {
  if (!contains(s)) throw std::out_of_range("site " + s.str() + " is outside the box");
  std::size_t idx = 0;
  for (int k = 0; k < dim(); ++k) {
    idx += static_cast<std::size_t>(s[k] - lo_[k]) * stride_[static_cast<std::size_t>(k)];
  }
  return idx;
}

Site Box::site_at(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("site index out of range");
  Site s = lo_;
  for (int k = 0; k < dim(); ++k) {
    const std::size_t st = stride_[static_cast<std::size_t>(k)];
    s[k] += static_cast<int>(index / st);
    index %= st;
  }
  return s;
}

std::vector<Site> Box::sites() const {
  std::vector<Site> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(site_at(i));
  return out;
}

Box Box::translated(const Site& shift) const { return Box(lo_ + shift, hi_ + shift); }

EdgeSet interior_edges(const Box& box) {
  EdgeSet out;
  for (const Site& s : box.sites()) {
    for (int k = 0; k < box.dim(); ++k) {
      Site t = s + Site::unit(box.dim(), k);
      if (box.contains(t)) out.emplace_back(s, t);
    }
  }
  return out;
}

EdgeSet crossing_edges(const Box& box) {
  EdgeSet out;
  for (const Site& s : box.sites()) {
    for (int k = 0; k < box.dim(); ++k) {
      for (int sign : {-1, 1}) {
        Site t = s + Site::unit(box.dim(), k, sign);
        if (!box.contains(t)) out.emplace_back(s, t);
      }
    }
  }
  return out;
}

EdgeSet boundary_edges(const Box& box) {
  EdgeSet out = interior_edges(box);
  EdgeSet cross = crossing_edges(box);
  out.insert(out.end(), cross.begin(), cross.end());
  return out;
}

std::uint64_t sphere_count_upper_bound(int d, int y) {
  if (d < 1 || y < 1) throw std::invalid_argument("sphere bound needs d >= 1 and y >= 1");
  // C(n, k) with n = d + y - 1, k = d - 1, built as a running product that
  // stays integral at every step.
  const std::uint64_t n = static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(y) - 1;
  const std::uint64_t k = static_cast<std::uint64_t>(d) - 1;
  unsigned __int128 binom = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    binom = binom * (n - k + i) / i;
    if (binom > std::numeric_limits<std::uint64_t>::max()) {
      throw std::overflow_error("sphere bound overflows 64 bits");
    }
  }
  if (d >= 64) throw std::overflow_error("sphere bound overflows 64 bits");
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(static_cast<std::uint64_t>(binom), std::uint64_t{1} << d, &out)) {
    throw std::overflow_error("sphere bound overflows 64 bits");
  }
  return out;
}

BoxAdjacency::BoxAdjacency(const Box& box) : box_(box) {
  const std::size_t n = box.size();
  offsets_.assign(n + 1, 0);
  exterior_.assign(n, 0);
  const int d = box.dim();
  for (std::size_t i = 0; i < n; ++i) {
    const Site s = box.site_at(i);
    for (int k = 0; k < d; ++k) {
      for (int sign : {-1, 1}) {
        Site t = s + Site::unit(d, k, sign);
        if (box.contains(t)) {
          nbrs_.push_back(static_cast<std::uint32_t>(box.index_of(t)));
        } else {
          ++exterior_[i];
        }
      }
    }
    offsets_[i + 1] = nbrs_.size();
  }
}

std::size_t BoxAdjacency::crossing_edge_count() const {
  std::size_t c = 0;
  for (int e : exterior_) c += static_cast<std::size_t>(e);
  return c;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> BoxAdjacency::edge_list() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::uint32_t j : neighbors(i)) {
      if (j > i) out.emplace_back(static_cast<std::uint32_t>(i), j);
    }
  }
  return out;
}

}  // namespace iwdg
