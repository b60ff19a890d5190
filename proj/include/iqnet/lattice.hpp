#ifndef IQNET_LATTICE_HPP
#define IQNET_LATTICE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iqnet/error.hpp"

namespace iqnet {

/// A point of Z^d. Used both for lattice sites and for kernel offsets.
using Site = std::vector<int>;

inline int linf_norm(const Site& s) {
  int r = 0;
  for (int c : s) r = std::max(r, std::abs(c));
  return r;
}

enum class Boundary { TorusWrap, ZeroBox, FrozenStrip };

inline const char* to_string(Boundary b) {
  switch (b) {
    case Boundary::TorusWrap: return "torus";
    case Boundary::ZeroBox: return "zero_box";
    case Boundary::FrozenStrip: return "frozen_strip";
  }
  return "?";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "torus") return Boundary::TorusWrap;
  if (s == "zero_box") return Boundary::ZeroBox;
  if (s == "frozen_strip") return Boundary::FrozenStrip;
  throw Error(ErrorCode::ValidationError, "unknown boundary '" + s + "'");
}

/// Truncation schedule n -> L_n for the frozen-strip construction.
struct FrozenStripSchedule {
  std::function<int(int)> rule = [](int n) {
    return static_cast<int>(std::floor(std::sqrt(static_cast<double>(n / 2))));
  };

  int operator()(int n) const { return rule(n); }

  static FrozenStripSchedule constant(int L) {
    FrozenStripSchedule s;
    s.rule = [L](int) { return L; };
    return s;
  }
};

/// Sentinel returned by Domain::resolve for neighbors outside a zero-padded box.
inline constexpr std::ptrdiff_t kZeroSite = -1;

/// Finite site set B_n = [-n, n]^d with one of three boundary semantics.
///
/// Sites are indexed in row-major order over coordinates shifted by n, axis 0
/// most significant. FrozenStrip domains wrap like a torus and hold zero
/// arrivals on the frozen sites.
class Domain {
 public:
  Domain(int dim, int half_width, Boundary boundary) : dim_(dim), n_(half_width), boundary_(boundary) {
    if (dim < 1) throw Error(ErrorCode::InvalidDomain, "dimension must be positive");
    if (half_width < 0) throw Error(ErrorCode::InvalidDomain, "half width must be nonnegative");
    side_ = 2 * n_ + 1;
    count_ = 1;
    for (int k = 0; k < dim_; ++k) count_ *= static_cast<std::size_t>(side_);
    frozen_.assign(count_, 0);
    arrivals_.assign(count_, 1);
  }

  static Domain torus(int dim, int n) { return Domain(dim, n, Boundary::TorusWrap); }
  static Domain zero_box(int dim, int n) { return Domain(dim, n, Boundary::ZeroBox); }

  /// Torus B_n with the band floor(n/2)-L <= z_1 <= ceil(n/2)+L frozen, plus
  /// its mirror band around -(n+1)/2 so that the wrap-around path between the
  /// origin and n*e_1 is cut as well. Both bands are invariant under the
  /// reflection z_1 -> n - z_1 (mod 2n+1).
  static Domain frozen_strip(int dim, int n, int strip_radius) {
    Domain d(dim, n, Boundary::FrozenStrip);
    d.strip_radius_ = strip_radius;
    const int lo1 = n / 2 - strip_radius;
    const int hi1 = (n + 1) / 2 + strip_radius;
    // floor and ceil of -(n+1)/2
    const int lo2 = (n % 2 == 0 ? -(n / 2) - 1 : -(n + 1) / 2) - strip_radius;
    const int hi2 = (n % 2 == 0 ? -(n / 2) : -(n + 1) / 2) + strip_radius;
    for (std::size_t i = 0; i < d.count_; ++i) {
      const int z1 = d.coordinate(i, 0);
      const bool in1 = d.band_contains(lo1, hi1, z1);
      const bool in2 = d.band_contains(lo2, hi2, z1);
      if (in1 || in2) {
        d.frozen_[i] = 1;
        d.arrivals_[i] = 0;
      }
    }
    return d;
  }

  int dim() const noexcept { return dim_; }
  int half_width() const noexcept { return n_; }
  int side() const noexcept { return side_; }
  Boundary boundary() const noexcept { return boundary_; }
  std::size_t site_count() const noexcept { return count_; }
  int strip_radius() const noexcept { return strip_radius_; }

  bool wraps() const noexcept { return boundary_ != Boundary::ZeroBox; }
  bool is_frozen(std::size_t i) const { return frozen_[i] != 0; }
  bool arrivals_allowed(std::size_t i) const { return arrivals_[i] != 0; }
  std::size_t frozen_count() const {
    std::size_t c = 0;
    for (char f : frozen_) c += f ? 1 : 0;
    return c;
  }

  /// Suppress arrivals at an extra site (frozen sites are always suppressed).
  void mask_arrivals(std::size_t i) { arrivals_[i] = 0; }

  bool contains(const Site& s) const {
    if (static_cast<int>(s.size()) != dim_) return false;
    for (int c : s)
      if (c < -n_ || c > n_) return false;
    return true;
  }

  std::size_t index_of(const Site& s) const {
    if (!contains(s)) throw Error(ErrorCode::InvalidDomain, "site outside domain");
    std::size_t idx = 0;
    for (int k = 0; k < dim_; ++k) idx = idx * side_ + static_cast<std::size_t>(s[k] + n_);
    return idx;
  }

  int coordinate(std::size_t index, int axis) const {
    std::size_t stride = 1;
    for (int k = dim_ - 1; k > axis; --k) stride *= side_;
    return static_cast<int>((index / stride) % side_) - n_;
  }

  Site site_of(std::size_t index) const {
    Site s(dim_);
    for (int k = dim_ - 1; k >= 0; --k) {
      s[k] = static_cast<int>(index % side_) - n_;
      index /= side_;
    }
    return s;
  }

  std::size_t origin() const { return index_of(Site(dim_, 0)); }

  /// Index of site - offset under the boundary semantics, or kZeroSite when a
  /// zero-padded box resolves outside B_n.
  std::ptrdiff_t resolve(std::size_t site, const Site& offset) const {
    std::size_t idx = 0;
    for (int k = 0; k < dim_; ++k) {
      int c = coordinate(site, k) - offset[k];
      if (wraps()) {
        c = wrap(c);
      } else if (c < -n_ || c > n_) {
        return kZeroSite;
      }
      idx = idx * side_ + static_cast<std::size_t>(c + n_);
    }
    return static_cast<std::ptrdiff_t>(idx);
  }

  /// Coordinate-wise wrap into [-n, n].
  int wrap(int c) const {
    int r = (c + n_) % side_;
    if (r < 0) r += side_;
    return r - n_;
  }

  /// Sites with infinity-norm at most K around `center` (wrapped on tori).
  std::vector<std::size_t> window(const Site& center, int K) const {
    std::vector<std::size_t> out;
    Site off(dim_, -K);
    while (true) {
      Site c = center;
      for (int k = 0; k < dim_; ++k) c[k] += off[k];
      bool inside = true;
      for (int k = 0; k < dim_; ++k) {
        if (wraps()) c[k] = wrap(c[k]);
        else if (c[k] < -n_ || c[k] > n_) inside = false;
      }
      if (inside) out.push_back(index_of(c));
      int k = dim_ - 1;
      while (k >= 0 && off[k] == K) off[k--] = -K;
      if (k < 0) break;
      ++off[k];
    }
    return out;
  }

  bool same_sites(const Domain& other) const { return dim_ == other.dim_ && n_ == other.n_; }

 private:
  bool band_contains(int lo, int hi, int z) const {
    for (int c = lo; c <= hi; ++c)
      if (wrap(c) == z) return true;
    return false;
  }

  int dim_;
  int n_;
  int side_ = 1;
  Boundary boundary_;
  std::size_t count_ = 1;
  int strip_radius_ = -1;
  std::vector<char> frozen_;
  std::vector<char> arrivals_;
};

/// Free-function form of Domain::resolve taking coordinates; nullopt is the
/// ZERO marker of a zero-padded box.
inline std::optional<Site> resolve_site(const Domain& dom, const Site& site, const Site& offset) {
  const std::ptrdiff_t r = dom.resolve(dom.index_of(site), offset);
  if (r == kZeroSite) return std::nullopt;
  return dom.site_of(static_cast<std::size_t>(r));
}

}  // namespace iqnet

#endif  // IQNET_LATTICE_HPP
