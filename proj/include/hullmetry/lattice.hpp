#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hullmetry/core.hpp"

namespace hullmetry {

/// A finite subset of the lattice origin + spacing * Z^n, stored as a bitmap
/// over its bounding box. The last axis is packed 64 nodes per word; every
/// other axis indexes rows.
class LatticeSet {
 public:
  using Index = std::int64_t;

  LatticeSet() = default;

  LatticeSet(double spacing, Point origin, std::vector<Index> lo, std::vector<Index> extent)
      : spacing_(spacing), origin_(std::move(origin)), lo_(std::move(lo)), extent_(std::move(extent)) {
    const int n = static_cast<int>(origin_.size());
    if (n < 1 || static_cast<int>(lo_.size()) != n || static_cast<int>(extent_.size()) != n)
      throw Error(ErrorCode::DimensionMismatch, "lattice box does not match origin dimension");
    if (!(spacing_ > 0)) throw Error(ErrorCode::NonpositiveScale, "lattice spacing must be positive");
    rows_ = 1;
    for (int i = 0; i + 1 < n; ++i) {
      if (extent_[static_cast<std::size_t>(i)] < 1) throw Error(ErrorCode::ParamOutOfRange, "empty lattice box");
      rows_ *= static_cast<std::size_t>(extent_[static_cast<std::size_t>(i)]);
    }
    if (extent_.back() < 1) throw Error(ErrorCode::ParamOutOfRange, "empty lattice box");
    words_per_row_ = static_cast<std::size_t>((extent_.back() + 63) / 64);
    bits_.assign(rows_ * words_per_row_, 0);
  }

  int dim() const { return static_cast<int>(origin_.size()); }
  double spacing() const { return spacing_; }
  const Point& origin() const { return origin_; }
  const std::vector<Index>& lo() const { return lo_; }
  const std::vector<Index>& extent() const { return extent_; }
  std::size_t rows() const { return rows_; }
  std::size_t words_per_row() const { return words_per_row_; }
  std::size_t box_nodes() const { return rows_ * static_cast<std::size_t>(extent_.back()); }

  /// Position of the lattice node with absolute index z.
  template <class Vec>
  Point position(const Vec& z) const {
    Point p(dim());
    for (int i = 0; i < dim(); ++i) p[i] = origin_[i] + spacing_ * static_cast<double>(z[static_cast<std::size_t>(i)]);
    return p;
  }

  template <class Vec>
  bool in_box(const Vec& z) const {
    for (int i = 0; i < dim(); ++i) {
      const Index off = z[static_cast<std::size_t>(i)] - lo_[static_cast<std::size_t>(i)];
      if (off < 0 || off >= extent_[static_cast<std::size_t>(i)]) return false;
    }
    return true;
  }

  template <class Vec>
  bool test(const Vec& z) const {
    if (!in_box(z)) return false;
    const auto [row, bit] = locate(z);
    return (bits_[row * words_per_row_ + bit / 64] >> (bit % 64)) & 1ULL;
  }

  template <class Vec>
  void set(const Vec& z) {
    if (!in_box(z)) throw Error(ErrorCode::ParamOutOfRange, "lattice index outside the box");
    const auto [row, bit] = locate(z);
    bits_[row * words_per_row_ + bit / 64] |= 1ULL << (bit % 64);
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  /// Sum of node cells: count * spacing^n.
  double cell_volume() const { return static_cast<double>(count()) * std::pow(spacing_, dim()); }

  /// Calls f(z) with the absolute index of every member, in row-major order.
  template <class F>
  void for_each(F&& f) const {
    std::vector<Index> z(static_cast<std::size_t>(dim()));
    for (std::size_t r = 0; r < rows_; ++r) {
      row_index(r, z);
      const std::uint64_t* row = &bits_[r * words_per_row_];
      for (std::size_t w = 0; w < words_per_row_; ++w) {
        std::uint64_t word = row[w];
        while (word) {
          const int b = std::countr_zero(word);
          word &= word - 1;
          z.back() = lo_.back() + static_cast<Index>(w * 64 + static_cast<std::size_t>(b));
          f(z);
        }
      }
    }
  }

  Eigen::MatrixXd points() const {
    Eigen::MatrixXd m(dim(), static_cast<Eigen::Index>(count()));
    Eigen::Index j = 0;
    for_each([&](const std::vector<Index>& z) { m.col(j++) = position(z); });
    return m;
  }

  /// Members with at least one axis neighbour outside the set.
  Eigen::MatrixXd boundary_points() const {
    std::vector<Point> out;
    for_each([&](const std::vector<Index>& z) {
      auto y = z;
      for (std::size_t i = 0; i < z.size(); ++i) {
        for (Index d : {Index{-1}, Index{1}}) {
          y[i] = z[i] + d;
          const bool member = test(y);
          y[i] = z[i];
          if (!member) {
            out.push_back(position(z));
            return;
          }
        }
      }
    });
    Eigen::MatrixXd m(dim(), static_cast<Eigen::Index>(out.size()));
    for (std::size_t i = 0; i < out.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = out[i];
    return m;
  }

  /// The same bitmap read on the lattice scaled by s about the origin of R^n.
  LatticeSet scaled(double s) const {
    if (!(s > 0)) throw Error(ErrorCode::NonpositiveScale, "scale must be positive");
    LatticeSet out = *this;
    out.spacing_ *= s;
    out.origin_ *= s;
    return out;
  }

  /// Exact sumset {x + y}. `b` must live on a lattice whose spacing is an
  /// integer multiple q of a's spacing; its indices are multiplied by q.
  static LatticeSet sumset(const LatticeSet& a, const LatticeSet& b, Index q) {
    const int n = a.dim();
    if (b.dim() != n) throw Error(ErrorCode::DimensionMismatch, "lattice dimensions differ");
    std::vector<Index> lo(static_cast<std::size_t>(n)), ext(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = a.lo_[i] + q * b.lo_[i];
      ext[i] = a.extent_[i] + q * (b.extent_[i] - 1);
    }
    LatticeSet out(a.spacing_, a.origin_ + b.origin_, lo, ext);

    struct Row {
      std::size_t src;
      std::size_t dst_base;  // row offset in `out` before adding b's shift
      std::size_t first, last;
    };
    std::vector<Row> rows;
    std::vector<Index> z(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < a.rows_; ++r) {
      const std::uint64_t* row = &a.bits_[r * a.words_per_row_];
      std::size_t first = a.words_per_row_, last = 0;
      for (std::size_t w = 0; w < a.words_per_row_; ++w)
        if (row[w]) {
          first = std::min(first, w);
          last = w;
        }
      if (first == a.words_per_row_) continue;
      a.row_index(r, z);
      std::size_t dst = 0;
      for (int i = 0; i + 1 < n; ++i)
        dst = dst * static_cast<std::size_t>(ext[static_cast<std::size_t>(i)]) +
              static_cast<std::size_t>(z[static_cast<std::size_t>(i)] - a.lo_[static_cast<std::size_t>(i)]);
      rows.push_back({r, dst, first, last});
    }

    std::vector<std::size_t> row_stride(static_cast<std::size_t>(n), 1);
    for (int i = n - 3; i >= 0; --i)
      row_stride[static_cast<std::size_t>(i)] = row_stride[static_cast<std::size_t>(i + 1)] * static_cast<std::size_t>(ext[static_cast<std::size_t>(i + 1)]);

    const std::size_t wpr = out.words_per_row_;
    b.for_each([&](const std::vector<Index>& y) {
      std::size_t row_shift = 0;
      for (int i = 0; i + 1 < n; ++i)
        row_shift += static_cast<std::size_t>(q * (y[static_cast<std::size_t>(i)] - b.lo_[static_cast<std::size_t>(i)])) *
                     row_stride[static_cast<std::size_t>(i)];
      const auto bit_shift = static_cast<std::size_t>(q * (y.back() - b.lo_.back()));
      const std::size_t ws = bit_shift / 64, bs = bit_shift % 64;
      for (const auto& row : rows) {
        const std::uint64_t* src = &a.bits_[row.src * a.words_per_row_];
        std::uint64_t* dst = &out.bits_[(row.dst_base + row_shift) * wpr];
        for (std::size_t w = row.first; w <= row.last; ++w) {
          const std::uint64_t v = src[w];
          if (!v) continue;
          dst[w + ws] |= v << bs;
          if (bs && w + ws + 1 < wpr) dst[w + ws + 1] |= v >> (64 - bs);
        }
      }
    });
    return out;
  }

  /// Re-samples onto the lattice of twice the spacing (same origin): a coarse
  /// node is set when its nearest fine member maps onto it.
  LatticeSet coarsened() const {
    const int n = dim();
    std::vector<Index> lo(static_cast<std::size_t>(n)), ext(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = floor_half(lo_[i]);
      ext[i] = floor_half(lo_[i] + extent_[i] - 1) - lo[i] + 1;
    }
    LatticeSet out(2 * spacing_, origin_, lo, ext);
    for_each([&](const std::vector<Index>& z) {
      std::vector<Index> c(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) c[i] = floor_half(z[i]);
      out.set(c);
    });
    return out;
  }

 private:
  static Index floor_half(Index v) { return (v >= 0) ? v / 2 : -((-v + 1) / 2); }

  template <class Vec>
  std::pair<std::size_t, std::size_t> locate(const Vec& z) const {
    std::size_t row = 0;
    const int n = dim();
    for (int i = 0; i + 1 < n; ++i)
      row = row * static_cast<std::size_t>(extent_[static_cast<std::size_t>(i)]) +
            static_cast<std::size_t>(z[static_cast<std::size_t>(i)] - lo_[static_cast<std::size_t>(i)]);
    return {row, static_cast<std::size_t>(z[static_cast<std::size_t>(n - 1)] - lo_.back())};
  }

  void row_index(std::size_t r, std::vector<Index>& z) const {
    for (int i = dim() - 2; i >= 0; --i) {
      const auto e = static_cast<std::size_t>(extent_[static_cast<std::size_t>(i)]);
      z[static_cast<std::size_t>(i)] = lo_[static_cast<std::size_t>(i)] + static_cast<Index>(r % e);
      r /= e;
    }
  }

  double spacing_ = 1.0;
  Point origin_;
  std::vector<Index> lo_, extent_;
  std::size_t rows_ = 0, words_per_row_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Squared Euclidean distance (in lattice units) from every node of the box
/// to the nearest member, by the separable lower-envelope transform.
inline std::vector<double> squared_distance_transform(const LatticeSet& set) {
  const int n = set.dim();
  const auto& ext = set.extent();
  const std::size_t total = set.box_nodes();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(total, inf);

  // flat index: axis 0 slowest, last axis fastest
  std::vector<std::size_t> stride(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i)
    stride[static_cast<std::size_t>(i)] = stride[static_cast<std::size_t>(i + 1)] * static_cast<std::size_t>(ext[static_cast<std::size_t>(i + 1)]);
  set.for_each([&](const std::vector<LatticeSet::Index>& z) {
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
      k += static_cast<std::size_t>(z[static_cast<std::size_t>(i)] - set.lo()[static_cast<std::size_t>(i)]) * stride[static_cast<std::size_t>(i)];
    f[k] = 0.0;
  });

  std::vector<double> line, out;
  std::vector<std::size_t> v;
  std::vector<double> zb;
  for (int axis = 0; axis < n; ++axis) {
    const auto len = static_cast<std::size_t>(ext[static_cast<std::size_t>(axis)]);
    const std::size_t st = stride[static_cast<std::size_t>(axis)];
    line.resize(len);
    out.resize(len);
    v.resize(len);
    zb.resize(len + 1);
    for (std::size_t start = 0; start < total; ++start) {
      if ((start / st) % len != 0) continue;  // first node of each line along `axis`
      for (std::size_t q = 0; q < len; ++q) line[q] = f[start + q * st];
      // Felzenszwalb-Huttenlocher 1-D transform
      std::size_t k = 0;
      std::size_t first = len;
      for (std::size_t q = 0; q < len; ++q)
        if (line[q] < inf) {
          first = q;
          break;
        }
      if (first == len) continue;
      v[0] = first;
      zb[0] = -inf;
      zb[1] = inf;
      for (std::size_t q = first + 1; q < len; ++q) {
        if (line[q] == inf) continue;
        double s;
        while (true) {
          const double qd = static_cast<double>(q), vd = static_cast<double>(v[k]);
          s = ((line[q] + qd * qd) - (line[v[k]] + vd * vd)) / (2 * qd - 2 * vd);
          if (s <= zb[k] && k > 0) {
            --k;
          } else {
            break;
          }
        }
        ++k;
        v[k] = q;
        zb[k] = s;
        zb[k + 1] = inf;
      }
      k = 0;
      for (std::size_t q = 0; q < len; ++q) {
        while (zb[k + 1] < static_cast<double>(q)) ++k;
        const double d = static_cast<double>(q) - static_cast<double>(v[k]);
        out[q] = d * d + line[v[k]];
      }
      for (std::size_t q = 0; q < len; ++q) f[start + q * st] = out[q];
    }
  }
  return f;
}

}  // namespace hullmetry
