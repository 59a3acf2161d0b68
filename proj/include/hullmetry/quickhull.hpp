#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "hullmetry/core.hpp"
#include "hullmetry/polytope.hpp"

namespace hullmetry {

/// Convex hull as indices into the input cloud. `vertex_indices` holds the
/// extreme points in increasing order; each facet lists n input indices
/// ordered so the facet is outward oriented.
struct HullIndices {
  std::vector<std::size_t> vertex_indices;
  std::vector<std::vector<std::size_t>> facets;
};

namespace detail {

class QuickhullBuilder {
 public:
  QuickhullBuilder(const Eigen::MatrixXd& pts, std::vector<std::size_t> active)
      : pts_(pts), n_(static_cast<int>(pts.rows())), active_(std::move(active)) {
    double extent = 0.0;
    for (int r = 0; r < n_; ++r) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (auto i : active_) {
        lo = std::min(lo, pts_(r, static_cast<Eigen::Index>(i)));
        hi = std::max(hi, pts_(r, static_cast<Eigen::Index>(i)));
      }
      extent = std::max(extent, hi - lo);
    }
    eps_ = kGeomTol * std::max(extent, std::numeric_limits<double>::min());
  }

  HullIndices run() {
    if (n_ == 1) return run_1d();
    initial_simplex();
    grow();
    HullIndices out;
    std::vector<char> used(static_cast<std::size_t>(pts_.cols()), 0);
    for (const auto& f : facets_) {
      if (!f.alive) continue;
      out.facets.push_back(f.v);
      for (auto v : f.v) used[v] = 1;
    }
    for (std::size_t i = 0; i < used.size(); ++i)
      if (used[i]) out.vertex_indices.push_back(i);
    return out;
  }

  /// Hull vertices whose incident facet normals span R^n (0-faces of the hull).
  std::vector<std::size_t> extreme_vertices(const HullIndices& h) const {
    std::map<std::size_t, std::vector<const Point*>> incident;
    for (const auto& f : facets_) {
      if (!f.alive) continue;
      for (auto v : f.v) incident[v].push_back(&f.normal);
    }
    std::vector<std::size_t> keep;
    for (auto v : h.vertex_indices) {
      const auto& normals = incident[v];
      Eigen::MatrixXd m(n_, static_cast<Eigen::Index>(normals.size()));
      for (std::size_t i = 0; i < normals.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = *normals[i];
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
      const auto& sv = svd.singularValues();
      int rank = 0;
      for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 1e-7 * sv[0]) ++rank;
      if (rank == n_) keep.push_back(v);
    }
    return keep;
  }

 private:
  struct Facet {
    std::vector<std::size_t> v;
    Point normal;
    double offset = 0.0;
    std::vector<std::size_t> nb;  // nb[i] lies across the ridge opposite v[i]
    std::vector<std::size_t> outside;
    bool alive = true;
  };

  auto col(std::size_t i) const { return pts_.col(static_cast<Eigen::Index>(i)); }

  double dist(const Facet& f, std::size_t p) const { return f.normal.dot(col(p)) - f.offset; }

  HullIndices run_1d() {
    std::size_t lo = active_.front(), hi = active_.front();
    for (auto i : active_) {
      if (pts_(0, static_cast<Eigen::Index>(i)) < pts_(0, static_cast<Eigen::Index>(lo))) lo = i;
      if (pts_(0, static_cast<Eigen::Index>(i)) > pts_(0, static_cast<Eigen::Index>(hi))) hi = i;
    }
    if (pts_(0, static_cast<Eigen::Index>(hi)) - pts_(0, static_cast<Eigen::Index>(lo)) <= eps_)
      throw Error(ErrorCode::DegenerateInput, "points are affinely dependent (hull has empty interior)");
    HullIndices out;
    out.vertex_indices = {std::min(lo, hi), std::max(lo, hi)};
    out.facets = {{lo}, {hi}};
    return out;
  }

  void initial_simplex() {
    if (active_.size() < static_cast<std::size_t>(n_ + 1))
      throw Error(ErrorCode::DegenerateInput, "need at least n+1 points");
    std::vector<std::size_t> chosen;
    std::size_t first = active_.front();
    for (auto i : active_)
      if (pts_(0, static_cast<Eigen::Index>(i)) < pts_(0, static_cast<Eigen::Index>(first))) first = i;
    chosen.push_back(first);

    std::vector<Point> basis;
    for (int k = 1; k <= n_; ++k) {
      double best = -1.0;
      std::size_t arg = active_.front();
      for (auto i : active_) {
        Point r = col(i) - col(first);
        for (const auto& b : basis) r -= b.dot(r) * b;
        const double d = r.norm();
        if (d > best) {
          best = d;
          arg = i;
        }
      }
      if (best <= eps_) throw Error(ErrorCode::DegenerateInput, "points are affinely dependent (hull has empty interior)");
      Point r = col(arg) - col(first);
      for (const auto& b : basis) r -= b.dot(r) * b;
      basis.push_back(r.normalized());
      chosen.push_back(arg);
    }

    interior_ = Point::Zero(n_);
    for (auto c : chosen) interior_ += col(c);
    interior_ /= static_cast<double>(chosen.size());

    std::vector<std::size_t> fresh;
    for (std::size_t skip = 0; skip < chosen.size(); ++skip) {
      std::vector<std::size_t> v;
      for (std::size_t j = 0; j < chosen.size(); ++j)
        if (j != skip) v.push_back(chosen[j]);
      fresh.push_back(make_facet(std::move(v)));
    }
    link(fresh);

    std::vector<char> in_simplex(static_cast<std::size_t>(pts_.cols()), 0);
    for (auto c : chosen) in_simplex[c] = 1;
    std::vector<std::size_t> rest;
    for (auto i : active_)
      if (!in_simplex[i]) rest.push_back(i);
    assign(rest, fresh);
  }

  std::size_t make_facet(std::vector<std::size_t> v) {
    Eigen::MatrixXd edges(n_ - 1, n_);
    for (int i = 1; i < n_; ++i) edges.row(i - 1) = (col(v[static_cast<std::size_t>(i)]) - col(v[0])).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(edges, Eigen::ComputeFullV);
    Point normal = svd.matrixV().col(n_ - 1);
    if (normal.dot(interior_ - col(v[0])) > 0) normal = -normal;

    Eigen::MatrixXd m(n_, n_);
    for (int i = 0; i < n_; ++i) m.col(i) = col(v[static_cast<std::size_t>(i)]) - interior_;
    if (m.determinant() < 0) std::swap(v[0], v[1]);

    Facet f;
    f.offset = normal.dot(col(v[0]));
    f.normal = std::move(normal);
    f.nb.assign(static_cast<std::size_t>(n_), kNone);
    f.v = std::move(v);
    facets_.push_back(std::move(f));
    return facets_.size() - 1;
  }

  static std::vector<std::size_t> ridge_key(const Facet& f, std::size_t skip) {
    std::vector<std::size_t> r;
    for (std::size_t j = 0; j < f.v.size(); ++j)
      if (j != skip) r.push_back(f.v[j]);
    std::sort(r.begin(), r.end());
    return r;
  }

  /// Connects unset neighbour slots among the given facets through shared ridges.
  void link(const std::vector<std::size_t>& ids) {
    std::map<std::vector<std::size_t>, std::pair<std::size_t, std::size_t>> open;
    for (auto id : ids) {
      for (std::size_t i = 0; i < facets_[id].v.size(); ++i) {
        if (facets_[id].nb[i] != kNone) continue;
        auto key = ridge_key(facets_[id], i);
        auto it = open.find(key);
        if (it == open.end()) {
          open.emplace(std::move(key), std::make_pair(id, i));
        } else {
          auto [other, slot] = it->second;
          facets_[id].nb[i] = other;
          facets_[other].nb[slot] = id;
          open.erase(it);
        }
      }
    }
  }

  void assign(const std::vector<std::size_t>& points, const std::vector<std::size_t>& candidates) {
    for (auto p : points) {
      for (auto fid : candidates) {
        if (dist(facets_[fid], p) > eps_) {
          facets_[fid].outside.push_back(p);
          break;
        }
      }
    }
  }

  void grow() {
    for (std::size_t cursor = 0; cursor < facets_.size(); ++cursor) {
      if (!facets_[cursor].alive || facets_[cursor].outside.empty()) continue;
      const Facet& seed = facets_[cursor];
      std::size_t apex = seed.outside.front();
      double far = dist(seed, apex);
      for (auto p : seed.outside) {
        const double d = dist(seed, p);
        if (d > far || (d == far && p < apex)) {
          far = d;
          apex = p;
        }
      }
      add_point(cursor, apex);
    }
  }

  void add_point(std::size_t seed, std::size_t apex) {
    std::vector<std::size_t> visible{seed};
    std::vector<char> mark(facets_.size(), 0);  // 1 visible, 2 checked and hidden
    mark[seed] = 1;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      for (auto nb : facets_[visible[k]].nb) {
        if (mark[nb]) continue;
        if (dist(facets_[nb], apex) > eps_) {
          mark[nb] = 1;
          visible.push_back(nb);
        } else {
          mark[nb] = 2;
        }
      }
    }

    std::vector<std::size_t> fresh;
    for (auto fid : visible) {
      for (std::size_t i = 0; i < facets_[fid].v.size(); ++i) {
        const std::size_t other = facets_[fid].nb[i];
        if (mark[other] == 1) continue;
        std::vector<std::size_t> v;
        v.push_back(apex);
        for (std::size_t j = 0; j < facets_[fid].v.size(); ++j)
          if (j != i) v.push_back(facets_[fid].v[j]);
        const std::size_t nf = make_facet(std::move(v));
        mark.push_back(0);
        const auto& nv = facets_[nf].v;
        const auto slot = static_cast<std::size_t>(std::find(nv.begin(), nv.end(), apex) - nv.begin());
        facets_[nf].nb[slot] = other;
        auto& onb = facets_[other].nb;
        *std::find(onb.begin(), onb.end(), fid) = nf;
        fresh.push_back(nf);
      }
    }
    link(fresh);

    std::vector<std::size_t> orphans;
    for (auto fid : visible) {
      facets_[fid].alive = false;
      for (auto p : facets_[fid].outside)
        if (p != apex) orphans.push_back(p);
      facets_[fid].outside.clear();
    }
    std::sort(orphans.begin(), orphans.end());
    assign(orphans, fresh);
  }

  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  const Eigen::MatrixXd& pts_;
  int n_;
  std::vector<std::size_t> active_;
  double eps_ = 0.0;
  Point interior_;
  std::vector<Facet> facets_;
};

}  // namespace detail

/// Quickhull on the columns of `pts`. Points within the predicate tolerance
/// of a facet hyperplane count as on it; farthest-point ties go to the lowest
/// index. Non-extreme points picked up on flat faces are dropped and the hull
/// rebuilt from the extreme points only.
inline HullIndices convex_hull_indices(const Eigen::MatrixXd& pts) {
  const int n = static_cast<int>(pts.rows());
  if (n < 1) throw Error(ErrorCode::ParamOutOfRange, "dimension must be >= 1");
  if (n > kMaxHullDim) throw Error(ErrorCode::Unsupported, "quickhull is capped at dimension 8");
  std::vector<std::size_t> active(static_cast<std::size_t>(pts.cols()));
  std::iota(active.begin(), active.end(), std::size_t{0});
  for (int round = 0; round < 4; ++round) {
    detail::QuickhullBuilder builder(pts, active);
    HullIndices h = builder.run();
    if (n == 1) return h;
    auto extreme = builder.extreme_vertices(h);
    if (extreme.size() == h.vertex_indices.size()) return h;
    active = std::move(extreme);
  }
  throw Error(ErrorCode::DegenerateInput, "hull vertex set did not stabilise");
}

inline HullIndices convex_hull_indices(const PointCloud& cloud) { return convex_hull_indices(cloud.matrix()); }

/// Convex hull of a point cloud as a polytope whose vertex table is the set
/// of extreme points in input order.
inline Polytope quickhull(const PointCloud& cloud) {
  const HullIndices h = convex_hull_indices(cloud);
  std::vector<std::size_t> remap(cloud.size(), 0);
  std::vector<Point> verts;
  for (std::size_t i = 0; i < h.vertex_indices.size(); ++i) {
    remap[h.vertex_indices[i]] = i;
    verts.push_back(cloud.point(h.vertex_indices[i]));
  }
  std::vector<std::vector<std::size_t>> facets;
  for (const auto& f : h.facets) {
    std::vector<std::size_t> g;
    for (auto v : f) g.push_back(remap[v]);
    facets.push_back(std::move(g));
  }
  return make_polytope(cloud.dim(), verts, facets);
}

/// Outward halfspace description {x : normal . x <= offset} of a convex body.
struct Halfspaces {
  Eigen::MatrixXd normals;  // one row per facet, unit length
  Eigen::VectorXd offsets;

  /// Largest signed distance outside any facet; <= 0 inside.
  double excess(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return (normals * x - offsets).maxCoeff();
  }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const { return excess(x) <= tol; }
};

/// Facet planes of a convex polytope, oriented away from the vertex centroid.
inline Halfspaces facet_planes(const Polytope& poly) {
  const int n = poly.dim();
  const auto& b = poly.boundary;
  Point c = Point::Zero(n);
  for (const auto& v : b.vertices) c += v;
  c /= static_cast<double>(b.vertices.size());
  Halfspaces h;
  h.normals.resize(static_cast<Eigen::Index>(b.simplices.size()), n);
  h.offsets.resize(static_cast<Eigen::Index>(b.simplices.size()));
  for (std::size_t s = 0; s < b.simplices.size(); ++s) {
    const auto& sx = b.simplices[s];
    const Point& v0 = b.vertices[sx.vertices[0]];
    Point normal(n);
    if (n == 1) {
      normal[0] = (v0[0] >= c[0]) ? 1.0 : -1.0;
    } else {
      Eigen::MatrixXd edges(n - 1, n);
      for (int i = 1; i < n; ++i) edges.row(i - 1) = (b.vertices[sx.vertices[static_cast<std::size_t>(i)]] - v0).transpose();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(edges, Eigen::ComputeFullV);
      normal = svd.matrixV().col(n - 1);
      if (normal.dot(v0 - c) < 0) normal = -normal;
    }
    h.normals.row(static_cast<Eigen::Index>(s)) = normal.transpose();
    h.offsets[static_cast<Eigen::Index>(s)] = normal.dot(v0);
  }
  return h;
}

}  // namespace hullmetry
