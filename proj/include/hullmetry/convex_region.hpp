#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hullmetry/core.hpp"
#include "hullmetry/geometry.hpp"
#include "hullmetry/quickhull.hpp"

namespace hullmetry {

/// Orthonormal frame of the affine hull of a point set.
struct AffineFrame {
  Point origin;
  Eigen::MatrixXd basis;  // n x r
  int rank = 0;

  Eigen::MatrixXd project(const Eigen::MatrixXd& pts) const { return basis.transpose() * (pts.colwise() - origin); }
  Point lift(const Eigen::VectorXd& u) const { return origin + basis * u; }
};

inline AffineFrame affine_frame(const Eigen::MatrixXd& pts) {
  const auto n = pts.rows();
  AffineFrame f;
  f.origin = pts.rowwise().mean();
  const double ext = std::max(bbox_extent(pts), 1e-300);
  const Eigen::MatrixXd centered = pts.colwise() - f.origin;
  const Eigen::MatrixXd cov = centered * centered.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const double thresh = std::pow(kGeomTol * ext, 2) * static_cast<double>(pts.cols());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = n - 1; i >= 0; --i)
    if (es.eigenvalues()[i] > thresh) keep.push_back(i);
  f.rank = static_cast<int>(keep.size());
  if (f.rank == n) {
    f.origin = Point::Zero(n);
    f.basis = Eigen::MatrixXd::Identity(n, n);
    return f;
  }
  f.basis.resize(n, f.rank);
  for (int j = 0; j < f.rank; ++j) f.basis.col(j) = es.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
  return f;
}

/// conv(points), possibly lower-dimensional: the hull is built in the
/// affine frame and membership adds an orthogonal residual test.
class ConvexRegion {
 public:
  explicit ConvexRegion(const Eigen::MatrixXd& pts) : frame_(affine_frame(pts)) {
    tol_ = kGeomTol * std::max(bbox_extent(pts), 1e-300);
    if (frame_.rank == 0) {
      vertices_ = frame_.origin;
      return;
    }
    const Eigen::MatrixXd reduced = frame_.project(pts);
    const Polytope hull = quickhull(PointCloud(reduced));
    planes_ = facet_planes(hull);
    const auto& rv = hull.vertices();
    vertices_.resize(pts.rows(), static_cast<Eigen::Index>(rv.size()));
    for (std::size_t i = 0; i < rv.size(); ++i) vertices_.col(static_cast<Eigen::Index>(i)) = frame_.lift(rv[i]);
    reduced_vertices_.resize(frame_.rank, static_cast<Eigen::Index>(rv.size()));
    for (std::size_t i = 0; i < rv.size(); ++i) reduced_vertices_.col(static_cast<Eigen::Index>(i)) = rv[i];
    reduced_volume_ = polytope_volume(hull);
    if (frame_.rank == pts.rows()) volume_ = reduced_volume_;
  }

  int dim() const { return static_cast<int>(frame_.origin.size()); }
  int rank() const { return frame_.rank; }
  const AffineFrame& frame() const { return frame_; }
  const Eigen::MatrixXd& vertices() const { return vertices_; }
  double volume() const { return volume_; }
  /// Volume inside the affine hull (length, area, ... in dimension rank()).
  double reduced_volume() const { return reduced_volume_; }
  double tolerance() const { return tol_; }

  /// Largest outward violation: facet excess inside the affine hull combined
  /// with the distance off it. Non-positive means inside.
  double excess(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    const Eigen::VectorXd d = x - frame_.origin;
    if (frame_.rank == 0) return d.norm();
    const Eigen::VectorXd u = frame_.basis.transpose() * d;
    const double off = (d - frame_.basis * u).norm();
    const double e = planes_.excess(u);
    if (off <= tol_) return e;
    return std::hypot(std::max(e, 0.0), off);
  }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x, double tol) const { return excess(x) <= tol; }

  /// Points of the region on a grid of the given spacing in the affine frame,
  /// plus its vertices.
  std::vector<Point> grid_sample(double spacing) const {
    std::vector<Point> out;
    for (Eigen::Index j = 0; j < vertices_.cols(); ++j) out.push_back(vertices_.col(j));
    if (frame_.rank == 0) return out;
    const int r = frame_.rank;
    const Eigen::VectorXd lo = reduced_vertices_.rowwise().minCoeff();
    const Eigen::VectorXd hi = reduced_vertices_.rowwise().maxCoeff();
    std::vector<long long> cnt(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) cnt[static_cast<std::size_t>(i)] = static_cast<long long>(std::floor((hi[i] - lo[i]) / spacing + 1e-9)) + 1;
    std::vector<long long> z(static_cast<std::size_t>(r), 0);
    Eigen::VectorXd u(r);
    while (true) {
      for (int i = 0; i < r; ++i) u[i] = lo[i] + spacing * static_cast<double>(z[static_cast<std::size_t>(i)]);
      if (planes_.contains(u, tol_)) out.push_back(frame_.lift(u));
      int i = 0;
      while (i < r && ++z[static_cast<std::size_t>(i)] == cnt[static_cast<std::size_t>(i)]) z[static_cast<std::size_t>(i++)] = 0;
      if (i == r) break;
    }
    return out;
  }

 private:
  AffineFrame frame_;
  Halfspaces planes_;
  Eigen::MatrixXd vertices_;
  Eigen::MatrixXd reduced_vertices_;
  double tol_ = 0.0;
  double volume_ = 0.0;
  double reduced_volume_ = 0.0;
};

/// Volume of conv(points) in its affine dimension. Affinely independent sets
/// use the Gram determinant and work in any dimension; others go through the
/// hull in the affine frame.
inline double affine_hull_volume(const Eigen::MatrixXd& pts) {
  const AffineFrame f = affine_frame(pts);
  if (f.rank == 0) return 0.0;
  if (f.rank + 1 == pts.cols()) {
    const Eigen::MatrixXd e = pts.rightCols(pts.cols() - 1).colwise() - pts.col(0);
    return std::sqrt(std::max((e.transpose() * e).determinant(), 0.0)) / factorial(f.rank);
  }
  if (f.rank > kMaxHullDim) throw Error(ErrorCode::Unsupported, "hull volume is capped at affine dimension 8");
  return ConvexRegion(pts).reduced_volume();
}

}  // namespace hullmetry
