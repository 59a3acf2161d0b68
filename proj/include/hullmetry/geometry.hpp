#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hullmetry/core.hpp"
#include "hullmetry/enclosing_ball.hpp"
#include "hullmetry/polytope.hpp"
#include "hullmetry/quickhull.hpp"

namespace hullmetry {

inline double polytope_volume(const Polytope& poly) { return volume_det(poly.boundary); }

/// Vol(circumscribed ball) / Vol(body), with the exact n-ball volume.
inline double beta_ratio(const Polytope& poly) {
  const double vol = polytope_volume(poly);
  if (!(vol > 0)) throw Error(ErrorCode::DegenerateInput, "polytope has zero volume");
  const Ball b = min_enclosing_ball(vertex_cloud(poly));
  return ball_volume(poly.dim(), b.radius) / vol;
}

/// Vol(hull) / Vol(body). Values within the volume tolerance of 1 are
/// reported as exactly 1.
inline double volume_ratio_poly(const Polytope& poly) {
  const double vol = polytope_volume(poly);
  if (!(vol > 0)) throw Error(ErrorCode::DegenerateInput, "polytope has zero volume");
  const double hull_vol = polytope_volume(quickhull(vertex_cloud(poly)));
  const double r = hull_vol / vol;
  if (std::abs(r - 1.0) <= kVolTol) return 1.0;
  return r;
}

inline bool is_convex(const Polytope& poly) { return volume_ratio_poly(poly) == 1.0; }

/// Closed point-membership test for a (possibly non-convex) polytope by ray
/// parity along a fixed generic direction. Each boundary simplex is
/// pre-factored once so a query is a handful of small mat-vec products.
class PolytopeMembership {
 public:
  explicit PolytopeMembership(const Polytope& poly) : n_(poly.dim()) {
    const auto& b = poly.boundary;
    std::vector<Point> verts = b.vertices;
    Eigen::MatrixXd all(n_, static_cast<Eigen::Index>(verts.size()));
    for (std::size_t i = 0; i < verts.size(); ++i) all.col(static_cast<Eigen::Index>(i)) = verts[i];
    tol_ = kGeomTol * std::max(bbox_extent(all), 1e-300);

    Point d(n_);
    for (int i = 0; i < n_; ++i) d[i] = std::sin(1.2345 * (i + 1)) + 0.3137 * (i + 1);
    d.normalize();

    for (const auto& s : b.simplices) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_ + 1, n_ + 1);
      for (int i = 0; i < n_; ++i) {
        m.block(0, i, n_, 1) = verts[s.vertices[static_cast<std::size_t>(i)]];
        m(n_, i) = 1.0;
      }
      m.block(0, n_, n_, 1) = -d;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
      if (!lu.isInvertible()) continue;
      inverses_.push_back(lu.inverse());
    }
  }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd rhs(n_ + 1);
    rhs.head(n_) = x;
    rhs[n_] = 1.0;
    int crossings = 0;
    for (const auto& inv : inverses_) {
      const Eigen::VectorXd sol = inv * rhs;
      const double t = sol[n_];
      const double lam_min = sol.head(n_).minCoeff();
      if (std::abs(t) <= tol_ && lam_min >= -1e-12) return true;
      if (t > tol_ && lam_min > 0) ++crossings;
    }
    return (crossings % 2) == 1;
  }

 private:
  int n_;
  double tol_ = 0.0;
  std::vector<Eigen::MatrixXd> inverses_;
};

}  // namespace hullmetry
