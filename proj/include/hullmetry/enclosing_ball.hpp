#pragma once

#include <algorithm>
#include <cstddef>
#include <list>
#include <numeric>
#include <random>
#include <vector>

#include "hullmetry/core.hpp"

namespace hullmetry {

struct Ball {
  Point center;
  double radius = 0.0;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& p, double tol) const {
    return (p - center).norm() <= radius + tol;
  }
};

/// Smallest enclosing ball together with the input indices of the points on
/// its boundary that determine it (at most n+1 of them).
struct EnclosingBall {
  Ball ball;
  std::vector<std::size_t> support;
};

namespace detail {

/// Smallest ball having all `support` points on its boundary, with centre in
/// their affine hull. Radius is negative when the support is affinely dependent.
inline Ball circumball(const Eigen::MatrixXd& pts, const std::vector<std::size_t>& support) {
  const auto n = pts.rows();
  if (support.empty()) return {Point::Zero(n), -1.0};
  const Point q0 = pts.col(static_cast<Eigen::Index>(support[0]));
  if (support.size() == 1) return {q0, 0.0};
  const auto k = static_cast<Eigen::Index>(support.size() - 1);
  Eigen::MatrixXd a(n, k);
  for (Eigen::Index j = 0; j < k; ++j) a.col(j) = pts.col(static_cast<Eigen::Index>(support[static_cast<std::size_t>(j + 1)])) - q0;
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd rhs = 0.5 * gram.diagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  qr.setThreshold(1e-12);
  if (qr.rank() < k) return {q0, -1.0};
  const Eigen::VectorXd lambda = qr.solve(rhs);
  const Point center = q0 + a * lambda;
  double r = 0.0;
  for (auto s : support) r = std::max(r, (pts.col(static_cast<Eigen::Index>(s)) - center).norm());
  return {center, r};
}

class MoveToFrontBall {
 public:
  MoveToFrontBall(const Eigen::MatrixXd& pts, double tol) : pts_(pts), tol_(tol) {}

  EnclosingBall solve() {
    std::vector<std::size_t> order(static_cast<std::size_t>(pts_.cols()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(0x5eedULL);
    std::shuffle(order.begin(), order.end(), rng);
    list_.assign(order.begin(), order.end());
    std::vector<std::size_t> support;
    EnclosingBall best;
    best.ball = recurse(list_.end(), support, best.support);
    return best;
  }

 private:
  bool inside(const Ball& b, std::size_t i) const {
    return b.radius >= 0 && (pts_.col(static_cast<Eigen::Index>(i)) - b.center).norm() <= b.radius + tol_;
  }

  Ball recurse(std::list<std::size_t>::iterator end, std::vector<std::size_t>& support,
               std::vector<std::size_t>& best_support) {
    Ball b = circumball(pts_, support);
    best_support = support;
    if (support.size() == static_cast<std::size_t>(pts_.rows() + 1)) return b;
    for (auto it = list_.begin(); it != end;) {
      auto cur = it++;
      if (inside(b, *cur)) continue;
      support.push_back(*cur);
      std::vector<std::size_t> inner;
      Ball nb = recurse(cur, support, inner);
      support.pop_back();
      if (nb.radius >= 0) {
        b = nb;
        best_support = std::move(inner);
      }
      list_.splice(list_.begin(), list_, cur);
    }
    return b;
  }

  const Eigen::MatrixXd& pts_;
  double tol_;
  std::list<std::size_t> list_;
};

/// Badoiu-Clarkson core-set iteration; approximate, used above dimension 10.
inline EnclosingBall approximate_ball(const Eigen::MatrixXd& pts, int iterations) {
  Point c = pts.col(0);
  for (int i = 1; i <= iterations; ++i) {
    Eigen::Index far = 0;
    (pts.colwise() - c).colwise().squaredNorm().maxCoeff(&far);
    c += (pts.col(far) - c) / static_cast<double>(i + 1);
  }
  Eigen::Index far = 0;
  const double r = std::sqrt((pts.colwise() - c).colwise().squaredNorm().maxCoeff(&far));
  return {{c, r}, {static_cast<std::size_t>(far)}};
}

}  // namespace detail

/// Smallest enclosing ball: Welzl's move-to-front recursion for n <= 10,
/// core-set refinement beyond. Every point lies within radius + tolerance.
inline EnclosingBall min_enclosing_ball_support(const PointCloud& cloud) {
  const auto& pts = cloud.matrix();
  const double tol = kGeomTol * std::max(bbox_extent(pts), 1e-300);
  if (cloud.dim() <= 10) {
    detail::MoveToFrontBall solver(pts, tol);
    auto result = solver.solve();
    std::sort(result.support.begin(), result.support.end());
    return result;
  }
  auto result = detail::approximate_ball(pts, 4000);
  return result;
}

inline Ball min_enclosing_ball(const PointCloud& cloud) { return min_enclosing_ball_support(cloud).ball; }

}  // namespace hullmetry
