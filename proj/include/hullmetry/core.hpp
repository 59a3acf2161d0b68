#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hullmetry {

using Point = Eigen::VectorXd;

/// Absolute tolerance for geometric predicates on diameter-1 inputs.
inline constexpr double kGeomTol = 1e-9;
/// Relative tolerance for volume comparisons.
inline constexpr double kVolTol = 1e-9;
/// Largest dimension handled by the exact hull and boundary code.
inline constexpr int kMaxHullDim = 8;

enum class ErrorCode {
  DegenerateInput,
  NonOrientable,
  DimensionMismatch,
  NonpositiveScale,
  ParamOutOfRange,
  TooLarge,
  PreconditionFailed,
  Unsupported,
  ParseError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NonOrientable: return "NonOrientable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonpositiveScale: return "NonpositiveScale";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Metric { Euclidean };

/// A finite point set; one column per point.
class PointCloud {
 public:
  PointCloud() = default;

  explicit PointCloud(Eigen::MatrixXd points, Metric metric = Metric::Euclidean)
      : points_(std::move(points)), metric_(metric) {
    if (points_.cols() == 0) throw Error(ErrorCode::DegenerateInput, "point cloud is empty");
    if (points_.rows() < 1) throw Error(ErrorCode::DegenerateInput, "point dimension must be >= 1");
    if (!points_.allFinite()) throw Error(ErrorCode::DegenerateInput, "point cloud has non-finite entries");
  }

  static PointCloud from_points(const std::vector<Point>& pts) {
    if (pts.empty()) throw Error(ErrorCode::DegenerateInput, "point cloud is empty");
    const auto n = pts.front().size();
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].size() != n) throw Error(ErrorCode::DimensionMismatch, "points of mixed dimension");
      m.col(static_cast<Eigen::Index>(i)) = pts[i];
    }
    return PointCloud(std::move(m));
  }

  int dim() const { return static_cast<int>(points_.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(points_.cols()); }
  Metric metric() const { return metric_; }

  auto point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXd& matrix() const { return points_; }

  double distance(std::size_t i, std::size_t j) const {
    return (points_.col(static_cast<Eigen::Index>(i)) - points_.col(static_cast<Eigen::Index>(j))).norm();
  }

  double diameter() const {
    double best = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) best = std::max(best, distance(i, j));
    return best;
  }

  PointCloud scaled(double factor) const { return PointCloud(points_ * factor, metric_); }

  PointCloud subset(const std::vector<std::size_t>& idx) const {
    Eigen::MatrixXd m(points_.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = point(idx[i]);
    return PointCloud(std::move(m), metric_);
  }

 private:
  Eigen::MatrixXd points_;
  Metric metric_ = Metric::Euclidean;
};

/// Volume of the unit Euclidean ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline double ball_volume(int n, double radius) { return unit_ball_volume(n) * std::pow(radius, n); }

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Largest coordinate extent of the axis-aligned bounding box.
inline double bbox_extent(const Eigen::MatrixXd& pts) {
  if (pts.cols() == 0) return 0.0;
  return (pts.rowwise().maxCoeff() - pts.rowwise().minCoeff()).maxCoeff();
}

inline bool relative_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace hullmetry
