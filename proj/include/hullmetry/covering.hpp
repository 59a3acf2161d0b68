#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hullmetry/convex_region.hpp"
#include "hullmetry/core.hpp"
#include "hullmetry/geometry.hpp"
#include "hullmetry/minkowski.hpp"
#include "hullmetry/polytope.hpp"

namespace hullmetry {

inline constexpr std::size_t kExactCoverMax = 24;

struct CoveringReport {
  double epsilon = 0.0;
  std::size_t n_greedy = 0;
  std::size_t n_packing = 0;  // size of a 2*eps-separated subset: N(eps) >= n_packing
  std::optional<std::size_t> n_exact;
  std::optional<double> vol_lower, vol_upper;
  std::vector<Point> centers;
};

/// Farthest-first traversal from index 0, lowest index on ties. radius[i]
/// is the distance of the i-th pick to the earlier picks (infinite for the
/// first); it is non-increasing, so one traversal serves every epsilon.
class FarthestFirst {
 public:
  explicit FarthestFirst(const Eigen::MatrixXd& pts) {
    const auto n = static_cast<std::size_t>(pts.cols());
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<char> picked(n, 0);
    std::size_t cur = 0;
    for (std::size_t step = 0; step < n; ++step) {
      order_.push_back(cur);
      radius_.push_back(step == 0 ? std::numeric_limits<double>::infinity() : dist[cur]);
      picked[cur] = 1;
      std::size_t next = n;
      double best = -1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (picked[j]) continue;
        const double d = (pts.col(static_cast<Eigen::Index>(j)) - pts.col(static_cast<Eigen::Index>(cur))).norm();
        dist[j] = std::min(dist[j], d);
        if (dist[j] > best) {
          best = dist[j];
          next = j;
        }
      }
      if (next == n || best == 0.0) break;  // remaining points coincide with picks
      cur = next;
    }
  }

  /// Greedy closed-ball cover size at eps: picks made while the farthest
  /// remaining point was more than eps away.
  std::size_t count(double eps) const {
    std::size_t c = 0;
    while (c < radius_.size() && radius_[c] > eps) ++c;
    return c;
  }
  const std::vector<std::size_t>& order() const { return order_; }
  const std::vector<double>& radius() const { return radius_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> radius_;
};

namespace detail {

inline void check_epsilon(double eps) {
  if (!(eps > 0) || !std::isfinite(eps)) throw Error(ErrorCode::ParamOutOfRange, "epsilon must be positive");
}

class ExactCover {
 public:
  ExactCover(const Eigen::MatrixXd& pts, double eps) : n_(static_cast<int>(pts.cols())) {
    for (int i = 0; i < n_; ++i) {
      std::uint32_t m = 0;
      for (int j = 0; j < n_; ++j)
        if ((pts.col(i) - pts.col(j)).norm() <= eps) m |= 1u << j;
      cover_.push_back(m);
      max_cover_ = std::max(max_cover_, std::popcount(m));
    }
  }

  int solve() {
    best_ = n_;
    const std::uint32_t all = (n_ == 32) ? ~0u : ((1u << n_) - 1u);
    search(all, 0);
    return best_;
  }

 private:
  void search(std::uint32_t uncovered, int used) {
    if (!uncovered) {
      best_ = std::min(best_, used);
      return;
    }
    const int need = (std::popcount(uncovered) + max_cover_ - 1) / max_cover_;
    if (used + need >= best_) return;
    const int i = std::countr_zero(uncovered);
    std::vector<std::pair<int, int>> cand;
    for (int c = 0; c < n_; ++c)
      if (cover_[static_cast<std::size_t>(c)] >> i & 1u)
        cand.push_back({-std::popcount(cover_[static_cast<std::size_t>(c)] & uncovered), c});
    std::sort(cand.begin(), cand.end());
    for (const auto& [gain, c] : cand) search(uncovered & ~cover_[static_cast<std::size_t>(c)], used + 1);
  }

  int n_;
  int max_cover_ = 1;
  int best_ = 0;
  std::vector<std::uint32_t> cover_;
};

}  // namespace detail

/// Minimum number of closed eps-balls centred at cloud points that cover it.
inline std::size_t exact_cover_small(const PointCloud& cloud, double eps) {
  detail::check_epsilon(eps);
  if (cloud.size() > kExactCoverMax) throw Error(ErrorCode::TooLarge, "exact cover is limited to 24 points");
  return static_cast<std::size_t>(detail::ExactCover(cloud.matrix(), eps).solve());
}

/// Size of the greedy maximal eps-separated subset (pairwise distances > eps).
inline std::size_t packing_number(const PointCloud& cloud, double eps) {
  detail::check_epsilon(eps);
  return FarthestFirst(cloud.matrix()).count(eps);
}

inline CoveringReport covering_report(const PointCloud& cloud, const FarthestFirst& ff, double eps) {
  detail::check_epsilon(eps);
  CoveringReport r;
  r.epsilon = eps;
  r.n_greedy = ff.count(eps);
  r.n_packing = ff.count(2 * eps);
  for (std::size_t i = 0; i < r.n_greedy; ++i) r.centers.push_back(cloud.point(ff.order()[i]));
  if (cloud.size() <= kExactCoverMax) r.n_exact = exact_cover_small(cloud, eps);
  return r;
}

/// Farthest-point greedy cover; the exact count is attached for small clouds.
inline CoveringReport greedy_cover(const PointCloud& cloud, double eps) {
  detail::check_epsilon(eps);
  return covering_report(cloud, FarthestFirst(cloud.matrix()), eps);
}

struct VolumeCoverBounds {
  double lower = 0.0;
  std::optional<double> upper;
  std::optional<double> middle;
  double inradius = 0.0;  // certified lower estimate
};

/// Largest ball radius found inside a convex polytope, by pattern search on
/// the facet-slack function from the vertex centroid. Never above the true
/// inradius.
inline double inradius_estimate(const Polytope& poly, Point* center = nullptr) {
  const Halfspaces h = facet_planes(quickhull(vertex_cloud(poly)));
  const int n = poly.dim();
  auto slack = [&](const Point& c) { return -h.excess(c); };
  Point c = Point::Zero(n);
  for (const auto& v : poly.vertices()) c += v;
  c /= static_cast<double>(poly.vertices().size());
  double best = slack(c);
  Eigen::MatrixXd verts(n, static_cast<Eigen::Index>(poly.vertices().size()));
  for (std::size_t i = 0; i < poly.vertices().size(); ++i) verts.col(static_cast<Eigen::Index>(i)) = poly.vertices()[i];
  double step = 0.25 * bbox_extent(verts);
  const double stop = 1e-12 * std::max(bbox_extent(verts), 1e-300);
  while (step > stop) {
    bool moved = false;
    for (int i = 0; i < n && !moved; ++i)
      for (double dir : {1.0, -1.0}) {
        Point trial = c;
        trial[i] += dir * step;
        const double s = slack(trial);
        if (s > best) {
          best = s;
          c = trial;
          moved = true;
          break;
        }
      }
    if (!moved) step *= 0.5;
  }
  if (center) *center = c;
  return std::max(best, 0.0);
}

namespace detail {

/// Unit-ball approximation for the Steiner-type middle term.
inline Eigen::MatrixXd sphere_points(int n) {
  if (n == 1) return (Eigen::MatrixXd(1, 2) << -1.0, 1.0).finished();
  if (n == 2) {
    Eigen::MatrixXd m(2, 512);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double a = 2 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(m.cols());
      m(0, j) = std::cos(a);
      m(1, j) = std::sin(a);
    }
    return m;
  }
  std::mt19937_64 rng(0xba11ULL);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, 400 * n);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < n; ++i) m(i, j) = g(rng);
    m.col(j).normalize();
  }
  return m;
}

}  // namespace detail

/// (1/eps)^n Vol(A)/Vol(B) and, when eps*B fits inside A, (3/eps)^n Vol(A)/Vol(B).
/// The middle form Vol(A + (eps/2)B)/Vol((eps/2)B) uses an inscribed
/// polytope for B, so it is a slight underestimate; dimensions <= 4 only.
inline VolumeCoverBounds volume_cover_bounds(const Polytope& poly, double eps, bool middle = false) {
  detail::check_epsilon(eps);
  const int n = poly.dim();
  const double vol = polytope_volume(poly);
  if (!(vol > 0)) throw Error(ErrorCode::DegenerateInput, "polytope has zero volume");
  VolumeCoverBounds b;
  const double vb = unit_ball_volume(n);
  b.lower = std::pow(1.0 / eps, n) * vol / vb;
  if (is_convex(poly)) {
    b.inradius = inradius_estimate(poly);
    if (b.inradius >= eps) b.upper = std::pow(3.0 / eps, n) * vol / vb;
    if (middle && n <= 4) {
      const auto a = BodyApprox::convex(detail::vertex_matrix(poly));
      const auto ball = BodyApprox::convex(detail::sphere_points(n) * (0.5 * eps));
      b.middle = minkowski_sum(a, ball).volume() / ball_volume(n, 0.5 * eps);
    }
  }
  return b;
}

/// Strict form: PreconditionFailed when the upper bound does not apply.
inline std::pair<double, double> volume_cover_bounds_strict(const Polytope& poly, double eps) {
  const auto b = volume_cover_bounds(poly, eps);
  if (!b.upper) throw Error(ErrorCode::PreconditionFailed, "eps-ball does not fit inside the body");
  return {b.lower, *b.upper};
}

// ---- samples used for covering continuous sets ----

namespace detail {

inline Eigen::MatrixXd to_matrix(const std::vector<Point>& pts, int n) {
  Eigen::MatrixXd m(n, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pts[i];
  return m;
}

/// Points of each boundary simplex on a barycentric grid of edge step <= res.
inline void boundary_sample(const SimplicialBoundary& b, double res, std::vector<Point>& out) {
  for (const auto& s : b.simplices) {
    const auto k = s.vertices.size();
    double longest = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j)
        longest = std::max(longest, (b.vertices[s.vertices[i]] - b.vertices[s.vertices[j]]).norm());
    const int m = std::max(1, static_cast<int>(std::ceil(longest / res - 1e-9)));
    std::vector<int> c(k, 0);
    // compositions of m into k parts
    std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
      if (i + 1 == k) {
        c[i] = left;
        Point p = Point::Zero(b.dim);
        for (std::size_t j = 0; j < k; ++j) p += (static_cast<double>(c[j]) / m) * b.vertices[s.vertices[j]];
        out.push_back(p);
        return;
      }
      for (int v = 0; v <= left; ++v) {
        c[i] = v;
        rec(i + 1, left - v);
      }
    };
    rec(0, m);
  }
}

/// Grid spacing >= res keeping the box count under cap.
inline double capped_spacing(const Eigen::VectorXd& extent, double res, double cap) {
  double h = res;
  while (true) {
    double nodes = 1.0;
    for (Eigen::Index i = 0; i < extent.size(); ++i) nodes *= std::floor(extent[i] / h + 1e-9) + 1.0;
    if (nodes <= cap) return h;
    h *= 1.1;
  }
}

}  // namespace detail

struct CoverSampleOptions {
  double resolution_factor = 0.25;  // grid step as a fraction of eps
  double max_nodes = 60000;
  std::size_t dirichlet_points = 4000;
  std::uint64_t seed = 0x5eedULL;
};

/// Deterministic sample of a polytope: grid nodes inside plus boundary points.
inline Eigen::MatrixXd body_sample(const Polytope& poly, double eps, const CoverSampleOptions& opt = {}) {
  const int n = poly.dim();
  const Eigen::MatrixXd verts = detail::vertex_matrix(poly);
  const Eigen::VectorXd mn = verts.rowwise().minCoeff(), mx = verts.rowwise().maxCoeff();
  const double h = detail::capped_spacing(mx - mn, opt.resolution_factor * eps, opt.max_nodes);
  std::vector<Point> out;
  detail::boundary_sample(poly.boundary, h, out);
  const PolytopeMembership inside(poly);
  std::vector<LatticeSet::Index> lo, ext;
  detail::node_range(mn, mx, mn, h, lo, ext);
  LatticeSet grid(h, mn, lo, ext);
  detail::fill_box(grid, [&](const Point& x) {
    if (inside.contains(x)) out.push_back(x);
    return false;
  });
  return detail::to_matrix(out, n);
}

/// Sample of conv(points): a frame grid plus vertices where the hull is
/// computable, otherwise seeded Dirichlet combinations of the points.
inline Eigen::MatrixXd hull_sample(const Eigen::MatrixXd& pts, double eps, const CoverSampleOptions& opt = {}) {
  const int n = static_cast<int>(pts.rows());
  const AffineFrame frame = affine_frame(pts);
  if (frame.rank <= kMaxHullDim) {
    const ConvexRegion region(pts);
    std::vector<Point> out;
    if (region.rank() == 0) return region.vertices();
    const Eigen::MatrixXd red = frame.project(region.vertices());
    const double h = detail::capped_spacing(red.rowwise().maxCoeff() - red.rowwise().minCoeff(),
                                            opt.resolution_factor * eps, opt.max_nodes);
    if (region.rank() == n) {
      const Polytope hull = quickhull(PointCloud(region.vertices()));
      detail::boundary_sample(hull.boundary, h, out);
    }
    for (auto& p : region.grid_sample(h)) out.push_back(std::move(p));
    return detail::to_matrix(out, n);
  }
  std::mt19937_64 rng(opt.seed);
  std::exponential_distribution<double> e(1.0);
  Eigen::MatrixXd out(n, pts.cols() + static_cast<Eigen::Index>(opt.dirichlet_points));
  out.leftCols(pts.cols()) = pts;
  for (std::size_t j = 0; j < opt.dirichlet_points; ++j) {
    Eigen::VectorXd w(pts.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = e(rng);
    out.col(pts.cols() + static_cast<Eigen::Index>(j)) = pts * (w / w.sum());
  }
  return out;
}

// ---- hull-covering certification ----

enum class RatioMode { Poly, General };

inline const char* to_string(RatioMode m) { return m == RatioMode::Poly ? "poly" : "general"; }

struct HullRatio {
  RatioMode mode = RatioMode::Poly;
  double R = 1.0;
  double measured = 1.0;  // Vol(hull)/Vol(T) of the representation
  double c2_hat = 1.0;
  int k_h = 1;
  bool k_h_reached = true;  // gap fell below eta_conv within k_max
};

struct GeneralModeOptions {
  int k_max = 8;
  double eta_factor = 1e-3;  // eta_conv = eta_factor * diam
  SamplingOptions sampling{};
};

/// General-mode R for a body whose convexification trace is already known.
inline HullRatio general_ratio_from_trace(const BodyApprox& body, const std::vector<ConvexificationTrace>& trace,
                                          double diam, const GeneralModeOptions& opt = {}) {
  HullRatio r;
  r.mode = RatioMode::General;
  const auto k = convergence_index(trace, opt.eta_factor * diam);
  r.k_h_reached = k.has_value();
  r.k_h = k.value_or(opt.k_max);
  std::vector<ConvexificationTrace> prefix(trace.begin(), trace.begin() + r.k_h);
  r.c2_hat = estimate_c2(prefix);
  r.R = volume_ratio_general_bound(r.k_h, r.c2_hat);
  r.measured = ConvexRegion(body.exact_hull_points()).volume() / body.volume();
  return r;
}

/// R for a polytope: the exact volume ratio, or the closed-form bound at k_h
/// with C2 estimated on the convexification trace.
inline HullRatio hull_ratio(const Polytope& poly, RatioMode mode, const GeneralModeOptions& opt = {}) {
  if (mode == RatioMode::Poly) {
    HullRatio r;
    r.R = r.measured = volume_ratio_poly(poly);
    return r;
  }
  const BodyApprox body = body_from_polytope(poly, opt.sampling);
  return general_ratio_from_trace(body, convexification_gap(body, opt.k_max, opt.sampling), vertex_cloud(poly).diameter(),
                                  opt);
}

/// General-mode R for a cloud whose distinct-sum trace is already known.
inline HullRatio general_ratio_from_trace(const PointCloud& cloud, const std::vector<ConvexificationTrace>& trace,
                                          const GeneralModeOptions& opt) {
  HullRatio r;
  r.mode = RatioMode::General;
  const FiniteCells cells = finite_cells(cloud, opt.sampling.grid_per_axis);
  if (cells.rank == 0) return r;
  r.measured = affine_hull_volume(cloud.matrix()) / cells.volume;
  const auto k = convergence_index(trace, opt.eta_factor * cloud.diameter());
  r.k_h_reached = k.has_value();
  r.k_h = k.value_or(trace.back().k);
  std::vector<ConvexificationTrace> prefix(trace.begin(), trace.begin() + r.k_h);
  r.c2_hat = estimate_c2(prefix);
  r.R = volume_ratio_general_bound(r.k_h, r.c2_hat);
  return r;
}

/// R for a finite cloud. T is read as |T| cells of side diam / 200 in its
/// affine dimension; general mode runs the distinct-sum convexification.
inline HullRatio hull_ratio(const PointCloud& cloud, RatioMode mode, const GeneralModeOptions& opt = {}) {
  if (mode == RatioMode::Poly) {
    HullRatio r;
    const FiniteCells cells = finite_cells(cloud, opt.sampling.grid_per_axis);
    if (cells.rank == 0) return r;
    r.measured = affine_hull_volume(cloud.matrix()) / cells.volume;
    r.R = std::max(1.0, r.measured);
    return r;
  }
  FiniteTraceOptions fo;
  fo.k_max = opt.k_max;
  fo.grid_per_axis = opt.sampling.grid_per_axis;
  return general_ratio_from_trace(cloud, finite_convexification(cloud, fo), opt);
}

struct HullCoverRecord {
  double epsilon = 0.0;
  RatioMode mode = RatioMode::Poly;
  double R = 1.0;
  int n = 0;
  std::size_t n_hull = 0;     // greedy N on the hull sample
  std::size_t n_body = 0;     // greedy N on the body sample
  std::size_t n_body_lower = 0;  // packing lower bound on the body sample
  double rhs = 0.0;           // R 3^n n_body
  double slack = 0.0;         // rhs - n_hull
  double certified_slack = 0.0;  // R 3^n n_body_lower - n_hull
  std::size_t hull_sample_size = 0, body_sample_size = 0;
  bool holds = false;
};

/// The same counts judged against another R.
inline HullCoverRecord rescore(HullCoverRecord r, const HullRatio& ratio) {
  r.mode = ratio.mode;
  r.R = ratio.R;
  const double factor = ratio.R * std::pow(3.0, r.n);
  r.rhs = factor * static_cast<double>(r.n_body);
  r.slack = r.rhs - static_cast<double>(r.n_hull);
  r.certified_slack = factor * static_cast<double>(r.n_body_lower) - static_cast<double>(r.n_hull);
  r.holds = r.slack >= 0;
  return r;
}

inline HullCoverRecord hull_cover_record(const Eigen::MatrixXd& body_pts, const Eigen::MatrixXd& hull_pts, double eps,
                                         const HullRatio& ratio, int n) {
  const FarthestFirst fb(body_pts), fh(hull_pts);
  HullCoverRecord r;
  r.epsilon = eps;
  r.n = n;
  r.n_hull = fh.count(eps);
  r.n_body = fb.count(eps);
  r.n_body_lower = fb.count(2 * eps);
  r.hull_sample_size = static_cast<std::size_t>(hull_pts.cols());
  r.body_sample_size = static_cast<std::size_t>(body_pts.cols());
  return rescore(r, ratio);
}

/// N(T_h, eps) <= R 3^n N(T, eps) for a polytope T, both sides by greedy
/// covers of deterministic samples.
inline HullCoverRecord check_hull_cover_ratio(const Polytope& poly, double eps, const HullRatio& ratio,
                                              const CoverSampleOptions& opt = {}) {
  detail::check_epsilon(eps);
  const Eigen::MatrixXd body = body_sample(poly, eps, opt);
  const Eigen::MatrixXd hull = hull_sample(detail::vertex_matrix(poly), eps, opt);
  return hull_cover_record(body, hull, eps, ratio, poly.dim());
}

/// Finite T: the cloud itself against a sample of its hull. The exponent is
/// the affine dimension of the cloud.
inline HullCoverRecord check_hull_cover_ratio(const PointCloud& cloud, double eps, const HullRatio& ratio,
                                              const CoverSampleOptions& opt = {}) {
  detail::check_epsilon(eps);
  const Eigen::MatrixXd hull = hull_sample(cloud.matrix(), eps, opt);
  return hull_cover_record(cloud.matrix(), hull, eps, ratio, std::max(affine_frame(cloud.matrix()).rank, 1));
}

// ---- output ----

inline nlohmann::json to_json(const CoveringReport& r) {
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& c : r.centers) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.size(); ++i) row.push_back(c[i]);
    centers.push_back(row);
  }
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"epsilon", r.epsilon}, {"n_greedy", r.n_greedy}, {"n_packing", r.n_packing}, {"n_exact", opt(r.n_exact)},
          {"vol_lower", opt(r.vol_lower)}, {"vol_upper", opt(r.vol_upper)}, {"centers", centers}};
}

inline std::string covering_csv(const std::vector<CoveringReport>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "epsilon,n_greedy,n_packing,n_exact,vol_lower,vol_upper\n";
  for (const auto& r : rows) {
    os << r.epsilon << ',' << r.n_greedy << ',' << r.n_packing << ',';
    if (r.n_exact) os << *r.n_exact;
    os << ',';
    if (r.vol_lower) os << *r.vol_lower;
    os << ',';
    if (r.vol_upper) os << *r.vol_upper;
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const HullRatio& r) {
  return {{"mode", to_string(r.mode)}, {"R", r.R}, {"measured", r.measured}, {"c2_hat", r.c2_hat},
          {"k_h", r.k_h}, {"k_h_reached", r.k_h_reached}};
}

inline nlohmann::json to_json(const HullCoverRecord& r) {
  return {{"epsilon", r.epsilon}, {"mode", to_string(r.mode)}, {"R", r.R}, {"n", r.n}, {"n_hull", r.n_hull},
          {"n_body", r.n_body}, {"n_body_lower", r.n_body_lower}, {"rhs", r.rhs}, {"slack", r.slack},
          {"certified_slack", r.certified_slack}, {"hull_sample_size", r.hull_sample_size},
          {"body_sample_size", r.body_sample_size}, {"holds", r.holds}};
}

}  // namespace hullmetry
