#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hullmetry/convex_region.hpp"
#include "hullmetry/core.hpp"
#include "hullmetry/enclosing_ball.hpp"
#include "hullmetry/geometry.hpp"
#include "hullmetry/lattice.hpp"
#include "hullmetry/polytope.hpp"

namespace hullmetry {

struct SamplingOptions {
  int grid_per_axis = 200;
  std::size_t max_points = 1'000'000;
};

/// A compact body: either conv(generators), kept exactly, or a lattice
/// sample. A sample made from a polytope remembers that polytope's exact
/// volume and vertex set until an operation other than scaling touches it.
class BodyApprox {
 public:
  static BodyApprox convex(const Eigen::MatrixXd& generators) {
    if (generators.cols() == 0) throw Error(ErrorCode::DegenerateInput, "empty generator set");
    const ConvexRegion region(generators);
    BodyApprox b;
    b.rep_ = region.vertices();
    b.convex_volume_ = region.volume();
    return b;
  }

  static BodyApprox sampled(LatticeSet lattice, std::optional<double> exact_volume = {},
                            std::optional<Eigen::MatrixXd> exact_vertices = {}) {
    if (lattice.count() == 0) throw Error(ErrorCode::DegenerateInput, "sample is empty");
    BodyApprox b;
    b.rep_ = std::move(lattice);
    b.exact_volume_ = exact_volume;
    b.exact_vertices_ = std::move(exact_vertices);
    return b;
  }

  int dim() const {
    return is_exact() ? static_cast<int>(generators().rows()) : lattice().dim();
  }
  bool is_exact() const { return std::holds_alternative<Eigen::MatrixXd>(rep_); }
  const Eigen::MatrixXd& generators() const { return std::get<Eigen::MatrixXd>(rep_); }
  const LatticeSet& lattice() const { return std::get<LatticeSet>(rep_); }

  /// Lattice spacing; 0 for exact bodies.
  double spacing() const { return is_exact() ? 0.0 : lattice().spacing(); }
  /// Sample points per unit volume.
  double density() const {
    return is_exact() ? std::numeric_limits<double>::infinity() : 1.0 / std::pow(spacing(), dim());
  }

  /// Best available volume: exact where known, cell count otherwise.
  double volume() const {
    if (is_exact()) return convex_volume_;
    if (exact_volume_) return *exact_volume_;
    return lattice().cell_volume();
  }
  /// Volume as seen by the representation itself.
  double sample_volume() const { return is_exact() ? convex_volume_ : lattice().cell_volume(); }

  Eigen::MatrixXd sample() const { return is_exact() ? generators() : lattice().points(); }

  /// A point set with the same convex hull as the body's representation.
  Eigen::MatrixXd hull_points() const { return is_exact() ? generators() : lattice().boundary_points(); }

  /// Point set whose hull is the best hull estimate: exact vertices when
  /// known, cell corners of the boundary for plain samples.
  Eigen::MatrixXd exact_hull_points() const {
    if (is_exact()) return generators();
    if (exact_vertices_) return *exact_vertices_;
    const Eigen::MatrixXd b = lattice().boundary_points();
    const int n = dim();
    const auto corners = static_cast<Eigen::Index>(1) << n;
    const double h = spacing();
    Eigen::MatrixXd out(n, b.cols() * corners);
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index c = 0; c < corners; ++c)
        for (int i = 0; i < n; ++i) out(i, j * corners + c) = b(i, j) + (((c >> i) & 1) ? 0.5 * h : -0.5 * h);
    return out;
  }

  const std::optional<double>& exact_volume() const { return exact_volume_; }
  const std::optional<Eigen::MatrixXd>& exact_vertices() const { return exact_vertices_; }

 private:
  std::variant<Eigen::MatrixXd, LatticeSet> rep_;
  double convex_volume_ = 0.0;
  std::optional<double> exact_volume_;
  std::optional<Eigen::MatrixXd> exact_vertices_;
};

namespace detail {

inline void check_scale(double s) {
  if (!(s > 0) || !std::isfinite(s)) throw Error(ErrorCode::NonpositiveScale, "scale factors must be positive");
}

inline Eigen::MatrixXd vertex_matrix(const Polytope& poly) {
  const auto& v = poly.vertices();
  Eigen::MatrixXd m(poly.dim(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

/// Lattice box [lo, lo+extent) covering coordinates [min, max] for nodes origin + h*z.
inline void node_range(const Eigen::VectorXd& mn, const Eigen::VectorXd& mx, const Point& origin, double h,
                       std::vector<LatticeSet::Index>& lo, std::vector<LatticeSet::Index>& ext) {
  const auto n = mn.size();
  lo.assign(static_cast<std::size_t>(n), 0);
  ext.assign(static_cast<std::size_t>(n), 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<LatticeSet::Index>(std::ceil((mn[i] - origin[i]) / h - 1e-9));
    const auto b = static_cast<LatticeSet::Index>(std::floor((mx[i] - origin[i]) / h + 1e-9));
    lo[static_cast<std::size_t>(i)] = a;
    ext[static_cast<std::size_t>(i)] = std::max<LatticeSet::Index>(b - a + 1, 1);
  }
}

template <class Pred>
void fill_box(LatticeSet& set, Pred&& inside) {
  const int n = set.dim();
  std::vector<LatticeSet::Index> z(set.lo());
  while (true) {
    if (inside(set.position(z))) set.set(z);
    int i = n - 1;
    while (i >= 0) {
      auto& zi = z[static_cast<std::size_t>(i)];
      if (++zi < set.lo()[static_cast<std::size_t>(i)] + set.extent()[static_cast<std::size_t>(i)]) break;
      zi = set.lo()[static_cast<std::size_t>(i)];
      --i;
    }
    if (i < 0) break;
  }
}

/// Nearest-node snap of a point list onto origin + h*Z^n.
inline LatticeSet snap_points(const std::vector<Point>& pts, const Point& origin, double h) {
  const auto n = origin.size();
  std::vector<std::vector<LatticeSet::Index>> idx;
  std::vector<LatticeSet::Index> lo(static_cast<std::size_t>(n), std::numeric_limits<LatticeSet::Index>::max());
  std::vector<LatticeSet::Index> hi(static_cast<std::size_t>(n), std::numeric_limits<LatticeSet::Index>::min());
  for (const auto& p : pts) {
    std::vector<LatticeSet::Index> z(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      z[static_cast<std::size_t>(i)] = std::llround((p[i] - origin[i]) / h);
      lo[static_cast<std::size_t>(i)] = std::min(lo[static_cast<std::size_t>(i)], z[static_cast<std::size_t>(i)]);
      hi[static_cast<std::size_t>(i)] = std::max(hi[static_cast<std::size_t>(i)], z[static_cast<std::size_t>(i)]);
    }
    idx.push_back(std::move(z));
  }
  std::vector<LatticeSet::Index> ext(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < ext.size(); ++i) ext[i] = hi[i] - lo[i] + 1;
  LatticeSet out(h, origin, lo, ext);
  for (const auto& z : idx) out.set(z);
  return out;
}

inline std::vector<Point> columns(const Eigen::MatrixXd& m) {
  std::vector<Point> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m.col(j));
  return out;
}

/// Nodes of origin + h*Z^n inside conv(generators). Lower-dimensional
/// bodies are sampled in their own frame and snapped.
inline LatticeSet rasterize_convex(const Eigen::MatrixXd& generators, const Point& origin, double h) {
  const ConvexRegion region(generators);
  if (region.rank() < region.dim()) return snap_points(region.grid_sample(0.5 * h), origin, h);
  std::vector<LatticeSet::Index> lo, ext;
  node_range(generators.rowwise().minCoeff(), generators.rowwise().maxCoeff(), origin, h, lo, ext);
  LatticeSet out(h, origin, lo, ext);
  fill_box(out, [&](const Point& x) { return region.contains(x, region.tolerance()); });
  if (out.count() == 0) return snap_points(columns(region.vertices()), origin, h);
  return out;
}

inline void decimate(LatticeSet& set, std::size_t max_points) {
  while (set.count() > max_points) set = set.coarsened();
}

inline LatticeSet lattice_sum(LatticeSet a, LatticeSet b, const SamplingOptions& opts) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "bodies have different dimensions");
  if (a.spacing() > b.spacing()) std::swap(a, b);
  const double r = b.spacing() / a.spacing();
  auto q = static_cast<LatticeSet::Index>(std::llround(r));
  if (q < 1 || std::abs(r - static_cast<double>(q)) > 1e-9 * r) {
    q = static_cast<LatticeSet::Index>(std::ceil(r - 1e-9));
    b = snap_points(columns(b.points()), b.origin(), a.spacing() * static_cast<double>(q));
  }
  if (q == 1 && b.count() > a.count()) std::swap(a, b);
  LatticeSet out = LatticeSet::sumset(a, b, q);
  decimate(out, opts.max_points);
  return out;
}

inline Eigen::MatrixXd pairwise_sums(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) out.col(i * b.cols() + j) = a.col(i) + b.col(j);
  return out;
}

inline double enclosing_volume(const Eigen::MatrixXd& pts) {
  const Ball ball = min_enclosing_ball(PointCloud(pts));
  return ball_volume(static_cast<int>(pts.rows()), ball.radius);
}

}  // namespace detail

/// Convex polytopes stay exact; anything else is rasterised at cell centres.
inline BodyApprox body_from_polytope(const Polytope& poly, const SamplingOptions& opts = {}) {
  const Eigen::MatrixXd verts = detail::vertex_matrix(poly);
  if (is_convex(poly)) return BodyApprox::convex(verts);
  const int n = poly.dim();
  const Eigen::VectorXd mn = verts.rowwise().minCoeff(), mx = verts.rowwise().maxCoeff();
  double h = (mx - mn).maxCoeff() / std::max(opts.grid_per_axis, 1);
  std::vector<LatticeSet::Index> lo, ext;
  Point origin;
  while (true) {
    origin = Point::Constant(n, 0.5 * h);
    detail::node_range(mn, mx, origin, h, lo, ext);
    double nodes = 1.0;
    for (auto e : ext) nodes *= static_cast<double>(e);
    if (nodes <= static_cast<double>(opts.max_points)) break;
    h *= 1.05;
  }
  LatticeSet set(h, origin, lo, ext);
  const PolytopeMembership inside(poly);
  detail::fill_box(set, [&](const Point& x) { return inside.contains(x); });
  return BodyApprox::sampled(std::move(set), polytope_volume(poly), verts);
}

/// A finite point set snapped to the lattice of spacing extent/grid_per_axis
/// through the origin.
inline BodyApprox body_from_cloud(const PointCloud& cloud, const SamplingOptions& opts = {}) {
  const double ext = bbox_extent(cloud.matrix());
  const double h = ext > 0 ? ext / std::max(opts.grid_per_axis, 1) : 1.0;
  return BodyApprox::sampled(detail::snap_points(detail::columns(cloud.matrix()), Point::Zero(cloud.dim()), h));
}

inline BodyApprox scale_body(const BodyApprox& a, double s) {
  detail::check_scale(s);
  if (a.is_exact()) return BodyApprox::convex(a.generators() * s);
  std::optional<double> vol;
  std::optional<Eigen::MatrixXd> verts;
  if (a.exact_volume()) vol = *a.exact_volume() * std::pow(s, a.dim());
  if (a.exact_vertices()) verts = *a.exact_vertices() * s;
  return BodyApprox::sampled(a.lattice().scaled(s), vol, verts);
}

inline BodyApprox minkowski_sum(const BodyApprox& a, const BodyApprox& b, const SamplingOptions& opts = {}) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "bodies have different dimensions");
  if (a.is_exact() && b.is_exact()) return BodyApprox::convex(detail::pairwise_sums(a.generators(), b.generators()));
  if (a.is_exact() || b.is_exact()) {
    const BodyApprox& c = a.is_exact() ? a : b;
    const LatticeSet& l = a.is_exact() ? b.lattice() : a.lattice();
    LatticeSet r = detail::rasterize_convex(c.generators(), Point::Zero(c.dim()), l.spacing());
    return BodyApprox::sampled(detail::lattice_sum(l, std::move(r), opts));
  }
  return BodyApprox::sampled(detail::lattice_sum(a.lattice(), b.lattice(), opts));
}

/// A(k) = (1/k)(A + ... + A).
inline BodyApprox minkowski_average(const BodyApprox& a, int k, const SamplingOptions& opts = {}) {
  if (k < 1) throw Error(ErrorCode::ParamOutOfRange, "k must be >= 1");
  if (k == 1) return a;
  BodyApprox s = a;
  for (int i = 2; i <= k; ++i) s = minkowski_sum(s, a, opts);
  return scale_body(s, 1.0 / k);
}

/// Symmetric Hausdorff distance between finite point sets, by brute force.
inline double hausdorff(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  auto directed = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      worst = std::max(worst, (y.colwise() - x.col(i)).colwise().squaredNorm().minCoeff());
    return std::sqrt(worst);
  };
  return std::max(directed(p, q), directed(q, p));
}

/// Hausdorff distance from a body to a convex region containing it (up to
/// sampling): the hull side is measured on the body's own lattice.
inline double hausdorff_to_region(const BodyApprox& body, const ConvexRegion& region) {
  if (body.is_exact()) {
    double d = 0.0;
    const ConvexRegion own(body.generators());
    for (Eigen::Index j = 0; j < region.vertices().cols(); ++j) d = std::max(d, own.excess(region.vertices().col(j)));
    for (Eigen::Index j = 0; j < own.vertices().cols(); ++j) d = std::max(d, region.excess(own.vertices().col(j)));
    return std::max(d, 0.0);
  }
  const LatticeSet& set = body.lattice();
  const double h = set.spacing();
  double back = 0.0;
  const Eigen::MatrixXd bnd = set.boundary_points();
  for (Eigen::Index j = 0; j < bnd.cols(); ++j) back = std::max(back, region.excess(bnd.col(j)));

  double forward = 0.0;
  if (region.rank() < region.dim()) {
    const Eigen::MatrixXd members = set.points();
    double step = 0.5 * h;
    const Eigen::MatrixXd red = region.frame().project(region.vertices());
    const Eigen::VectorXd span = red.rowwise().maxCoeff() - red.rowwise().minCoeff();
    auto probes = [&](double st) {
      double c = 1.0;
      for (Eigen::Index i = 0; i < span.size(); ++i) c *= std::floor(span[i] / st + 1e-9) + 1.0;
      return c;
    };
    while (probes(step) * static_cast<double>(members.cols()) > 5e8) step *= 1.1;
    for (const auto& x : region.grid_sample(step))
      forward = std::max(forward, std::sqrt((members.colwise() - x).colwise().squaredNorm().minCoeff()));
  } else {
    const std::vector<double> f = squared_distance_transform(set);
    const int n = set.dim();
    std::vector<LatticeSet::Index> z(set.lo());
    std::size_t k = 0;
    double worst = 0.0;
    while (true) {
      if (f[k] > worst && region.contains(set.position(z), region.tolerance())) worst = f[k];
      ++k;
      int i = n - 1;
      while (i >= 0) {
        auto& zi = z[static_cast<std::size_t>(i)];
        if (++zi < set.lo()[static_cast<std::size_t>(i)] + set.extent()[static_cast<std::size_t>(i)]) break;
        zi = set.lo()[static_cast<std::size_t>(i)];
        --i;
      }
      if (i < 0) break;
    }
    forward = std::sqrt(worst) * h;
  }
  return std::max(forward, back);
}

/// Circumscribed-ball volume over body volume.
inline double body_beta(const BodyApprox& a) {
  const double vol = a.volume();
  if (!(vol > 0)) throw Error(ErrorCode::DegenerateInput, "body has zero volume");
  return detail::enclosing_volume(a.exact_vertices() ? *a.exact_vertices() : a.hull_points()) / vol;
}

/// Closed-form upper bound on Vol(A(k))/Vol(A) from the per-step constant C:
/// (2 C^{k-1} + C (C^{k-2} - 1)/(C - 1)) / k, with the C -> 1 limit at 1.
inline double volume_ratio_general_bound(int k, double c) {
  if (k < 1) throw Error(ErrorCode::ParamOutOfRange, "k must be >= 1");
  if (!(c >= 1.0) || !std::isfinite(c)) throw Error(ErrorCode::ParamOutOfRange, "C must be >= 1");
  if (k == 1) return 1.0;
  double geometric = 0.0;  // sum_{j=0}^{k-3} C^j
  for (int j = 0; j <= k - 3; ++j) geometric += std::pow(c, j);
  return (2.0 * std::pow(c, k - 1) + c * geometric) / k;
}

struct ConvexificationTrace {
  int k = 1;
  double vol_Ak = 0.0;
  double hausdorff_to_hull = 0.0;
  double bound_value = 0.0;
  double beta = 0.0;       // beta of A(k)
  double step_c1 = 0.0;    // constant of the step A(k) = (k-1)/k A(k-1) + 1/k A; 0 at k = 1
};

/// C2 estimate: largest step constant times largest beta along the trace,
/// floored at 1.
inline double estimate_c2(const std::vector<ConvexificationTrace>& trace) {
  double c1 = 0.0, beta = 0.0;
  for (const auto& t : trace) {
    c1 = std::max(c1, t.step_c1);
    beta = std::max(beta, t.beta);
  }
  return std::max(1.0, c1 * beta);
}

/// A(1..k_max) against the hull of A's sample. Volumes are those of the
/// representation, so bound_value = Vol(A) * general_bound(k, C2 estimate)
/// holds by construction of the estimate.
inline std::vector<ConvexificationTrace> convexification_gap(const BodyApprox& a, int k_max,
                                                             const SamplingOptions& opts = {}) {
  if (k_max < 1) throw Error(ErrorCode::ParamOutOfRange, "k_max must be >= 1");
  const ConvexRegion hull(a.hull_points());
  std::vector<ConvexificationTrace> out;
  const double vol_a = a.sample_volume();
  const bool solid = vol_a > 0;
  const double beta_a = solid ? detail::enclosing_volume(a.hull_points()) / vol_a : 0.0;

  BodyApprox sum = a;
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1) sum = minkowski_sum(sum, a, opts);
    const BodyApprox ak = (k == 1) ? a : scale_body(sum, 1.0 / k);
    ConvexificationTrace t;
    t.k = k;
    t.vol_Ak = ak.sample_volume();
    t.hausdorff_to_hull = hausdorff_to_region(ak, hull);
    if (solid) {
      t.beta = detail::enclosing_volume(ak.hull_points()) / t.vol_Ak;
      if (k > 1) {
        const auto& prev = out.back();
        const double rhs = (k - 1.0) / k * prev.beta * prev.vol_Ak + beta_a * vol_a / k;
        t.step_c1 = t.vol_Ak / rhs;
      }
    }
    out.push_back(t);
  }
  const double c2 = estimate_c2(out);
  for (auto& t : out) t.bound_value = solid ? vol_a * volume_ratio_general_bound(t.k, c2) : 0.0;
  return out;
}

/// First k whose gap is within eta; empty when none is.
inline std::optional<int> convergence_index(const std::vector<ConvexificationTrace>& trace, double eta) {
  for (const auto& t : trace)
    if (t.hausdorff_to_hull <= eta) return t.k;
  return std::nullopt;
}

// ---- finite point sets ----

/// Cell convention for a finite set: cells of side diam / grid_per_axis in
/// the affine dimension r of the set.
struct FiniteCells {
  int rank = 0;
  double side = 1.0;
  double volume = 0.0;  // |T| side^r
};

inline FiniteCells finite_cells(const PointCloud& cloud, int grid_per_axis = 200) {
  FiniteCells c;
  c.rank = affine_frame(cloud.matrix()).rank;
  const double d = cloud.diameter();
  c.side = d > 0 ? d / std::max(grid_per_axis, 1) : 1.0;
  c.volume = static_cast<double>(cloud.size()) * std::pow(c.side, c.rank);
  return c;
}

struct FiniteTraceOptions {
  int k_max = 8;
  std::size_t max_points = 200000;  // distinct k-fold sums kept per step
  std::size_t probes = 512;         // hull probe points for the gap
  int grid_per_axis = 200;
  std::uint64_t seed = 0x5eedULL;
};

/// A(k) of a finite set is the set of distinct k-fold averages. Volumes use
/// the cell convention at side h/k, beta uses the enclosing ball of T (shared
/// by every A(k) since T is contained in A(k) and A(k) in conv T), and the
/// gap is the largest probe-to-A(k) distance over seeded convex combinations.
/// The trace stops early once the sum set would exceed max_points.
inline std::vector<ConvexificationTrace> finite_convexification(const PointCloud& cloud,
                                                                const FiniteTraceOptions& opt = {}) {
  if (opt.k_max < 1) throw Error(ErrorCode::ParamOutOfRange, "k_max must be >= 1");
  const FiniteCells cells = finite_cells(cloud, opt.grid_per_axis);
  const int r = cells.rank;
  const Eigen::MatrixXd& t = cloud.matrix();
  const auto n = t.rows();
  const double diam = cloud.diameter();
  const double quantum = 1e-9 * std::max(diam, 1e-300);
  const double ball = r > 0 ? ball_volume(r, min_enclosing_ball(cloud).radius) : 0.0;

  // probes: the points themselves plus Dirichlet combinations
  std::mt19937_64 rng(opt.seed);
  std::exponential_distribution<double> ex(1.0);
  Eigen::MatrixXd probes(n, t.cols() + static_cast<Eigen::Index>(opt.probes));
  probes.leftCols(t.cols()) = t;
  for (std::size_t j = 0; j < opt.probes; ++j) {
    Eigen::VectorXd w(t.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = ex(rng);
    probes.col(t.cols() + static_cast<Eigen::Index>(j)) = t * (w / w.sum());
  }

  auto key_of = [&](const Eigen::VectorXd& x) {
    std::vector<long long> k(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) k[static_cast<std::size_t>(i)] = std::llround(x[i] / quantum);
    return k;
  };

  std::vector<ConvexificationTrace> out;
  Eigen::MatrixXd sums = t;  // distinct k-fold sums
  {
    std::set<std::vector<long long>> seen;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < t.cols(); ++j)
      if (seen.insert(key_of(t.col(j))).second) keep.push_back(j);
    sums = t(Eigen::all, keep);
  }
  for (int k = 1; k <= opt.k_max; ++k) {
    if (k > 1) {
      if (static_cast<std::size_t>(sums.cols()) * static_cast<std::size_t>(t.cols()) > 16 * opt.max_points) break;
      std::set<std::vector<long long>> seen;
      std::vector<Point> next;
      for (Eigen::Index i = 0; i < sums.cols(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
          const Eigen::VectorXd x = sums.col(i) + t.col(j);
          if (seen.insert(key_of(x)).second) next.push_back(x);
        }
      if (next.size() > opt.max_points) break;
      sums.resize(n, static_cast<Eigen::Index>(next.size()));
      for (std::size_t i = 0; i < next.size(); ++i) sums.col(static_cast<Eigen::Index>(i)) = next[i];
    }
    const Eigen::MatrixXd ak = sums / static_cast<double>(k);
    ConvexificationTrace tr;
    tr.k = k;
    tr.vol_Ak = static_cast<double>(ak.cols()) * std::pow(cells.side / k, r);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < probes.cols(); ++j)
      worst = std::max(worst, (ak.colwise() - probes.col(j)).colwise().squaredNorm().minCoeff());
    tr.hausdorff_to_hull = std::sqrt(worst);
    if (r > 0) {
      tr.beta = ball / tr.vol_Ak;
      if (k > 1) {
        const auto& prev = out.back();
        tr.step_c1 = tr.vol_Ak / ((k - 1.0) / k * prev.beta * prev.vol_Ak + ball / k);
      }
    }
    out.push_back(tr);
  }
  const double c2 = estimate_c2(out);
  for (auto& tr : out) tr.bound_value = r > 0 ? cells.volume * volume_ratio_general_bound(tr.k, c2) : 0.0;
  return out;
}

struct RevBMReport {
  double lhs_vol = 0.0;  // Vol(sA + tB)
  double lhs = 0.0;      // lhs_vol^{1/m}
  std::pair<double, double> rhs_terms;
  double empirical_C1 = 0.0;
  double s = 1.0, t = 1.0;
  int m = 1;
  double beta_A = 0.0, beta_B = 0.0;
};

/// Vol(sA + tB)^{1/m} against s (beta_A Vol A)^{1/m} + t (beta_B Vol B)^{1/m}
/// with both positioning maps the identity.
inline RevBMReport check_reverse_bm(const BodyApprox& a, const BodyApprox& b, double s, double t, int m,
                                    const SamplingOptions& opts = {}) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "bodies have different dimensions");
  detail::check_scale(s);
  detail::check_scale(t);
  if (m < 1) throw Error(ErrorCode::ParamOutOfRange, "m must be >= 1");
  RevBMReport r;
  r.s = s;
  r.t = t;
  r.m = m;
  r.beta_A = body_beta(a);
  r.beta_B = body_beta(b);
  r.lhs_vol = minkowski_sum(scale_body(a, s), scale_body(b, t), opts).volume();
  r.lhs = std::pow(r.lhs_vol, 1.0 / m);
  r.rhs_terms = {s * std::pow(r.beta_A * a.volume(), 1.0 / m), t * std::pow(r.beta_B * b.volume(), 1.0 / m)};
  r.empirical_C1 = r.lhs / (r.rhs_terms.first + r.rhs_terms.second);
  return r;
}

struct GeneralRatioReport {
  double ratio = 1.0;  // Vol(hull A) / Vol(A)
  double c2_hat = 1.0;
  double bound = 1.0;
  int k_h = 1;
  bool within_bound = true;
};

/// Hull-to-body volume ratio set against the closed-form bound at k_h, with
/// C2 estimated on the convexification trace up to k_h.
inline GeneralRatioReport empirical_general_ratio(const BodyApprox& a, int k_h, const SamplingOptions& opts = {}) {
  if (k_h < 1) throw Error(ErrorCode::ParamOutOfRange, "k_h must be >= 1");
  const double vol = a.volume();
  if (!(vol > 0)) throw Error(ErrorCode::DegenerateInput, "body has zero volume");
  GeneralRatioReport r;
  r.k_h = k_h;
  r.ratio = ConvexRegion(a.exact_hull_points()).volume() / vol;
  if (std::abs(r.ratio - 1.0) <= kVolTol) r.ratio = 1.0;
  r.c2_hat = estimate_c2(convexification_gap(a, k_h, opts));
  r.bound = volume_ratio_general_bound(k_h, r.c2_hat);
  r.within_bound = r.ratio <= r.bound * (1.0 + kVolTol);
  return r;
}

inline nlohmann::json to_json(const ConvexificationTrace& t) {
  return {{"k", t.k}, {"vol", t.vol_Ak}, {"gap", t.hausdorff_to_hull}, {"bound", t.bound_value},
          {"beta", t.beta}, {"step_c1", t.step_c1}};
}

inline std::string trace_csv(const std::vector<ConvexificationTrace>& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "k,vol,gap,bound\n";
  for (const auto& t : trace) os << t.k << ',' << t.vol_Ak << ',' << t.hausdorff_to_hull << ',' << t.bound_value << '\n';
  return os.str();
}

inline nlohmann::json to_json(const RevBMReport& r) {
  return {{"lhs_vol", r.lhs_vol}, {"lhs", r.lhs}, {"rhs_terms", {r.rhs_terms.first, r.rhs_terms.second}},
          {"empirical_C1", r.empirical_C1}, {"s", r.s}, {"t", r.t}, {"m", r.m},
          {"beta_A", r.beta_A}, {"beta_B", r.beta_B}};
}

inline nlohmann::json to_json(const GeneralRatioReport& r) {
  return {{"ratio", r.ratio}, {"c2_hat", r.c2_hat}, {"bound", r.bound}, {"k_h", r.k_h}, {"within_bound", r.within_bound}};
}

}  // namespace hullmetry
