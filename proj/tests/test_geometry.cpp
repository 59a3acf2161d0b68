#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>
#include <set>

#include "hullmetry/geometry.hpp"
#include "test_support.hpp"

using namespace hullmetry;
using namespace hullmetry::testing;

namespace {

// Brute-force oracle: p is in conv(others) iff it lies in a triangle, segment
// or point of other points (Caratheodory in the plane).
bool in_hull_of_others_2d(const std::vector<Point>& pts, std::size_t idx) {
  const Point& p = pts[idx];
  const auto inside_triangle = [&](const Point& a, const Point& b, const Point& c) {
    Eigen::Matrix3d m;
    m << a[0], b[0], c[0], a[1], b[1], c[1], 1, 1, 1;
    if (std::abs(m.determinant()) < 1e-14) return false;
    const Eigen::Vector3d lam = m.fullPivLu().solve(Eigen::Vector3d(p[0], p[1], 1));
    return lam.minCoeff() >= -1e-12;
  };
  const auto on_segment = [&](const Point& a, const Point& b) {
    const Point ab = b - a, ap = p - a;
    const double cross = ab[0] * ap[1] - ab[1] * ap[0];
    const double t = ab.dot(ap) / ab.squaredNorm();
    return std::abs(cross) < 1e-12 && t >= -1e-12 && t <= 1 + 1e-12;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i == idx) continue;
    if ((pts[i] - p).norm() < 1e-12) return true;
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (j == idx) continue;
      if (on_segment(pts[i], pts[j])) return true;
      for (std::size_t k = j + 1; k < pts.size(); ++k)
        if (k != idx && inside_triangle(pts[i], pts[j], pts[k])) return true;
    }
  }
  return false;
}

std::set<std::vector<double>> vertex_set(const Polytope& p) {
  std::set<std::vector<double>> s;
  for (const auto& v : p.vertices()) s.insert(std::vector<double>(v.data(), v.data() + v.size()));
  return s;
}

// Centre lies in the convex hull of the support points and every support
// point is on the sphere: no smaller ball contains them all.
bool certified_minimal(const PointCloud& cloud, const EnclosingBall& eb) {
  const auto n = cloud.dim();
  const auto k = static_cast<Eigen::Index>(eb.support.size());
  Eigen::MatrixXd a(n + 1, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    a.block(0, j, n, 1) = cloud.point(eb.support[static_cast<std::size_t>(j)]);
    a(n, j) = 1.0;
    if (std::abs((cloud.point(eb.support[static_cast<std::size_t>(j)]) - eb.ball.center).norm() - eb.ball.radius) >
        1e-9)
      return false;
  }
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = eb.ball.center;
  rhs[n] = 1.0;
  const Eigen::VectorXd lam = a.colPivHouseholderQr().solve(rhs);
  return (a * lam - rhs).norm() < 1e-8 && lam.minCoeff() >= -1e-9;
}

}  // namespace

TEST(Quickhull, DropsInteriorPointOfSquare) {
  auto cloud = PointCloud::from_points({pt({0, 0}), pt({1, 0}), pt({1, 1}), pt({0, 1}), pt({0.5, 0.5})});
  const auto h = convex_hull_indices(cloud);
  EXPECT_EQ(h.vertex_indices, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(h.facets.size(), 4u);
}

TEST(Quickhull, LShapeMatchesBruteForceExtremePoints) {
  const auto body = load_body("lshape.json");
  std::vector<std::size_t> oracle;
  for (std::size_t i = 0; i < body.vertices().size(); ++i)
    if (!in_hull_of_others_2d(body.vertices(), i)) oracle.push_back(i);
  EXPECT_EQ(oracle, (std::vector<std::size_t>{0, 1, 2, 4, 5}));
  EXPECT_EQ(convex_hull_indices(vertex_cloud(body)).vertex_indices, oracle);
}

TEST(Quickhull, RandomPlanarCloudsMatchOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto cloud = random_cloud(2, 14, rng);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < cloud.size(); ++i) pts.push_back(cloud.point(i));
    std::vector<std::size_t> oracle;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (!in_hull_of_others_2d(pts, i)) oracle.push_back(i);
    EXPECT_EQ(convex_hull_indices(cloud).vertex_indices, oracle) << "trial " << trial;
  }
}

TEST(Quickhull, CollinearPointsAreDegenerate) {
  auto cloud = PointCloud::from_points({pt({0, 0}), pt({1, 1}), pt({2, 2})});
  try {
    quickhull(cloud);
    FAIL() << "expected DegenerateInput";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
}

TEST(Quickhull, EdgeMidpointsAreNotVertices) {
  auto cloud = PointCloud::from_points(
      {pt({0.5, 0}), pt({0, 0}), pt({1, 0}), pt({1, 0.5}), pt({1, 1}), pt({0, 1}), pt({0, 0.5}), pt({0.5, 1})});
  EXPECT_EQ(convex_hull_indices(cloud).vertex_indices, (std::vector<std::size_t>{1, 2, 4, 5}));
}

TEST(Quickhull, CubeWithFaceAndEdgePoints) {
  std::vector<Point> pts;
  for (double x : {0.0, 0.5, 1.0})
    for (double y : {0.0, 0.5, 1.0})
      for (double z : {0.0, 0.5, 1.0}) pts.push_back(pt({x, y, z}));
  const auto hull = quickhull(PointCloud::from_points(pts));
  EXPECT_EQ(hull.vertices().size(), 8u);
  EXPECT_NEAR(volume_det(hull.boundary), 1.0, 1e-12);
  EXPECT_TRUE(is_closed(hull.boundary));
}

TEST(Quickhull, OneDimensional) {
  auto cloud = PointCloud::from_points({pt({0.3}), pt({-1.0}), pt({2.0})});
  const auto hull = quickhull(cloud);
  EXPECT_EQ(hull.vertices().size(), 2u);
  EXPECT_NEAR(volume_det(hull.boundary), 3.0, 1e-12);
  EXPECT_NEAR(volume_projected(hull.boundary), 3.0, 1e-12);
}

TEST(Quickhull, DimensionCap) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(quickhull(random_cloud(9, 20, rng)), Error);
}

TEST(Triangulate, SquareCubeTetrahedron) {
  const auto sq = load_body("square.json");
  EXPECT_EQ(sq.boundary.simplices.size(), 4u);
  const auto cube = load_body("cube.json");
  EXPECT_EQ(cube.boundary.simplices.size(), 12u);
  const auto tet = load_body("simplex.json");
  EXPECT_EQ(tet.boundary.simplices.size(), 4u);
  for (const auto* p : {&sq, &cube, &tet}) {
    EXPECT_TRUE(is_closed(p->boundary));
    EXPECT_GT(volume_det(p->boundary), 0.0);
  }
}

TEST(Triangulate, RepairsInconsistentFacetOrder) {
  // cube faces with three of them listed clockwise from outside
  const auto doc = io::read_json_file(fixture("cube.json"));
  auto verts = io::parse_points(doc["vertices"], 3, "vertices");
  std::vector<std::vector<std::size_t>> facets = {{0, 1, 3, 2}, {4, 5, 7, 6}, {0, 4, 5, 1},
                                                  {2, 6, 7, 3}, {0, 2, 6, 4}, {1, 5, 7, 3}};
  const auto b = triangulate_boundary(3, verts, facets);
  EXPECT_TRUE(is_closed(b));
  EXPECT_NEAR(volume_det(b), 1.0, 1e-12);
}

TEST(Triangulate, OpenBoundaryIsRejected) {
  std::vector<Point> verts = {pt({0, 0}), pt({1, 0}), pt({1, 1})};
  try {
    triangulate_boundary(2, verts, {{0, 1}, {1, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonOrientable);
  }
}

TEST(Triangulate, PolytopeOverloadReturnsClosedBoundary) {
  const auto sq = load_body("square.json");
  EXPECT_EQ(triangulate_boundary(sq).simplices.size(), 4u);
}

TEST(Volume, ExamplesAgainstClosedForms) {
  EXPECT_NEAR(volume_det(load_body("square.json").boundary), 1.0, 1e-12);
  EXPECT_NEAR(volume_det(load_body("simplex.json").boundary), 1.0 / 6.0, 1e-12);
  const auto l = load_body("lshape.json");
  EXPECT_NEAR(volume_det(l.boundary), shoelace(l.vertices()), 1e-12);
  EXPECT_NEAR(volume_det(l.boundary), 3.0, 1e-12);
  EXPECT_NEAR(volume_projected(load_body("square.json").boundary), 1.0, 1e-12);
  EXPECT_NEAR(volume_projected(l.boundary), 3.0, 1e-12);
  EXPECT_NEAR(volume_projected(load_body("simplex.json").boundary), 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(volume_projected(load_body("cube.json").boundary), 1.0, 1e-12);
}

TEST(Volume, FormulasAgreeOnRandomHulls) {
  std::mt19937_64 rng(2024);
  for (int n = 2; n <= 5; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto hull = quickhull(random_cloud(n, static_cast<std::size_t>(4 * n + 6), rng));
      const double a = volume_det(hull.boundary);
      const double b = volume_projected(hull.boundary);
      EXPECT_GT(a, 0.0);
      EXPECT_LE(std::abs(a - b), 1e-9 * a) << "n=" << n;
    }
  }
}

TEST(Volume, NonConvexPrismAgrees) {
  // L-shape extruded to height 2: volume 6
  const auto l = load_body("lshape.json");
  std::vector<Point> verts;
  for (double z : {0.0, 2.0})
    for (const auto& v : l.vertices()) verts.push_back(pt({v[0], v[1], z}));
  // caps triangulated by hand: a fan from vertex 0 would cross the notch
  std::vector<std::vector<std::size_t>> facets = {{0, 1, 2}, {0, 2, 3}, {0, 3, 5}, {3, 4, 5},
                                                  {6, 7, 8}, {6, 8, 9}, {6, 9, 11}, {9, 10, 11}};
  for (std::size_t i = 0; i < 6; ++i) facets.push_back({i, (i + 1) % 6, (i + 1) % 6 + 6, i + 6});
  const auto body = make_polytope(3, verts, facets);
  EXPECT_NEAR(volume_det(body.boundary), 6.0, 1e-12);
  EXPECT_NEAR(volume_projected(body.boundary), 6.0, 1e-12);
  EXPECT_NEAR(volume_ratio_poly(body), 7.0 / 6.0, 1e-9);
}

TEST(Volume, TranslationAndRotationInvariance) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (const char* name : {"lshape.json", "star.json", "cube.json", "simplex.json"}) {
    const auto body = load_body(name);
    const int n = body.dim();
    const double base = volume_det(body.boundary);
    for (int trial = 0; trial < 5; ++trial) {
      Point s(n);
      for (int i = 0; i < n; ++i) s[i] = shift(rng);
      const auto moved = transform(body, random_rotation(n, rng), s);
      EXPECT_LE(std::abs(volume_det(moved.boundary) - base), 1e-9 * base) << name;
      EXPECT_LE(std::abs(volume_projected(moved.boundary) - base), 1e-9 * base) << name;
    }
  }
}

TEST(EnclosingBall, Examples) {
  const auto single = min_enclosing_ball(PointCloud::from_points({pt({3, 4})}));
  EXPECT_DOUBLE_EQ(single.radius, 0.0);
  EXPECT_NEAR((single.center - pt({3, 4})).norm(), 0.0, 1e-15);

  const auto sq = min_enclosing_ball(vertex_cloud(load_body("square.json")));
  EXPECT_NEAR(sq.radius, std::sqrt(2.0) / 2, 1e-12);
  EXPECT_NEAR((sq.center - pt({0.5, 0.5})).norm(), 0.0, 1e-12);

  const auto two = min_enclosing_ball(PointCloud::from_points({pt({1, 1}), pt({4, 5})}));
  EXPECT_NEAR(two.radius, 2.5, 1e-12);
  EXPECT_NEAR((two.center - pt({2.5, 3})).norm(), 0.0, 1e-12);
}

TEST(EnclosingBall, RandomCloudsContainAndAreMinimal) {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 15; ++trial) {
      const auto cloud = random_cloud(n, 40, rng);
      const auto eb = min_enclosing_ball_support(cloud);
      for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_TRUE(eb.ball.contains(cloud.point(i), 1e-9));
      EXPECT_LE(eb.support.size(), static_cast<std::size_t>(n + 1));
      EXPECT_TRUE(certified_minimal(cloud, eb)) << "n=" << n << " trial " << trial;
    }
  }
}

TEST(EnclosingBall, HighDimensionFallbackContainsAll) {
  std::mt19937_64 rng(8);
  const auto cloud = random_cloud(12, 60, rng);
  const auto b = min_enclosing_ball(cloud);
  for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_TRUE(b.contains(cloud.point(i), 1e-9));
}

TEST(Beta, SquareAndLShape) {
  EXPECT_NEAR(beta_ratio(load_body("square.json")), std::numbers::pi / 2, 1e-12);
  // the L-shape's enclosing circle passes through (2,0) and (0,2): centre (1,1), radius sqrt 2
  EXPECT_NEAR(beta_ratio(load_body("lshape.json")), std::numbers::pi * 2.0 / 3.0, 1e-12);
  // fine polygon approximating the unit disk
  EXPECT_NEAR(beta_ratio(load_body("disk.json")), 1.0, 2e-3);
}

TEST(VolumeRatioPoly, Examples) {
  for (const char* name : {"square.json", "cube.json", "simplex.json", "disk.json"})
    EXPECT_EQ(volume_ratio_poly(load_body(name)), 1.0) << name;
  EXPECT_NEAR(volume_ratio_poly(load_body("lshape.json")), 3.5 / 3.0, 1e-9);
  const auto star = load_body("star.json");
  std::vector<Point> outer;
  for (std::size_t i = 0; i < star.vertices().size(); i += 2) outer.push_back(star.vertices()[i]);
  EXPECT_NEAR(volume_ratio_poly(star), shoelace(outer) / shoelace(star.vertices()), 1e-9);
}

TEST(QuickhullProperties, IdempotentAndMonotone) {
  std::mt19937_64 rng(99);
  for (int n = 2; n <= 4; ++n) {
    for (int trial = 0; trial < 8; ++trial) {
      const auto cloud = random_cloud(n, 30, rng);
      const auto hull = quickhull(cloud);
      const auto again = quickhull(vertex_cloud(hull));
      EXPECT_EQ(vertex_set(hull), vertex_set(again));
      // every input point inside or on the hull
      const auto planes = facet_planes(hull);
      for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_TRUE(planes.contains(cloud.point(i), 1e-9));
      // Q subset of P: hull volume cannot grow
      std::vector<std::size_t> half;
      for (std::size_t i = 0; i < cloud.size(); i += 2) half.push_back(i);
      const auto sub = quickhull(cloud.subset(half));
      EXPECT_LE(volume_det(sub.boundary), volume_det(hull.boundary) * (1 + 1e-12));
    }
  }
}

TEST(Membership, NonConvexLShape) {
  const PolytopeMembership l(load_body("lshape.json"));
  EXPECT_TRUE(l.contains(pt({0.5, 0.5})));
  EXPECT_TRUE(l.contains(pt({1.5, 0.5})));
  EXPECT_FALSE(l.contains(pt({1.5, 1.5})));
  EXPECT_TRUE(l.contains(pt({1.5, 1.0})));  // on the boundary
  EXPECT_TRUE(l.contains(pt({1.0, 1.0})));
  EXPECT_TRUE(l.contains(pt({0.0, 0.0})));
  EXPECT_FALSE(l.contains(pt({-0.1, 0.5})));
}
