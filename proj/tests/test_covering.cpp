#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "hullmetry/covering.hpp"
#include "test_support.hpp"

using namespace hullmetry;
using hullmetry::testing::load_body;
using hullmetry::testing::load_cloud;
using hullmetry::testing::pt;

namespace {

// Minimum cover by trying every center subset of size 1, 2, ...
std::size_t brute_cover(const Eigen::MatrixXd& p, double eps) {
  const auto n = static_cast<int>(p.cols());
  for (int k = 1; k <= n; ++k) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
      bool ok = true;
      for (int j = 0; j < n && ok; ++j) {
        bool hit = false;
        for (int c : idx) hit = hit || (p.col(j) - p.col(c)).norm() <= eps;
        ok = hit;
      }
      if (ok) return static_cast<std::size_t>(k);
      int i = k - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return static_cast<std::size_t>(n);
}

PointCloud grid_cloud(int per_axis, double side) {
  std::vector<Point> pts;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j) pts.push_back(pt({side * i / (per_axis - 1), side * j / (per_axis - 1)}));
  return PointCloud::from_points(pts);
}

}  // namespace

TEST(GreedyCover, TwoPoints) {
  const auto c = load_cloud("twopoints.json");
  EXPECT_EQ(greedy_cover(c, 1.0).n_greedy, 1u);
  EXPECT_EQ(greedy_cover(c, 0.4).n_greedy, 2u);
}

TEST(GreedyCover, FiveByFiveGridAgainstEnumeration) {
  const auto g = grid_cloud(5, 1.0);
  const auto r = greedy_cover(g, 0.25);
  EXPECT_FALSE(r.n_exact.has_value());  // 25 points, above the exact cap
  const auto exact = brute_cover(g.matrix(), 0.25);
  EXPECT_GE(r.n_greedy, exact);
  EXPECT_LE(r.n_greedy, 2 * exact);
  EXPECT_LE(r.n_packing, exact);
}

TEST(GreedyCover, CentersCoverEveryPoint) {
  std::mt19937_64 rng(3);
  const auto c = hullmetry::testing::random_cloud(3, 300, rng);
  for (double eps : {0.1, 0.3, 0.9}) {
    const auto r = greedy_cover(c, eps);
    ASSERT_EQ(r.centers.size(), r.n_greedy);
    for (std::size_t j = 0; j < c.size(); ++j) {
      double best = 1e300;
      for (const auto& ctr : r.centers) best = std::min(best, (c.point(j) - ctr).norm());
      EXPECT_LE(best, eps);
    }
  }
}

TEST(GreedyCover, MonotoneInEpsilon) {
  std::mt19937_64 rng(4);
  const auto c = hullmetry::testing::random_cloud(2, 500, rng);
  const FarthestFirst ff(c.matrix());
  for (std::size_t i = 2; i < ff.radius().size(); ++i) EXPECT_LE(ff.radius()[i], ff.radius()[i - 1]);
  std::size_t prev = c.size() + 1;
  for (double eps = 0.01; eps < 3; eps *= 1.3) {
    const auto n = greedy_cover(c, eps).n_greedy;
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(ExactCover, Examples) {
  EXPECT_EQ(exact_cover_small(PointCloud::from_points({pt({1, 2})}), 0.1), 1u);
  // side 1 > 0.9: no internal ball reaches a second vertex
  const auto tri = load_cloud("triangle.json");
  EXPECT_EQ(exact_cover_small(tri, 0.9), 3u);
  EXPECT_EQ(brute_cover(tri.matrix(), 0.9), 3u);
  EXPECT_EQ(exact_cover_small(tri, 1.0), 1u);
  EXPECT_EQ(exact_cover_small(load_cloud("two_cluster.json"), 0.2), 2u);
  try {
    exact_cover_small(grid_cloud(5, 1.0), 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
}

TEST(ExactCover, MatchesEnumerationAndSandwich) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> size(2, 16);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = hullmetry::testing::random_cloud(2, static_cast<std::size_t>(size(rng)), rng);
    for (double eps : {0.2, 0.5, 1.1}) {
      const auto exact = exact_cover_small(c, eps);
      EXPECT_EQ(exact, brute_cover(c.matrix(), eps));
      const auto r = greedy_cover(c, eps);
      ASSERT_TRUE(r.n_exact);
      EXPECT_LE(r.n_packing, *r.n_exact);
      EXPECT_LE(*r.n_exact, r.n_greedy);
    }
  }
}

TEST(ExactCover, SubsetMonotoneAtDoubleRadius) {
  // Internal covers are not monotone under subsets at equal radius
  const auto p = PointCloud::from_points({pt({0}), pt({1}), pt({2})});
  const auto q = p.subset({0, 2});
  EXPECT_EQ(exact_cover_small(p, 1.0), 1u);
  EXPECT_EQ(exact_cover_small(q, 1.0), 2u);
  // but N(Q, 2 eps) <= N(P, eps) always
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = hullmetry::testing::random_cloud(2, 20, rng);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < c.size(); i += 2) idx.push_back(i);
    const auto sub = c.subset(idx);
    for (double eps : {0.3, 0.7}) EXPECT_LE(exact_cover_small(sub, 2 * eps), exact_cover_small(c, eps));
  }
}

TEST(Packing, Examples) {
  EXPECT_EQ(packing_number(load_cloud("twopoints.json"), 0.5), 2u);
  EXPECT_EQ(packing_number(PointCloud::from_points({pt({0.3})}), 0.5), 1u);
  std::vector<Point> line;
  for (int i = 0; i <= 10; ++i) line.push_back(pt({i / 10.0}));
  const auto c = PointCloud::from_points(line);
  const auto n = exact_cover_small(c, 0.35);
  EXPECT_EQ(n, 2u);
  EXPECT_LE(packing_number(c, 0.7), n);
  EXPECT_GE(packing_number(c, 0.35), n);
  EXPECT_EQ(packing_number(c, 0.35), 3u);
}

TEST(VolumeBounds, Examples) {
  // square of side 4 centred at the origin
  const auto sq = hullmetry::testing::polygon({pt({-2, -2}), pt({2, -2}), pt({2, 2}), pt({-2, 2})});
  const auto b = volume_cover_bounds(sq, 1.0);
  EXPECT_NEAR(b.lower, 16 / std::numbers::pi, 1e-12);
  ASSERT_TRUE(b.upper);
  EXPECT_NEAR(*b.upper, 144 / std::numbers::pi, 1e-12);
  EXPECT_NEAR(b.inradius, 2.0, 1e-9);

  const auto disk = load_body("disk.json");
  const double ratio = polytope_volume(disk) / std::numbers::pi;
  const auto d = volume_cover_bounds(disk, 0.5);
  EXPECT_NEAR(d.lower, 4 * ratio, 1e-12);
  ASSERT_TRUE(d.upper);
  EXPECT_NEAR(*d.upper, 36 * ratio, 1e-12);
  EXPECT_NEAR(volume_cover_bounds(disk, 1.0).lower, ratio, 1e-12);
  EXPECT_FALSE(volume_cover_bounds(disk, 1.0).upper);  // the 64-gon's inradius is below 1
}

TEST(VolumeBounds, UpperNeedsInscribedBall) {
  const auto sq = load_body("square.json");
  EXPECT_FALSE(volume_cover_bounds(sq, 0.6).upper);
  try {
    volume_cover_bounds_strict(sq, 0.6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionFailed);
  }
  EXPECT_NO_THROW(volume_cover_bounds_strict(sq, 0.5));
}

TEST(VolumeBounds, Inradius) {
  const auto tri = load_cloud("triangle.json");
  const auto poly = hullmetry::testing::polygon({tri.point(0), tri.point(1), tri.point(2)});
  EXPECT_NEAR(inradius_estimate(poly), 1.0 / (2 * std::sqrt(3.0)), 1e-9);
  EXPECT_NEAR(inradius_estimate(load_body("cube.json")), 0.5, 1e-9);
}

TEST(VolumeBounds, MiddleBetween) {
  const auto sq = load_body("square.json");
  const auto b = volume_cover_bounds(sq, 0.5, true);
  ASSERT_TRUE(b.middle && b.upper);
  // Steiner: (1 + 4r + pi r^2)/(pi r^2) with r = 1/4
  const double r = 0.25;
  EXPECT_NEAR(*b.middle, (1 + 4 * r + std::numbers::pi * r * r) / (std::numbers::pi * r * r), 1e-3);
  EXPECT_LE(b.lower, *b.middle);
  EXPECT_LE(*b.middle, *b.upper);
}

TEST(VolumeBounds, SandwichOnConvexSamples) {
  for (const char* name : {"square.json", "simplex.json", "cube.json", "disk.json"}) {
    const auto poly = load_body(name);
    const double r = inradius_estimate(poly);
    for (double f : {0.3, 0.6, 1.0}) {
      const double eps = f * r;
      const auto b = volume_cover_bounds(poly, eps);
      const auto n = FarthestFirst(body_sample(poly, eps)).count(eps);
      EXPECT_LE(b.lower, static_cast<double>(n)) << name << " eps=" << eps;
      ASSERT_TRUE(b.upper);
      EXPECT_LE(static_cast<double>(n), *b.upper) << name << " eps=" << eps;
    }
  }
}

TEST(HullCover, LShapeHolds) {
  const auto l = load_body("lshape.json");
  const auto ratio = hull_ratio(l, RatioMode::Poly);
  EXPECT_NEAR(ratio.R, 3.5 / 3.0, 1e-9);
  for (double eps : {0.2, 0.4, 0.8}) {
    const auto r = check_hull_cover_ratio(l, eps, ratio);
    EXPECT_TRUE(r.holds) << eps;
    EXPECT_GE(r.slack, 0.0);
  }
}

TEST(HullCover, ConvexBodyRatioOne) {
  const auto sq = load_body("square.json");
  const auto ratio = hull_ratio(sq, RatioMode::Poly);
  EXPECT_EQ(ratio.R, 1.0);
  const auto gen = hull_ratio(sq, RatioMode::General);
  EXPECT_NEAR(gen.R, 1.0, 1e-12);
  const auto r = check_hull_cover_ratio(sq, 0.25, ratio);
  EXPECT_TRUE(r.holds);
  EXPECT_GE(r.slack, (std::pow(3.0, 2) - 1) * static_cast<double>(r.n_body) - 2.0);
}

TEST(HullCover, TwoPointSegment) {
  const auto c = load_cloud("twopoints.json");
  const auto ratio = hull_ratio(c, RatioMode::Poly);
  EXPECT_GE(ratio.R, 1.0);
  const auto r = check_hull_cover_ratio(c, 0.1, ratio);
  EXPECT_EQ(r.n, 1);
  EXPECT_EQ(r.n_body, 2u);
  // a unit segment needs ceil(1/(2 eps)) = 5 balls; farthest-first stays
  // within the cover number at eps/2, ceil(1/eps) = 10
  EXPECT_GE(r.n_hull, 5u);
  EXPECT_LE(r.n_hull, 10u);
  EXPECT_TRUE(r.holds);
}

TEST(HullCover, GeneralModeLShape) {
  const auto l = load_body("lshape.json");
  const auto ratio = hull_ratio(l, RatioMode::General);
  EXPECT_GE(ratio.R, 3.5 / 3.0);
  EXPECT_NEAR(ratio.measured, 3.5 / 3.0, 1e-9);
  EXPECT_TRUE(check_hull_cover_ratio(l, 0.4, ratio).holds);
}

TEST(HullRatio, BasisCloudsUseAffineCells) {
  // e_1..e_n span a regular (n-1)-simplex of edge sqrt 2 and volume
  // sqrt(n)/(n-1)!; T counts as n cells of side sqrt(2)/200
  for (int n : {2, 4, 8, 16}) {
    const auto c = load_cloud("basis" + std::to_string(n) + ".json");
    const double h = std::sqrt(2.0) / 200.0;
    const double simplex = std::sqrt(static_cast<double>(n)) / std::tgamma(static_cast<double>(n));
    const double expect = simplex / (n * std::pow(h, n - 1));
    const auto r = hull_ratio(c, RatioMode::Poly);
    EXPECT_NEAR(r.measured / expect, 1.0, 1e-9) << n;
    EXPECT_NEAR(r.R, std::max(1.0, expect), 1e-9 * std::max(1.0, expect)) << n;
  }
}

TEST(HullRatio, GeneralModeOnBasisClouds) {
  for (int n : {2, 4, 16}) {
    const auto r = hull_ratio(load_cloud("basis" + std::to_string(n) + ".json"), RatioMode::General);
    EXPECT_EQ(r.mode, RatioMode::General);
    EXPECT_GE(r.c2_hat, 1.0);
    EXPECT_GE(r.R, 1.0);
    EXPECT_TRUE(std::isfinite(r.R));
    EXPECT_GE(r.k_h, 1);
  }
}

TEST(Report, CsvAndJson) {
  const auto r = greedy_cover(load_cloud("triangle.json"), 0.9);
  const auto csv = covering_csv({r});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epsilon,n_greedy,n_packing,n_exact,vol_lower,vol_upper");
  const auto j = to_json(r);
  EXPECT_EQ(j["n_exact"], 3);
  EXPECT_TRUE(j["vol_lower"].is_null());
}
