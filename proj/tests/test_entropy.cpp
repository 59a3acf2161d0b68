#include <gtest/gtest.h>

#include <cmath>

#include "hullmetry/entropy.hpp"
#include "hullmetry/io.hpp"
#include "test_support.hpp"

using namespace hullmetry;

namespace {

ProfileScenario load_profile(const std::string& name) {
  return profile_from_json(io::read_json_file(hullmetry::testing::fixture(name)));
}

/// x (ln^2 x - 2 ln x + 2), an antiderivative of ln^2 x vanishing at 0.
double logsq_antiderivative(double x) {
  const double l = std::log(x);
  return x * (l * l - 2 * l + 2);
}

}  // namespace

TEST(HullProfile, Regimes) {
  const auto a = hull_profile(make_profile(3, 0));
  EXPECT_EQ(a.chi, 3);
  EXPECT_EQ(a.psi, 0);
  const auto b = hull_profile(make_profile(2, 0));
  EXPECT_EQ(b.psi, 2);
  EXPECT_EQ(b.form, ProfileForm::Plain);
  const auto c = hull_profile(make_profile(2, -3));
  EXPECT_EQ(c.form, ProfileForm::LogLog);
  EXPECT_EQ(c.psi, -1);
  EXPECT_THROW(hull_profile(make_profile(2, -2)), Error);
  EXPECT_THROW(hull_profile(make_profile(2, -2.5)), Error);
  EXPECT_THROW(hull_profile(make_profile(2, -4)), Error);
  EXPECT_THROW(make_profile(1.5, 0), Error);
}

TEST(HullProfile, IdempotentAboveTwo) {
  for (double chi : {2.5, 3.0, 7.0})
    for (double psi : {-4.0, 0.0, 1.5}) {
      const auto p = make_profile(chi, psi);
      const auto h = hull_profile(p);
      EXPECT_EQ(hull_profile(h).chi, h.chi);
      EXPECT_EQ(hull_profile(h).psi, h.psi);
      EXPECT_EQ(h.psi, psi);
    }
}

TEST(RatioBound, Kinds) {
  EXPECT_EQ(ratio_bound(make_profile(3, 0)).kind, RatioKind::Constant);
  EXPECT_EQ(ratio_bound(make_profile(2, 0)).kind, RatioKind::LogSq);
  EXPECT_EQ(ratio_bound(make_profile(2, -3)).kind, RatioKind::Log3OverLogLog);
  EXPECT_STREQ(ratio_bound(make_profile(2, -1)).label(), "C4");
  EXPECT_THROW(ratio_bound(make_profile(2, -3.5)), Error);
  const RatioFunction f{RatioKind::Log3OverLogLog, 2.0};
  const double e = 0.01, l = -std::log(e);
  EXPECT_NEAR(f(e), 2 * l * l * l / std::log(l), 1e-12);
}

TEST(Integral, ConstantIsExact) {
  for (double delta : {0.3, 1.0, 4.0})
    for (double c : {1.0, 2.5}) {
      const auto v = integral_exists({RatioKind::Constant, c}, delta);
      ASSERT_TRUE(v.converges);
      EXPECT_NEAR(*v.value / (c * delta), 1.0, 1e-6);
    }
}

TEST(Integral, LogSquared) {
  for (double delta : {0.2, 1.0, 3.0}) {
    const auto v = integral_exists({RatioKind::LogSq, 1.0}, delta);
    ASSERT_TRUE(v.converges);
    const double expect = logsq_antiderivative(delta);
    EXPECT_NEAR(*v.value, expect, 1e-3 * expect) << delta;
    EXPECT_NEAR(*v.analytic, expect, 1e-12 * expect);
  }
}

TEST(Integral, ScalesWithConstant) {
  const double a = *integral_exists({RatioKind::LogSq, 1.0}, 1.0).value;
  const double b = *integral_exists({RatioKind::LogSq, 3.0}, 1.0).value;
  EXPECT_NEAR(b, 3 * a, 1e-4 * b);
}

TEST(Integral, LogLogDivergesAtInverseE) {
  for (double delta : {1.0, std::exp(-1.0), 0.5, 2.0}) {
    const auto v = integral_exists({RatioKind::Log3OverLogLog, 1.0}, delta);
    EXPECT_FALSE(v.converges) << delta;
    EXPECT_EQ(v.diagnosis, Diagnosis::InteriorSingularity) << delta;
    ASSERT_TRUE(v.singular_point);
    EXPECT_NEAR(*v.singular_point, std::exp(-1.0), 1e-15);
  }
}

TEST(Integral, LogLogPastESeesBothPoles) {
  const auto v = integral_exists({RatioKind::Log3OverLogLog, 1.0}, 5.0);
  EXPECT_FALSE(v.converges);
  ASSERT_TRUE(v.singular_point);
  const double s = *v.singular_point;
  EXPECT_TRUE(std::abs(s - std::exp(-1.0)) < 1e-15 || std::abs(s - std::exp(1.0)) < 1e-15) << s;
}

TEST(Integral, LogLogConvergesBelowInverseE) {
  const auto v = integral_exists({RatioKind::Log3OverLogLog, 1.0}, 0.2);
  EXPECT_TRUE(v.converges);
  EXPECT_GT(*v.value, 0.0);
}

TEST(Integral, DivergenceStableUnderLargerBudget) {
  QuadratureOptions big;
  big.max_levels = 80;
  for (const char* name : {"profile_case1.json", "profile_case2.json", "profile_case3.json"}) {
    const auto s = load_profile(name);
    const auto f = ratio_bound(s.profile, s.C);
    EXPECT_EQ(integral_exists(f, s.delta).converges, integral_exists(f, s.delta, big).converges) << name;
  }
}

TEST(Integral, LogEndpointConverges) {
  // |log eps|^2 integrates; its endpoint increments shrink about 16-fold per level
  const auto v = integral_exists({RatioKind::LogSq, 1.0}, 1e-3);
  EXPECT_TRUE(v.converges);
  EXPECT_GE(v.trace.size(), 3u);
}

TEST(LExistence, CanonicalProfiles) {
  const bool expect[] = {true, true, false};
  int i = 0;
  for (const char* name : {"profile_case1.json", "profile_case2.json", "profile_case3.json"}) {
    const auto s = load_profile(name);
    const auto r = l_existence_report(s.profile, s.delta, s.C);
    EXPECT_EQ(r.L_exists, expect[i++]) << name;
  }
  const auto two = l_existence_report(make_profile(2, -1), 1.0, 1.0);
  EXPECT_NEAR(*two.verdict.value, 2.0, 1e-3);
  EXPECT_TRUE(l_existence_report(make_profile(3, 1), 1.0).L_exists);
  EXPECT_THROW(l_existence_report(make_profile(2, -2.5), 1.0), Error);
}

TEST(LExistence, Json) {
  const auto j = to_json(l_existence_report(make_profile(2, -3), 1.0));
  EXPECT_EQ(j["L_exists"], false);
  EXPECT_EQ(j["verdict"]["diagnosis"], "interior_singularity");
  EXPECT_EQ(j["hull_profile"]["form"], "loglog");
  EXPECT_FALSE(j["verdict"]["quadrature_trace"].empty());
}
