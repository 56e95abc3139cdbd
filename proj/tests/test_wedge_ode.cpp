#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wedgewar/wedge_ode.hpp"

using namespace wedgewar;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST(EvalSlope, KnownValues) {
  EXPECT_DOUBLE_EQ(eval_slope(1.0, 1.0, 0.0, 2.0), 12.0);
  EXPECT_DOUBLE_EQ(eval_slope(kInf, 1.0, 0.0, 2.0), 8.0);
  EXPECT_DOUBLE_EQ(eval_slope(kInf, 0.5, 0.0, 2.0), 16.0);
}

TEST(EvalSlope, LimitFormMatchesLargeA) {
  for (double p : {1.5, 2.0, 4.0})
    for (double y : {0.1, 0.5, 0.9})
      for (double w : {0.0, 0.3, 7.0}) {
        const double lim = (16 * p + 4 * (3 * p - 2) * w + 2 * (p - 1) * w * w) / (y * (4 + (p - 1) * w));
        EXPECT_NEAR(eval_slope(kInf, y, w, p), lim, 1e-12 * lim);
        EXPECT_NEAR(eval_slope(1e12, y, w, p), lim, 1e-9 * lim);
      }
}

TEST(EvalSlope, RejectsOutsideDomain) {
  EXPECT_THROW(eval_slope(1.0, 0.0, 0.0, 2.0), DomainError);
  EXPECT_THROW(eval_slope(1.0, -0.1, 0.0, 2.0), DomainError);
  EXPECT_THROW(eval_slope(1.0, 0.5, -1e-3, 2.0), DomainError);
  EXPECT_THROW(eval_slope(1.0, 0.5, 0.0, 1.0), DomainError);
  EXPECT_THROW(eval_slope(0.0, 0.5, 0.0, 2.0), DomainError);
}

TEST(EvalSlope, PositiveEverywhere) {
  for (double a : {1e-3, 0.5, 1.0, 50.0, kInf})
    for (double p : {1.01, 1.5, 2.0, 3.0, 10.0, 100.0})
      for (double y : {1e-6, 1e-3, 0.2, 0.7, 1.0})
        for (double w : {0.0, 1e-9, 0.5, 10.0, 1e6}) EXPECT_GT(eval_slope(a, y, w, p), 0.0);
}

TEST(OdeConfig, Validation) {
  OdeConfig c;
  EXPECT_NO_THROW(c.validate());
  c.y_min = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.rel_tol = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = {};
  c.max_steps = 0;
  EXPECT_THROW(c.validate(), DomainError);
}

TEST(SolveG, SlopeAtOne) {
  const GProfile g = solve_G(1.0, 2.0);
  EXPECT_DOUBLE_EQ(g.slope_at_one(), 12.0);
  const double d = 1e-6;
  EXPECT_NEAR(g.G(1.0 - d) / d, 12.0, 1e-4);

  const GProfile k = solve_G(kInf, 2.0);
  EXPECT_DOUBLE_EQ(k.slope_at_one(), 8.0);
  EXPECT_NEAR(k.G(1.0 - d) / d, 8.0, 1e-4);
}

TEST(SolveG, MatchesFixedStepRk4) {
  const GProfile g = solve_G(1.0, 2.0);
  for (double y : {0.9, 0.5, 0.2}) {
    const double ref = oracle::rk4_G(1.0, 2.0, y, 40000);
    EXPECT_NEAR(g.G(y), ref, 1e-10 * ref) << "y=" << y;
  }
  const GProfile h = solve_G(0.3, 3.5);
  const double ref = oracle::rk4_G(0.3, 3.5, 0.5, 40000);
  EXPECT_NEAR(h.G(0.5), ref, 1e-10 * ref);
}

TEST(SolveG, MatchesClosedFormAtPTwo) {
  for (double a : {1e-3, 0.2, 1.0, 30.0}) {
    const GProfile g = solve_G(a, 2.0);
    for (double u : {1.0 - 1e-7, 0.9999, 0.99, 0.7, 0.3, 0.01, 1e-5}) {
      const double ref = oracle::G_p2(a, u);
      EXPECT_NEAR(g.G(u), ref, 1e-10 * ref + 1e-13) << "a=" << a << " u=" << u;
    }
  }
}

TEST(SolveG, SamplesSatisfyInvariants) {
  for (double a : {0.05, 1.0, kInf}) {
    const GProfile g = solve_G(a, 3.0);
    const auto s = g.samples();
    ASSERT_GE(s.size(), 2u);
    EXPECT_EQ(s.back().y, 1.0);
    EXPECT_EQ(s.back().G, 0.0);
    EXPECT_NEAR(s.front().y, g.y_min(), 1e-18);
    for (std::size_t i = 1; i < s.size(); ++i) {
      ASSERT_LT(s[i - 1].y, s[i].y);
      ASSERT_GT(s[i - 1].G, s[i].G) << "not strictly decreasing at y=" << s[i].y;
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) ASSERT_GT(s[i].G, 0.0);
  }
}

TEST(SolveG, DecreasingInA) {
  const std::vector<std::pair<double, double>> pairs{{0.5, 1.0}, {1.0, 2.0}, {2.0, 8.0}};
  for (double p : {1.5, 2.0, 3.0}) {
    const GProfile k = solve_G(kInf, p);
    for (auto [a1, a2] : pairs) {
      const GProfile g1 = solve_G(a1, p);
      const GProfile g2 = solve_G(a2, p);
      for (const auto& smp : g1.samples()) {
        if (smp.y >= 1.0) continue;
        ASSERT_LT(g2.G(smp.y), smp.G) << "p=" << p << " y=" << smp.y;
        ASSERT_LE(k.G(smp.y), g2.G(smp.y)) << "p=" << p << " y=" << smp.y;
      }
    }
  }
}

TEST(SolveG, TooFewStepsIsNonConvergence) {
  OdeConfig c;
  c.max_steps = 5;
  EXPECT_THROW(solve_G(1.0, 2.0, c), NonConvergenceError);
}

TEST(SolveG, RejectsBadArguments) {
  EXPECT_THROW(solve_G(1.0, 1.0), DomainError);
  EXPECT_THROW(solve_G(-1.0, 2.0), DomainError);
}

TEST(Asymptotics, LimitSlopeNearOne) {
  for (double p : {1.5, 2.0, 3.0}) {
    const GProfile k = solve_G(kInf, p);
    const double y = 1.0 - 1e-3;
    EXPECT_NEAR(k.G(y) / (1.0 - y), 4.0 * p, 0.05 * 4.0 * p);
  }
}

TEST(Asymptotics, ExponentRatioIsTwoPlusLogCorrection) {
  for (double p : {2.0, 3.0}) {
    OdeConfig c;
    c.y_min = 1e-3;
    const GProfile k = solve_G(kInf, p, c);
    const double y = k.y_min();
    const double c_y = y * y * k.G(y);
    EXPECT_NEAR(asymptotic_exponent_check(k), 2.0 + std::log(c_y) / -std::log(y), 1e-12);
  }
  // the correction decays like 1 / log(1/y)
  double prev = kInf;
  for (double ym : {1e-3, 1e-6, 1e-9, 1e-12}) {
    OdeConfig c;
    c.y_min = ym;
    const double v = asymptotic_exponent_check(solve_G(kInf, 2.0, c));
    EXPECT_GT(v, 2.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 2.06);
}

TEST(Asymptotics, ExponentCheckPreconditions) {
  EXPECT_THROW(asymptotic_exponent_check(solve_G(1.0, 2.0)), DomainError);
  OdeConfig c;
  c.y_min = 1e-2;
  EXPECT_THROW(asymptotic_exponent_check(solve_G(kInf, 2.0, c)), DomainError);
}

TEST(Asymptotics, LocalSlopeAgreesWithRegression) {
  OdeConfig c;
  c.y_min = 1e-4;
  const GProfile k = solve_G(kInf, 3.0, c);
  // least squares of log G on -log y over the last decade
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int i = 0; i <= 200; ++i) {
    const double y = std::pow(10.0, -4.0 + i / 200.0);
    const double X = -std::log(y), Y = std::log(k.G(y));
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++n;
  }
  const double fit = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(fit, 2.0, 1e-3);
  EXPECT_NEAR(local_log_slope(k, 10.0 * k.y_min()), fit, 1e-3);
  EXPECT_NEAR(local_log_slope(k, 1e-3), 2.0, 0.1);
}

TEST(ThetaA, MatchesClosedFormAtPTwo) {
  for (double a : {1e-4, 1e-2, 0.3, 1.0, 10.0, 1e3}) EXPECT_NEAR(theta_a(a, 2.0), oracle::theta_p2(a), 1e-10) << a;
}

TEST(ThetaA, MatchesShootingOracle) {
  EXPECT_NEAR(theta_a(1.0, 2.0), oracle::shoot_half_aperture(1.0, 2.0, 1e-4), 1e-9);
  for (auto [a, p] : std::vector<std::pair<double, double>>{{1.0, 3.0}, {0.05, 1.5}, {4.0, 6.0}})
    EXPECT_NEAR(theta_a(a, p), oracle::shoot_half_aperture(a, p, 1e-4), 1e-9) << "a=" << a << " p=" << p;
}

TEST(ThetaA, SmallAThinLayer) {
  // for p != 2 and small a the profile has a layer of width ~ a/(2p) near y = 1
  EXPECT_NEAR(theta_a(1e-4, 3.0), oracle::shoot_half_aperture(1e-4, 3.0, 2e-7), 1e-9);
}

TEST(ThetaA, IncreasingAndBounded) {
  const std::vector<double> as{0.1, 0.5, 1, 2, 5, 20};
  for (double p : {1.2, 2.0, 3.0, 8.0}) {
    double prev = 0.0;
    for (double a : as) {
      const double t = theta_a(a, p);
      EXPECT_GT(t, prev);
      EXPECT_LT(t, critical_half_angle_closed(p));
      prev = t;
    }
  }
  EXPECT_LT(theta_a(1e-3, 2.0), theta_a(1.0, 2.0));
  for (double a : {1e-3, 1.0, 1e3, 1e6}) EXPECT_LT(theta_a(a, 2.0), std::numbers::pi / 4);
}

TEST(ThetaA, RejectsLimitProfile) { EXPECT_THROW(theta_a(kInf, 2.0), DomainError); }

TEST(CriticalAngle, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(critical_half_angle_closed(2.0), std::numbers::pi / 4);
  EXPECT_NEAR(2.0 * critical_half_angle_closed(2.0), std::numbers::pi / 2, 1e-15);
  for (double p : {1.1, 1.5, 3.0, 10.0, 1e3})
    EXPECT_NEAR(critical_half_angle_closed(p), static_cast<double>(oracle::critical_half_angle_ld(p)), 1e-15);
  EXPECT_NEAR(critical_half_angle_closed(10.0), 0.5170741171387876, 1e-15);
  EXPECT_THROW(critical_half_angle_closed(1.0), DomainError);
}

TEST(CriticalAngle, RangeProperties) {
  for (double p : {1.0001, 1.1, 2.0, 50.0, 1e6}) {
    const double h = critical_half_angle_closed(p);
    EXPECT_GT(h, 0.0);
    EXPECT_LT(h, std::numbers::pi / 2);
  }
}

TEST(CriticalAngle, RationalIntegrandAtZero) { EXPECT_DOUBLE_EQ(rational_integrand(0.0, 2.0), 0.125); }

TEST(CriticalAngle, QuadratureAgreesWithClosedForm) {
  for (double p : {1.1, 1.5, 2.0, 3.0, 10.0}) {
    const double q = critical_half_angle_quadrature(p, 1e-12);
    EXPECT_NEAR(q, critical_half_angle_closed(p), 1e-10) << "p=" << p;
  }
  EXPECT_NEAR(critical_half_angle_quadrature(2.0, 1e-12), std::numbers::pi / 4, 1e-10);
}

TEST(CriticalAngle, ResultRecord) {
  const CriticalAngleResult r = critical_angle(1.5, 1e-10);
  EXPECT_EQ(r.p, 1.5);
  EXPECT_DOUBLE_EQ(r.discrepancy, std::abs(r.half_angle_closed - r.half_angle_quadrature));
  EXPECT_TRUE(r.within_tolerance());
  EXPECT_DOUBLE_EQ(r.full_angle(), 2.0 * r.half_angle_closed);
}

TEST(KRoute, AgreesWithClosedForm) {
  for (double p : {1.5, 2.0, 3.0}) EXPECT_NEAR(k_route_half_angle(p), critical_half_angle_closed(p), 1e-4) << p;
}

TEST(KRoute, ExceedsEveryFiniteA) {
  for (double p : {1.5, 3.0}) {
    const double k = k_route_half_angle(p);
    for (double a : {0.1, 1.0, 100.0, 1e5}) EXPECT_GT(k, theta_a(a, p));
  }
}
