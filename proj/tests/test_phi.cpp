// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phisob/phi.hpp"

using namespace phisob;

namespace {

const IntervalGrid kPos{0.01, 100.0, 201, true};

std::vector<PhiFunction> builtins() { return {xlogx(), power(1.5), square(), quadratic(1.0, 5.0, 7.0)}; }

}  // namespace

TEST(Builtin, SquareSecondDerivativeIsTwo) {
  const auto phi = square();
  for (double x : {-3.0, 0.0, 0.5, 1e3}) EXPECT_EQ(phi.d2(x), 2.0);
}

TEST(Builtin, XlogxAtOne) { EXPECT_EQ(xlogx()(1.0), 0.0); }

TEST(Builtin, PowerSecondDerivative) {
  // (3/2)(1/2) 4^{-1/2}
  EXPECT_NEAR(power(1.5).d2(4.0), 0.375, 1e-15);
}

TEST(Builtin, Intervals) {
  EXPECT_TRUE(xlogx().interval().is_half_line());
  EXPECT_TRUE(power(1.5).interval().is_half_line());
  EXPECT_TRUE(square().interval().is_real_line());
}

TEST(Builtin, PowerExponentGuards) {
  EXPECT_THROW(power(1.0), DomainError);
  EXPECT_THROW(power(0.5), DomainError);
  EXPECT_TRUE(power(1.5).flag().empty());
  EXPECT_FALSE(power(3.0).flag().empty());
}

TEST(Builtin, AnalyticDerivativesMatchDifferences) {
  for (const auto& phi : builtins()) {
    const auto fd = PhiFunction::from_eval("fd", phi.interval(), phi.f_fn());
    for (double x : {0.05, 0.3, 1.0, 2.5, 7.0}) {
      EXPECT_LE(std::abs(phi.d1(x) - fd.d1(x)), 1e-6 * (1 + std::abs(phi.d1(x)))) << phi.name() << " x=" << x;
      EXPECT_LE(std::abs(phi.d2(x) - fd.d2(x)), 1e-6 * (1 + std::abs(phi.d2(x)))) << phi.name() << " x=" << x;
    }
    // Third and fourth differences are noisier; compare on moderate x.
    for (double x : {0.5, 1.0, 2.5}) {
      EXPECT_LE(std::abs(phi.d3(x) - fd.d3(x)), 1e-4 * (1 + std::abs(phi.d3(x)))) << phi.name() << " x=" << x;
      EXPECT_LE(std::abs(phi.d4(x) - fd.d4(x)), 1e-2 * (1 + std::abs(phi.d4(x)))) << phi.name() << " x=" << x;
    }
  }
}

TEST(Builtin, ClosedBregmanMatchesDefinition) {
  for (const auto& phi : builtins()) {
    for (double u : {0.2, 1.0, 3.0})
      for (double v : {-0.1, 0.5, 2.0}) {
        const double direct = phi(u + v) - phi(u) - phi.d1(u) * v;
        EXPECT_NEAR(phi.bregman(u, v), direct, 1e-12 * (1 + std::abs(direct))) << phi.name();
      }
  }
}

TEST(PhiHat, Examples) {
  EXPECT_EQ(phi_hat(xlogx(), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(phi_hat(square(), 2.0), 2.0);
  EXPECT_NEAR(phi_hat(xlogx(), std::exp(1.0)), std::exp(1.0), 1e-15);
  EXPECT_THROW(phi_hat(xlogx(), -1.0), DomainError);
}

TEST(PhiHat, SameCurvature) {
  const auto phi = power(1.5);
  auto hat = [&](double u) { return phi_hat(phi, u); };
  for (double u : {0.5, 1.0, 2.0}) EXPECT_NEAR(central_d2(hat, u, 1e-4), phi.d2(u), 1e-6);
}

TEST(Psi, Examples) {
  for (double u : {-2.0, 0.0, 3.0})
    for (double v : {-1.0, 0.5, 4.0}) EXPECT_DOUBLE_EQ(psi(square(), u, v), v * v);
  for (const auto& phi : builtins()) EXPECT_EQ(psi(phi, 0.7, 0.0), 0.0);
  EXPECT_NEAR(psi(xlogx(), 1.0, 1.0), 2.0 * std::log(2.0) - 1.0, 1e-15);
  EXPECT_THROW(psi(xlogx(), 1.0, -2.0), DomainError);
}

TEST(Psi, NonNegativeOnGrid) {
  for (const auto& phi : builtins()) {
    const auto pts = kPos.points(phi.interval());
    for (std::size_t i = 0; i < pts.size(); i += 5)
      for (std::size_t j = 0; j < pts.size(); j += 5) EXPECT_GE(psi(phi, pts[i], pts[j] - pts[i]), 0.0);
  }
}

TEST(Psi, DirichletBoundsUnderH2prime) {
  // Psi <= Phi''(u) v^2 when H2' holds; Psi <= v (Phi'(u+v) - Phi'(u)) always.
  for (const auto& phi : {xlogx(), square()}) {
    ASSERT_TRUE(check_H2prime(phi, kPos).holds);
    const auto pts = kPos.points(phi.interval());
    for (std::size_t i = 0; i < pts.size(); i += 4)
      for (std::size_t j = 0; j < pts.size(); j += 4) {
        const double u = pts[i];
        const double v = pts[j] - u;
        const double p = psi(phi, u, v);
        EXPECT_LE(p, phi.d2(u) * v * v * (1 + 1e-12) + 1e-12);
        EXPECT_LE(p, v * (phi.d1(u + v) - phi.d1(u)) * (1 + 1e-12) + 1e-12);
      }
  }
}

TEST(CheckH1, BasicExamplesHold) {
  EXPECT_TRUE(check_H1(xlogx(), kPos).holds);
  EXPECT_TRUE(check_H1(power(1.5), kPos).holds);
  EXPECT_TRUE(check_H1(quadratic(2, -1, 3), default_grid(Interval::real_line())).holds);
  EXPECT_TRUE(check_H1(power(2.0), kPos).holds);
}

TEST(CheckH1, QuarticFailsWithWitness) {
  const auto rep = check_H1(power(4.0), kPos);
  EXPECT_FALSE(rep.holds);
  ASSERT_EQ(rep.witness.size(), 1u);
  const double x = rep.witness[0];
  // Phi''''Phi'' - 2 Phi'''^2 = 288x^2 - 1152x^2, normalized by 288x^2 + 1152x^2.
  EXPECT_NEAR(rep.margin, -864.0 / 1440.0, 1e-12);
  EXPECT_GT(x, 0.0);
  EXPECT_FALSE(rep.inconsistent);
}

TEST(CheckH1, HoldsIffMarginAboveTolerance) {
  for (double p : {1.2, 1.5, 2.0, 2.5, 3.0, 4.0}) {
    const auto rep = check_H1(power(p), kPos);
    EXPECT_EQ(rep.holds, rep.margin >= -kTolConvexity) << p;
    // Closed form: sign of (2 - p)(p - 1).
    EXPECT_EQ(rep.holds, p <= 2.0) << p;
  }
}

TEST(CheckH1, CrossCheckAgreesForBuiltins) {
  for (double p : {1.5, 4.0}) EXPECT_FALSE(check_H1(power(p), kPos).inconsistent);
  EXPECT_FALSE(check_H1(xlogx(), kPos).inconsistent);
}

TEST(CheckH2, Examples) {
  EXPECT_TRUE(check_H2(square(), IntervalGrid{-10, 10, 41, false}).holds);
  EXPECT_TRUE(check_H2(xlogx(), kPos).holds);
  EXPECT_TRUE(check_H2(power(1.5), kPos).holds);
}

TEST(CheckH2, QuarticDeterminantOracle) {
  // For x^4: Det = Phi''(u)(Phi''(w) - Phi''(u)) - Phi''(w) Phi'''(u)(w - u)
  //             = -144 u (w - u)^2 (u + 2w) < 0 off the diagonal.
  const IntervalGrid g{0.5, 2.0, 4, false};
  const auto rep = check_H2(power(4.0), g);
  EXPECT_FALSE(rep.holds);
  double worst = kInf;
  const auto pts = g.points(Interval::half_line());
  for (double u : pts)
    for (double w : pts) {
      const double d2u = 12 * u * u, d2w = 12 * w * w, d3u = 24 * u, v = w - u;
      const double det = -144.0 * u * v * v * (u + 2 * w);
      const double scale = std::abs(d2u * d2w) + d2u * d2u + std::abs(d2w * d3u * v);
      worst = std::min(worst, det / std::max(1.0, scale));
    }
  EXPECT_NEAR(rep.margin, worst, 1e-12);
}

TEST(CheckH2prime, Examples) {
  EXPECT_TRUE(check_H2prime(xlogx(), kPos).holds);
  EXPECT_TRUE(check_H2prime(square(), IntervalGrid{-5, 5, 11, false}).holds);
  const auto cubic = PhiFunction(
      "x^3/6", Interval::half_line(), [](double x) { return x * x * x / 6; }, [](double x) { return x * x / 2; },
      [](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; });
  const auto rep = check_H2prime(cubic, kPos);
  EXPECT_FALSE(rep.holds);
  EXPECT_NEAR(rep.margin, -1.0, 1e-15);
}

TEST(CheckH2prime, ImpliesH2) {
  for (const auto& phi : {xlogx(), power(1.5)}) {
    const auto rep = check_H2prime(phi, kPos);
    EXPECT_TRUE(rep.holds);
    EXPECT_FALSE(rep.inconsistent);
  }
}

TEST(Grid, StaysInsideInterval) {
  const IntervalGrid g{0.0, 1.0, 5, false};
  const auto pts = g.points(Interval::half_line());
  EXPECT_GE(pts.front(), kEndpointOffset);
  EXPECT_THROW((IntervalGrid{1.0, 1.0, 5, false}.points(Interval::real_line())), DomainError);
  EXPECT_THROW((IntervalGrid{0.0, 1.0, 2, false}.points(Interval::real_line())), DomainError);
}

TEST(Cone, AffinePartKeepsCurvature) {
  const auto c = cone_combine({{xlogx(), 1.0}}, {5.0, -3.0});
  for (double x : {0.1, 1.0, 4.0}) {
    EXPECT_EQ(c.d2(x), xlogx().d2(x));
    EXPECT_NEAR(c(x), xlogx()(x) + 5 * x - 3, 1e-14);
  }
}

TEST(Cone, PowerPlusXlogxPassesAll) {
  const auto c = cone_combine({{power(1.5), 1.0}, {xlogx(), 1.0}}, {0.0, 0.0});
  EXPECT_TRUE(check_H1(c, kPos).holds);
  EXPECT_TRUE(check_H2(c, kPos).holds);
  EXPECT_TRUE(check_H2prime(c, kPos).holds);
}

TEST(Cone, Rejections) {
  EXPECT_THROW(cone_combine({}, {2.0, 7.0}), DomainError);
  EXPECT_THROW(cone_combine({{xlogx(), -1.0}}, {0.0, 0.0}), DomainError);
}

TEST(Cone, RandomNonNegativeCombinationsStayInAllClasses) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  const IntervalGrid g{1e-3, 1e3, 61, true};
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = cone_combine({{xlogx(), u(rng)}, {power(1.5), u(rng)}, {square(), u(rng)}}, {u(rng), u(rng)});
    EXPECT_TRUE(check_H1(c, g).holds) << c.name();
    EXPECT_TRUE(check_H2(c, g).holds) << c.name();
    EXPECT_TRUE(check_H2prime(c, g).holds) << c.name();
  }
}

TEST(FromEval, FallbackRecordsStep) {
  const auto phi = PhiFunction::from_eval("cosh", Interval::real_line(), [](double x) { return std::cosh(x); });
  EXPECT_FALSE(phi.analytic());
  EXPECT_FALSE(phi.fd_note().empty());
  EXPECT_NEAR(phi.d2(0.3), std::cosh(0.3), 1e-6);
}

TEST(NormalizedAtZero, ShiftsConstant) {
  const auto q = normalized_at_zero(quadratic(1, 0, 4));
  EXPECT_EQ(q(0.0), 0.0);
  EXPECT_THROW(normalized_at_zero(PhiFunction::from_eval("log", {1.0, kInf}, [](double x) { return x * x; })),
               DomainError);
}

TEST(PhiInverse, InvertsDerivative) {
  for (const auto& phi : {xlogx(), power(1.5), power(2.0), square(), quadratic(2.0, -1.0, 0.5)}) {
    ASSERT_TRUE(static_cast<bool>(phi.d1_inverse())) << phi.name();
    for (double u : {0.01, 0.3, 1.0, 2.5, 7.0}) EXPECT_NEAR(phi.d1_inverse()(phi.d1(u)), u, 1e-12 * (1 + u)) << phi.name();
  }
}
