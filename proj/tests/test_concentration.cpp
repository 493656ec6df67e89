// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "phisob/concentration.hpp"

using namespace phisob;

namespace {

// Laplace(1) as the image of N(0,1) under the quantile map.
Measure laplace() {
  return Measure::pushforward1(
      [](double z) {
        const double s = oracle::normal_sf(std::abs(z));
        return (z > 0 ? -1.0 : 1.0) * std::log(2 * s);
      },
      Measure::gaussian1(0, 1), "laplace");
}

}  // namespace

TEST(Herbst, BoundDominatesExactNormalTail) {
  const auto rep = herbst_gaussian_tail(2.0, linear_field(), Measure::gaussian1(0, 1));
  ASSERT_EQ(rep.t.size(), 17u);
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    EXPECT_GE(rep.bound[i], 2 * oracle::normal_sf(rep.t[i])) << rep.t[i];
    EXPECT_NEAR(rep.empirical[i], rep.t[i] == 0 ? 1.0 : 2 * oracle::normal_sf(rep.t[i]),
                5 * rep.stderr_[i] + 1e-12)
        << rep.t[i];
  }
  EXPECT_TRUE(rep.dominated());
  EXPECT_EQ(rep.bound[0], 2.0);
  EXPECT_EQ(rep.empirical[0], 1.0);
}

TEST(Herbst, BoundsNonIncreasingAndMonotoneInC) {
  const auto a = herbst_gaussian_tail(2.0, linear_field(), Measure::gaussian1(0, 1), default_tail_grid(), 10000, 1);
  const auto b = herbst_gaussian_tail(3.0, linear_field(), Measure::gaussian1(0, 1), default_tail_grid(), 10000, 1);
  for (std::size_t i = 0; i < a.t.size(); ++i) {
    if (i > 0) {
      EXPECT_LE(a.bound[i], a.bound[i - 1]);
      EXPECT_LE(a.empirical[i], a.empirical[i - 1]);
    }
    EXPECT_LE(a.bound[i], b.bound[i]);
    EXPECT_GE(a.empirical[i], 0.0);
    EXPECT_LE(a.empirical[i], 1.0);
  }
}

TEST(Herbst, ConstantFunction) {
  const auto rep = herbst_gaussian_tail(2.0, constant_field(3.0), Measure::gaussian1(0, 1), default_tail_grid(),
                                        1000, 2);
  for (std::size_t i = 1; i < rep.t.size(); ++i) EXPECT_EQ(rep.empirical[i], 0.0);
  EXPECT_TRUE(rep.degenerate);
}

TEST(Herbst, LipschitzCheck) {
  EXPECT_THROW(herbst_gaussian_tail(2.0, linear_field(2.0), Measure::gaussian1(0, 1), default_tail_grid(), 1000),
               DomainError);
  EXPECT_THROW(herbst_gaussian_tail(0.0, linear_field(), Measure::gaussian1(0, 1)), DomainError);
  // A 1-Lipschitz function of two coordinates.
  const ScalarField F(2, [](Point x) { return std::sqrt(x[0] * x[0] + x[1] * x[1]); });
  const auto rep = herbst_gaussian_tail(2.0, F, Measure::gaussian({0, 0}, {1, 0, 0, 1}), default_tail_grid(), 200000, 3);
  EXPECT_TRUE(rep.dominated());
}

TEST(TailFit, ExactNormalTails) {
  const Vec t = default_tail_grid();
  Vec p;
  for (double x : t) p.push_back(oracle::normal_sf(x));
  const auto fit = fit_tail_exponent(t, p, 1000000, 2.0);
  EXPECT_NEAR(fit.r_hat, 2.0, 0.1);
  EXPECT_EQ(fit.points, 13u);
  EXPECT_GT(fit.k_hat, 0.0);
  EXPECT_EQ(fit.regime, "gaussian");
}

TEST(TailFit, ExactExponentialTails) {
  const Vec t = default_tail_grid();
  Vec p;
  for (double x : t) p.push_back(0.5 * std::exp(-2 * x));
  const auto fit = fit_tail_exponent(t, p, 1000000, 1.0);
  EXPECT_NEAR(fit.r_hat, 1.0, 0.02);
  EXPECT_TRUE(fit.exponent_match);
  EXPECT_NEAR(fit.k_hat, 2.0, 0.2);
  EXPECT_EQ(fit.regime, "exponential");
}

TEST(BecknerTail, GaussianExponentTwo) {
  const auto rep = beckner_tail(1.0, 1.0, linear_field(), Measure::gaussian1(0, 1));
  EXPECT_EQ(rep.r, 2.0);
  EXPECT_FALSE(rep.degenerate);
  EXPECT_TRUE(rep.fit.exponent_match) << rep.fit.r_lo << " " << rep.fit.r_hi;
  EXPECT_NEAR(rep.fit.r_hat, 2.0, 0.35);
  EXPECT_LT(rep.fit.r_hi, 3.0);
  EXPECT_GT(rep.fit.r_lo, 1.0);
  EXPECT_TRUE(rep.fit.decays_at_least);
  for (std::size_t i = 0; i < rep.t.size(); ++i) {
    if (rep.t[i] >= 1.0) {
      EXPECT_LE(rep.empirical[i], rep.bound[i] + 1e-15);
    }
  }
}

TEST(BecknerTail, LaplaceExponentOne) {
  const auto rep = beckner_tail(4.0, 0.0, linear_field(), laplace());
  EXPECT_EQ(rep.r, 1.0);
  EXPECT_EQ(rep.fit.regime, "exponential");
  EXPECT_TRUE(rep.fit.exponent_match) << rep.fit.r_lo << " " << rep.fit.r_hi;
  EXPECT_GT(rep.fit.k_hat, 0.0);
  EXPECT_LT(rep.fit.r_lo, 2.0);
}

TEST(BecknerTail, IntermediateAndDegenerate) {
  const auto rep = beckner_tail(1.0, 0.5, linear_field(), Measure::gaussian1(0, 1), default_tail_grid(), 100000, 4);
  EXPECT_NEAR(rep.r, 4.0 / 3.0, 1e-15);
  EXPECT_EQ(rep.fit.regime, "intermediate");
  const auto deg = beckner_tail(1.0, 1.0, constant_field(1.0), Measure::gaussian1(0, 1), default_tail_grid(), 1000);
  EXPECT_TRUE(deg.degenerate);
  EXPECT_EQ(deg.fit.regime, "degenerate");
  EXPECT_THROW(beckner_tail(1.0, 1.5, linear_field(), Measure::gaussian1(0, 1)), DomainError);
}
