// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phisob/functionals.hpp"

using namespace phisob;

namespace {

Rule atom_rule(const Vec& w) {
  Vec pts(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) pts[i] = static_cast<double>(i);
  return build_rule(Measure::atoms1(pts, w), ExpectationPlan::exact());
}

Vec random_positive(std::mt19937_64& rng, std::size_t n, double lo = 0.1, double hi = 5.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<PhiFunction> test_phis() { return {xlogx(), power(1.5), square()}; }

}  // namespace

TEST(PhiEntropy, SquareIsVariance) {
  const auto mu = Measure::gaussian1(0.5, 2.0);
  const auto f = sine_field(1.0, 1.3, 0.2, 0.4);
  const auto plan = ExpectationPlan::gauss_hermite(60);
  const double m = oracle::gauss_expect([&](double x) { return f(x); }, 0.5, 2.0);
  const double m2 = oracle::gauss_expect([&](double x) { return f(x) * f(x); }, 0.5, 2.0);
  EXPECT_NEAR(phi_entropy(square(), mu, f, plan).value, m2 - m * m, 1e-10);
}

TEST(PhiEntropy, ConstantGivesZero) {
  for (const auto& phi : test_phis()) {
    const auto e = phi_entropy(phi, Measure::gaussian1(0, 1), constant_field(2.5), ExpectationPlan::gauss_hermite(20));
    EXPECT_NEAR(e.value, 0.0, 1e-14) << phi.name();
    EXPECT_NEAR(e.mean, 2.5, 1e-14);
  }
}

TEST(PhiEntropy, GaussianExponential) {
  const double theta = 0.5;
  const auto f = exponential_field(theta, -theta * theta / 2);
  const auto e = phi_entropy(xlogx(), Measure::gaussian1(0, 1), f, ExpectationPlan::gauss_hermite(40));
  EXPECT_NEAR(e.value, 0.125, 1e-12);
  EXPECT_NEAR(e.mean, 1.0, 1e-13);
  EXPECT_FALSE(e.clamped);
}

TEST(PhiEntropy, ClampsTinyNegativesAndRejectsLargeOnes) {
  const Rule r = atom_rule({0.5, 0.5});
  const auto e = phi_entropy(xlogx(), r, Vec{-1e-13, 1.0});
  EXPECT_TRUE(e.clamped);
  EXPECT_NEAR(e.value, std::log(2.0) * 0.5, 1e-10);
  EXPECT_THROW(phi_entropy(xlogx(), r, Vec{-0.1, 1.0}), DomainError);
}

TEST(PhiEntropy, NonNegativeOnRandomInputs) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = oracle::random_simplex(rng, 6);
    const Rule r = atom_rule(w);
    const auto v = random_positive(rng, 6, 0.0, 10.0);
    for (const auto& phi : test_phis()) {
      const double ent = phi_entropy(phi, r, v).value;
      EXPECT_GE(ent, -1e-10);
      if (phi.name() == "xlogx") {
        EXPECT_NEAR(ent, oracle::entropy(oracle::xlogx, w, v), 1e-10);
      }
    }
  }
}

TEST(PhiEntropy, StrictlyConvexVanishesOnlyForConstants) {
  const Rule r = atom_rule({0.2, 0.3, 0.5});
  for (const auto& phi : test_phis()) {
    EXPECT_GT(phi_entropy(phi, r, Vec{1.0, 1.0, 1.0 + 1e-3}).value, 0.0) << phi.name();
    EXPECT_EQ(phi_entropy(phi, r, Vec{3.0, 3.0, 3.0}).value, 0.0) << phi.name();
  }
}

TEST(PhiEntropy, MonteCarloStandardError) {
  const auto mu = Measure::gaussian1(0, 1);
  const auto f = exponential_field(0.5, -0.125);
  const auto e = phi_entropy(xlogx(), mu, f, ExpectationPlan::monte_carlo(200000, 3));
  EXPECT_GT(e.se, 0.0);
  EXPECT_NEAR(e.value, 0.125, 4 * e.se);
}

TEST(PhiVariance, SquareTranslationAndQuadratic) {
  const auto mu = Measure::gaussian1(0, 1);
  const auto plan = ExpectationPlan::gauss_hermite(40);
  const auto f = sine_field();
  const auto f10 = sine_field(1.0, 1.0, 0.0, 10.0);
  const double var = oracle::gauss_expect([](double x) { return std::sin(x) * std::sin(x); });
  EXPECT_NEAR(phi_variance(square(), mu, f, plan), var, 1e-12);
  EXPECT_NEAR(phi_variance(square(), mu, f10, plan), phi_variance(square(), mu, f, plan), 1e-12);
  EXPECT_NEAR(phi_variance(quadratic(1, 5, 7), mu, f, plan), var + 7.0, 1e-12);
  EXPECT_THROW(phi_variance(xlogx(), mu, exponential_field(1.0), plan), DomainError);
}

TEST(RelativeEntropy, Examples) {
  const auto mu = Measure::atoms1({0, 1}, {0.5, 0.5});
  const auto nu = Measure::atoms1({0, 1}, {0.7, 0.3});
  EXPECT_EQ(relative_phi_entropy(xlogx(), mu, mu), 0.0);
  EXPECT_NEAR(relative_phi_entropy(xlogx(), nu, mu), 0.7 * std::log(1.4) + 0.3 * std::log(0.6), 1e-14);
  EXPECT_NEAR(relative_phi_entropy(xlogx(), nu, mu), 0.08228, 1e-5);
  const auto outside = Measure::atoms1({0, 2}, {0.5, 0.5});
  EXPECT_TRUE(std::isinf(relative_phi_entropy(xlogx(), outside, mu)));
}

TEST(RelativeEntropy, EqualsEntropyOfDensity) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = oracle::random_simplex(rng, 5);
    const auto q = oracle::random_simplex(rng, 5);
    const Vec pts{0, 1, 2, 3, 4};
    Vec dens(5);
    for (int i = 0; i < 5; ++i) dens[i] = q[i] / p[i];
    for (const auto& phi : test_phis()) {
      const double rel = relative_phi_entropy(phi, Measure::atoms1(pts, q), Measure::atoms1(pts, p));
      EXPECT_NEAR(rel, phi_entropy(phi, atom_rule(p), dens).value, 1e-10 * (1 + rel));
      const double by_density = relative_phi_entropy(phi, Measure::atoms1(pts, p), tabulated_field(dens),
                                                     ExpectationPlan::exact());
      EXPECT_NEAR(rel, by_density, 1e-10 * (1 + rel));
    }
  }
}

TEST(RelativeEntropy, BivariateConvexity) {
  std::mt19937_64 rng(6);
  const Vec pts{0, 1, 2, 3};
  for (int trial = 0; trial < 100; ++trial) {
    const auto p1 = oracle::random_simplex(rng, 4), p2 = oracle::random_simplex(rng, 4);
    const auto q1 = oracle::random_simplex(rng, 4), q2 = oracle::random_simplex(rng, 4);
    Vec pm(4), qm(4);
    for (int i = 0; i < 4; ++i) {
      pm[i] = 0.5 * (p1[i] + p2[i]);
      qm[i] = 0.5 * (q1[i] + q2[i]);
    }
    for (const auto& phi : test_phis()) {
      auto rel = [&](const Vec& q, const Vec& p) {
        return relative_phi_entropy(phi, Measure::atoms1(pts, q), Measure::atoms1(pts, p));
      };
      EXPECT_LE(rel(qm, pm), 0.5 * rel(q1, p1) + 0.5 * rel(q2, p2) + 1e-12) << phi.name();
    }
  }
}

TEST(PhiEntropy, ConcaveInTheMeasure) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto w1 = oracle::random_simplex(rng, 5), w2 = oracle::random_simplex(rng, 5);
    Vec wm(5);
    for (int i = 0; i < 5; ++i) wm[i] = 0.5 * (w1[i] + w2[i]);
    const auto f = random_positive(rng, 5);
    for (const auto& phi : test_phis()) {
      const double mid = phi_entropy(phi, atom_rule(wm), f).value;
      EXPECT_GE(mid + 1e-12, 0.5 * phi_entropy(phi, atom_rule(w1), f).value +
                                 0.5 * phi_entropy(phi, atom_rule(w2), f).value);
    }
  }
}

TEST(PhiEntropy, ConvexInTheFunctionUnderH1) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Rule r = atom_rule(oracle::random_simplex(rng, 5));
    const auto f = random_positive(rng, 5), g = random_positive(rng, 5);
    for (const auto& phi : test_phis()) {
      for (double t : {0.25, 0.5, 0.75}) {
        Vec h(5);
        for (int i = 0; i < 5; ++i) h[i] = t * f[i] + (1 - t) * g[i];
        EXPECT_LE(phi_entropy(phi, r, h).value,
                  t * phi_entropy(phi, r, f).value + (1 - t) * phi_entropy(phi, r, g).value + 1e-9);
      }
    }
  }
}

TEST(PhiEntropy, PowerQuotientTendsToEntropy) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = oracle::random_simplex(rng, 6);
    const Rule r = atom_rule(w);
    const auto f = random_positive(rng, 6);
    const double ent = phi_entropy(xlogx(), r, f).value;
    EXPECT_NEAR(power_entropy_quotient(r, f, 1.0 + 1e-4), ent, 1e-3 * ent);
  }
  EXPECT_THROW(power_entropy_quotient(atom_rule({1.0}), {1.0}, 1.0), DomainError);
}

TEST(Fisher, Examples) {
  const auto plan = ExpectationPlan::gauss_hermite(20);
  EXPECT_NEAR(phi_fisher(square(), Measure::gaussian1(0, 1), linear_field(), DiffusionForm{}, plan), 2.0, 1e-14);
  const JumpForm jump{Measure::dirac({1.0}), 1.0};
  EXPECT_NEAR(phi_fisher(square(), Measure::poisson(1.0), linear_field(), jump, ExpectationPlan::poisson_sum()), 1.0,
              1e-14);
  const L1FisherForm l1{Measure::dirac({1.0}), 1.0};
  EXPECT_EQ(phi_fisher(xlogx(), Measure::poisson(1.0), constant_field(3.0), l1, ExpectationPlan::poisson_sum()), 0.0);
  EXPECT_THROW(phi_fisher(square(), Measure::poisson(1.0), linear_field(), DiffusionForm{}, plan), DomainError);
  EXPECT_THROW(phi_fisher(square(), Measure::gaussian1(0, 1), linear_field(), jump, plan), DomainError);
}

TEST(Fisher, CovarianceAndMultiTimeForms) {
  const auto mu = Measure::gaussian({0, 0}, {1, 0, 0, 1});
  const ScalarField f(2, [](Point x) { return x[0] + 2 * x[1]; },
                      [](Point, std::span<double> g) {
                        g[0] = 1;
                        g[1] = 2;
                      });
  const auto plan = ExpectationPlan::gauss_hermite(10);
  // <S g, g> with S = [[2, 1], [1, 3]] and g = (1, 2): 2 + 4 + 12 = 18.
  EXPECT_NEAR(phi_fisher(square(), mu, f, CovarianceForm{{2, 1, 1, 3}}, plan), 2 * 18.0, 1e-12);
  // times (1, 2): 1 * 3^2 + 1 * 2^2 = 13.
  EXPECT_NEAR(phi_fisher(square(), mu, f, MultiTimeForm{{1, 2}}, plan), 2 * 13.0, 1e-12);
  EXPECT_THROW(phi_fisher(square(), mu, f, MultiTimeForm{{2, 1}}, plan), DomainError);
}

TEST(Fisher, PoissonGeneratorFormAgreesWithSquareJump) {
  // For x^2, -E(Phi'(f) L f) = -2 rate E f(f(.+1) - f); with f = k this is
  // -2 rate E N and differs from the jump energy rate E Psi = rate.
  const Rule r = build_rule(Measure::poisson(2.0), ExpectationPlan::poisson_sum());
  EXPECT_NEAR(poisson_generator_fisher(square(), r, linear_field(), 2.0), -2 * 2.0 * 2.0, 1e-10);
}

TEST(Duality, BoundAndEquality) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Rule r = atom_rule(oracle::random_simplex(rng, 5));
    const auto f = random_positive(rng, 5), h = random_positive(rng, 5);
    for (const auto& phi : test_phis()) {
      const double ent = phi_entropy(phi, r, f).value;
      EXPECT_LE(duality_lower_bound(phi, r, f, h), ent + 1e-9) << phi.name();
      EXPECT_NEAR(duality_lower_bound(phi, r, f, f), ent, 1e-10) << phi.name();
      const double mf = pairwise_dot(r.weights, f);
      EXPECT_NEAR(duality_lower_bound(phi, r, f, Vec(5, mf)), 0.0, 1e-12);
    }
  }
}

TEST(Duality, SquareIsCovarianceFormula) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = oracle::random_simplex(rng, 5);
    const Rule r = atom_rule(w);
    Vec f(5), h(5);
    for (int i = 0; i < 5; ++i) {
      f[i] = g(rng);
      h[i] = g(rng);
    }
    double mf = 0, mh = 0;
    for (int i = 0; i < 5; ++i) {
      mf += w[i] * f[i];
      mh += w[i] * h[i];
    }
    double cov = 0, varh = 0, varf = 0;
    for (int i = 0; i < 5; ++i) {
      cov += w[i] * (f[i] - mf) * (h[i] - mh);
      varh += w[i] * (h[i] - mh) * (h[i] - mh);
      varf += w[i] * (f[i] - mf) * (f[i] - mf);
    }
    EXPECT_NEAR(duality_lower_bound(square(), r, f, h), 2 * cov - varh, 1e-12);
    EXPECT_LE(2 * cov - varh, varf + 1e-12);
  }
}

TEST(Variational, ScanBoundsAndMinimizer) {
  std::mt19937_64 rng(13);
  const Rule r = atom_rule(oracle::random_simplex(rng, 6));
  const auto f = random_positive(rng, 6);
  const double mf = pairwise_dot(r.weights, f);
  const Vec grid = linspace(0.05, 6.0, 4001);
  for (const auto& phi : test_phis()) {
    const double ent = phi_entropy(phi, r, f).value;
    const auto scan = variational_upper_scan(phi, r, f, grid);
    for (double v : scan.values) EXPECT_GE(v, ent - 1e-12);
    EXPECT_LT(scan.min_value - ent, 1e-6) << phi.name();
    EXPECT_NEAR(variational_upper_scan(phi, r, f, {mf}).min_value, ent, 1e-12);
    if (phi.name() == "square") {
      EXPECT_NEAR(scan.argmin, mf, 6.0 / 4000);
    }
  }
  EXPECT_THROW(variational_upper_scan(square(), r, f, {}), DomainError);
}

TEST(Variational, SquaredEntropyForms) {
  std::mt19937_64 rng(14);
  const Rule r = atom_rule(oracle::random_simplex(rng, 5));
  const auto f = random_positive(rng, 5, 0.2, 2.0);
  Vec f2(5);
  for (int i = 0; i < 5; ++i) f2[i] = f[i] * f[i];
  const double ent = phi_entropy(xlogx(), r, f2).value;
  const double m2 = pairwise_dot(r.weights, f2);
  EXPECT_NEAR(entropy_f2_remainder(r, f, m2), ent, 1e-12);
  for (double a : {0.1, 0.5, 2.0, 10.0}) EXPECT_GE(entropy_f2_remainder(r, f, a), ent - 1e-12);
  // The printed sign pattern agrees at a = E f^2 and keeps decreasing past it.
  EXPECT_NEAR(entropy_f2_printed(r, f, m2), ent, 1e-12);
  EXPECT_LT(entropy_f2_printed(r, f, 10 * m2), ent);
}

TEST(Conditional, DecompositionIdentity) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto w = oracle::random_simplex(rng, 16);
    Vec pts;
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) {
        pts.push_back(x);
        pts.push_back(y);
      }
    const auto joint = Measure::atoms(2, pts, w);
    const auto f = random_positive(rng, 16);
    const auto d = conditional_decompose(xlogx(), joint, {1}, f);
    EXPECT_NEAR(d.total, d.conditional + d.of_mean, 1e-12);
    EXPECT_NEAR(d.total, oracle::entropy(oracle::xlogx, w, f), 1e-12);
  }
}

TEST(Conditional, DegenerateCases) {
  // Product joint, f depending only on x: E(f | Y) is constant.
  Vec pts, w;
  const Vec px{0.2, 0.8}, py{0.4, 0.6};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      pts.push_back(x);
      pts.push_back(y);
      w.push_back(px[x] * py[y]);
    }
  const auto joint = Measure::atoms(2, pts, w);
  const Vec fx{1.0, 1.0, 3.0, 3.0};
  auto d = conditional_decompose(xlogx(), joint, {1}, fx);
  EXPECT_NEAR(d.of_mean, 0.0, 1e-14);
  EXPECT_NEAR(d.conditional, d.total, 1e-14);
  // f a function of Y only.
  const Vec fy{1.0, 3.0, 1.0, 3.0};
  d = conditional_decompose(xlogx(), joint, {1}, fy);
  EXPECT_NEAR(d.conditional, 0.0, 1e-14);
  EXPECT_NEAR(d.of_mean, d.total, 1e-14);
  // Zero-mass slice.
  const auto joint0 = Measure::atoms(2, pts, {0.5, 0.0, 0.5, 0.0});
  d = conditional_decompose(xlogx(), joint0, {1}, fx);
  EXPECT_EQ(d.skipped, 1u);
  EXPECT_NEAR(d.total, d.conditional + d.of_mean, 1e-14);
}

TEST(Shannon, Examples) {
  for (const auto& phi : test_phis()) {
    for (int n : {2, 5, 10}) {
      const Vec u(n, 1.0 / n);
      const auto phi0 = normalized_at_zero(phi);
      EXPECT_NEAR(shannon_phi_entropy(phi, u), -n * phi_hat(phi0, 1.0 / n), 1e-12);
    }
    EXPECT_NEAR(shannon_phi_entropy(phi, Vec{0.0, 1.0, 0.0}), 0.0, 1e-15);
  }
  EXPECT_NEAR(shannon_phi_entropy(xlogx(), Vec{0.25, 0.75}), -(0.25 * std::log(0.25) + 0.75 * std::log(0.75)), 1e-14);
  EXPECT_NEAR(shannon_phi_entropy(xlogx(), Vec{0.25, 0.75}), 0.5623, 1e-4);
  EXPECT_THROW(shannon_phi_entropy(xlogx(), Vec{-0.1, 1.1}), DomainError);
}

TEST(Shannon, ContinuousGaussian) {
  // Differential entropy of N(0,1): (1 + log 2 pi) / 2.
  const double h = 0.01;
  Vec f;
  for (double x = -12; x <= 12; x += h) f.push_back(oracle::normal_pdf(x));
  EXPECT_NEAR(shannon_phi_entropy_cont(xlogx(), f, h), 0.5 * (1 + std::log(2 * std::numbers::pi)), 1e-9);
}
