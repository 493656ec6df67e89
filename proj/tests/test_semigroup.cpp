// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "phisob/semigroup.hpp"

using namespace phisob;

namespace {

const std::vector<double> kProbes{-2.0, -0.5, 0.0, 1.0, 2.5};

ScalarField periodic_exp() {
  return field1("exp(-k)", [](double k) { return std::exp(-k); });
}

}  // namespace

TEST(Apply, OULinear) {
  for (double t : {0.1, 0.5, 2.0}) {
    const auto pt = apply(OUSemigroup{1.0}, t, linear_field());
    for (double x : kProbes) EXPECT_NEAR(pt(x), std::exp(-t) * x, 1e-13);
  }
}

TEST(Apply, OUMatchesMehlerOracle) {
  const double rho = 0.7, t = 0.4;
  const auto f = sine_field(1.0, 1.5, 0.3);
  const auto pt = apply(OUSemigroup{rho}, t, f);
  const double a = std::exp(-rho * t), var = (1 - std::exp(-2 * rho * t)) / rho;
  for (double x : kProbes)
    EXPECT_NEAR(pt(x), oracle::gauss_expect([&](double y) { return f(y); }, a * x, var), 1e-11);
}

TEST(Apply, HeatQuadratic) {
  // E (x + sqrt(2t) Z)^2 = x^2 + 2t.
  const auto f = field1("x2", [](double x) { return x * x; }, [](double x) { return 2 * x; });
  const auto pt = apply(HeatSemigroup{}, 0.3, f);
  for (double x : kProbes) EXPECT_NEAR(pt(x), x * x + 0.6, 1e-12);
}

TEST(Apply, PoissonMeanShift) {
  for (double rate : {0.5, 2.0}) {
    const auto pt = apply(PoissonSemigroup{rate}, 1.5, linear_field());
    for (double x : {0.0, 3.0, 7.0}) EXPECT_NEAR(pt(x), x + rate * 1.5, 1e-10);
    const auto oracle_val = oracle::poisson_expect([](double k) { return std::exp(-0.3 * k); }, rate * 1.5);
    EXPECT_NEAR(apply(PoissonSemigroup{rate}, 1.5, exponential_field(-0.3))(0.0), oracle_val, 1e-13);
  }
}

TEST(Apply, TimeZeroIsIdentity) {
  const auto f = sine_field();
  for (const Semigroup& sg : std::vector<Semigroup>{OUSemigroup{1}, HeatSemigroup{}, PoissonSemigroup{1}})
    for (double x : kProbes) EXPECT_EQ(apply(sg, 0.0, f)(x), f(x));
  EXPECT_THROW(apply(OUSemigroup{1}, -1.0, f), DomainError);
  EXPECT_THROW(apply(OUSemigroup{0.0}, 1.0, f), DomainError);
}

TEST(Apply, ConstantsAreFixed) {
  for (const Semigroup& sg : std::vector<Semigroup>{OUSemigroup{2}, HeatSemigroup{}, PoissonSemigroup{1}})
    EXPECT_NEAR(apply(sg, 0.7, constant_field(3.0))(1.0), 3.0, 1e-13);
}

TEST(Apply, SemigroupLaw) {
  const auto f = sine_field(1.0, 1.2, 0.4);
  for (const Semigroup& sg : std::vector<Semigroup>{OUSemigroup{1.0}, HeatSemigroup{}}) {
    const auto composed = apply(sg, 0.3, apply(sg, 0.5, f));
    const auto direct = apply(sg, 0.8, f);
    for (double x : kProbes) EXPECT_NEAR(composed(x), direct(x), 1e-8) << describe(sg);
  }
  const auto g = exponential_field(-0.4);
  const PoissonSemigroup p{1.3};
  const auto composed = apply(p, 0.3, apply(p, 0.5, g));
  const auto direct = apply(p, 0.8, g);
  for (double x : {0.0, 2.0, 5.0}) EXPECT_NEAR(composed(x), direct(x), 1e-8);
}

TEST(Apply, InvariantMeasure) {
  const auto f = sine_field(1.0, 0.8, 0.2, 0.5);
  for (double rho : {0.5, 2.0}) {
    const OUSemigroup sg{rho};
    const auto mu = invariant_measure(sg);
    const auto plan = ExpectationPlan::gauss_hermite(60);
    EXPECT_NEAR(expect(mu, apply(sg, 0.6, f), plan), expect(mu, f, plan), 1e-8);
  }
  const PoissonSemigroup ps{1.0, 8};
  const auto f8 = periodic_exp();
  const auto mu8 = invariant_measure(ps);
  EXPECT_NEAR(expect(mu8, apply(ps, 1.3, f8), ExpectationPlan::exact()), expect(mu8, f8, ExpectationPlan::exact()),
              1e-8);
  EXPECT_THROW(invariant_measure(HeatSemigroup{}), DomainError);
  EXPECT_THROW(invariant_measure(PoissonSemigroup{1.0}), DomainError);
}

TEST(Apply, EntropyMonotone) {
  const auto f = exponential_field(0.6);
  Vec last{kInf, kInf};
  for (double t = 0.0; t <= 2.0; t += 0.1) {
    const double e_ou = semigroup_entropy(OUSemigroup{1}, xlogx(), f, t);
    const double e_p = semigroup_entropy(PoissonSemigroup{1.0, 8}, xlogx(), periodic_exp(), t);
    EXPECT_LE(e_ou, last[0] + 1e-9);
    EXPECT_LE(e_p, last[1] + 1e-9);
    last = {e_ou, e_p};
  }
}

TEST(Apply, OUCommutation) {
  const auto f = sine_field(1.0, 2.0, 0.1);
  const auto absgrad = field1("|f'|", [&](double x) { return std::abs(f.derivative(x)); });
  const auto gamma = field1("f'^2", [&](double x) { return std::pow(f.derivative(x), 2); });
  for (double rho : {0.5, 1.0}) {
    for (double t : {0.2, 1.0}) {
      const OUSemigroup sg{rho};
      const auto pt = apply(sg, t, f);
      const auto p_abs = apply(sg, t, absgrad);
      const auto p_gamma = apply(sg, t, gamma);
      for (double x : kProbes) {
        const double g = pt.derivative(x);
        EXPECT_LE(std::abs(g), std::exp(-rho * t) * p_abs(x) + 1e-8);
        EXPECT_LE(g * g, std::exp(-2 * rho * t) * p_gamma(x) + 1e-8);
      }
    }
  }
}

TEST(DeBruijn, OUSquareLinearClosedForm) {
  // Var(P_t f) = e^{-2t} under N(0,1); derivative -2e^{-2t}.
  for (double t : {0.5, 1.0}) {
    const auto rep = debruijn_check(OUSemigroup{1}, square(), linear_field(), t);
    EXPECT_NEAR(rep.predicted, -2 * std::exp(-2 * t), 1e-12);
    EXPECT_NEAR(rep.derivative, -2 * std::exp(-2 * t), 1e-7);
    EXPECT_TRUE(rep.pass);
    EXPECT_TRUE(rep.sign_ok);
  }
}

TEST(DeBruijn, DocumentedTriples) {
  const auto a = debruijn_check(PoissonSemigroup{1.0, 8}, xlogx(), periodic_exp(), 0.7);
  EXPECT_TRUE(a.pass) << a.rel_error;
  EXPECT_TRUE(a.sign_ok);
  const auto b = debruijn_check(OUSemigroup{2.0}, xlogx(), exponential_field(0.3), 0.4);
  EXPECT_TRUE(b.pass) << b.rel_error;
  const auto c = debruijn_check(OUSemigroup{1.0}, power(1.5), exponential_field(0.5), 1.0);
  EXPECT_TRUE(c.pass) << c.rel_error;
}

TEST(DeBruijn, ConstantAndRefusals) {
  const auto rep = debruijn_check(OUSemigroup{1}, xlogx(), constant_field(2.0), 1.0);
  EXPECT_NEAR(rep.derivative, 0.0, 1e-12);
  EXPECT_EQ(rep.predicted, 0.0);
  EXPECT_TRUE(rep.pass);
  EXPECT_THROW(debruijn_check(OUSemigroup{1}, square(), linear_field(), 1e-5), DomainError);
  EXPECT_THROW(debruijn_check(HeatSemigroup{}, square(), linear_field(), 1.0), DomainError);
}

TEST(Decay, OUSquareLinearRate) {
  const Vec times = linspace(0.0, 2.0, 21);
  for (double rho : {0.5, 1.0, 2.0}) {
    const auto tr = decay_rate(OUSemigroup{rho}, square(), linear_field(), times);
    EXPECT_NEAR(tr.fitted_rate, -2 * rho, 0.01 * 2 * rho);
    EXPECT_TRUE(tr.monotone);
    EXPECT_FALSE(tr.degenerate);
    EXPECT_EQ(tr.used, times.size());
  }
}

TEST(Decay, ConstantIsDegenerate) {
  const auto tr = decay_rate(OUSemigroup{1}, xlogx(), constant_field(1.0), linspace(0.0, 1.0, 5));
  EXPECT_TRUE(tr.degenerate);
  for (double e : tr.entropies) EXPECT_NEAR(e, 0.0, 1e-14);
}

TEST(Decay, EnvelopeHonored) {
  const auto f = exponential_field(0.3, -0.045);
  const auto tr = decay_rate(OUSemigroup{1}, xlogx(), f, linspace(0.0, 3.0, 13));
  for (std::size_t i = 0; i < tr.times.size(); ++i) EXPECT_LE(tr.entropies[i], tr.envelope[i] + 1e-12);
  EXPECT_LE(tr.fitted_rate, -2.0 * 0.99);
  EXPECT_THROW(decay_rate(OUSemigroup{1}, xlogx(), f, {1.0, 0.5}), DomainError);
}

TEST(LocalDeficit, PoissonEquality) {
  const auto rep = local_deficit(PoissonSemigroup{1.0}, square(), linear_field(), 1.0, {0.0});
  EXPECT_NEAR(rep.lhs, 1.0, 1e-10);
  EXPECT_NEAR(rep.rhs, 1.0, 1e-12);
  EXPECT_NEAR(rep.deficit, 0.0, 1e-10);
  EXPECT_EQ(rep.constant, 1.0);
  EXPECT_TRUE(rep.pass);
}

TEST(LocalDeficit, ConstantFunction) {
  for (const Semigroup& sg : std::vector<Semigroup>{OUSemigroup{1}, HeatSemigroup{}, PoissonSemigroup{2}}) {
    const auto rep = local_deficit(sg, xlogx(), constant_field(2.0), 0.5, {1.0});
    EXPECT_NEAR(rep.lhs, 0.0, 1e-14);
    EXPECT_EQ(rep.rhs, 0.0);
    EXPECT_TRUE(rep.pass);
  }
}

TEST(LocalDeficit, OUExponential) {
  for (double x : {-2.0, 0.0, 2.0}) {
    const auto rep = local_deficit(OUSemigroup{1}, xlogx(), exponential_field(0.2), 0.8, {x});
    // Exponentials saturate the Gaussian inequality.
    EXPECT_NEAR(rep.deficit, 0.0, 1e-12 * rep.lhs + 1e-15);
    EXPECT_TRUE(rep.pass);
    const auto rep2 = local_deficit(OUSemigroup{1}, xlogx(), sine_field(0.5, 1.0, 0.0, 1.0), 0.8, {x});
    EXPECT_GE(rep2.deficit, 0.0);
    EXPECT_NEAR(rep.constant, (1 - std::exp(-1.6)) / 2, 1e-15);
  }
}

TEST(LocalDeficit, HeatSaturatesWithConstantT) {
  const auto rep = local_deficit(HeatSemigroup{}, square(), linear_field(), 0.7, {0.3});
  EXPECT_NEAR(rep.lhs, 1.4, 1e-12);
  EXPECT_NEAR(rep.deficit, 0.0, 1e-12);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.extra("deficit_half_t"), -0.7, 1e-12);
}

TEST(LocalDeficit, RefusesWithoutHypothesis) {
  EXPECT_THROW(local_deficit(OUSemigroup{1}, power(4), exponential_field(0.1), 1.0, {0.0}), HypothesisError);
}
