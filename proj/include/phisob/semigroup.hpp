// SPDX-License-Identifier: Apache-2.0
//
// Exact Markov semigroups: Ornstein-Uhlenbeck (Mehler), heat and simple
// Poisson. DeBruijn derivative checks, decay traces and local inequalities.
//
// Normalizations:
//   OU(rho):  L = Laplacian - rho x . grad, invariant law N(0, I/rho),
//             P_t f(x) = E f(e^{-rho t} x + sqrt((1 - e^{-2 rho t})/rho) Z).
//   Heat:     L = Laplacian, P_t f(x) = E f(x + sqrt(2t) Z).
//   Poisson:  L f = rate (f(. + 1) - f), P_t f(x) = E f(x + N_{rate t});
//             with period m > 0 the walk lives on Z/mZ and the uniform law
//             is invariant.
// In the diffusion cases Gamma f = |grad f|^2.
#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/field.hpp"
#include "phisob/functionals.hpp"
#include "phisob/measure.hpp"
#include "phisob/numeric.hpp"
#include "phisob/phi.hpp"
#include "phisob/report.hpp"

namespace phisob {

struct OUSemigroup {
  double rho = 1.0;
};
struct HeatSemigroup {};
struct PoissonSemigroup {
  double rate = 1.0;
  long period = 0;  // 0: the walk lives on Z
};

using Semigroup = std::variant<OUSemigroup, HeatSemigroup, PoissonSemigroup>;

inline std::string describe(const Semigroup& sg) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, OUSemigroup>) os << "OU(rho=" << s.rho << ")";
        else if constexpr (std::is_same_v<T, HeatSemigroup>) os << "heat";
        else {
          os << "poisson(rate=" << s.rate;
          if (s.period > 0) os << ",period=" << s.period;
          os << ")";
        }
      },
      sg);
  return os.str();
}

inline bool is_diffusion(const Semigroup& sg) { return !std::holds_alternative<PoissonSemigroup>(sg); }

namespace detail {

inline void check_semigroup(const Semigroup& sg) {
  if (const auto* ou = std::get_if<OUSemigroup>(&sg))
    if (!(ou->rho > 0.0)) throw DomainError("OU semigroup: rho must be > 0");
  if (const auto* p = std::get_if<PoissonSemigroup>(&sg)) {
    if (!(p->rate > 0.0)) throw DomainError("Poisson semigroup: rate must be > 0");
    if (p->period < 0) throw DomainError("Poisson semigroup: period must be >= 0");
  }
}

// Affine Gaussian kernel parameters: P_t f(x) = E f(a x + s Z).
inline std::pair<double, double> diffusion_kernel(const Semigroup& sg, double t) {
  if (const auto* ou = std::get_if<OUSemigroup>(&sg)) {
    const double a = std::exp(-ou->rho * t);
    return {a, std::sqrt(-std::expm1(-2.0 * ou->rho * t) / ou->rho)};
  }
  return {1.0, std::sqrt(2.0 * t)};
}

inline double wrap(double x, long period) {
  if (period <= 0) return x;
  const double m = static_cast<double>(period);
  double r = std::fmod(std::nearbyint(x), m);
  if (r < 0) r += m;
  return r;
}

inline int inner_order(const ExpectationPlan& plan) {
  return plan.method == ExpectationPlan::Method::gauss_hermite ? plan.order : 40;
}

inline double inner_tail(const ExpectationPlan& plan) {
  return plan.method == ExpectationPlan::Method::poisson_sum ? plan.tail_tol : 1e-12;
}

}  // namespace detail

/// x -> (P_t f)(x), realized by inner Gauss-Hermite quadrature (diffusions)
/// or a truncated Poisson sum. P_0 f = f.
inline ScalarField apply(const Semigroup& sg, double t, const ScalarField& f, const ExpectationPlan& plan = {}) {
  detail::check_semigroup(sg);
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("apply: t must be finite and >= 0");
  if (t == 0.0) return f;
  std::ostringstream nm;
  nm << "P_" << t << "(" << f.name() << ")";
  if (is_diffusion(sg)) {
    const auto [a, s] = detail::diffusion_kernel(sg, t);
    const std::size_t d = f.arity();
    const auto& gh = gauss_hermite(detail::inner_order(plan));
    const Rule z = detail::tensor(std::vector<Rule>(d, Rule{1, gh.nodes, gh.weights, false}));
    auto eval = [f, z, a = a, s = s, d](Point x) {
      Vec y(d);
      Vec vals(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) {
        for (std::size_t i = 0; i < d; ++i) y[i] = a * x[i] + s * z.nodes[k * d + i];
        vals[k] = f(y);
      }
      return pairwise_dot(z.weights, vals);
    };
    // grad P_t f = a P_t grad f.
    auto grad = [f, z, a = a, s = s, d](Point x, std::span<double> g) {
      Vec y(d);
      Vec gy(d);
      std::vector<Vec> cols(d, Vec(z.size()));
      for (std::size_t k = 0; k < z.size(); ++k) {
        for (std::size_t i = 0; i < d; ++i) y[i] = a * x[i] + s * z.nodes[k * d + i];
        f.gradient(y, gy);
        for (std::size_t i = 0; i < d; ++i) cols[i][k] = gy[i];
      }
      for (std::size_t i = 0; i < d; ++i) g[i] = a * pairwise_dot(z.weights, cols[i]);
    };
    return ScalarField(d, eval, grad, f.codomain(), nm.str());
  }
  const auto& p = std::get<PoissonSemigroup>(sg);
  if (f.arity() != 1) throw DomainError("Poisson semigroup acts on functions of one integer variable");
  const Vec pmf = poisson_truncated_pmf(p.rate * t, detail::inner_tail(plan) * kPoissonMomentMargin);
  const long period = p.period;
  auto eval = [f, pmf, period](Point x) {
    Vec vals(pmf.size());
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      const double y = detail::wrap(x[0] + static_cast<double>(k), period);
      vals[k] = f(Point(&y, 1));
    }
    return pairwise_dot(pmf, vals);
  };
  return ScalarField(1, eval, {}, f.codomain(), nm.str());
}

/// Invariant probability law: N(0, I/rho) for OU, uniform on Z/mZ for the
/// periodic Poisson walk. Heat and the walk on Z have none.
inline Measure invariant_measure(const Semigroup& sg, std::size_t dim = 1) {
  detail::check_semigroup(sg);
  if (const auto* ou = std::get_if<OUSemigroup>(&sg)) {
    Vec cov(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) cov[i * dim + i] = 1.0 / ou->rho;
    return Measure::gaussian(Vec(dim, 0.0), cov);
  }
  if (const auto* p = std::get_if<PoissonSemigroup>(&sg); p && p->period > 0) {
    Vec pts(static_cast<std::size_t>(p->period));
    for (std::size_t k = 0; k < pts.size(); ++k) pts[k] = static_cast<double>(k);
    return Measure::atoms1(pts, Vec(pts.size(), 1.0 / static_cast<double>(pts.size())));
  }
  throw DomainError(describe(sg) + " has no invariant probability measure");
}

/// Transition law P_t(x, .).
inline Measure transition_law(const Semigroup& sg, double t, const Vec& x) {
  detail::check_semigroup(sg);
  if (is_diffusion(sg)) {
    const auto [a, s] = detail::diffusion_kernel(sg, t);
    const std::size_t d = x.size();
    Vec mean(d);
    Vec cov(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      mean[i] = a * x[i];
      cov[i * d + i] = s * s;
    }
    return Measure::gaussian(mean, cov);
  }
  const auto& p = std::get<PoissonSemigroup>(sg);
  const double x0 = x.at(0);
  const long period = p.period;
  if (t == 0.0) return Measure::dirac({detail::wrap(x0, period)});
  return Measure::pushforward1([x0, period](double k) { return detail::wrap(x0 + k, period); },
                               Measure::poisson(p.rate * t), "shift");
}

namespace detail {

inline ExpectationPlan plan_for(const Measure& mu, const ExpectationPlan& plan) {
  ExpectationPlan p = default_plan(mu, plan.seed);
  if (p.method == ExpectationPlan::Method::gauss_hermite) p.order = inner_order(plan);
  if (p.method == ExpectationPlan::Method::poisson_sum) p.tail_tol = inner_tail(plan);
  if (plan.is_monte_carlo()) p = plan;
  return p;
}

}  // namespace detail

/// Ent^Phi of P_t f under the invariant law.
inline double semigroup_entropy(const Semigroup& sg, const PhiFunction& phi, const ScalarField& f, double t,
                                const ExpectationPlan& plan = {}) {
  const Measure mu = invariant_measure(sg, f.arity());
  const Rule r = build_rule(mu, detail::plan_for(mu, plan));
  return phi_entropy(phi, r, apply(sg, t, f, plan)).value;
}

struct DeBruijnReport {
  double t = 0.0;
  double h = 0.0;
  double derivative = 0.0;  // central difference of t -> Ent(P_t f)
  double predicted = 0.0;   // -E Phi''(P_t f) Gamma P_t f, or E Phi'(P_t f) L P_t f
  double rel_error = 0.0;
  bool pass = false;
  bool sign_ok = false;
  bool cancellation = false;  // entropy difference near roundoff
};

inline constexpr double kDeBruijnRelTol = 1e-4;

/// Compares the time derivative of Ent(P_t f) with the Fisher-type right side.
inline DeBruijnReport debruijn_check(const Semigroup& sg, const PhiFunction& phi, const ScalarField& f, double t,
                                     const ExpectationPlan& plan = {}) {
  DeBruijnReport rep;
  rep.t = t;
  rep.h = 1e-4 * std::max(1.0, t);
  if (!(t > rep.h)) throw DomainError("debruijn_check: t must exceed the difference step 1e-4 max(1,t)");
  const Measure mu = invariant_measure(sg, f.arity());
  const Rule r = build_rule(mu, detail::plan_for(mu, plan));
  const double ep = phi_entropy(phi, r, apply(sg, t + rep.h, f, plan)).value;
  const double em = phi_entropy(phi, r, apply(sg, t - rep.h, f, plan)).value;
  rep.derivative = (ep - em) / (2.0 * rep.h);
  rep.cancellation = std::abs(ep - em) < 1e3 * kEps * std::max(std::abs(ep), std::abs(em)) && ep != em;
  const ScalarField pt = apply(sg, t, f, plan);
  if (is_diffusion(sg)) {
    rep.predicted = -expect(r, energy_integrand(phi, pt, DiffusionForm{}));
  } else {
    const auto& p = std::get<PoissonSemigroup>(sg);
    const long period = p.period;
    rep.predicted = expect(r, [&](Point x) {
      const double y = detail::wrap(x[0] + 1.0, period);
      const double v = pt(x);
      return phi.d1(v) * p.rate * (pt(Point(&y, 1)) - v);
    });
  }
  const double scale = std::max(std::abs(rep.predicted), std::abs(rep.derivative));
  rep.rel_error = scale == 0.0 ? 0.0 : std::abs(rep.derivative - rep.predicted) / scale;
  rep.pass = std::abs(rep.derivative - rep.predicted) <= kDeBruijnRelTol * scale + 1e-12;
  rep.sign_ok = rep.derivative <= 1e-10 && rep.predicted <= 1e-10;
  return rep;
}

struct DecayTrace {
  Vec times;
  Vec entropies;
  Vec envelope;               // e^{-t/c} Ent(f) when a constant c is known, NaN otherwise
  double fitted_rate = 0.0;   // least-squares slope of log Ent against t
  std::size_t used = 0;       // points entering the fit
  bool monotone = true;       // non-increasing within 1e-9
  bool degenerate = false;    // fewer than two entropies above the floor
};

inline constexpr double kEntropyFloor = 1e-13;

/// Entropy along the semigroup on a time grid, with the fitted exponential
/// rate. For OU(rho) the envelope uses c = 1/(2 rho).
inline DecayTrace decay_rate(const Semigroup& sg, const PhiFunction& phi, const ScalarField& f, const Vec& times,
                             const ExpectationPlan& plan = {}) {
  if (times.empty()) throw DomainError("decay_rate: empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!(times[i] >= 0.0) || (i > 0 && !(times[i] > times[i - 1])))
      throw DomainError("decay_rate: times must be non-negative and increasing");
  const Measure mu = invariant_measure(sg, f.arity());
  const Rule r = build_rule(mu, detail::plan_for(mu, plan));
  DecayTrace tr;
  tr.times = times;
  for (double t : times) tr.entropies.push_back(phi_entropy(phi, r, apply(sg, t, f, plan)).value);
  const double ent0 = times.front() == 0.0 ? tr.entropies.front() : phi_entropy(phi, r, f).value;
  const auto* ou = std::get_if<OUSemigroup>(&sg);
  for (double t : times) tr.envelope.push_back(ou ? std::exp(-2.0 * ou->rho * t) * ent0 : std::nan(""));
  for (std::size_t i = 1; i < times.size(); ++i)
    if (tr.entropies[i] > tr.entropies[i - 1] + 1e-9) tr.monotone = false;
  // Keep the leading run of entropies above the floor.
  Vec ts;
  Vec ls;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(tr.entropies[i] > kEntropyFloor)) break;
    ts.push_back(times[i]);
    ls.push_back(std::log(tr.entropies[i]));
  }
  tr.used = ts.size();
  if (ts.size() < 2) {
    tr.degenerate = true;
    tr.fitted_rate = 0.0;
    return tr;
  }
  const double n = static_cast<double>(ts.size());
  double mt = 0.0;
  double ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= n;
  ml /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (ls[i] - ml);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  tr.fitted_rate = sxy / sxx;
  return tr;
}

/// Local inequality at a point x: Ent_{P_t(x,.)}(f) <= c(t) P_t(E(f))(x) with
/// c(t) = (1 - e^{-2 rho t})/(2 rho) and the diffusion energy for OU, c = t for
/// heat, and c = rate t with the jump energy Psi(f, D_1 f) for Poisson.
/// Refuses unless H1 (diffusions) or H2 (Poisson) holds for phi.
inline DeficitReport local_deficit(const Semigroup& sg, const PhiFunction& phi, const ScalarField& f, double t,
                                   const Vec& x, const ExpectationPlan& plan = {}, const Tolerance& tol = {}) {
  detail::check_semigroup(sg);
  if (!(t > 0.0)) throw DomainError("local_deficit: t must be > 0");
  require_hypothesis(phi, is_diffusion(sg) ? Hypothesis::H1 : Hypothesis::H2);
  if (x.size() != f.arity()) throw DomainError("local_deficit: probe dimension does not match f");
  const Measure law = transition_law(sg, t, x);
  const Rule r = build_rule(law, detail::plan_for(law, plan));
  const double lhs = phi_entropy(phi, r, f).value;
  double constant = 0.0;
  double rhs = 0.0;
  if (is_diffusion(sg)) {
    if (const auto* ou = std::get_if<OUSemigroup>(&sg)) {
      constant = -std::expm1(-2.0 * ou->rho * t) / (2.0 * ou->rho);
    } else {
      constant = t;
    }
    rhs = expect(r, energy_integrand(phi, f, DiffusionForm{}));
  } else {
    const auto& p = std::get<PoissonSemigroup>(sg);
    constant = p.rate * t;
    const long period = p.period;
    rhs = expect(r, [&](Point y) {
      const double z = detail::wrap(y[0] + 1.0, period);
      const double v = f(y);
      return phi.bregman(v, f(Point(&z, 1)) - v);
    });
  }
  std::ostringstream nm;
  nm << "local[" << describe(sg) << ",t=" << t << ",x=" << x[0] << "]";
  DeficitReport rep = make_report(nm.str(), lhs, rhs, constant, 0.0, tol);
  rep.f_description = f.name();
  rep.plan = plan.str();
  if (std::holds_alternative<HeatSemigroup>(sg)) {
    // Envelope with constant t/2, reported only.
    rep.extras.emplace_back("deficit_half_t", 0.5 * t * rhs - lhs);
  }
  return rep;
}

}  // namespace phisob
