// SPDX-License-Identifier: Apache-2.0
//
// Deficit verifiers for the concrete Phi-Sobolev inequalities: Gaussian and
// Brascamp-Lieb forms, multi-time Brownian, Poisson and compound-Poisson,
// tensorisation, convolution, pushforward, bounded perturbation, the Beckner
// family, Dirichlet-form comparisons and the Poisson L1/L2 dichotomy.
//
// Every verifier returns deficit = constant * rhs - lhs. Verifiers that need
// a convexity hypothesis certify it first and throw HypothesisError when it
// fails.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/field.hpp"
#include "phisob/functionals.hpp"
#include "phisob/measure.hpp"
#include "phisob/numeric.hpp"
#include "phisob/phi.hpp"
#include "phisob/report.hpp"
#include "phisob/semigroup.hpp"

namespace phisob {

namespace detail {

/// Deficit of Ent(f) <= constant * E(energy) on one rule. For Monte Carlo
/// rules the standard error uses the per-sample deficit
/// constant * e - (Phi(f) - Phi'(E f) f).
inline DeficitReport rule_deficit(std::string name, const PhiFunction& phi, const Rule& r, const Vec& fvals,
                                  const Vec& evals, double constant, const Tolerance& tol) {
  const EntropyValue ent = phi_entropy(phi, r, fvals);
  const double rhs = expect(r, evals);
  double se = 0.0;
  if (r.monte_carlo) {
    const Vec g = guard_values(phi, fvals).v;
    const double d1m = phi.d1(ent.mean);
    Vec s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) s[i] = constant * evals[i] - (phi(g[i]) - d1m * g[i]);
    se = standard_error(r, s);
  }
  DeficitReport rep = make_report(std::move(name), ent.value, rhs, constant, se, tol);
  if (ent.clamped) rep.note = "f clamped into the interval of Phi";
  return rep;
}

inline DeficitReport form_deficit(std::string name, const PhiFunction& phi, const Rule& r, const ScalarField& f,
                                  const EnergyForm& form, double constant, const Tolerance& tol) {
  if (f.arity() != r.dim) throw DomainError(name + ": field arity does not match measure dimension");
  const Vec fv = evaluate(r, f.eval_fn());
  const Vec ev = evaluate(r, energy_integrand(phi, f, form));
  DeficitReport rep = rule_deficit(std::move(name), phi, r, fv, ev, constant, tol);
  rep.f_description = f.name();
  return rep;
}

inline double top_eigenvalue(const Measure& mu) {
  const auto* g = as_gaussian(mu);
  if (!g) throw DomainError("a Gaussian measure is required here");
  return g->eigvals.empty() ? 0.0 : std::max(0.0, g->eigvals.back());
}

/// Certified constant of the diffusion inequality for N(m, S): lambda_max / 2.
inline void certify_gaussian_constant(const Measure& mu, double c) {
  const double need = 0.5 * top_eigenvalue(mu);
  if (c < need * (1.0 - 1e-12))
    throw HypothesisError("constant " + std::to_string(c) + " is below the certified value " + std::to_string(need) +
                          " for this Gaussian");
}

inline void require_jump_range(const PhiFunction& phi, const Rule& r, const ScalarField& f, const AtomsLaw& nu) {
  const auto& I = phi.interval();
  const std::size_t d = r.dim;
  Vec y(d);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const Point x = r.node(k);
    for (std::size_t j = 0; j < nu.size(); ++j) {
      for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + nu.points[j * d + i];
      const double v = f(y);
      if (!(v >= I.lo - kDomainSlack && v <= I.hi + kDomainSlack))
        throw DomainError("f leaves " + I.str() + " after a jump");
    }
  }
}

}  // namespace detail

// --- Gaussian ------------------------------------------------------------------

/// Ent_{N(m,S)}(f) <= 1/2 E(Phi''(f) <S grad f, grad f>), with the scalar form
/// constant 1/(2 rho), rho^{-1} = lambda_max(S), reported in the extras.
inline DeficitReport verify_gaussian(const PhiFunction& phi, const Vec& mean, const Vec& cov, const ScalarField& f,
                                     const ExpectationPlan& plan = ExpectationPlan::gauss_hermite(40),
                                     const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H1);
  const Measure mu = Measure::gaussian(mean, cov);
  const Rule r = build_rule(mu, plan);
  DeficitReport rep = detail::form_deficit("gaussian", phi, r, f, CovarianceForm{cov}, 0.5, tol);
  rep.plan = plan.str();
  const double top = detail::top_eigenvalue(mu);
  const Vec ev = evaluate(r, energy_integrand(phi, f, DiffusionForm{}));
  const double rho_rhs = expect(r, ev);
  const double rho_deficit = 0.5 * top * rho_rhs - rep.lhs;
  const double rho_tol = tol.at(0.5 * top * rho_rhs, rep.se);
  rep.extras = {{"rho", top > 0.0 ? 1.0 / top : kInf},
                {"rho_constant", 0.5 * top},
                {"rho_rhs", rho_rhs},
                {"rho_deficit", rho_deficit}};
  const bool sharper = rep.deficit <= rho_deficit + rho_tol;
  rep.extras.emplace_back("sigma_form_sharper", sharper ? 1.0 : 0.0);
  rep.pass = rep.pass && rho_deficit >= -rho_tol && sharper;
  return rep;
}

// --- multi-time Brownian ------------------------------------------------------------

/// Covariance t_i ^ t_j of (B_{t_1}, ..., B_{t_n}).
inline Vec brownian_covariance(const Vec& times) {
  check_times(times);
  const std::size_t n = times.size();
  Vec S(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) S[i * n + j] = std::min(times[i], times[j]);
  return S;
}

/// Ent(F(B_{t_1..t_n})) <= 1/2 E(Phi''(F) sum_i (t_i - t_{i-1}) (sum_{j>=i} d_j F)^2).
/// The extra "identity_max_error" is the largest gap between that quadratic
/// form and <S grad F, grad F> over the rule nodes.
inline DeficitReport verify_brownian_multitime(const PhiFunction& phi, const Vec& times, const ScalarField& F,
                                               const ExpectationPlan& plan = {}, const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H1);
  if (times.empty()) throw DomainError("verify_brownian_multitime: no times given");
  if (F.arity() != times.size()) throw DomainError("verify_brownian_multitime: F needs one argument per time");
  const Vec S = brownian_covariance(times);
  const Measure mu = Measure::gaussian(Vec(times.size(), 0.0), S);
  const ExpectationPlan p = detail::plan_for(mu, plan);
  const Rule r = build_rule(mu, p);
  DeficitReport rep = detail::form_deficit("brownian_multitime", phi, r, F, MultiTimeForm{times}, 0.5, tol);
  rep.plan = p.str();
  const std::size_t n = times.size();
  const std::size_t probes = std::min<std::size_t>(r.size(), 4096);
  double worst = 0.0;
  Vec g(n);
  for (std::size_t k = 0; k < probes; ++k) {
    F.gradient(r.node(k), g);
    const double q = multitime_quadratic(times, g);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) s += S[i * n + j] * g[i] * g[j];
    worst = std::max(worst, std::abs(q - s) / (1.0 + std::abs(s)));
  }
  rep.extras.emplace_back("identity_max_error", worst);
  if (worst > 1e-10) {
    rep.pass = false;
    rep.note = "multi-time quadratic form disagrees with the covariance form";
  }
  return rep;
}

// --- Poisson and compound Poisson ---------------------------------------------------

/// Ent_{P_rate}(f) <= rate E(Psi(f, D_1 f)).
inline DeficitReport verify_poisson(const PhiFunction& phi, double rate, const ScalarField& f,
                                    const ExpectationPlan& plan = ExpectationPlan::poisson_sum(),
                                    const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H2);
  if (!(rate > 0.0)) throw DomainError("verify_poisson: rate must be > 0");
  const Measure mu = Measure::poisson(rate);
  const Rule r = build_rule(mu, plan);
  const Measure delta = Measure::dirac({1.0});
  detail::require_jump_range(phi, r, f, *as_atoms(delta));
  DeficitReport rep = detail::form_deficit("poisson", phi, r, f, JumpForm{delta, 1.0}, rate, tol);
  rep.plan = plan.str();
  return rep;
}

inline constexpr std::size_t kMaxCompoundAtoms = 200000;

/// Law of the sum of N ~ Poisson(mean_jumps) independent jumps drawn from the
/// atom measure nu, truncated where the omitted Poisson mass is negligible.
inline Measure compound_poisson(double mean_jumps, const Measure& nu, double tail_tol = 1e-12) {
  const auto* a = as_atoms(nu);
  if (!a) throw DomainError("compound_poisson: jump law must be a finite atom measure (finite activity only)");
  if (!(mean_jumps >= 0.0)) throw DomainError("compound_poisson: mean number of jumps must be >= 0");
  const std::size_t d = a->dim;
  if (mean_jumps == 0.0) return Measure::dirac(Vec(d, 0.0));
  const Vec pmf = poisson_truncated_pmf(mean_jumps, tail_tol * kPoissonMomentMargin);
  std::map<Vec, double> cur{{Vec(d, 0.0), 1.0}};
  std::map<Vec, double> law;
  for (std::size_t n = 0; n < pmf.size(); ++n) {
    if (n > 0) {
      std::map<Vec, double> next;
      Vec y(d);
      for (const auto& [x, w] : cur) {
        for (std::size_t j = 0; j < a->size(); ++j) {
          if (a->weights[j] == 0.0) continue;
          for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + a->points[j * d + i];
          next[y] += w * a->weights[j];
        }
      }
      cur = std::move(next);
    }
    for (const auto& [x, w] : cur) law[x] += pmf[n] * w;
    if (law.size() > kMaxCompoundAtoms) throw DomainError("compound_poisson: support exceeds the atom cap");
  }
  Vec pts;
  Vec ws;
  double s = 0.0;
  for (const auto& [x, w] : law) {
    pts.insert(pts.end(), x.begin(), x.end());
    ws.push_back(w);
    s += w;
  }
  for (auto& w : ws) w /= s;
  return Measure::atoms(d, pts, ws);
}

/// Ent_{P_t}(f) <= rate t E(sum_y nu(y) Psi(f, f(. + y) - f)) for the
/// compound Poisson process with jump law nu (a probability) and rate.
inline DeficitReport verify_levy(const PhiFunction& phi, double rate, const Measure& nu, double t,
                                 const ScalarField& f, const ExpectationPlan& plan = ExpectationPlan::poisson_sum(),
                                 const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H2);
  if (!(rate > 0.0) || !(t > 0.0)) throw DomainError("verify_levy: rate and t must be > 0");
  const auto* a = as_atoms(nu);
  if (!a) throw DomainError("verify_levy: infinite-activity jump measures are not supported; give atoms");
  if (f.arity() != a->dim) throw DomainError("verify_levy: f arity does not match the jump dimension");
  const double tail = plan.method == ExpectationPlan::Method::poisson_sum ? plan.tail_tol : 1e-12;
  const Measure law = compound_poisson(rate * t, nu, tail);
  const Rule r = build_rule(law, ExpectationPlan::exact());
  detail::require_jump_range(phi, r, f, *a);
  DeficitReport rep = detail::form_deficit("levy", phi, r, f, JumpForm{nu, 1.0}, rate * t, tol);
  rep.plan = "compound_poisson(tail_tol=" + std::to_string(tail) + ")";
  return rep;
}

/// Joint law of (X_{t_1}, ..., X_{t_n}) for the compound Poisson process, as
/// atoms on R^{n d} (blocks of d coordinates per time).
inline Measure levy_joint_law(double rate, const Measure& nu, const Vec& times, double tail_tol = 1e-12) {
  check_times(times);
  const auto* a = as_atoms(nu);
  if (!a) throw DomainError("levy_joint_law: jump law must be atoms");
  const std::size_t d = a->dim;
  const std::size_t n = times.size();
  std::vector<Rule> incs;
  double prev = 0.0;
  for (double t : times) {
    incs.push_back(build_rule(compound_poisson(rate * (t - prev), nu, tail_tol), ExpectationPlan::exact()));
    prev = t;
  }
  const Rule joint = detail::tensor(incs);
  Vec pts(joint.size() * n * d);
  for (std::size_t k = 0; k < joint.size(); ++k) {
    const Point z = joint.node(k);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) {
        s += z[b * d + i];
        pts[k * n * d + b * d + i] = s;
      }
    }
  }
  return Measure::atoms(n * d, pts, joint.weights);
}

inline constexpr std::size_t kMaxLevyTimes = 3;

/// Ent(F(X_{t_1}, ..., X_{t_n})) <= rate E(sum_i (t_i - t_{i-1}) sum_y nu(y)
/// Psi(F, D_y^{i..n} F)) where D_y^{i..n} shifts blocks i..n by y. For n >= 2
/// the two steps of the conditional decomposition on the first n - 1 times
/// are checked as well (extras step_a_*, step_b_*).
inline DeficitReport verify_levy_multitime(const PhiFunction& phi, double rate, const Measure& nu, const Vec& times,
                                           const ScalarField& F,
                                           const ExpectationPlan& plan = ExpectationPlan::poisson_sum(),
                                           const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H2);
  if (times.empty() || times.size() > kMaxLevyTimes)
    throw DomainError("verify_levy_multitime: between 1 and 3 times are supported");
  if (!(rate > 0.0)) throw DomainError("verify_levy_multitime: rate must be > 0");
  check_times(times);
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("verify_levy_multitime: times must be increasing");
  const auto* a = as_atoms(nu);
  if (!a) throw DomainError("verify_levy_multitime: infinite-activity jump measures are not supported");
  const std::size_t d = a->dim;
  const std::size_t n = times.size();
  if (F.arity() != n * d) throw DomainError("verify_levy_multitime: F arity must be (number of times) * (jump dim)");
  const double tail = plan.method == ExpectationPlan::Method::poisson_sum ? plan.tail_tol : 1e-12;
  const Measure joint = levy_joint_law(rate, nu, times, tail);
  const Rule r = build_rule(joint, ExpectationPlan::exact());
  const Vec fv = evaluate(r, F.eval_fn());
  const Vec fg = guard_values(phi, fv).v;

  // Per-node jump energies sum_y nu(y) Psi(F, D_y^{i..n} F), one per i.
  std::vector<Vec> parts(n, Vec(r.size()));
  const auto& I = phi.interval();
  detail::parallel_for(r.size(), [&](std::size_t k) {
    const Point x = r.node(k);
    Vec y(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a->size(); ++j) {
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t c = 0; c < d; ++c) y[b * d + c] = x[b * d + c] + (b >= i ? a->points[j * d + c] : 0.0);
        const double v = F(y);
        if (!(v >= I.lo - kDomainSlack && v <= I.hi + kDomainSlack))
          throw DomainError("F leaves " + I.str() + " after a jump");
        s += a->weights[j] * phi.bregman(fg[k], v - fg[k]);
      }
      parts[i][k] = s;
    }
  });
  Vec dt(n);
  for (std::size_t i = 0; i < n; ++i) dt[i] = times[i] - (i == 0 ? 0.0 : times[i - 1]);
  Vec energy(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += dt[i] * parts[i][k];
    energy[k] = s;
  }
  DeficitReport rep = detail::rule_deficit("levy_multitime", phi, r, fv, energy, rate, tol);
  rep.f_description = F.name();
  rep.plan = "compound_poisson(tail_tol=" + std::to_string(tail) + ")";
  if (n >= 2) {
    std::vector<std::size_t> past((n - 1) * d);
    for (std::size_t i = 0; i < past.size(); ++i) past[i] = i;
    const ConditionalDecomposition dec = conditional_decompose(phi, joint, past, fv);
    const double a_rhs = rate * dt[n - 1] * expect(r, parts[n - 1]);
    Vec b_energy(r.size(), 0.0);
    for (std::size_t k = 0; k < r.size(); ++k)
      for (std::size_t i = 0; i + 1 < n; ++i) b_energy[k] += dt[i] * parts[i][k];
    const double b_rhs = rate * expect(r, b_energy);
    const double a_def = a_rhs - dec.conditional;
    const double b_def = b_rhs - dec.of_mean;
    const double dec_err = std::abs(dec.total - dec.conditional - dec.of_mean);
    rep.extras = {{"step_a_lhs", dec.conditional}, {"step_a_rhs", a_rhs}, {"step_a_deficit", a_def},
                  {"step_b_lhs", dec.of_mean},     {"step_b_rhs", b_rhs}, {"step_b_deficit", b_def},
                  {"decomposition_error", dec_err}};
    const bool ok = a_def >= -tol.at(a_rhs, 0.0) && b_def >= -tol.at(b_rhs, 0.0) && dec_err <= 1e-10;
    if (!ok) rep.note = "a step of the conditional decomposition fails";
    rep.pass = rep.pass && ok;
  }
  return rep;
}

// --- tensorisation ----------------------------------------------------------------------

/// Ent_{mu_1 x ... x mu_n}(f) <= sum_i E(Ent_{mu_i}(f)), the i-th entropy
/// taken in the i-th block of coordinates with the others frozen.
inline DeficitReport verify_tensorisation(const PhiFunction& phi, const std::vector<Measure>& factors,
                                          const ScalarField& f, const ExpectationPlan& plan = {},
                                          const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H1);
  if (factors.empty()) throw DomainError("verify_tensorisation: no factors");
  if (plan.is_monte_carlo()) throw DomainError("verify_tensorisation: needs a deterministic plan");
  std::vector<Rule> rules;
  std::vector<std::size_t> offset;
  std::size_t dim = 0;
  for (const auto& m : factors) {
    rules.push_back(build_rule(m, detail::plan_for(m, plan)));
    offset.push_back(dim);
    dim += m.dim();
  }
  if (f.arity() != dim) throw DomainError("verify_tensorisation: f arity does not match the product dimension");
  const Rule joint = detail::tensor(rules);
  const EntropyValue total = phi_entropy(phi, joint, f);
  Vec parts;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    std::vector<Rule> others;
    for (std::size_t j = 0; j < rules.size(); ++j)
      if (j != i) others.push_back(rules[j]);
    const Rule rest = others.empty() ? Rule{0, {}, {1.0}, false} : detail::tensor(others);
    const Rule& ri = rules[i];
    Vec terms(rest.size());
    detail::parallel_for(rest.size(), [&](std::size_t k) {
      Vec x(dim);
      Vec v(ri.size());
      for (std::size_t m = 0; m < ri.size(); ++m) {
        std::size_t pos = 0;
        for (std::size_t j = 0; j < rules.size(); ++j) {
          const std::size_t dj = rules[j].dim;
          for (std::size_t c = 0; c < dj; ++c) {
            if (j == i) x[offset[j] + c] = ri.nodes[m * dj + c];
            else x[offset[j] + c] = rest.nodes[k * rest.dim + pos + c];
          }
          if (j != i) pos += dj;
        }
        v[m] = f(x);
      }
      terms[k] = rest.weights[k] * entropy_from(phi, ri.weights, guard_values(phi, v).v);
    });
    parts.push_back(pairwise_sum(terms));
  }
  DeficitReport rep = make_report("tensorisation", total.value, pairwise_sum(parts), 1.0, 0.0, tol);
  for (std::size_t i = 0; i < parts.size(); ++i) rep.extras.emplace_back("part_" + std::to_string(i + 1), parts[i]);
  if (std::abs(rep.deficit) <= rep.tol) rep.note = "equality";
  rep.f_description = f.name();
  rep.plan = plan.str();
  return rep;
}

// --- convolution --------------------------------------------------------------------------

/// Smallest c with Ent(f) <= c E(Phi''(f)) ((f(b) - f(a))/(b - a))^2 for the
/// two-point law p delta_a + (1 - p) delta_b, found by brute force over pairs
/// (f(a), f(b)) on the default grid of Phi.
inline double two_point_constant(const PhiFunction& phi, double a, double b, double p) {
  if (!(b != a)) throw DomainError("two_point_constant: points must differ");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("two_point_constant: weight must be in (0,1)");
  const Vec g = default_grid(phi.interval()).points(phi.interval());
  const double h2 = (b - a) * (b - a);
  double best = 0.0;
  for (double u : g) {
    for (double w : g) {
      if (u == w) continue;
      const double m = p * u + (1 - p) * w;
      const double ent = p * phi.bregman(m, u - m) + (1 - p) * phi.bregman(m, w - m);
      const double energy = (p * phi.d2(u) + (1 - p) * phi.d2(w)) * (w - u) * (w - u) / h2;
      if (energy > 0.0) best = std::max(best, ent / energy);
    }
  }
  return best;
}

/// Certified diffusion constant of a convolution factor: lambda_max / 2 for
/// a Gaussian, the brute-force two-point constant for a two-atom law.
inline double certified_constant(const PhiFunction& phi, const Measure& m) {
  if (as_gaussian(m)) return 0.5 * detail::top_eigenvalue(m);
  if (const auto* a = as_atoms(m)) {
    if (a->dim != 1 || a->size() != 2) throw DomainError("certified_constant: only two-point atom factors on R");
    return two_point_constant(phi, a->points[0], a->points[1], a->weights[0] / (a->weights[0] + a->weights[1]));
  }
  throw DomainError("certified_constant: no certified constant for " + m.describe());
}

/// Ent_{mu_1 * ... * mu_n}(f) <= (c_1 + ... + c_n) E(Phi''(f)|f'|^2). A
/// non-positive c_i means "use the certified constant"; a c_i below it is
/// refused.
inline DeficitReport verify_convolution(const PhiFunction& phi, const std::vector<std::pair<Measure, double>>& specs,
                                        const ScalarField& f, const ExpectationPlan& plan = {},
                                        const EnergyForm& form = DiffusionForm{}, const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H1);
  if (!std::holds_alternative<DiffusionForm>(form))
    throw DomainError("verify_convolution: needs the translation-covariant diffusion form");
  if (specs.empty()) throw DomainError("verify_convolution: no factors");
  std::vector<Measure> ms;
  double c = 0.0;
  Vec cs;
  for (const auto& [m, ci] : specs) {
    const double cert = certified_constant(phi, m);
    if (ci > 0.0 && ci < cert * (1.0 - 1e-12))
      throw HypothesisError("convolution factor constant " + std::to_string(ci) + " is below the certified " +
                            std::to_string(cert));
    const double used = ci > 0.0 ? ci : cert;
    cs.push_back(used);
    c += used;
    ms.push_back(m);
  }
  const Measure conv = ms.size() == 1 ? ms.front() : Measure::convolution(ms);
  const ExpectationPlan p = detail::plan_for(conv, plan);
  const Rule r = build_rule(conv, p);
  DeficitReport rep = detail::form_deficit("convolution", phi, r, f, form, c, tol);
  for (std::size_t i = 0; i < cs.size(); ++i) rep.extras.emplace_back("c_" + std::to_string(i + 1), cs[i]);
  rep.plan = p.str();
  return rep;
}

// --- pushforward ----------------------------------------------------------------------------

/// Ent_{theta.mu}(f) <= c alpha E_{theta.mu}(Phi''(f)|f'|^2) for theta with
/// |theta(x) - theta(y)| <= sqrt(alpha)|x - y|, spot-checked on sampled pairs.
/// For Gaussian mu the constant c is checked against lambda_max / 2.
inline DeficitReport verify_pushforward(const PhiFunction& phi, const Measure& mu, double c,
                                        const std::function<double(Point)>& theta, double alpha,
                                        const ScalarField& f, const ExpectationPlan& plan = {},
                                        std::uint64_t seed = 0, const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H1);
  if (!(c > 0.0) || !(alpha > 0.0)) throw DomainError("verify_pushforward: c and alpha must be > 0");
  if (f.arity() != 1) throw DomainError("verify_pushforward: f must be a function on R");
  if (as_gaussian(mu)) detail::certify_gaussian_constant(mu, c);
  const auto pts = sample(mu, 256, seed);
  const double lip = std::sqrt(alpha);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double dist = 0.0;
      for (std::size_t k = 0; k < pts[i].size(); ++k) dist += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
      const double gap = std::abs(theta(pts[i]) - theta(pts[j]));
      if (gap > lip * std::sqrt(dist) * (1.0 + 1e-9) + 1e-12)
        throw DomainError("verify_pushforward: Lipschitz spot-check fails for sqrt(alpha) = " + std::to_string(lip));
    }
  }
  const Measure push = Measure::pushforward(
      [theta](Point x, std::span<double> out) { out[0] = theta(x); }, 1, mu, "theta");
  const ExpectationPlan p = detail::plan_for(mu, plan);
  const Rule r = build_rule(push, p);
  DeficitReport rep = detail::form_deficit("pushforward", phi, r, f, DiffusionForm{}, c * alpha, tol);
  rep.extras = {{"c", c}, {"alpha", alpha}};
  rep.plan = p.str();
  return rep;
}

// --- bounded perturbation ------------------------------------------------------------------

struct EntropyComparison {
  double ent_mu = 0.0;
  double ent_nu = 0.0;
  double osc = 0.0;
  double bound = 0.0;  // e^{osc} Ent_mu
  bool pass = true;
};

inline constexpr double kMaxOscillation = 50.0;

namespace detail {

inline double oscillation(const ScalarField& B, const Rule& r) {
  const Vec b = evaluate(r, B.eval_fn());
  const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
  const double osc = *hi - *lo;
  if (!(osc <= kMaxOscillation)) throw DomainError("perturbation: B is not bounded on the working support");
  return osc;
}

}  // namespace detail

/// Ent_{nu_B}(f) <= e^{osc(B)} Ent_mu(f) with d nu_B = e^B d mu / Z.
inline EntropyComparison perturbed_entropy_comparison(const PhiFunction& phi, const Measure& mu,
                                                      const ScalarField& B, const ScalarField& f,
                                                      const ExpectationPlan& plan, const Tolerance& tol = {}) {
  EntropyComparison out;
  const Rule rm = build_rule(mu, plan);
  out.osc = detail::oscillation(B, rm);
  out.ent_mu = phi_entropy(phi, rm, f).value;
  out.ent_nu = phi_entropy(phi, build_rule(Measure::tilt(B, mu), plan), f).value;
  out.bound = std::exp(out.osc) * out.ent_mu;
  out.pass = out.ent_nu <= out.bound + tol.at(out.bound, 0.0);
  return out;
}

/// Ent_{nu_B}(f) <= c e^{2 osc(B)} E_{nu_B}(Phi''(f)|grad f|^2), osc measured
/// on the rule nodes of mu. Extras carry the base deficit under mu and the
/// entropy comparison.
inline DeficitReport verify_perturbation(const PhiFunction& phi, const Measure& mu, double c, const ScalarField& B,
                                         const ScalarField& f, const ExpectationPlan& plan = {},
                                         const Tolerance& tol = {}) {
  require_hypothesis(phi, Hypothesis::H1);
  if (!(c > 0.0)) throw DomainError("verify_perturbation: c must be > 0");
  if (as_gaussian(mu)) detail::certify_gaussian_constant(mu, c);
  const ExpectationPlan p = detail::plan_for(mu, plan);
  const Rule rm = build_rule(mu, p);
  const double osc = detail::oscillation(B, rm);
  const Measure nu = Measure::tilt(B, mu);
  const Rule rn = build_rule(nu, p);
  DeficitReport rep = detail::form_deficit("perturbation", phi, rn, f, DiffusionForm{}, c * std::exp(2.0 * osc), tol);
  const DeficitReport base = detail::form_deficit("base", phi, rm, f, DiffusionForm{}, c, tol);
  const double bound = std::exp(osc) * base.lhs;
  rep.extras = {{"osc", osc},
                {"factor", std::exp(2.0 * osc)},
                {"base_deficit", base.deficit},
                {"ent_mu", base.lhs},
                {"ent_nu", rep.lhs},
                {"entropy_bound", bound}};
  const bool cmp = rep.lhs <= bound + tol.at(bound, base.se + rep.se);
  rep.extras.emplace_back("comparison_pass", cmp ? 1.0 : 0.0);
  rep.pass = rep.pass && cmp;
  rep.plan = p.str();
  return rep;
}

// --- Beckner family --------------------------------------------------------------------------

inline const Vec& default_beckner_q() {
  static const Vec q{1.0, 1.25, 1.5, 1.75, 1.9, 1.99};
  return q;
}

struct BecknerReport {
  std::vector<DeficitReport> per_q;
  double energy = 0.0;     // E |grad f|^2
  double rho = 0.0;
  double sup_ratio = 0.0;  // max_q (E f^2 - (E|f|^q)^{2/q}) / (2 - q)
  double sup_bound = 0.0;  // E |grad f|^2 / rho
  bool sup_pass = true;
  bool pass = true;
};

/// E f^2 - (E|f|^q)^{2/q} <= ((2 - q)/rho) E|grad f|^2 for each q of the grid,
/// and the sup form over the grid. rho <= 0 takes rho from a Gaussian mu.
inline BecknerReport verify_beckner(const Measure& mu, const ScalarField& f, const ExpectationPlan& plan = {},
                                    const Vec& q_grid = default_beckner_q(), double rho = 0.0,
                                    const Tolerance& tol = {}) {
  if (q_grid.empty()) throw DomainError("verify_beckner: empty q grid");
  for (double q : q_grid)
    if (!(q >= 1.0 && q < 2.0)) throw DomainError("verify_beckner: q must lie in [1, 2)");
  BecknerReport out;
  out.rho = rho > 0.0 ? rho : gaussian_rho(mu);
  const ExpectationPlan p = detail::plan_for(mu, plan);
  const Rule r = build_rule(mu, p);
  const Vec fv = evaluate(r, f.eval_fn());
  const std::size_t d = r.dim;
  Vec g2(r.size());
  detail::parallel_for(r.size(), [&](std::size_t k) {
    Vec g(d);
    f.gradient(r.node(k), g);
    double s = 0.0;
    for (double v : g) s += v * v;
    g2[k] = s;
  });
  Vec f2(fv.size());
  for (std::size_t i = 0; i < fv.size(); ++i) f2[i] = fv[i] * fv[i];
  const double m2 = expect(r, f2);
  if (m2 == 0.0) throw DomainError("verify_beckner: f vanishes identically");
  out.energy = expect(r, g2);
  out.sup_bound = out.energy / out.rho;
  for (double q : q_grid) {
    Vec fq(fv.size());
    for (std::size_t i = 0; i < fv.size(); ++i) fq[i] = std::pow(std::abs(fv[i]), q);
    const double mq = expect(r, fq);
    const double lhs = m2 - std::pow(mq, 2.0 / q);
    double se = 0.0;
    if (r.monte_carlo) {
      const double slope = (2.0 / q) * std::pow(mq, 2.0 / q - 1.0);
      Vec s(fv.size());
      for (std::size_t i = 0; i < fv.size(); ++i) s[i] = (2.0 - q) / out.rho * g2[i] - (f2[i] - slope * fq[i]);
      se = standard_error(r, s);
    }
    std::ostringstream nm;
    nm << "beckner[q=" << q << "]";
    DeficitReport rep = make_report(nm.str(), lhs, out.energy, (2.0 - q) / out.rho, se, tol);
    rep.f_description = f.name();
    rep.plan = p.str();
    out.sup_ratio = std::max(out.sup_ratio, lhs / (2.0 - q));
    out.pass = out.pass && rep.pass;
    out.per_q.push_back(std::move(rep));
  }
  out.sup_pass = out.sup_ratio <= out.sup_bound + tol.at(out.sup_bound, 0.0) / (2.0 - q_grid.back());
  out.pass = out.pass && out.sup_pass;
  return out;
}

struct BecknerRelation {
  double lhs_beckner = 0.0;  // E f^2 - (E f^q)^{2/q}
  double lhs_power = 0.0;    // Ent^{x^p}(f^q), p = 2/q
  double rhs_beckner = 0.0;  // ((2 - q)/rho) E|grad f|^2
  double rhs_power = 0.0;    // (1/(2 rho)) E(p(p-1) h^{p-2}|grad h|^2), h = f^q
};

/// Both sides of the Beckner inequality next to the x^p inequality for
/// h = f^q, p = 2/q, for a positive f. The two rows agree identically.
inline BecknerRelation beckner_power_relation(const Measure& mu, double rho, double q, const ScalarField& f,
                                              const ExpectationPlan& plan = {}) {
  if (!(q >= 1.0 && q < 2.0)) throw DomainError("beckner_power_relation: q must lie in [1, 2)");
  if (!(rho > 0.0)) throw DomainError("beckner_power_relation: rho must be > 0");
  const double p = 2.0 / q;
  const ExpectationPlan pl = detail::plan_for(mu, plan);
  const Rule r = build_rule(mu, pl);
  const std::size_t n = r.size();
  const std::size_t d = r.dim;
  Vec f2(n), fq(n), g2(n), hq(n), hpow(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = f(r.node(k));
    if (!(v > 0.0)) throw DomainError("beckner_power_relation: f must be positive");
    Vec g(d);
    f.gradient(r.node(k), g);
    double s = 0.0;
    for (double x : g) s += x * x;
    const double h = std::pow(v, q);
    f2[k] = v * v;
    fq[k] = h;
    g2[k] = s;
    hpow[k] = std::pow(h, p);
    // |grad h|^2 = q^2 f^{2q-2} |grad f|^2.
    hq[k] = p * (p - 1.0) * std::pow(h, p - 2.0) * q * q * std::pow(v, 2.0 * q - 2.0) * s;
  }
  BecknerRelation out;
  out.lhs_beckner = expect(r, f2) - std::pow(expect(r, fq), 2.0 / q);
  out.lhs_power = expect(r, hpow) - std::pow(expect(r, fq), p);
  out.rhs_beckner = (2.0 - q) / rho * expect(r, g2);
  out.rhs_power = expect(r, hq) / (2.0 * rho);
  return out;
}

// --- Dirichlet-form comparisons ----------------------------------------------------------------

struct DirichletReport {
  std::size_t points = 0;   // (u, v) pairs inside the domain
  std::size_t skipped = 0;  // pairs with u + v outside I
  double margin_psi_d2 = kInf;     // min of Phi''(u) v^2 - Psi(u, v), normalized
  double margin_psi_slope = kInf;  // min of v (Phi'(u+v) - Phi'(u)) - Psi(u, v), normalized
  std::pair<double, double> witness_d2{0.0, 0.0};
  std::pair<double, double> witness_slope{0.0, 0.0};
  bool h2prime = false;
  bool h2 = false;
  bool holds_d2 = true;     // asserted only under H2'
  bool holds_slope = true;  // asserted under convexity
  bool pass = true;
};

/// Psi(u, v) <= Phi''(u) v^2 (under H2') and Psi(u, v) <= v (Phi'(u+v) - Phi'(u))
/// on the grid of (u, v) pairs. Margins are divided by max(1, |bound| + Psi).
inline DirichletReport dirichlet_compare(const PhiFunction& phi, const Vec& us, const Vec& vs,
                                         double tol = kTolConvexity) {
  DirichletReport out;
  const auto& I = phi.interval();
  const IntervalGrid grid = default_grid(I);
  out.h2prime = check_H2prime(phi, grid).holds;
  out.h2 = check_H2(phi, grid).holds;
  for (double u : us) {
    if (!I.contains(u)) throw DomainError("dirichlet_compare: u outside " + I.str());
    for (double v : vs) {
      if (!I.contains(u + v)) {
        ++out.skipped;
        continue;
      }
      ++out.points;
      const double ps = phi.bregman(u, v);
      const double b1 = phi.d2(u) * v * v;
      const double b2 = v * (phi.d1(u + v) - phi.d1(u));
      const double m1 = (b1 - ps) / std::max(1.0, std::abs(b1) + std::abs(ps));
      const double m2 = (b2 - ps) / std::max(1.0, std::abs(b2) + std::abs(ps));
      if (m1 < out.margin_psi_d2) {
        out.margin_psi_d2 = m1;
        out.witness_d2 = {u, v};
      }
      if (m2 < out.margin_psi_slope) {
        out.margin_psi_slope = m2;
        out.witness_slope = {u, v};
      }
    }
  }
  out.holds_d2 = out.margin_psi_d2 >= -tol;
  out.holds_slope = out.margin_psi_slope >= -tol;
  out.pass = out.holds_slope && (!out.h2prime || out.holds_d2);
  return out;
}

// --- Poisson L1 / L2 ------------------------------------------------------------------------------

/// Ent_{P_t}(f)(x) <= 2t P_t(Gamma f / f)(x) for the Poisson semigroup with
/// Gamma f = (rate/2)(f(. + 1) - f)^2.
inline DeficitReport poisson_l1_lsi(double rate, double t, const ScalarField& f, double x = 0.0,
                                    const ExpectationPlan& plan = ExpectationPlan::poisson_sum(),
                                    const Tolerance& tol = {}) {
  if (!(rate > 0.0) || !(t > 0.0)) throw DomainError("poisson_l1_lsi: rate and t must be > 0");
  const Measure law = transition_law(PoissonSemigroup{rate}, t, {x});
  const ExpectationPlan p = plan.method == ExpectationPlan::Method::poisson_sum ? plan : ExpectationPlan::poisson_sum();
  const Rule r = build_rule(law, p);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double y = r.nodes[k] + 1.0;
    if (!(f(r.node(k)) > 0.0) || !(f(y) > 0.0)) throw DomainError("poisson_l1_lsi: f must be positive");
  }
  DeficitReport rep =
      detail::form_deficit("poisson_l1_lsi", xlogx(), r, f, L1FisherForm{Measure::dirac({1.0}), rate}, 2.0 * t, tol);
  rep.plan = p.str();
  return rep;
}

struct L2Probe {
  Vec theta;
  Vec ratio;  // Ent(f_theta^2) / E(Gamma f_theta)
  bool strictly_increasing = true;
};

/// Ent(f^2)/E(Gamma f) for f(k) = e^{theta k/2} under Poisson(rate), by exact
/// sums under the tilted weights p_k e^{theta k} (truncated where negligible).
inline L2Probe poisson_l2_probe(double rate, const Vec& thetas, double tail_tol = 1e-12) {
  if (!(rate > 0.0)) throw DomainError("poisson_l2_probe: rate must be > 0");
  L2Probe out;
  for (double th : thetas) {
    if (!(th > 0.0)) throw DomainError("poisson_l2_probe: theta must be > 0");
    // log(p_k g_k), g = f^2 = e^{theta k}.
    Vec lw;
    const double tilted = rate * std::exp(th);
    double best = -kInf;
    for (long k = 0;; ++k) {
      const double l = poisson_log_pmf(rate, k) + th * static_cast<double>(k);
      lw.push_back(l);
      best = std::max(best, l);
      if (static_cast<double>(k) > tilted && l < best + std::log(tail_tol) - 25.0) break;
      if (k > 1000000) throw EvaluationError("poisson_l2_probe: truncation did not converge");
    }
    Vec q(lw.size());
    for (std::size_t k = 0; k < lw.size(); ++k) q[k] = std::exp(lw[k] - best);
    const double zq = pairwise_sum(q);
    for (auto& x : q) x /= zq;
    const double log_eg = best + std::log(zq);  // log E_p g
    // Ent(g)/E g = E_q log g - log E_p g; E(Gamma f)/E g = (rate/2) E_q (f(k+1) - f(k))^2 / g(k).
    Vec lg(q.size()), gam(q.size());
    const double jump = std::expm1(th / 2.0);
    for (std::size_t k = 0; k < q.size(); ++k) {
      lg[k] = th * static_cast<double>(k);
      gam[k] = 0.5 * rate * jump * jump;
    }
    const double ent = pairwise_dot(q, lg) - log_eg;
    const double energy = pairwise_dot(q, gam);
    out.theta.push_back(th);
    out.ratio.push_back(ent / energy);
  }
  for (std::size_t i = 1; i < out.ratio.size(); ++i)
    if (!(out.ratio[i] > out.ratio[i - 1])) out.strictly_increasing = false;
  return out;
}

}  // namespace phisob
