// SPDX-License-Identifier: Apache-2.0
//
// Entropy-type functionals: Phi-entropy, Phi-variance, relative Phi-entropy,
// energy forms and Phi-Fisher information, the duality and variational
// formulas, conditional decomposition and Shannon Phi-entropy.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/field.hpp"
#include "phisob/measure.hpp"
#include "phisob/numeric.hpp"
#include "phisob/phi.hpp"

namespace phisob {

/// Values below lo + kClampEps (or above hi - kClampEps) are pulled inside I.
inline constexpr double kClampEps = 1e-12;
/// Values further than this outside I are domain errors, not roundoff.
inline constexpr double kDomainSlack = 1e-9;

struct EntropyValue {
  double value = 0.0;
  double mean = 0.0;      // E f
  bool clamped = false;   // some value of f was pulled inside I
  double se = 0.0;        // Monte Carlo standard error (0 for deterministic rules)
  std::string plan;
};

/// f values guarded into the interval of phi.
struct GuardedValues {
  Vec v;
  bool clamped = false;
};

inline GuardedValues guard_values(const PhiFunction& phi, Vec v) {
  const auto& I = phi.interval();
  GuardedValues out{std::move(v), false};
  for (double& x : out.v) {
    if (std::isfinite(I.lo) && x < I.lo + kClampEps) {
      if (x < I.lo - kDomainSlack) throw DomainError("f leaves the interval " + I.str() + " of " + phi.name());
      x = I.lo + kClampEps;
      out.clamped = true;
    }
    if (std::isfinite(I.hi) && x > I.hi - kClampEps) {
      if (x > I.hi + kDomainSlack) throw DomainError("f leaves the interval " + I.str() + " of " + phi.name());
      x = I.hi - kClampEps;
      out.clamped = true;
    }
  }
  return out;
}

/// Ent = sum_i w_i Psi(m, v_i - m) with m = sum_i w_i v_i. This equals
/// E Phi(f) - Phi(E f) and is non-negative term by term.
inline double entropy_from(const PhiFunction& phi, std::span<const double> w, std::span<const double> v) {
  const double m = pairwise_dot(w, v);
  if (!phi.interval().contains(m)) throw DomainError("E f lies outside the interval of " + phi.name());
  Vec terms(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) terms[i] = w[i] * phi.bregman(m, v[i] - m);
  return pairwise_sum(terms);
}

inline EntropyValue phi_entropy(const PhiFunction& phi, const Rule& r, const Vec& fvals) {
  auto g = guard_values(phi, fvals);
  EntropyValue out;
  out.mean = pairwise_dot(r.weights, g.v);
  out.value = entropy_from(phi, r.weights, g.v);
  out.clamped = g.clamped;
  if (r.monte_carlo) {
    // Delta method: influence function Phi(f) - Phi'(m) f.
    const double d1m = phi.d1(out.mean);
    Vec infl(g.v.size());
    for (std::size_t i = 0; i < g.v.size(); ++i) infl[i] = phi(g.v[i]) - d1m * g.v[i];
    out.se = standard_error(r, infl);
  }
  return out;
}

inline EntropyValue phi_entropy(const PhiFunction& phi, const Rule& r, const ScalarField& f) {
  if (f.arity() != r.dim) throw DomainError("phi_entropy: field arity does not match measure dimension");
  return phi_entropy(phi, r, evaluate(r, f.eval_fn()));
}

/// Ent_mu^Phi(f) = E_mu Phi(f) - Phi(E_mu f).
inline EntropyValue phi_entropy(const PhiFunction& phi, const Measure& mu, const ScalarField& f,
                                const ExpectationPlan& plan) {
  auto out = phi_entropy(phi, build_rule(mu, plan), f);
  out.plan = plan.str();
  return out;
}

/// Var^Phi(f) = E Phi(f - E f). Needs I = R.
inline double phi_variance(const PhiFunction& phi, const Rule& r, const Vec& fvals) {
  if (!phi.interval().is_real_line()) throw DomainError("phi_variance: needs a Phi defined on the whole real line");
  const double m = pairwise_dot(r.weights, fvals);
  Vec v(fvals.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = phi(fvals[i] - m);
  return expect(r, v);
}

inline double phi_variance(const PhiFunction& phi, const Measure& mu, const ScalarField& f,
                           const ExpectationPlan& plan) {
  const Rule r = build_rule(mu, plan);
  return phi_variance(phi, r, evaluate(r, f.eval_fn()));
}

/// Ent^Phi(nu | mu) = sum_x mu(x) Phi-hat(nu(x)/mu(x)) for atom measures on a
/// common support; +inf when nu charges a point mu does not.
inline double relative_phi_entropy(const PhiFunction& phi, const Measure& nu, const Measure& mu) {
  const auto* a = as_atoms(nu);
  const auto* b = as_atoms(mu);
  if (!a || !b) throw DomainError("relative_phi_entropy: both measures must be atoms (or give a density)");
  if (a->dim != b->dim) throw DomainError("relative_phi_entropy: dimension mismatch");
  std::map<Vec, double> mu_mass;
  for (std::size_t i = 0; i < b->size(); ++i) {
    Vec p(b->point(i).begin(), b->point(i).end());
    mu_mass[p] += b->weights[i];
  }
  std::map<Vec, double> nu_mass;
  for (std::size_t i = 0; i < a->size(); ++i) {
    Vec p(a->point(i).begin(), a->point(i).end());
    nu_mass[p] += a->weights[i];
  }
  Vec terms;
  for (const auto& [p, wn] : nu_mass) {
    if (wn == 0.0) continue;
    auto it = mu_mass.find(p);
    if (it == mu_mass.end() || it->second == 0.0) return kInf;
  }
  for (const auto& [p, wm] : mu_mass) {
    if (wm == 0.0) continue;
    auto it = nu_mass.find(p);
    const double g = it == nu_mass.end() ? 0.0 : it->second / wm;
    terms.push_back(wm * phi.bregman(1.0, g - 1.0));
  }
  return pairwise_sum(terms);
}

/// Relative Phi-entropy of nu = g mu given by its density g.
inline double relative_phi_entropy(const PhiFunction& phi, const Measure& mu, const ScalarField& density,
                                   const ExpectationPlan& plan) {
  const Rule r = build_rule(mu, plan);
  auto g = guard_values(phi, evaluate(r, density.eval_fn()));
  Vec v(g.v.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = phi_hat(phi, g.v[i]);
  return expect(r, v);
}

// --- energy forms ------------------------------------------------------------------

/// Phi''(f) |grad f|^2.
struct DiffusionForm {};
/// Phi''(f) <S grad f, grad f> with S symmetric PSD (d x d, row-major).
struct CovarianceForm {
  Vec S;
};
/// Phi''(F) sum_i (t_i - t_{i-1}) (sum_{j>=i} d_j F)^2 with t_0 = 0.
struct MultiTimeForm {
  Vec times;
};
/// rate * sum_y nu(y) Psi(f, f(. + y) - f).
struct JumpForm {
  Measure nu;
  double rate = 1.0;
};
/// Gamma f / f with Gamma f = (rate/2) sum_y nu(y) (f(. + y) - f)^2.
struct L1FisherForm {
  Measure nu;
  double rate = 1.0;
};

using EnergyForm = std::variant<DiffusionForm, CovarianceForm, MultiTimeForm, JumpForm, L1FisherForm>;

inline std::string form_name(const EnergyForm& form) {
  switch (form.index()) {
    case 0: return "diffusion";
    case 1: return "covariance";
    case 2: return "multitime";
    case 3: return "jump";
    default: return "l1fisher";
  }
}

inline bool is_jump_form(const EnergyForm& form) {
  return std::holds_alternative<JumpForm>(form) || std::holds_alternative<L1FisherForm>(form);
}

/// sum_{i} (t_i - t_{i-1}) (sum_{j >= i} v_j)^2.
inline double multitime_quadratic(std::span<const double> times, std::span<const double> v) {
  double prev = 0.0;
  double tail = 0.0;
  for (double x : v) tail += x;
  double s = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    s += (times[i] - prev) * tail * tail;
    prev = times[i];
    tail -= v[i];
  }
  return s;
}

inline void check_times(std::span<const double> times) {
  double prev = 0.0;
  for (double t : times) {
    if (!(t >= prev) || !std::isfinite(t)) throw DomainError("times must be finite, non-negative and non-decreasing");
    prev = t;
  }
}

namespace detail {

inline const AtomsLaw& jump_atoms(const Measure& nu, double rate) {
  const auto* a = as_atoms(nu);
  if (!a) throw DomainError("jump measure must be a finite atom measure (infinite activity is not supported)");
  if (!(rate > 0.0)) throw DomainError("jump rate must be > 0");
  return *a;
}

}  // namespace detail

/// Pointwise integrand of the energy form at x.
inline std::function<double(Point)> energy_integrand(const PhiFunction& phi, const ScalarField& f,
                                                     const EnergyForm& form) {
  const std::size_t d = f.arity();
  auto clampin = [I = phi.interval()](double y) {
    if (std::isfinite(I.lo) && y < I.lo + kClampEps) return I.lo + kClampEps;
    if (std::isfinite(I.hi) && y > I.hi - kClampEps) return I.hi - kClampEps;
    return y;
  };
  return std::visit(
      [&](const auto& fm) -> std::function<double(Point)> {
        using T = std::decay_t<decltype(fm)>;
        if constexpr (std::is_same_v<T, DiffusionForm>) {
          return [phi, f, d, clampin](Point x) {
            Vec g(d);
            f.gradient(x, g);
            double s = 0.0;
            for (double v : g) s += v * v;
            return s == 0.0 ? 0.0 : phi.d2(clampin(f(x))) * s;
          };
        } else if constexpr (std::is_same_v<T, CovarianceForm>) {
          if (fm.S.size() != d * d) throw DomainError("covariance form: S must be d x d");
          return [phi, f, d, S = fm.S, clampin](Point x) {
            Vec g(d);
            f.gradient(x, g);
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i)
              for (std::size_t j = 0; j < d; ++j) s += S[i * d + j] * g[i] * g[j];
            return s == 0.0 ? 0.0 : phi.d2(clampin(f(x))) * s;
          };
        } else if constexpr (std::is_same_v<T, MultiTimeForm>) {
          if (fm.times.size() != d) throw DomainError("multi-time form: one time per coordinate");
          check_times(fm.times);
          return [phi, f, d, times = fm.times, clampin](Point x) {
            Vec g(d);
            f.gradient(x, g);
            const double q = multitime_quadratic(times, g);
            return q == 0.0 ? 0.0 : phi.d2(clampin(f(x))) * q;
          };
        } else if constexpr (std::is_same_v<T, JumpForm>) {
          const auto& nu = detail::jump_atoms(fm.nu, fm.rate);
          if (nu.dim != d) throw DomainError("jump form: jump dimension does not match f");
          return [phi, f, d, nu, rate = fm.rate](Point x) {
            Vec y(x.begin(), x.end());
            const double fx = f(x);
            Vec terms(nu.size());
            for (std::size_t k = 0; k < nu.size(); ++k) {
              for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + nu.points[k * d + i];
              terms[k] = nu.weights[k] * phi.bregman(fx, f(y) - fx);
            }
            return rate * pairwise_sum(terms);
          };
        } else {
          const auto& nu = detail::jump_atoms(fm.nu, fm.rate);
          if (nu.dim != d) throw DomainError("L1 Fisher form: jump dimension does not match f");
          return [f, d, nu, rate = fm.rate](Point x) {
            Vec y(x.begin(), x.end());
            const double fx = f(x);
            if (!(fx > 0.0)) throw DomainError("L1 Fisher form: f must be positive");
            double s = 0.0;
            for (std::size_t k = 0; k < nu.size(); ++k) {
              for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + nu.points[k * d + i];
              const double dy = f(y) - fx;
              s += nu.weights[k] * dy * dy;
            }
            return 0.5 * rate * s / fx;
          };
        }
      },
      form);
}

/// Phi-Fisher information E_mu(energy integrand). Diffusion-type forms need a
/// Gaussian component in mu; jump forms need a measure without one.
inline double phi_fisher(const PhiFunction& phi, const Measure& mu, const ScalarField& f, const EnergyForm& form,
                         const ExpectationPlan& plan) {
  detail::LeafCensus c;
  detail::census(mu, c);
  if (is_jump_form(form) && c.gaussian)
    throw DomainError("phi_fisher: jump forms pair with discrete laws, not Gaussian ones");
  if (!is_jump_form(form) && !c.gaussian)
    throw DomainError("phi_fisher: diffusion forms pair with Gaussian (or tilted Gaussian) laws");
  if (f.arity() != mu.dim()) throw DomainError("phi_fisher: field arity does not match measure dimension");
  const Rule r = build_rule(mu, plan);
  return expect(r, energy_integrand(phi, f, form));
}

/// -E_mu(Phi'(f) L f) for the Poisson generator L f = rate (f(.+1) - f).
inline double poisson_generator_fisher(const PhiFunction& phi, const Rule& r, const ScalarField& f, double rate) {
  return -expect(r, [&](Point x) {
    const double y = x[0] + 1.0;
    return phi.d1(f(x)) * rate * (f(Point(&y, 1)) - f(x));
  });
}

// --- duality and variational formulas ----------------------------------------------

/// E((Phi'(h) - Phi'(E h))(f - h)) + Ent(h): a lower bound of Ent(f) under H1,
/// with equality at h = f.
inline double duality_lower_bound(const PhiFunction& phi, const Rule& r, const Vec& fvals, const Vec& hvals) {
  if (fvals.size() != hvals.size()) throw DomainError("duality_lower_bound: size mismatch");
  auto f = guard_values(phi, fvals).v;
  auto h = guard_values(phi, hvals).v;
  const double mh = pairwise_dot(r.weights, h);
  const double d1mh = phi.d1(mh);
  Vec v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (phi.d1(h[i]) - d1mh) * (f[i] - h[i]);
  return expect(r, v) + entropy_from(phi, r.weights, h);
}

inline double duality_lower_bound(const PhiFunction& phi, const Measure& mu, const ScalarField& f,
                                  const ScalarField& h, const ExpectationPlan& plan) {
  const Rule r = build_rule(mu, plan);
  return duality_lower_bound(phi, r, evaluate(r, f.eval_fn()), evaluate(r, h.eval_fn()));
}

struct VariationalScan {
  Vec a;
  Vec values;  // E Psi(a, f - a) for each a
  double min_value = kInf;
  double argmin = 0.0;
};

/// Scans a -> E(Phi(f) - Phi(a) - Phi'(a)(f - a)); every value bounds Ent(f)
/// from above and a = E f attains it.
inline VariationalScan variational_upper_scan(const PhiFunction& phi, const Rule& r, const Vec& fvals,
                                              const Vec& a_grid) {
  if (a_grid.empty()) throw DomainError("variational_upper_scan: empty grid");
  auto f = guard_values(phi, fvals).v;
  VariationalScan out;
  out.a = a_grid;
  for (double a : a_grid) {
    if (!phi.interval().interior(a)) throw DomainError("variational_upper_scan: a must lie inside the interval");
    Vec v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = phi.bregman(a, f[i] - a);
    const double val = expect(r, v);
    out.values.push_back(val);
    if (val < out.min_value) {
      out.min_value = val;
      out.argmin = a;
    }
  }
  return out;
}

inline VariationalScan variational_upper_scan(const PhiFunction& phi, const Measure& mu, const ScalarField& f,
                                              const Vec& a_grid, const ExpectationPlan& plan) {
  const Rule r = build_rule(mu, plan);
  return variational_upper_scan(phi, r, evaluate(r, f.eval_fn()), a_grid);
}

/// E(f^2 log(f^2/a) - f^2 + a): the x log x remainder written for f^2. It
/// bounds Ent(f^2) from above for every a > 0 with equality at a = E f^2.
inline double entropy_f2_remainder(const Rule& r, const Vec& fvals, double a) {
  if (!(a > 0.0)) throw DomainError("entropy_f2_remainder: a must be > 0");
  Vec v(fvals.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = fvals[i] * fvals[i];
    v[i] = (s == 0.0 ? 0.0 : s * std::log(s / a)) - s + a;
  }
  return expect(r, v);
}

/// E(f^2 log(f^2/a) - a + f^2), the sign pattern printed alongside the
/// variational formula; kept for comparison (it is unbounded below in a).
inline double entropy_f2_printed(const Rule& r, const Vec& fvals, double a) {
  if (!(a > 0.0)) throw DomainError("entropy_f2_printed: a must be > 0");
  Vec v(fvals.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double s = fvals[i] * fvals[i];
    v[i] = (s == 0.0 ? 0.0 : s * std::log(s / a)) - a + s;
  }
  return expect(r, v);
}

/// (E f^p - (E f)^p) / (p - 1); tends to Ent(f) as p -> 1.
inline double power_entropy_quotient(const Rule& r, const Vec& fvals, double p) {
  if (p == 1.0) throw DomainError("power_entropy_quotient: p must differ from 1");
  Vec v(fvals.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(fvals[i], p);
  return (expect(r, v) - std::pow(expect(r, fvals), p)) / (p - 1.0);
}

// --- conditional decomposition -------------------------------------------------

struct ConditionalDecomposition {
  double total = 0.0;        // Ent(f)
  double conditional = 0.0;  // E Ent(f | Y)
  double of_mean = 0.0;      // Ent(E(f | Y))
  std::size_t skipped = 0;   // zero-probability slices
};

/// Splits Ent(f) over a finite joint law of (X, Y), Y being the coordinates
/// listed in y_coords, as E Ent(f | Y) + Ent(E(f | Y)).
inline ConditionalDecomposition conditional_decompose(const PhiFunction& phi, const Measure& joint,
                                                      const std::vector<std::size_t>& y_coords, const Vec& fvals) {
  const auto* a = as_atoms(joint);
  if (!a) throw DomainError("conditional_decompose: joint law must be a finite atom measure");
  if (fvals.size() != a->size()) throw DomainError("conditional_decompose: one value per atom expected");
  for (auto c : y_coords)
    if (c >= a->dim) throw DomainError("conditional_decompose: conditioning coordinate out of range");
  auto f = guard_values(phi, fvals).v;
  std::map<Vec, std::vector<std::size_t>> slices;
  for (std::size_t i = 0; i < a->size(); ++i) {
    Vec key;
    for (auto c : y_coords) key.push_back(a->points[i * a->dim + c]);
    slices[key].push_back(i);
  }
  ConditionalDecomposition out;
  out.total = entropy_from(phi, a->weights, f);
  Vec slice_mass;
  Vec slice_mean;
  Vec cond_terms;
  for (const auto& [key, idx] : slices) {
    Vec w;
    Vec v;
    for (auto i : idx) {
      w.push_back(a->weights[i]);
      v.push_back(f[i]);
    }
    const double mass = pairwise_sum(w);
    if (mass == 0.0) {
      ++out.skipped;
      continue;
    }
    for (auto& x : w) x /= mass;
    slice_mass.push_back(mass);
    slice_mean.push_back(pairwise_dot(w, v));
    cond_terms.push_back(mass * entropy_from(phi, w, v));
  }
  out.conditional = pairwise_sum(cond_terms);
  out.of_mean = entropy_from(phi, slice_mass, slice_mean);
  return out;
}

// --- Shannon Phi-entropy -------------------------------------------------------------

/// -sum_i Phi-hat(p_i) with Phi shifted so Phi(0) = 0.
inline double shannon_phi_entropy(const PhiFunction& phi, std::span<const double> p) {
  const PhiFunction phi0 = normalized_at_zero(phi);
  double s = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw DomainError("shannon_phi_entropy: weights must be >= 0");
    s += x;
  }
  if (std::abs(s - 1.0) > 1e-12) throw DomainError("shannon_phi_entropy: weights must sum to 1");
  const double phi1 = phi0(1.0);
  Vec terms(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) terms[i] = -(phi0(p[i]) - phi1 * p[i]);
  return pairwise_sum(terms);
}

/// -sum_i Phi-hat(f_i) dx for a density sampled on a grid with cell volume dx.
inline double shannon_phi_entropy_cont(const PhiFunction& phi, std::span<const double> f, double cell) {
  if (!(cell > 0.0)) throw DomainError("shannon_phi_entropy_cont: cell volume must be > 0");
  const PhiFunction phi0 = normalized_at_zero(phi);
  const double phi1 = phi0(1.0);
  Vec terms(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] >= 0.0)) throw DomainError("shannon_phi_entropy_cont: density must be >= 0");
    terms[i] = -(phi0(f[i]) - phi1 * f[i]) * cell;
  }
  return pairwise_sum(terms);
}

}  // namespace phisob
