// SPDX-License-Identifier: Apache-2.0
//
// Tail bounds derived from functional inequalities, against Monte Carlo tails.
//
// Herbst: Ent(f^2) <= c E|grad f|^2 gives, for 1-Lipschitz F,
// E e^{lambda (F - E F)} <= e^{c lambda^2 / 4}, hence by Chernoff
// P(|F - E F| >= t) <= 2 e^{-t^2 / c}.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>

#include "phisob/error.hpp"
#include "phisob/field.hpp"
#include "phisob/measure.hpp"
#include "phisob/numeric.hpp"

namespace phisob {

struct TailFit {
  double r_theory = 0.0;
  double r_hat = 0.0;     // least-squares exponent on the grid
  double r_lo = 0.0;      // confidence band (95%) on the exponent
  double r_hi = 0.0;
  double k_hat = 0.0;     // min over fitted t of -log p / t^{r_theory}
  std::size_t points = 0; // grid points used in the fit
  bool exponent_match = false;
  bool decays_at_least = false;
  std::string regime;     // gaussian | exponential | intermediate
};

struct TailReport {
  Vec t;
  Vec bound;
  Vec empirical;
  Vec stderr_;
  double r = 2.0;
  bool degenerate = false;
  TailFit fit;
  std::size_t n = 0;

  /// empirical <= bound + 3 se on the whole grid.
  [[nodiscard]] bool dominated(double sigmas = 3.0) const {
    for (std::size_t i = 0; i < t.size(); ++i)
      if (empirical[i] > bound[i] + sigmas * stderr_[i]) return false;
    return true;
  }
};

inline const Vec& default_tail_grid() {
  static const Vec g = linspace(0.0, 4.0, 17);
  return g;
}

inline constexpr std::size_t kDefaultTailSamples = 1'000'000;

namespace detail {

inline void check_lipschitz(const ScalarField& F, const Measure& mu, double lip, std::uint64_t seed) {
  const auto pts = sample(mu, 256, seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < pts[i].size(); ++k) d2 += (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]);
      if (std::abs(F(pts[i]) - F(pts[j])) > lip * std::sqrt(d2) * (1.0 + 1e-9) + 1e-12)
        throw DomainError("F fails the Lipschitz spot-check with constant " + std::to_string(lip));
    }
  }
}

/// Centered samples F(X_i) - E F, E F exact when the measure allows it.
inline Vec centered_samples(const ScalarField& F, const Measure& mu, std::size_t n, std::uint64_t seed) {
  if (F.arity() != mu.dim()) throw DomainError("F arity does not match measure dimension");
  if (n < 2) throw DomainError("need at least two samples");
  const Rule r = sample_rule(mu, n, seed);
  Vec v = evaluate(r, F.eval_fn());
  const ExpectationPlan p = default_plan(mu, seed);
  const double m = p.is_monte_carlo() ? expect(r, v) : expect(mu, F, p);
  const double snap = 1e-12 * std::max(1.0, std::abs(m));
  for (auto& x : v) {
    x -= m;
    if (std::abs(x) < snap) x = 0.0;
  }
  return v;
}

inline double tail_fraction(const Vec& sorted, double t, bool strict) {
  const auto it = strict ? std::upper_bound(sorted.begin(), sorted.end(), t)
                         : std::lower_bound(sorted.begin(), sorted.end(), t);
  return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}

}  // namespace detail

/// Two-sided tail P(|F - E F| >= t) against 2 e^{-t^2/c} for 1-Lipschitz F.
inline TailReport herbst_gaussian_tail(double c, const ScalarField& F, const Measure& mu,
                                       const Vec& t_grid = default_tail_grid(),
                                       std::size_t n = kDefaultTailSamples, std::uint64_t seed = 0) {
  if (!(c > 0.0)) throw DomainError("herbst_gaussian_tail: c must be > 0");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (!(t_grid[i] >= 0.0) || (i > 0 && !(t_grid[i] >= t_grid[i - 1])))
      throw DomainError("herbst_gaussian_tail: t grid must be non-negative and non-decreasing");
  detail::check_lipschitz(F, mu, 1.0, seed);
  Vec dev = detail::centered_samples(F, mu, n, seed);
  for (auto& x : dev) x = std::abs(x);
  std::sort(dev.begin(), dev.end());
  TailReport rep;
  rep.n = n;
  rep.r = 2.0;
  rep.t = t_grid;
  for (double t : t_grid) {
    const double p = t == 0.0 ? 1.0 : detail::tail_fraction(dev, t, false);
    rep.bound.push_back(2.0 * std::exp(-t * t / c));
    rep.empirical.push_back(p);
    rep.stderr_.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(n)));
  }
  rep.degenerate = dev.back() == 0.0;
  return rep;
}

inline constexpr std::size_t kMinTailHits = 30;
inline constexpr double kFitTMin = 1.0;
inline constexpr std::size_t kMinFitPoints = 7;

/// Fits -log p = K t^r + alpha log t + b + g t^{-r} (leading terms of the
/// Laplace expansion of a tail integral) by generalized least squares with r
/// on a grid over [0.5, 3].
/// The 95% band on r is {r : SSE(r) <= SSE_min (1 + F_{1,m-5} / (m - 5))}.
inline TailFit fit_tail_exponent(const Vec& t, const Vec& p, std::size_t n, double r_theory) {
  TailFit fit;
  fit.r_theory = r_theory;
  fit.regime = r_theory >= 2.0 - 1e-12 ? "gaussian" : (r_theory <= 1.0 + 1e-12 ? "exponential" : "intermediate");
  Vec ts, ys, ps;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double hits = p[i] * static_cast<double>(n);
    if (t[i] < kFitTMin || hits < static_cast<double>(kMinTailHits) || p[i] >= 1.0) continue;
    ts.push_back(t[i]);
    ys.push_back(-std::log(p[i]));
    ps.push_back(p[i]);
  }
  fit.points = ts.size();
  if (ts.size() < kMinFitPoints) return fit;
  const std::size_t m = ts.size();
  // Tails on one sample are nested events: Cov(log p_i, log p_j) = (1 - p_i)/(n p_i)
  // for t_i <= t_j. Whiten with the Cholesky factor.
  Eigen::MatrixXd cov(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double q = ps[std::min(i, j)];
      cov(i, j) = (1.0 - q) / (static_cast<double>(n) * q);
    }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return fit;
  Eigen::VectorXd y(m);
  for (std::size_t i = 0; i < m; ++i) y(i) = ys[i];
  const Eigen::VectorXd wy = llt.matrixL().solve(y);
  const Vec rs = linspace(0.5, 3.0, 251);
  Vec sse(rs.size());
  for (std::size_t k = 0; k < rs.size(); ++k) {
    Eigen::MatrixXd A(m, 4);
    for (std::size_t i = 0; i < m; ++i) {
      A(i, 0) = std::pow(ts[i], rs[k]);
      A(i, 1) = std::log(ts[i]);
      A(i, 2) = 1.0;
      A(i, 3) = std::pow(ts[i], -rs[k]);
    }
    const Eigen::MatrixXd wa = llt.matrixL().solve(A);
    const Eigen::VectorXd beta = wa.colPivHouseholderQr().solve(wy);
    sse[k] = (wa * beta - wy).squaredNorm();
  }
  const auto best = std::min_element(sse.begin(), sse.end()) - sse.begin();
  fit.r_hat = rs[best];
  const double dof = static_cast<double>(m) - 5.0;
  const double fq = boost::math::quantile(boost::math::fisher_f_distribution<double>(1.0, dof), 0.95);
  const double cut = sse[best] * (1.0 + fq / dof);
  fit.r_lo = fit.r_hi = fit.r_hat;
  for (std::size_t k = 0; k < rs.size(); ++k) {
    if (sse[k] <= cut) {
      fit.r_lo = std::min(fit.r_lo, rs[k]);
      fit.r_hi = std::max(fit.r_hi, rs[k]);
    }
  }
  fit.exponent_match = r_theory >= fit.r_lo - 1e-12 && r_theory <= fit.r_hi + 1e-12;
  fit.k_hat = kInf;
  for (std::size_t i = 0; i < m; ++i) fit.k_hat = std::min(fit.k_hat, ys[i] / std::pow(ts[i], r_theory));
  fit.decays_at_least = fit.k_hat > 0.0;
  return fit;
}

/// One-sided tail P(F - E F > sqrt(C) t) under a Beckner-type inequality
/// with constants (C, a): the exponent is r = 2/(2 - a) and K is fitted.
inline TailReport beckner_tail(double C, double a, const ScalarField& F, const Measure& mu,
                               const Vec& t_grid = default_tail_grid(), std::size_t n = kDefaultTailSamples,
                               std::uint64_t seed = 0) {
  if (!(C > 0.0)) throw DomainError("beckner_tail: C must be > 0");
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("beckner_tail: a must lie in [0, 1]");
  Vec dev = detail::centered_samples(F, mu, n, seed);
  std::sort(dev.begin(), dev.end());
  TailReport rep;
  rep.n = n;
  rep.r = 2.0 / (2.0 - a);
  rep.t = t_grid;
  const double s = std::sqrt(C);
  for (double t : t_grid) {
    const double p = detail::tail_fraction(dev, s * t, true);
    rep.empirical.push_back(p);
    rep.stderr_.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(n)));
  }
  rep.degenerate = std::all_of(rep.empirical.begin(), rep.empirical.end(), [](double p) { return p == 0.0; });
  if (rep.degenerate) {
    rep.fit.r_theory = rep.r;
    rep.fit.regime = "degenerate";
    rep.bound.assign(t_grid.size(), 1.0);
    return rep;
  }
  rep.fit = fit_tail_exponent(rep.t, rep.empirical, n, rep.r);
  for (double t : t_grid) rep.bound.push_back(rep.fit.k_hat > 0.0 && std::isfinite(rep.fit.k_hat)
                                                  ? std::min(1.0, std::exp(-rep.fit.k_hat * std::pow(t, rep.r)))
                                                  : 1.0);
  return rep;
}

}  // namespace phisob
