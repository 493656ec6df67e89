// SPDX-License-Identifier: Apache-2.0
//
// Convex base functions Phi, the derived functions Phi-hat and Psi, and grid
// checkers for the convexity hypotheses H1, H2 and H2'.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/numeric.hpp"

namespace phisob {

/// Closed interval [lo, hi] of the real line; either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;

  [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  [[nodiscard]] bool interior(double x) const noexcept { return x > lo && x < hi; }
  [[nodiscard]] bool is_real_line() const noexcept { return lo == -kInf && hi == kInf; }
  [[nodiscard]] bool is_half_line() const noexcept { return lo == 0.0 && hi == kInf; }

  static Interval real_line() { return {}; }
  static Interval half_line() { return {0.0, kInf}; }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    os << "[" << lo << ", " << hi << "]";
    return os.str();
  }
};

inline Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

/// A smooth convex function on an interval together with its first four
/// derivatives. Built-ins carry analytic derivatives; functions built with
/// from_eval() fall back to central finite differences.
class PhiFunction {
public:
  using Fn = std::function<double(double)>;
  using Fn2 = std::function<double(double, double)>;

  PhiFunction() = default;

  PhiFunction(std::string name, Interval interval, Fn f, Fn d1, Fn d2, Fn d3, Fn d4,
              Fn2 bregman = {})
      : name_(std::move(name)), interval_(interval), f_(std::move(f)), d1_(std::move(d1)),
        d2_(std::move(d2)), d3_(std::move(d3)), d4_(std::move(d4)), bregman_(std::move(bregman)),
        analytic_(true) {}

  /// Wraps an arbitrary evaluator; derivatives are central differences with
  /// steps cbrt(eps), eps^(1/4), eps^(1/5), eps^(1/6) (times max(1,|x|)) for
  /// orders 1 to 4, shrunk to stay inside the interval.
  static PhiFunction from_eval(std::string name, Interval interval, Fn f) {
    PhiFunction phi;
    phi.name_ = std::move(name);
    phi.interval_ = interval;
    phi.f_ = f;
    auto fit = [interval](double x, double h, double reach) {
      if (std::isfinite(interval.lo)) h = std::min(h, (x - interval.lo) / (reach + 0.5));
      if (std::isfinite(interval.hi)) h = std::min(h, (interval.hi - x) / (reach + 0.5));
      return h;
    };
    phi.d1_ = [f, fit](double x) { return central_d1(f, x, fit(x, fd_step(x), 1)); };
    phi.d2_ = [f, fit](double x) {
      return central_d2(f, x, fit(x, std::pow(kEps, 0.25) * std::max(1.0, std::abs(x)), 1));
    };
    phi.d3_ = [f, fit](double x) {
      return central_d3(f, x, fit(x, std::pow(kEps, 0.2) * std::max(1.0, std::abs(x)), 2));
    };
    phi.d4_ = [f, fit](double x) {
      return central_d4(f, x, fit(x, std::pow(kEps, 1.0 / 6.0) * std::max(1.0, std::abs(x)), 2));
    };
    phi.analytic_ = false;
    phi.fd_note_ = "central differences: h=max(1,|x|) times cbrt(eps) (d1), eps^(1/4) (d2), eps^(1/5) (d3), eps^(1/6) (d4)";
    return phi;
  }

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const Interval& interval() const noexcept { return interval_; }
  [[nodiscard]] bool analytic() const noexcept { return analytic_; }
  [[nodiscard]] const std::string& fd_note() const noexcept { return fd_note_; }

  /// Non-empty when the function is outside its documented regime
  /// (e.g. x^p with p > 2).
  [[nodiscard]] const std::string& flag() const noexcept { return flag_; }
  void set_flag(std::string f) { flag_ = std::move(f); }

  [[nodiscard]] double operator()(double x) const { return f_(x); }
  [[nodiscard]] double eval(double x) const { return f_(x); }
  [[nodiscard]] double d1(double x) const { return d1_(x); }
  [[nodiscard]] double d2(double x) const { return d2_(x); }
  [[nodiscard]] double d3(double x) const { return d3_(x); }
  [[nodiscard]] double d4(double x) const { return d4_(x); }

  /// Bregman remainder Phi(u+v) - Phi(u) - Phi'(u) v, using a cancellation
  /// free closed form when one is known.
  [[nodiscard]] double bregman(double u, double v) const {
    if (v == 0.0) return 0.0;
    if (bregman_) return bregman_(u, v);
    return f_(u + v) - f_(u) - d1_(u) * v;
  }
  [[nodiscard]] bool has_closed_bregman() const noexcept { return static_cast<bool>(bregman_); }

  /// Inverse of Phi' when known in closed form (empty otherwise).
  [[nodiscard]] const Fn& d1_inverse() const noexcept { return d1_inv_; }
  void set_d1_inverse(Fn inv) { d1_inv_ = std::move(inv); }

  // Raw access for composition.
  [[nodiscard]] const Fn& f_fn() const noexcept { return f_; }
  [[nodiscard]] const Fn& d1_fn() const noexcept { return d1_; }
  [[nodiscard]] const Fn& d2_fn() const noexcept { return d2_; }
  [[nodiscard]] const Fn& d3_fn() const noexcept { return d3_; }
  [[nodiscard]] const Fn& d4_fn() const noexcept { return d4_; }
  [[nodiscard]] const Fn2& bregman_fn() const noexcept { return bregman_; }

private:
  std::string name_;
  Interval interval_;
  Fn f_, d1_, d2_, d3_, d4_;
  Fn2 bregman_;
  Fn d1_inv_;
  bool analytic_ = false;
  std::string fd_note_;
  std::string flag_;
};

// --- built-ins -------------------------------------------------------------

/// x log x on R_+, with 0 log 0 = 0.
inline PhiFunction xlogx() {
  PhiFunction phi(
      "xlogx", Interval::half_line(),
      [](double x) { return x == 0.0 ? 0.0 : x * std::log(x); },
      [](double x) { return std::log(x) + 1.0; },
      [](double x) { return 1.0 / x; },
      [](double x) { return -1.0 / (x * x); },
      [](double x) { return 2.0 / (x * x * x); },
      [](double u, double v) {
        const double w = u + v;
        if (u == 0.0) return v > 0.0 ? kInf : 0.0;
        if (w == 0.0) return u;
        return w * std::log1p(v / u) - v;
      });
  phi.set_d1_inverse([](double y) { return std::exp(y - 1.0); });
  return phi;
}

/// x^p on R_+. The documented regime is 1 < p <= 2; p > 2 is accepted and
/// flagged, p <= 1 is rejected.
inline PhiFunction power(double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw DomainError("power: exponent p must be > 1 (x^p is not strictly convex on R_+ otherwise)");
  std::ostringstream nm;
  nm << "power(" << p << ")";
  PhiFunction phi(
      nm.str(), Interval::half_line(),
      [p](double x) { return std::pow(x, p); },
      [p](double x) { return p * std::pow(x, p - 1.0); },
      [p](double x) { return p * (p - 1.0) * std::pow(x, p - 2.0); },
      [p](double x) { return p * (p - 1.0) * (p - 2.0) * std::pow(x, p - 3.0); },
      [p](double x) { return p * (p - 1.0) * (p - 2.0) * (p - 3.0) * std::pow(x, p - 4.0); },
      [p](double u, double v) {
        if (u == 0.0) return std::pow(v, p);
        const double r = v / u;
        return std::pow(u, p) * (std::expm1(p * std::log1p(r)) - p * r);
      });
  phi.set_d1_inverse([p](double y) { return y <= 0.0 ? 0.0 : std::pow(y / p, 1.0 / (p - 1.0)); });
  if (p > 2.0) phi.set_flag("p > 2 lies outside the documented regime 1 < p <= 2");
  return phi;
}

/// a x^2 + b x + c on R (a >= 0).
inline PhiFunction quadratic(double a, double b, double c) {
  if (!(a >= 0.0)) throw DomainError("quadratic: leading coefficient must be >= 0");
  std::ostringstream nm;
  nm << "quadratic(" << a << "," << b << "," << c << ")";
  PhiFunction phi(
      nm.str(), Interval::real_line(),
      [a, b, c](double x) { return (a * x + b) * x + c; },
      [a, b](double x) { return 2.0 * a * x + b; },
      [a](double) { return 2.0 * a; },
      [](double) { return 0.0; },
      [](double) { return 0.0; },
      [a](double, double v) { return a * v * v; });
  if (a > 0.0) phi.set_d1_inverse([a, b](double y) { return (y - b) / (2.0 * a); });
  if (a == 0.0) phi.set_flag("a = 0: affine, not strictly convex");
  return phi;
}

/// x^2 on R.
inline PhiFunction square() {
  PhiFunction phi(
      "square", Interval::real_line(),
      [](double x) { return x * x; },
      [](double x) { return 2.0 * x; },
      [](double) { return 2.0; },
      [](double) { return 0.0; },
      [](double) { return 0.0; },
      [](double, double v) { return v * v; });
  phi.set_d1_inverse([](double y) { return 0.5 * y; });
  return phi;
}

enum class PhiKind { xlogx, power, square, quadratic };

struct PhiSpec {
  PhiKind kind = PhiKind::xlogx;
  double p = 1.5;
  double a = 1.0, b = 0.0, c = 0.0;
};

inline PhiFunction builtin_phi(const PhiSpec& spec) {
  switch (spec.kind) {
    case PhiKind::xlogx: return xlogx();
    case PhiKind::power: return power(spec.p);
    case PhiKind::square: return square();
    case PhiKind::quadratic: return quadratic(spec.a, spec.b, spec.c);
  }
  throw DomainError("builtin_phi: unknown kind");
}

// --- derived functions -----------------------------------------------------

/// Phi-hat(u) = Phi(u) - Phi(1) u. Vanishes at 1 and has the same curvature.
inline double phi_hat(const PhiFunction& phi, double u) {
  if (!phi.interval().contains(u)) throw DomainError("phi_hat: u outside " + phi.interval().str());
  return phi(u) - phi(1.0) * u;
}

/// Psi(u, v) = Phi(u+v) - Phi(u) - Phi'(u) v on the set where u and u+v lie in I.
inline double psi(const PhiFunction& phi, double u, double v) {
  const auto& I = phi.interval();
  if (!I.contains(u) || !I.contains(u + v))
    throw DomainError("psi: (u, u+v) must lie in " + I.str() + "x" + I.str());
  return phi.bregman(u, v);
}

// --- grids -----------------------------------------------------------------

inline constexpr double kTolConvexity = 1e-9;
inline constexpr double kEndpointOffset = 1e-8;

struct IntervalGrid {
  double lo = 1e-3;
  double hi = 1e3;
  std::size_t n = 201;
  bool log_scaled = true;

  /// Grid points, pulled at least kEndpointOffset inside I.
  [[nodiscard]] std::vector<double> points(const Interval& I) const {
    if (!(lo < hi)) throw DomainError("IntervalGrid: need lo < hi");
    if (n < 3) throw DomainError("IntervalGrid: need n >= 3");
    double a = lo;
    double b = hi;
    if (std::isfinite(I.lo)) a = std::max(a, I.lo + std::max(kEndpointOffset, 1e-12 * std::abs(I.lo)));
    if (std::isfinite(I.hi)) b = std::min(b, I.hi - std::max(kEndpointOffset, 1e-12 * std::abs(I.hi)));
    if (!(a < b)) throw DomainError("IntervalGrid: grid does not meet the interior of " + I.str());
    if (log_scaled) {
      if (!(a > 0.0)) throw DomainError("IntervalGrid: log-scaled grid needs lo > 0");
      return logspace(a, b, n);
    }
    return linspace(a, b, n);
  }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    os << (log_scaled ? "log" : "lin") << "[" << lo << "," << hi << "]x" << n;
    return os.str();
  }
};

/// 201 points, log-spaced on [1e-3, 1e3] for R_+, linear on [-1e3, 1e3] for R,
/// otherwise linear across the (finite part of the) interval.
inline IntervalGrid default_grid(const Interval& I) {
  if (I.lo >= 0.0 && I.hi == kInf) return {std::max(1e-3, I.lo + kEndpointOffset), 1e3, 201, true};
  const double lo = std::isfinite(I.lo) ? I.lo : -1e3;
  const double hi = std::isfinite(I.hi) ? I.hi : 1e3;
  return {lo, hi, 201, false};
}

// --- hypothesis checks -------------------------------------------------------

enum class Hypothesis { H1, H2, H2prime };

inline const char* to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::H1: return "H1";
    case Hypothesis::H2: return "H2";
    case Hypothesis::H2prime: return "H2prime";
  }
  return "?";
}

struct ConditionReport {
  Hypothesis hypothesis = Hypothesis::H1;
  bool holds = false;
  double margin = kInf;
  std::vector<double> witness;  // grid point(s) where the margin is attained
  std::string grid;
  // Set when an independent cross-check disagrees with the primary verdict.
  bool inconsistent = false;
  std::string note;
};

namespace detail {

// q / max(1, scale): composite quantities are compared relative to the size
// of the terms they are built from, so exact cancellations (x log x has
// Phi''''Phi'' - 2Phi'''^2 = 0) do not read as violations at extreme scales.
inline double normalized(double q, double scale) { return q / std::max(1.0, scale); }

struct MarginTracker {
  double margin = kInf;
  std::vector<double> witness;
  void offer(double value, std::vector<double> at) {
    if (std::isnan(value)) value = -kInf;
    if (value < margin) {
      margin = value;
      witness = std::move(at);
    }
  }
};

// Smallest eigenvalue of a symmetric 2x2 matrix divided by its spectral scale.
inline double min_eig_relative(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double rad = std::hypot(0.5 * (a - c), b);
  const double lmin = mean - rad;
  const double scale = std::abs(mean) + rad;
  return scale == 0.0 ? 0.0 : lmin / scale;
}

}  // namespace detail

/// H1: (u,v) -> Phi''(u) v^2 non-negative and convex. Tested through
/// Phi'' >= 0, Phi'''' >= 0 and Phi''''Phi'' - 2 Phi'''^2 >= 0 on the grid,
/// cross-checked against a finite-difference Hessian of Phi''(u) v^2 that
/// uses only Phi''.
inline ConditionReport check_H1(const PhiFunction& phi, const IntervalGrid& grid) {
  const auto pts = grid.points(phi.interval());
  detail::MarginTracker t;
  for (double u : pts) {
    const double d2 = phi.d2(u);
    const double d3 = phi.d3(u);
    const double d4 = phi.d4(u);
    t.offer(d2, {u});
    t.offer(d4, {u});
    t.offer(detail::normalized(d4 * d2 - 2.0 * d3 * d3, std::abs(d4 * d2) + 2.0 * d3 * d3), {u});
  }
  ConditionReport rep;
  rep.hypothesis = Hypothesis::H1;
  rep.margin = t.margin;
  rep.witness = t.witness;
  rep.holds = t.margin >= -kTolConvexity;
  rep.grid = grid.str();

  // Cross-check: Hessian of zeta(u,v) = Phi''(u) v^2 from differences of Phi''.
  double worst_fd = kInf;
  for (std::size_t i = 1; i + 1 < pts.size(); i += 4) {
    const double u = pts[i];
    const double h = 1e-3 * std::min(pts[i + 1] - u, u - pts[i - 1]);
    const double dd2 = (phi.d2(u + h) - phi.d2(u - h)) / (2 * h);
    const double ddd2 = (phi.d2(u + h) - 2 * phi.d2(u) + phi.d2(u - h)) / (h * h);
    for (double v : {0.25, 1.0, 4.0}) {
      const double vv = v * std::max(1.0, std::abs(u));
      worst_fd = std::min(worst_fd, detail::min_eig_relative(ddd2 * vv * vv, 2 * dd2 * vv, 2 * phi.d2(u)));
    }
  }
  const bool fd_says_psd = worst_fd >= -1e-4;
  const bool fd_says_not = worst_fd < -1e-2;
  if ((rep.holds && !fd_says_psd) || (!rep.holds && rep.margin < -1e-6 && !fd_says_not && fd_says_psd &&
                                      worst_fd >= -1e-9)) {
    rep.inconsistent = true;
    std::ostringstream os;
    os << "derivative criterion and sampled Hessian of Phi''(u)v^2 disagree (min relative eigenvalue "
       << worst_fd << ")";
    rep.note = os.str();
  }
  return rep;
}

/// H2: Psi non-negative and jointly convex on {(u,v): u, u+v in I}. The grid
/// is taken over (u, w = u+v), each axis from `grid`.
inline ConditionReport check_H2(const PhiFunction& phi, const IntervalGrid& grid_u,
                                const IntervalGrid& grid_w) {
  const auto us = grid_u.points(phi.interval());
  const auto ws = grid_w.points(phi.interval());
  detail::MarginTracker t;
  for (double u : us) {
    const double d1u = phi.d1(u);
    const double d2u = phi.d2(u);
    const double d3u = phi.d3(u);
    const double fu = phi(u);
    for (double w : ws) {
      const double v = w - u;
      const double d2w = phi.d2(w);
      const double ps = phi.bregman(u, v);
      t.offer(detail::normalized(ps, phi.has_closed_bregman() ? 0.0
                                                              : std::abs(phi(w)) + std::abs(fu) + std::abs(d1u * v)),
              {u, v});
      // Hessian of Psi: [[d2w - d2u - d3u v, d2w - d2u], [d2w - d2u, d2w]].
      const double a = d2w - d2u - d3u * v;
      const double trace = a + d2w;
      t.offer(detail::normalized(trace, 2 * std::abs(d2w) + std::abs(d2u) + std::abs(d3u * v)), {u, v});
      const double det = d2u * (d2w - d2u) - d2w * d3u * v;
      t.offer(detail::normalized(det, std::abs(d2u * d2w) + d2u * d2u + std::abs(d2w * d3u * v)), {u, v});
    }
  }
  ConditionReport rep;
  rep.hypothesis = Hypothesis::H2;
  rep.margin = t.margin;
  rep.witness = t.witness;
  rep.holds = t.margin >= -kTolConvexity;
  rep.grid = grid_u.str() + " x " + grid_w.str();
  return rep;
}

inline ConditionReport check_H2(const PhiFunction& phi, const IntervalGrid& grid) {
  return check_H2(phi, grid, grid);
}

/// H2': Phi'' convex, non-negative and non-increasing. Also runs check_H2 on
/// the same grid and flags the report if H2' holds while H2 does not.
inline ConditionReport check_H2prime(const PhiFunction& phi, const IntervalGrid& grid) {
  const auto pts = grid.points(phi.interval());
  detail::MarginTracker t;
  for (double u : pts) {
    t.offer(phi.d2(u), {u});
    t.offer(-phi.d3(u), {u});
    t.offer(phi.d4(u), {u});
  }
  ConditionReport rep;
  rep.hypothesis = Hypothesis::H2prime;
  rep.margin = t.margin;
  rep.witness = t.witness;
  rep.holds = t.margin >= -kTolConvexity;
  rep.grid = grid.str();
  if (rep.holds) {
    const auto h2 = check_H2(phi, grid);
    if (!h2.holds) {
      rep.inconsistent = true;
      std::ostringstream os;
      os << "H2' holds but H2 fails on the same grid (H2 margin " << h2.margin << ")";
      rep.note = os.str();
    }
  }
  return rep;
}

// --- convex cone -------------------------------------------------------------

/// Non-negative combination sum_i lambda_i Phi_i + lambda3 x + lambda4 on the
/// intersection of the intervals.
inline PhiFunction cone_combine(const std::vector<std::pair<PhiFunction, double>>& terms,
                                std::pair<double, double> affine) {
  if (terms.empty()) throw DomainError("cone_combine: no convex term (degenerate affine combination)");
  Interval I = Interval::real_line();
  std::ostringstream nm;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!(terms[i].second >= 0.0) || !std::isfinite(terms[i].second))
      throw DomainError("cone_combine: coefficient of " + terms[i].first.name() + " must be >= 0");
    I = intersect(I, terms[i].first.interval());
    nm << (i ? "+" : "") << terms[i].second << "*" << terms[i].first.name();
  }
  if (!(I.lo < I.hi)) throw DomainError("cone_combine: intervals do not intersect");
  const auto [l3, l4] = affine;
  if (l3 != 0.0 || l4 != 0.0) nm << "+" << l3 << "*x+" << l4;

  auto sum_of = [terms](auto pick) {
    std::vector<std::pair<PhiFunction::Fn, double>> parts;
    for (const auto& [phi, lam] : terms) parts.emplace_back(pick(phi), lam);
    return [parts](double x) {
      double s = 0.0;
      for (const auto& [fn, lam] : parts)
        if (lam != 0.0) s += lam * fn(x);
      return s;
    };
  };
  auto f0 = sum_of([](const PhiFunction& p) { return p.f_fn(); });
  PhiFunction::Fn f = [f0, l3, l4](double x) { return f0(x) + l3 * x + l4; };
  auto g1 = sum_of([](const PhiFunction& p) { return p.d1_fn(); });
  PhiFunction::Fn d1 = [g1, l3](double x) { return g1(x) + l3; };
  PhiFunction::Fn2 breg = [terms](double u, double v) {
    double s = 0.0;
    for (const auto& [phi, lam] : terms)
      if (lam != 0.0) s += lam * phi.bregman(u, v);
    return s;
  };
  bool analytic = true;
  for (const auto& tp : terms) analytic = analytic && tp.first.analytic();
  PhiFunction out(nm.str(), I, f, d1, sum_of([](const PhiFunction& p) { return p.d2_fn(); }),
                  sum_of([](const PhiFunction& p) { return p.d3_fn(); }),
                  sum_of([](const PhiFunction& p) { return p.d4_fn(); }), breg);
  if (!analytic) out = PhiFunction::from_eval(nm.str(), I, f);
  for (const auto& tp : terms)
    if (!tp.first.flag().empty()) out.set_flag(tp.first.name() + ": " + tp.first.flag());
  return out;
}

/// Phi shifted so that Phi(0) = 0 (used for Shannon-type entropies where the
/// value on Dirac masses should vanish). Requires 0 in I.
inline PhiFunction normalized_at_zero(const PhiFunction& phi) {
  if (!phi.interval().contains(0.0)) throw DomainError("normalized_at_zero: 0 is not in " + phi.interval().str());
  const double c = phi(0.0);
  if (c == 0.0) return phi;
  auto f = phi.f_fn();
  PhiFunction out(phi.name() + "-Phi(0)", phi.interval(), [f, c](double x) { return f(x) - c; },
                  phi.d1_fn(), phi.d2_fn(), phi.d3_fn(), phi.d4_fn(), phi.bregman_fn());
  out.set_flag(phi.flag());
  out.set_d1_inverse(phi.d1_inverse());
  return out;
}

}  // namespace phisob
