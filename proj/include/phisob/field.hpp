// SPDX-License-Identifier: Apache-2.0
//
// Real-valued test functions on R^d with optional analytic gradients.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/numeric.hpp"
#include "phisob/phi.hpp"

namespace phisob {

using Vec = std::vector<double>;
using Point = std::span<const double>;

class ScalarField {
public:
  using Eval = std::function<double(Point)>;
  using Grad = std::function<void(Point, std::span<double>)>;

  ScalarField() = default;
  ScalarField(std::size_t arity, Eval eval, Grad grad = {}, Interval codomain = Interval::real_line(),
              std::string name = "f")
      : arity_(arity), eval_(std::move(eval)), grad_(std::move(grad)), codomain_(codomain),
        name_(std::move(name)) {
    if (arity_ == 0) throw DomainError("ScalarField: arity must be >= 1");
  }

  [[nodiscard]] std::size_t arity() const noexcept { return arity_; }
  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] const Interval& codomain() const noexcept { return codomain_; }
  [[nodiscard]] bool has_grad() const noexcept { return static_cast<bool>(grad_); }
  [[nodiscard]] bool valid() const noexcept { return static_cast<bool>(eval_); }

  [[nodiscard]] double operator()(Point x) const { return eval_(x); }
  [[nodiscard]] double operator()(double x) const { return eval_(Point(&x, 1)); }

  /// Analytic gradient when present, otherwise central differences.
  void gradient(Point x, std::span<double> g) const {
    if (grad_) {
      grad_(x, g);
      return;
    }
    fd_gradient(x, g);
  }
  [[nodiscard]] Vec gradient(Point x) const {
    Vec g(arity_);
    gradient(x, g);
    return g;
  }
  [[nodiscard]] double derivative(double x) const {
    double g = 0.0;
    gradient(Point(&x, 1), std::span<double>(&g, 1));
    return g;
  }

  /// Central-difference gradient, ignoring any analytic gradient.
  void fd_gradient(Point x, std::span<double> g) const {
    Vec y(x.begin(), x.end());
    for (std::size_t i = 0; i < arity_; ++i) {
      const double h = fd_step(x[i]);
      y[i] = x[i] + h;
      const double fp = eval_(y);
      y[i] = x[i] - h;
      const double fm = eval_(y);
      y[i] = x[i];
      g[i] = (fp - fm) / (2.0 * h);
    }
  }

  [[nodiscard]] ScalarField renamed(std::string name) const {
    ScalarField out = *this;
    out.name_ = std::move(name);
    return out;
  }

  [[nodiscard]] ScalarField with_codomain(Interval I) const {
    ScalarField out = *this;
    out.codomain_ = I;
    return out;
  }

  [[nodiscard]] const Eval& eval_fn() const noexcept { return eval_; }
  [[nodiscard]] const Grad& grad_fn() const noexcept { return grad_; }

private:
  std::size_t arity_ = 1;
  Eval eval_;
  Grad grad_;
  Interval codomain_;
  std::string name_ = "f";
};

/// Largest relative disagreement |g - fd| / (1 + |g|) between the analytic
/// gradient and central differences over the probe points.
inline double grad_mismatch(const ScalarField& f, const std::vector<Vec>& probes) {
  if (!f.has_grad()) return 0.0;
  double worst = 0.0;
  Vec g(f.arity());
  Vec fd(f.arity());
  for (const auto& x : probes) {
    f.gradient(x, g);
    f.fd_gradient(x, fd);
    for (std::size_t i = 0; i < g.size(); ++i)
      worst = std::max(worst, std::abs(g[i] - fd[i]) / (1.0 + std::abs(g[i])));
  }
  return worst;
}

// --- one-dimensional families ---------------------------------------------

inline ScalarField field1(std::string name, std::function<double(double)> f,
                          std::function<double(double)> df = {}, Interval codomain = Interval::real_line()) {
  ScalarField::Grad g;
  if (df) g = [df](Point x, std::span<double> out) { out[0] = df(x[0]); };
  return ScalarField(1, [f](Point x) { return f(x[0]); }, g, codomain, std::move(name));
}

inline ScalarField constant_field(double c, std::size_t arity = 1) {
  std::ostringstream nm;
  nm << "const(" << c << ")";
  return ScalarField(
      arity, [c](Point) { return c; },
      [](Point, std::span<double> g) {
        for (auto& v : g) v = 0.0;
      },
      {c, c}, nm.str());
}

/// x -> a x + b.
inline ScalarField linear_field(double a = 1.0, double b = 0.0) {
  std::ostringstream nm;
  nm << "linear(" << a << "," << b << ")";
  return field1(nm.str(), [a, b](double x) { return a * x + b; }, [a](double) { return a; });
}

/// x -> exp(theta x + s). Positive.
inline ScalarField exponential_field(double theta, double s = 0.0) {
  std::ostringstream nm;
  nm << "exp(" << theta << "x+" << s << ")";
  return field1(nm.str(), [theta, s](double x) { return std::exp(theta * x + s); },
                [theta, s](double x) { return theta * std::exp(theta * x + s); }, {0.0, kInf});
}

/// x -> a sin(w x + phase) + b.
inline ScalarField sine_field(double a = 1.0, double w = 1.0, double phase = 0.0, double b = 0.0) {
  std::ostringstream nm;
  nm << "sin(" << a << "," << w << "," << phase << "," << b << ")";
  return field1(nm.str(), [=](double x) { return a * std::sin(w * x + phase) + b; },
                [=](double x) { return a * w * std::cos(w * x + phase); }, {b - std::abs(a), b + std::abs(a)});
}

/// Integer-indexed table: k -> values[k] for 0 <= k < n, values.back() for
/// k >= n and values.front() for k < 0. Arguments are rounded to the nearest
/// integer.
inline ScalarField tabulated_field(Vec values, std::string name = "table") {
  if (values.empty()) throw DomainError("tabulated_field: empty table");
  double lo = values[0];
  double hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return ScalarField(
      1,
      [values = std::move(values)](Point x) {
        const double k = std::nearbyint(x[0]);
        if (k < 0) return values.front();
        if (k >= static_cast<double>(values.size())) return values.back();
        return values[static_cast<std::size_t>(k)];
      },
      {}, {lo, hi}, std::move(name));
}

/// Coordinate projection (x_1..x_d) -> x_i.
inline ScalarField coordinate_field(std::size_t arity, std::size_t i) {
  if (i >= arity) throw DomainError("coordinate_field: index out of range");
  return ScalarField(
      arity, [i](Point x) { return x[i]; },
      [i](Point, std::span<double> g) {
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = k == i ? 1.0 : 0.0;
      },
      Interval::real_line(), "x" + std::to_string(i + 1));
}

/// g o f for scalar g with derivative dg.
inline ScalarField compose(std::function<double(double)> g, std::function<double(double)> dg, const ScalarField& f,
                           std::string name, Interval codomain = Interval::real_line()) {
  ScalarField::Grad grad;
  if (dg) {
    grad = [g, dg, f](Point x, std::span<double> out) {
      f.gradient(x, out);
      const double s = dg(f(x));
      for (auto& v : out) v *= s;
    };
  }
  return ScalarField(
      f.arity(), [g, f](Point x) { return g(f(x)); }, grad, codomain, std::move(name));
}

}  // namespace phisob
