// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations for the tests. Nothing here calls the
// library's quadrature or summation code.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline double normal_pdf(double x, double mean = 0.0, double var = 1.0) {
  return std::exp(-(x - mean) * (x - mean) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

/// E f(X), X ~ N(mean, var), by composite Simpson on mean +- 14 sd.
inline double gauss_expect(const std::function<double(double)>& f, double mean = 0.0, double var = 1.0,
                           int n = 20000) {
  const double sd = std::sqrt(var);
  const double a = mean - 14 * sd, b = mean + 14 * sd, h = (b - a) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = a + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * f(x) * normal_pdf(x, mean, var);
  }
  return s * h / 3.0;
}

/// E f(N), N ~ Poisson(rate), summed by the pmf recursion up to kmax.
inline double poisson_expect(const std::function<double(double)>& f, double rate, int kmax = 200) {
  double p = std::exp(-rate);
  double s = 0.0;
  for (int k = 0; k <= kmax; ++k) {
    s += p * f(k);
    p *= rate / (k + 1);
  }
  return s;
}

/// E Phi(f) - Phi(E f) with plain loops.
inline double entropy(const std::function<double(double)>& phi, const std::vector<double>& w,
                      const std::vector<double>& v) {
  double ef = 0.0, ephi = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    ef += w[i] * v[i];
    ephi += w[i] * phi(v[i]);
  }
  return ephi - phi(ef);
}

inline double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = e(rng));
  for (auto& x : p) x /= s;
  // Force the sum to one in the last slot.
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) t += p[i];
  p.back() = 1.0 - t;
  return p;
}

inline double normal_sf(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

}  // namespace oracle
