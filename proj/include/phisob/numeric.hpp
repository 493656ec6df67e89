// SPDX-License-Identifier: Apache-2.0
//
// Small numerical kernels shared by every module: fixed-order summation,
// grids, finite differences, Gauss-Hermite rules and Poisson truncation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "phisob/error.hpp"

namespace phisob {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Pairwise (cascade) summation with a fixed split order. The result depends
/// only on the input sequence, never on scheduling.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Weighted sum sum_i w_i x_i reduced pairwise.
inline double pairwise_dot(std::span<const double> w, std::span<const double> x) {
  std::vector<double> prod(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) prod[i] = w[i] * x[i];
  return pairwise_sum(prod);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
  auto e = linspace(std::log(lo), std::log(hi), n);
  for (auto& v : e) v = std::exp(v);
  if (n > 0) {
    e.front() = lo;
    e.back() = hi;
  }
  return e;
}

// --- finite differences --------------------------------------------------

/// Step used for first and second central differences.
inline double fd_step(double x) { return std::cbrt(kEps) * std::max(1.0, std::abs(x)); }

inline double central_d1(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_d2(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double central_d3(const std::function<double(double)>& f, double x, double h) {
  return (f(x + 2 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2 * h)) / (2.0 * h * h * h);
}

inline double central_d4(const std::function<double(double)>& f, double x, double h) {
  return (f(x + 2 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2 * h)) /
         (h * h * h * h);
}

// --- Gauss-Hermite -------------------------------------------------------

/// Nodes and weights of the n-point Gauss rule for the standard normal law:
/// E f(Z) ~ sum_i w_i f(x_i), with sum_i w_i = 1.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Orthonormal probabilists' Hermite polynomials p_0..p_n at x, returned as
// (p_n, p_{n-1}, sum_{k<n} p_k^2).
struct HermiteEval {
  double pn;
  double pn1;
  double sumsq;
};

inline HermiteEval hermite_orthonormal(int n, double x) {
  double pm1 = 0.0;
  double p = 1.0;
  double sumsq = 0.0;
  for (int k = 0; k < n; ++k) {
    sumsq += p * p;
    const double next = (x * p - std::sqrt(static_cast<double>(k)) * pm1) /
                        std::sqrt(static_cast<double>(k + 1));
    pm1 = p;
    p = next;
  }
  return {p, pm1, sumsq};
}

inline GaussRule compute_gauss_hermite(int n) {
  // Golub-Welsch: the nodes are the eigenvalues of the symmetric Jacobi
  // matrix with off-diagonal sqrt(k). Each node is then polished by Newton on
  // p_n and the weight taken as 1 / sum_{k<n} p_k(x)^2, which keeps full
  // relative accuracy in the tails.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k - 1, k) = J(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EvaluationError("gauss_hermite: eigenvalue computation failed");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    for (int it = 0; it < 4; ++it) {
      const auto ev = hermite_orthonormal(n, x);
      const double dp = std::sqrt(static_cast<double>(n)) * ev.pn1;
      if (dp == 0.0) break;
      const double dx = ev.pn / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / hermite_orthonormal(n, x).sumsq;
  }
  // Exact symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace detail

/// Cached n-point Gauss-Hermite rule for N(0,1).
inline const GaussRule& gauss_hermite(int n) {
  if (n < 1 || n > 200) throw DomainError("gauss_hermite: order must be in [1, 200]");
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_hermite(n)).first;
  return it->second;
}

// --- Poisson -------------------------------------------------------------

inline double poisson_log_pmf(double rate, long k) {
  if (rate == 0.0) return k == 0 ? 0.0 : -kInf;
  const double kd = static_cast<double>(k);
  return kd * std::log(rate) - rate - std::lgamma(kd + 1.0);
}

/// Probabilities P(N = k), k = 0..K, where K is the smallest integer whose
/// upper tail P(N > K) is below tail_tol.
inline std::vector<double> poisson_truncated_pmf(double rate, double tail_tol) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("poisson: rate must be finite and >= 0");
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw DomainError("poisson: tail_tol must be in (0,1)");
  if (rate == 0.0) return {1.0};
  // Walk far enough past the mode that the remaining mass is far below
  // double precision, then accumulate tails from the far end.
  const long far = static_cast<long>(rate + 40.0 * std::sqrt(rate) + 60.0);
  std::vector<double> pmf(static_cast<std::size_t>(far) + 1);
  for (long k = 0; k <= far; ++k) pmf[static_cast<std::size_t>(k)] = std::exp(poisson_log_pmf(rate, k));
  double tail = 0.0;  // P(N > k) for the current k, accumulated from far end
  long cut = far;
  for (long k = far; k >= 0; --k) {
    // tail currently equals P(N > k)
    if (tail >= tail_tol) break;
    cut = k;
    tail += pmf[static_cast<std::size_t>(k)];
  }
  pmf.resize(static_cast<std::size_t>(cut) + 1);
  return pmf;
}

// --- misc ----------------------------------------------------------------

/// Upper tail of the standard normal law, P(Z > t).
inline double normal_sf(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

}  // namespace phisob
