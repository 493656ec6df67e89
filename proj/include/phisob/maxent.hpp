// SPDX-License-Identifier: Apache-2.0
//
// Maximum Shannon Phi-entropy under one linear constraint, and sub-additivity
// experiments on finite joint laws.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/field.hpp"
#include "phisob/functionals.hpp"
#include "phisob/measure.hpp"
#include "phisob/numeric.hpp"
#include "phisob/phi.hpp"

namespace phisob {

/// Maximize H^Phi(f) = -int Phi-hat(f) dx over densities on a 1-d grid with
/// int W f dx = c. The grid integrates by the trapezoid rule.
struct MaxentProblem {
  PhiFunction phi;
  ScalarField W;
  double c = 0.0;
  Vec grid;
  int max_iter = 200;
};

struct MaxentStep {
  int iter = 0;
  double lambda = 0.0;
  double beta = 0.0;
  double dual = 0.0;
  double residual = 0.0;
  double step = 0.0;
};

struct MaxentResult {
  Vec x;
  Vec f;
  double lambda = 0.0;
  double beta = 0.0;
  double mass = 0.0;    // int f dx
  double moment = 0.0;  // int W f dx
  double entropy = 0.0; // H^Phi(f)
  int iterations = 0;
  bool clipped = false; // the formal inverse left the domain somewhere
  std::vector<MaxentStep> trace;
};

namespace detail {

inline Vec trapezoid_weights(const Vec& x) {
  const std::size_t n = x.size();
  Vec w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

/// Inverse of u -> Phi-hat'(u) on [lo, inf), lo = max(inf I, 0). Values of y
/// at or below Phi-hat'(lo) map to lo (clipping).
class HatInverse {
public:
  explicit HatInverse(const PhiFunction& phi) : phi_(normalized_at_zero(phi)) {
    lo_ = std::max(phi_.interval().lo, 0.0);
    shift_ = phi_(1.0);
    g_lo_ = phi_.d1(lo_) - shift_;
    if (std::isnan(g_lo_)) g_lo_ = -kInf;
  }

  [[nodiscard]] double lo() const { return lo_; }
  [[nodiscard]] double g(double u) const { return phi_.d1(u) - shift_; }
  [[nodiscard]] double hat(double u) const { return phi_(u) - shift_ * u; }
  [[nodiscard]] double d2(double u) const { return phi_.d2(u); }

  /// Returns lo when clipped.
  [[nodiscard]] double operator()(double y, bool* clipped = nullptr) const {
    if (y <= g_lo_) {
      if (clipped) *clipped = true;
      return lo_;
    }
    if (const auto& di = phi_.d1_inverse()) return std::max(lo_, di(y + shift_));
    // Bisection on s = log(u - lo).
    double hi = 0.0;
    while (g(lo_ + std::exp(hi)) < y) {
      hi += 1.0 + std::abs(hi);
      if (hi > 700.0) throw EvaluationError("maxent: Phi-hat' does not reach " + std::to_string(y));
    }
    double a = -745.0;
    double b = hi;
    for (int k = 0; k < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++k) {
      const double m = 0.5 * (a + b);
      if (g(lo_ + std::exp(m)) < y) a = m;
      else b = m;
    }
    return lo_ + std::exp(0.5 * (a + b));
  }

private:
  PhiFunction phi_;
  double lo_ = 0.0;
  double shift_ = 0.0;
  double g_lo_ = -kInf;
};

}  // namespace detail

inline constexpr double kMaxentMassTol = 1e-10;
inline constexpr double kMaxentMomentTol = 1e-9;

/// Damped Newton on the convex dual
/// D(lambda, beta) = int Phi-hat*(-lambda - beta W) dx + lambda + beta c,
/// whose minimizer gives f = (Phi-hat')^{-1}(-lambda - beta W).
inline MaxentResult solve_maxent(const MaxentProblem& pb) {
  const auto& x = pb.grid;
  if (x.size() < 3) throw DomainError("solve_maxent: grid needs at least 3 points");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw DomainError("solve_maxent: grid must be increasing");
  if (!pb.W.valid() || pb.W.arity() != 1) throw DomainError("solve_maxent: W must be a function on R");
  if (!(pb.phi.interval().lo <= 0.0 && pb.phi.interval().hi == kInf))
    throw DomainError("solve_maxent: Phi must be defined on [0, inf)");
  const std::size_t n = x.size();
  const Vec w = detail::trapezoid_weights(x);
  Vec W(n);
  for (std::size_t i = 0; i < n; ++i) W[i] = pb.W(x[i]);
  const auto [wmin, wmax] = std::minmax_element(W.begin(), W.end());
  if (!(pb.c > *wmin && pb.c < *wmax))
    throw DomainError("solve_maxent: constraint value is infeasible (outside the range of W on the grid)");

  const detail::HatInverse inv(pb.phi);
  Vec f(n);
  auto densities = [&](double lam, double bet, bool* clipped) {
    for (std::size_t i = 0; i < n; ++i) f[i] = inv(-lam - bet * W[i], clipped);
  };
  auto dual = [&](double lam, double bet) {
    densities(lam, bet, nullptr);
    Vec t(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = -lam - bet * W[i];
      t[i] = w[i] * (f[i] * y - inv.hat(f[i]));
    }
    return pairwise_sum(t) + lam + bet * pb.c;
  };

  MaxentResult res;
  res.x = x;
  const double len = x.back() - x.front();
  double lam = -inv.g(1.0 / len);
  double bet = 0.0;
  double dval = dual(lam, bet);
  const double cscale = std::max(1.0, std::abs(pb.c));
  for (int it = 1; it <= pb.max_iter; ++it) {
    densities(lam, bet, nullptr);
    double m0 = 0, m1 = 0, h00 = 0, h01 = 0, h11 = 0;
    Vec a0(n), a1(n), b00(n), b01(n), b11(n);
    for (std::size_t i = 0; i < n; ++i) {
      a0[i] = w[i] * f[i];
      a1[i] = w[i] * W[i] * f[i];
      const double s = f[i] > inv.lo() ? w[i] / inv.d2(f[i]) : 0.0;
      b00[i] = s;
      b01[i] = s * W[i];
      b11[i] = s * W[i] * W[i];
    }
    m0 = pairwise_sum(a0);
    m1 = pairwise_sum(a1);
    h00 = pairwise_sum(b00);
    h01 = pairwise_sum(b01);
    h11 = pairwise_sum(b11);
    const double g0 = 1.0 - m0;
    const double g1 = pb.c - m1;
    const double resid = std::max(std::abs(g0), std::abs(g1) / cscale);
    res.trace.push_back({it, lam, bet, dval, resid, 0.0});
    if (std::abs(g0) <= kMaxentMassTol && std::abs(g1) <= kMaxentMomentTol * cscale) {
      res.iterations = it;
      break;
    }
    // Newton direction: H d = -grad D, grad D = (g0, g1).
    const double reg = 1e-14 * (h00 + h11) + 1e-300;
    const double a = h00 + reg, b = h01, d = h11 + reg;
    const double det = a * d - b * b;
    double dl = -(d * g0 - b * g1) / det;
    double db = -(-b * g0 + a * g1) / det;
    if (!std::isfinite(dl) || !std::isfinite(db)) {
      dl = -g0;
      db = -g1;
    }
    const double slope = g0 * dl + g1 * db;
    double step = 1.0;
    double next = kInf;
    for (int k = 0; k < 60; ++k) {
      next = dual(lam + step * dl, bet + step * db);
      if (std::isfinite(next) && next <= dval + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!std::isfinite(next)) throw EvaluationError("solve_maxent: line search failed");
    res.trace.back().step = step;
    // Stalled on roundoff while still outside tolerance.
    if (step < 1e-15) break;
    lam += step * dl;
    bet += step * db;
    dval = next;
    res.iterations = it;
  }
  bool clipped = false;
  densities(lam, bet, &clipped);
  Vec a0(n), a1(n), hs(n);
  for (std::size_t i = 0; i < n; ++i) {
    a0[i] = w[i] * f[i];
    a1[i] = w[i] * W[i] * f[i];
    hs[i] = -w[i] * inv.hat(f[i]);
  }
  res.mass = pairwise_sum(a0);
  res.moment = pairwise_sum(a1);
  if (!(std::abs(res.mass - 1.0) <= 1e-8 && std::abs(res.moment - pb.c) <= 1e-6 * cscale))
    throw EvaluationError("solve_maxent: no convergence after " + std::to_string(pb.max_iter) + " iterations");
  res.f = f;
  res.lambda = lam;
  res.beta = bet;
  res.clipped = clipped;
  res.entropy = pairwise_sum(hs);
  return res;
}

// --- sub-additivity ---------------------------------------------------------------

struct SubadditivityReport {
  std::size_t factors = 0;
  double h_joint = 0.0;
  Vec h_marginals;
  double gap_shannon = 0.0;   // sum_i H(X_i) - H(X)
  Vec gap_entropy;            // Ent_mu(f) - sum_i Ent_{mu_i}(int f d mu_{\i}), per trial
  double min_gap_entropy = kInf;
  double tensor_gap = 0.0;    // same gap for a tensor-product f
  bool asserted = false;      // signs are asserted only for x log x
  bool holds_shannon = true;
  bool holds_entropy = true;
  bool pass = true;
};

namespace detail {

struct Marginals {
  std::vector<Vec> values;   // support of each coordinate
  std::vector<Vec> weights;  // marginal law of each coordinate
  std::vector<std::vector<std::size_t>> index;  // atom -> support index per coordinate
};

inline Marginals marginals(const AtomsLaw& a) {
  Marginals m;
  const std::size_t d = a.dim;
  m.values.resize(d);
  m.weights.resize(d);
  m.index.assign(d, std::vector<std::size_t>(a.size()));
  for (std::size_t c = 0; c < d; ++c) {
    Vec v;
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(a.points[i * d + c]);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    m.values[c] = v;
    m.weights[c].assign(v.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto k = static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), a.points[i * d + c]) - v.begin());
      m.index[c][i] = k;
      m.weights[c][k] += a.weights[i];
    }
  }
  return m;
}

/// Ent_mu(f) - sum_i Ent_{mu_i}(int f d mu_{\i}) for mu the product of the
/// marginals, f given as a table over the product grid (last coordinate fastest).
inline double product_gap(const PhiFunction& phi, const Marginals& m, const Vec& table) {
  const std::size_t d = m.values.size();
  std::vector<Rule> rules;
  for (std::size_t c = 0; c < d; ++c) rules.push_back(Rule{1, m.values[c], m.weights[c], false});
  const Rule joint = tensor(rules);
  const double total = entropy_from(phi, joint.weights, table);
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t c = d; c-- > 1;) stride[c - 1] = stride[c] * m.values[c].size();
  double parts = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const std::size_t k = m.values[c].size();
    Vec g(k, 0.0);
    for (std::size_t idx = 0; idx < table.size(); ++idx) {
      const std::size_t ic = (idx / stride[c]) % k;
      if (m.weights[c][ic] > 0.0) g[ic] += joint.weights[idx] / m.weights[c][ic] * table[idx];
    }
    parts += entropy_from(phi, m.weights[c], g);
  }
  return total - parts;
}

}  // namespace detail

/// Shannon sub-additivity H(X) <= sum_i H(X_i) on the joint law, and the
/// reversed entropy inequality Ent_mu(f) >= sum_i Ent_{mu_i}(int f d mu_{\i})
/// for random positive f on the product of the marginals. Signs are asserted
/// for x log x only; for other Phi the gaps are tabulated.
inline SubadditivityReport subadditivity_experiment(const PhiFunction& phi, const Measure& joint,
                                                    std::size_t n_trials = 100, std::uint64_t seed = 0,
                                                    double tol = 1e-12) {
  const auto* a = as_atoms(joint);
  if (!a) throw DomainError("subadditivity_experiment: joint law must be a finite atom measure");
  SubadditivityReport rep;
  rep.factors = a->dim;
  rep.asserted = phi.name() == "xlogx";
  const auto m = detail::marginals(*a);
  // Merge repeated atoms before taking H of the joint.
  std::map<Vec, double> merged;
  for (std::size_t i = 0; i < a->size(); ++i) merged[Vec(a->point(i).begin(), a->point(i).end())] += a->weights[i];
  Vec pj;
  for (const auto& kv : merged) pj.push_back(kv.second);
  rep.h_joint = shannon_phi_entropy(phi, pj);
  double hs = 0.0;
  for (const auto& mw : m.weights) {
    rep.h_marginals.push_back(shannon_phi_entropy(phi, mw));
    hs += rep.h_marginals.back();
  }
  rep.gap_shannon = hs - rep.h_joint;

  std::size_t cells = 1;
  for (const auto& v : m.values) cells *= v.size();
  if (cells > kMaxRuleNodes) throw DomainError("subadditivity_experiment: product grid too large");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  Vec table(cells);
  for (std::size_t t = 0; t < n_trials; ++t) {
    for (auto& v : table) v = u(rng);
    rep.gap_entropy.push_back(detail::product_gap(phi, m, table));
    rep.min_gap_entropy = std::min(rep.min_gap_entropy, rep.gap_entropy.back());
  }
  // Tensor product f(x) = prod_i g_i(x_i).
  std::vector<Vec> gs;
  for (const auto& v : m.values) {
    Vec g(v.size());
    for (auto& x : g) x = u(rng);
    gs.push_back(g);
  }
  std::vector<std::size_t> stride(m.values.size(), 1);
  for (std::size_t c = m.values.size(); c-- > 1;) stride[c - 1] = stride[c] * m.values[c].size();
  for (std::size_t idx = 0; idx < cells; ++idx) {
    double p = 1.0;
    for (std::size_t c = 0; c < m.values.size(); ++c) p *= gs[c][(idx / stride[c]) % m.values[c].size()];
    table[idx] = p;
  }
  rep.tensor_gap = detail::product_gap(phi, m, table);

  rep.holds_shannon = rep.gap_shannon >= -tol;
  rep.holds_entropy = n_trials == 0 || rep.min_gap_entropy >= -tol;
  rep.pass = !rep.asserted || (rep.holds_shannon && rep.holds_entropy && std::abs(rep.tensor_gap) <= 1e-10);
  return rep;
}

}  // namespace phisob
