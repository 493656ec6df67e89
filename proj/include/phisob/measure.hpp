// SPDX-License-Identifier: Apache-2.0
//
// Probability measures and the expectation engine. A measure is an immutable
// tree (atoms, Gaussian, Poisson law, product, pushforward, exponential tilt,
// convolution). Expectations go through a Rule: a finite list of nodes and
// weights built from the measure and an ExpectationPlan.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/field.hpp"
#include "phisob/numeric.hpp"

namespace phisob {

// --- plans -------------------------------------------------------------------

struct ExpectationPlan {
  enum class Method { exact_atoms, gauss_hermite, poisson_sum, monte_carlo };

  Method method = Method::gauss_hermite;
  int order = 40;            // gauss_hermite points per axis
  double tail_tol = 1e-12;   // poisson_sum omitted mass
  std::size_t n = 200000;    // monte_carlo sample size
  std::uint64_t seed = 0;    // monte_carlo seed

  static ExpectationPlan exact() { return {Method::exact_atoms}; }
  static ExpectationPlan gauss_hermite(int order = 40) { return {Method::gauss_hermite, order}; }
  static ExpectationPlan poisson_sum(double tail_tol = 1e-12) {
    ExpectationPlan p{Method::poisson_sum};
    p.tail_tol = tail_tol;
    return p;
  }
  static ExpectationPlan monte_carlo(std::size_t n, std::uint64_t seed) {
    ExpectationPlan p{Method::monte_carlo};
    p.n = n;
    p.seed = seed;
    return p;
  }

  [[nodiscard]] bool is_monte_carlo() const noexcept { return method == Method::monte_carlo; }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    switch (method) {
      case Method::exact_atoms: os << "exact_atoms"; break;
      case Method::gauss_hermite: os << "gauss_hermite(" << order << ")"; break;
      case Method::poisson_sum: os << "poisson_sum(" << tail_tol << ")"; break;
      case Method::monte_carlo: os << "monte_carlo(" << n << "," << seed << ")"; break;
    }
    return os.str();
  }
};

/// Poisson rules cut where the omitted mass drops below tail_tol times this
/// factor, so that moments of the omitted part stay below tail_tol as well.
inline constexpr double kPoissonMomentMargin = 1e-6;
/// Largest rule the engine will build.
inline constexpr std::size_t kMaxRuleNodes = 8'000'000;

// --- measure tree --------------------------------------------------------------

struct MeasureNode;

class Measure {
public:
  Measure() = default;

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const MeasureNode& node() const { return *node_; }
  [[nodiscard]] bool valid() const noexcept { return static_cast<bool>(node_); }
  [[nodiscard]] std::string describe() const;

  static Measure atoms(std::size_t dim, Vec points, Vec weights);
  static Measure atoms1(const Vec& points, Vec weights) { return atoms(1, points, std::move(weights)); }
  static Measure dirac(Vec point) {
    const auto d = point.size();
    return atoms(d, std::move(point), {1.0});
  }
  static Measure gaussian(Vec mean, Vec cov);
  static Measure gaussian1(double mean, double var) { return gaussian({mean}, {var}); }
  static Measure poisson(double rate);
  static Measure product(std::vector<Measure> factors);
  static Measure pushforward(std::function<void(Point, std::span<double>)> map, std::size_t out_dim, Measure base,
                             std::string name = "theta");
  static Measure pushforward1(std::function<double(double)> map, Measure base, std::string name = "theta") {
    return pushforward([map](Point x, std::span<double> y) { y[0] = map(x[0]); }, 1, std::move(base),
                       std::move(name));
  }
  static Measure tilt(ScalarField B, Measure base);
  static Measure convolution(std::vector<Measure> factors);

private:
  std::shared_ptr<const MeasureNode> node_;
  std::size_t dim_ = 0;
};

struct AtomsLaw {
  std::size_t dim = 1;
  Vec points;  // n x dim, row-major
  Vec weights;
  Vec cdf;
  [[nodiscard]] std::size_t size() const { return weights.size(); }
  [[nodiscard]] Point point(std::size_t i) const { return Point(points.data() + i * dim, dim); }
};

struct GaussianLaw {
  Vec mean;
  Vec cov;      // d x d row-major
  Vec factor;   // A with A A^T = cov
  Vec eigvals;  // ascending
};

struct PoissonLawNode {
  double rate = 1.0;
};

struct ProductLaw {
  std::vector<Measure> factors;
};

struct PushforwardLaw {
  std::function<void(Point, std::span<double>)> map;
  std::size_t out_dim = 1;
  Measure base;
  std::string name;
};

struct TiltLaw {
  ScalarField B;
  Measure base;
  double z = 1.0;      // E_base e^B under the default plan
  double b_sup = 0.0;  // sup of B seen on the default rule
};

struct ConvolutionLaw {
  std::vector<Measure> factors;
};

struct MeasureNode {
  std::variant<AtomsLaw, GaussianLaw, PoissonLawNode, ProductLaw, PushforwardLaw, TiltLaw, ConvolutionLaw> v;
};

// --- rules -------------------------------------------------------------------------

/// Finite quadrature: E f ~ sum_i w_i f(x_i).
struct Rule {
  std::size_t dim = 1;
  Vec nodes;  // size() x dim
  Vec weights;
  bool monte_carlo = false;

  [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
  [[nodiscard]] Point node(std::size_t i) const { return Point(nodes.data() + i * dim, dim); }
};

namespace detail {

struct LeafCensus {
  bool atoms = false;
  bool gaussian = false;
  bool poisson = false;
  std::size_t gaussian_dims = 0;
};

inline void census(const Measure& m, LeafCensus& c) {
  std::visit(
      [&c](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, AtomsLaw>) {
          c.atoms = true;
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          c.gaussian = true;
          c.gaussian_dims += law.mean.size();
        } else if constexpr (std::is_same_v<T, PoissonLawNode>) {
          c.poisson = true;
        } else if constexpr (std::is_same_v<T, ProductLaw> || std::is_same_v<T, ConvolutionLaw>) {
          for (const auto& f : law.factors) census(f, c);
        } else {
          census(law.base, c);
        }
      },
      m.node().v);
}

inline Rule tensor(const std::vector<Rule>& parts) {
  Rule out;
  out.dim = 0;
  std::size_t total = 1;
  for (const auto& r : parts) {
    out.dim += r.dim;
    if (r.size() != 0 && total > kMaxRuleNodes / r.size())
      throw EvaluationError("rule too large: tensor product exceeds node cap");
    total *= r.size();
  }
  out.nodes.resize(total * out.dim);
  out.weights.resize(total);
  std::vector<std::size_t> idx(parts.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    double w = 1.0;
    std::size_t off = k * out.dim;
    for (std::size_t j = 0; j < parts.size(); ++j) {
      const auto& r = parts[j];
      w *= r.weights[idx[j]];
      for (std::size_t c = 0; c < r.dim; ++c) out.nodes[off + c] = r.nodes[idx[j] * r.dim + c];
      off += r.dim;
    }
    out.weights[k] = w;
    // Last factor varies fastest.
    for (std::size_t j = parts.size(); j-- > 0;) {
      if (++idx[j] < parts[j].size()) break;
      idx[j] = 0;
    }
  }
  return out;
}

inline std::size_t thread_cap() {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PHISOB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = static_cast<std::size_t>(v);
  }
  return std::min<std::size_t>(cap, 64);
}

/// Calls body(i) for i in [0, n), split in contiguous chunks across threads.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_parallel = 16384, std::size_t grain = 4096) {
  const std::size_t threads = std::min(thread_cap(), std::max<std::size_t>(1, n / grain));
  if (n < min_parallel || threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

using Rng = std::mt19937_64;

inline void draw(const Measure& m, Rng& rng, double* out);

inline void draw_law(const AtomsLaw& a, Rng& rng, double* out) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng) * a.cdf.back();
  auto it = std::upper_bound(a.cdf.begin(), a.cdf.end(), r);
  std::size_t i = static_cast<std::size_t>(it - a.cdf.begin());
  if (i >= a.size()) i = a.size() - 1;
  for (std::size_t c = 0; c < a.dim; ++c) out[c] = a.points[i * a.dim + c];
}

inline void draw_law(const GaussianLaw& g, Rng& rng, double* out) {
  const std::size_t d = g.mean.size();
  std::normal_distribution<double> z(0.0, 1.0);
  Vec zs(d);
  for (auto& v : zs) v = z(rng);
  for (std::size_t i = 0; i < d; ++i) {
    double s = g.mean[i];
    for (std::size_t j = 0; j < d; ++j) s += g.factor[i * d + j] * zs[j];
    out[i] = s;
  }
}

inline void draw_law(const PoissonLawNode& p, Rng& rng, double* out) {
  std::poisson_distribution<long> pd(p.rate);
  out[0] = static_cast<double>(pd(rng));
}

inline void draw_law(const ProductLaw& p, Rng& rng, double* out) {
  for (const auto& f : p.factors) {
    draw(f, rng, out);
    out += f.dim();
  }
}

inline void draw_law(const ConvolutionLaw& c, Rng& rng, double* out) {
  const std::size_t d = c.factors.front().dim();
  Vec tmp(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = 0.0;
  for (const auto& f : c.factors) {
    draw(f, rng, tmp.data());
    for (std::size_t i = 0; i < d; ++i) out[i] += tmp[i];
  }
}

inline void draw_law(const PushforwardLaw& p, Rng& rng, double* out) {
  Vec tmp(p.base.dim());
  draw(p.base, rng, tmp.data());
  p.map(tmp, std::span<double>(out, p.out_dim));
}

inline constexpr int kRejectionCap = 100000;

inline void draw_law(const TiltLaw& t, Rng& rng, double* out) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t d = t.base.dim();
  for (int it = 0; it < kRejectionCap; ++it) {
    draw(t.base, rng, out);
    const double accept = std::exp(t.B(Point(out, d)) - t.b_sup);
    if (u(rng) < accept) return;
  }
  throw EvaluationError("tilt sampler: rejection cap reached (ill-conditioned tilt)");
}

inline void draw(const Measure& m, Rng& rng, double* out) {
  std::visit([&](const auto& law) { draw_law(law, rng, out); }, m.node().v);
}

inline constexpr std::size_t kShardSize = 1 << 15;

}  // namespace detail

/// n independent draws from mu, reproducible for a fixed seed. The stream is
/// split into fixed-size shards seeded from (seed, shard index), so the result
/// does not depend on the number of threads.
inline Rule sample_rule(const Measure& mu, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample: n must be >= 1");
  Rule r;
  r.dim = mu.dim();
  r.monte_carlo = true;
  if (n > kMaxRuleNodes) throw EvaluationError("sample: n exceeds node cap");
  r.nodes.resize(n * r.dim);
  r.weights.assign(n, 1.0 / static_cast<double>(n));
  const std::size_t shards = (n + detail::kShardSize - 1) / detail::kShardSize;
  detail::parallel_for(
      shards,
      [&](std::size_t s) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(s), 0x70686973u};
        detail::Rng rng(seq);
        const std::size_t lo = s * detail::kShardSize;
        const std::size_t hi = std::min(n, lo + detail::kShardSize);
        for (std::size_t i = lo; i < hi; ++i) detail::draw(mu, rng, r.nodes.data() + i * r.dim);
      },
      2, 1);
  return r;
}

inline std::vector<Vec> sample(const Measure& mu, std::size_t n, std::uint64_t seed) {
  const Rule r = sample_rule(mu, n, seed);
  std::vector<Vec> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].assign(r.node(i).begin(), r.node(i).end());
  return out;
}

namespace detail {

inline Rule build(const Measure& m, const ExpectationPlan& plan);

inline Rule build_law(const AtomsLaw& a, const ExpectationPlan&) {
  return {a.dim, a.points, a.weights, false};
}

inline Rule build_law(const GaussianLaw& g, const ExpectationPlan& plan) {
  if (plan.method != ExpectationPlan::Method::gauss_hermite)
    throw DomainError("plan " + plan.str() + " cannot integrate a Gaussian law");
  const std::size_t d = g.mean.size();
  const auto& gh = gauss_hermite(plan.order);
  std::vector<Rule> axes(d, Rule{1, gh.nodes, gh.weights, false});
  Rule z = tensor(axes);
  Rule out{d, Vec(z.nodes.size()), z.weights, false};
  for (std::size_t k = 0; k < z.size(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = g.mean[i];
      for (std::size_t j = 0; j < d; ++j) s += g.factor[i * d + j] * z.nodes[k * d + j];
      out.nodes[k * d + i] = s;
    }
  }
  return out;
}

inline Rule build_law(const PoissonLawNode& p, const ExpectationPlan& plan) {
  if (plan.method != ExpectationPlan::Method::poisson_sum)
    throw DomainError("plan " + plan.str() + " cannot integrate a Poisson law");
  const Vec pmf = poisson_truncated_pmf(p.rate, plan.tail_tol * kPoissonMomentMargin);
  Rule out{1, Vec(pmf.size()), pmf, false};
  for (std::size_t k = 0; k < pmf.size(); ++k) out.nodes[k] = static_cast<double>(k);
  return out;
}

inline Rule build_law(const ProductLaw& p, const ExpectationPlan& plan) {
  std::vector<Rule> parts;
  for (const auto& f : p.factors) parts.push_back(build(f, plan));
  return tensor(parts);
}

inline Rule build_law(const ConvolutionLaw& c, const ExpectationPlan& plan) {
  std::vector<Rule> parts;
  for (const auto& f : c.factors) parts.push_back(build(f, plan));
  const Rule joint = tensor(parts);
  const std::size_t d = c.factors.front().dim();
  Rule out{d, Vec(joint.size() * d, 0.0), joint.weights, false};
  for (std::size_t k = 0; k < joint.size(); ++k)
    for (std::size_t j = 0; j < parts.size(); ++j)
      for (std::size_t i = 0; i < d; ++i) out.nodes[k * d + i] += joint.nodes[k * joint.dim + j * d + i];
  return out;
}

inline Rule build_law(const PushforwardLaw& p, const ExpectationPlan& plan) {
  const Rule base = build(p.base, plan);
  Rule out{p.out_dim, Vec(base.size() * p.out_dim), base.weights, false};
  for (std::size_t k = 0; k < base.size(); ++k)
    p.map(base.node(k), std::span<double>(out.nodes.data() + k * p.out_dim, p.out_dim));
  return out;
}

inline Rule build_law(const TiltLaw& t, const ExpectationPlan& plan) {
  Rule out = build(t.base, plan);
  Vec b(out.size());
  double bmax = -kInf;
  for (std::size_t k = 0; k < out.size(); ++k) {
    b[k] = t.B(out.node(k));
    if (!std::isfinite(b[k])) throw EvaluationError("tilt: B is not finite at a rule node");
    bmax = std::max(bmax, b[k]);
  }
  bool trivial = true;
  Vec w(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double e = std::exp(b[k] - bmax);
    trivial = trivial && e == 1.0;
    w[k] = out.weights[k] * e;
  }
  if (trivial) return out;  // constant tilt: the law is unchanged
  const double z = pairwise_sum(w);
  for (auto& v : w) v /= z;
  out.weights = std::move(w);
  return out;
}

inline Rule build(const Measure& m, const ExpectationPlan& plan) {
  return std::visit([&](const auto& law) { return build_law(law, plan); }, m.node().v);
}

}  // namespace detail

/// Quadrature plan suited to the measure: exact sums for atoms, Gauss-Hermite
/// (order 40) for Gaussian parts up to dimension 3, truncated sums for Poisson
/// parts, Monte Carlo otherwise.
inline ExpectationPlan default_plan(const Measure& mu, std::uint64_t seed = 0) {
  detail::LeafCensus c;
  detail::census(mu, c);
  if (!c.gaussian && !c.poisson) return ExpectationPlan::exact();
  if (c.gaussian && !c.poisson && c.gaussian_dims <= 3) return ExpectationPlan::gauss_hermite(40);
  if (c.poisson && !c.gaussian) return ExpectationPlan::poisson_sum(1e-12);
  return ExpectationPlan::monte_carlo(200000, seed);
}

/// Builds the quadrature rule for (mu, plan). Plans must match the leaves:
/// exact_atoms needs atoms only, gauss_hermite needs a Gaussian leaf and no
/// Poisson leaf, poisson_sum needs a Poisson leaf and no Gaussian leaf. Atom
/// leaves combine with any plan.
inline Rule build_rule(const Measure& mu, const ExpectationPlan& plan) {
  if (!mu.valid()) throw DomainError("build_rule: empty measure");
  if (plan.is_monte_carlo()) return sample_rule(mu, plan.n, plan.seed);
  detail::LeafCensus c;
  detail::census(mu, c);
  switch (plan.method) {
    case ExpectationPlan::Method::exact_atoms:
      if (c.gaussian || c.poisson) throw DomainError("exact_atoms plan needs a measure built from atoms only");
      break;
    case ExpectationPlan::Method::gauss_hermite:
      if (!c.gaussian) throw DomainError("gauss_hermite plan needs a Gaussian component");
      if (c.poisson) throw DomainError("gauss_hermite plan cannot integrate a Poisson component");
      break;
    case ExpectationPlan::Method::poisson_sum:
      if (!c.poisson) throw DomainError("poisson_sum plan needs a Poisson component");
      if (c.gaussian) throw DomainError("poisson_sum plan cannot integrate a Gaussian component");
      break;
    default: break;
  }
  return detail::build(mu, plan);
}

/// f evaluated at every node; non-finite values raise EvaluationError.
inline Vec evaluate(const Rule& r, const std::function<double(Point)>& f) {
  Vec v(r.size());
  detail::parallel_for(r.size(), [&](std::size_t k) { v[k] = f(r.node(k)); });
  for (double x : v)
    if (!std::isfinite(x)) throw EvaluationError("integrand is not finite at a rule node");
  return v;
}

inline double expect(const Rule& r, const Vec& values) { return pairwise_dot(r.weights, values); }

inline double expect(const Rule& r, const std::function<double(Point)>& f) { return expect(r, evaluate(r, f)); }

inline double expect(const Measure& mu, const ScalarField& f, const ExpectationPlan& plan) {
  if (f.arity() != mu.dim()) throw DomainError("expect: field arity does not match measure dimension");
  return expect(build_rule(mu, plan), f.eval_fn());
}

/// Standard error of E f for Monte Carlo rules (0 for deterministic rules).
inline double standard_error(const Rule& r, const Vec& values) {
  if (!r.monte_carlo || r.size() < 2) return 0.0;
  const double m = expect(r, values);
  Vec sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m) * (values[i] - m);
  const double n = static_cast<double>(r.size());
  return std::sqrt(pairwise_sum(sq) / (n - 1.0) / n);
}

// --- factories -------------------------------------------------------------------

inline Measure Measure::atoms(std::size_t dim, Vec points, Vec weights) {
  if (dim == 0) throw DomainError("atoms: dimension must be >= 1");
  if (weights.empty()) throw DomainError("atoms: no atoms");
  if (points.size() != weights.size() * dim) throw DomainError("atoms: points and weights disagree in size");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("atoms: weights must be finite and >= 0");
  for (double p : points)
    if (!std::isfinite(p)) throw DomainError("atoms: points must be finite");
  if (std::abs(pairwise_sum(weights) - 1.0) > 1e-12) throw DomainError("atoms: weights must sum to 1 (within 1e-12)");
  AtomsLaw a{dim, std::move(points), std::move(weights), {}};
  a.cdf.resize(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) a.cdf[i] = (s += a.weights[i]);
  Measure m;
  m.dim_ = dim;
  m.node_ = std::make_shared<MeasureNode>(MeasureNode{std::move(a)});
  return m;
}

inline Measure Measure::gaussian(Vec mean, Vec cov) {
  const std::size_t d = mean.size();
  if (d == 0) throw DomainError("gaussian: empty mean");
  if (cov.size() != d * d) throw DomainError("gaussian: covariance must be d x d");
  Eigen::MatrixXd S(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (std::abs(cov[i * d + j] - cov[j * d + i]) > 1e-12 * (1.0 + std::abs(cov[i * d + j])))
        throw DomainError("gaussian: covariance must be symmetric");
      S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov[i * d + j];
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw EvaluationError("gaussian: eigen decomposition failed");
  const auto& ev = es.eigenvalues();
  if (ev.minCoeff() < -1e-12) throw DomainError("gaussian: covariance must be positive semidefinite");
  GaussianLaw g;
  g.mean = std::move(mean);
  g.cov = std::move(cov);
  g.factor.assign(d * d, 0.0);
  g.eigvals.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    g.eigvals[k] = ev(kk);
    const double s = std::sqrt(std::max(0.0, ev(kk)));
    for (std::size_t i = 0; i < d; ++i)
      g.factor[i * d + k] = es.eigenvectors()(static_cast<Eigen::Index>(i), kk) * s;
  }
  Measure m;
  m.dim_ = d;
  m.node_ = std::make_shared<MeasureNode>(MeasureNode{std::move(g)});
  return m;
}

inline Measure Measure::poisson(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("poisson: rate must be > 0");
  Measure m;
  m.dim_ = 1;
  m.node_ = std::make_shared<MeasureNode>(MeasureNode{PoissonLawNode{rate}});
  return m;
}

inline Measure Measure::product(std::vector<Measure> factors) {
  if (factors.empty()) throw DomainError("product: no factors");
  std::size_t d = 0;
  for (const auto& f : factors) {
    if (!f.valid()) throw DomainError("product: empty factor");
    d += f.dim();
  }
  Measure m;
  m.dim_ = d;
  m.node_ = std::make_shared<MeasureNode>(MeasureNode{ProductLaw{std::move(factors)}});
  return m;
}

inline Measure Measure::pushforward(std::function<void(Point, std::span<double>)> map, std::size_t out_dim,
                                    Measure base, std::string name) {
  if (!map || out_dim == 0 || !base.valid()) throw DomainError("pushforward: invalid map or base");
  Measure m;
  m.dim_ = out_dim;
  m.node_ = std::make_shared<MeasureNode>(MeasureNode{PushforwardLaw{std::move(map), out_dim, std::move(base),
                                                                     std::move(name)}});
  return m;
}

inline Measure Measure::tilt(ScalarField B, Measure base) {
  if (!base.valid()) throw DomainError("tilt: empty base");
  if (B.arity() != base.dim()) throw DomainError("tilt: B arity does not match base dimension");
  const Rule r = build_rule(base, default_plan(base));
  const Vec b = evaluate(r, B.eval_fn());
  const double bmax = *std::max_element(b.begin(), b.end());
  Vec e(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) e[i] = std::exp(b[i] - bmax);
  const double z = expect(r, e) * std::exp(bmax);
  if (!(z > 0.0) || !std::isfinite(z)) throw EvaluationError("tilt: normalizer Z is not finite and positive");
  Measure m;
  m.dim_ = base.dim();
  m.node_ = std::make_shared<MeasureNode>(MeasureNode{TiltLaw{std::move(B), std::move(base), z, bmax}});
  return m;
}

inline Measure Measure::convolution(std::vector<Measure> factors) {
  if (factors.empty()) throw DomainError("convolution: no factors");
  const std::size_t d = factors.front().dim();
  for (const auto& f : factors)
    if (!f.valid() || f.dim() != d) throw DomainError("convolution: factors must share a dimension");
  Measure m;
  m.dim_ = d;
  m.node_ = std::make_shared<MeasureNode>(MeasureNode{ConvolutionLaw{std::move(factors)}});
  return m;
}

inline std::string Measure::describe() const {
  if (!node_) return "empty";
  std::ostringstream os;
  std::visit(
      [&os](const auto& law) {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, AtomsLaw>) {
          os << "Atoms(" << law.size() << " in R^" << law.dim << ")";
        } else if constexpr (std::is_same_v<T, GaussianLaw>) {
          os << "Gaussian(d=" << law.mean.size() << ")";
        } else if constexpr (std::is_same_v<T, PoissonLawNode>) {
          os << "Poisson(" << law.rate << ")";
        } else if constexpr (std::is_same_v<T, ProductLaw>) {
          os << "Product(";
          for (std::size_t i = 0; i < law.factors.size(); ++i) os << (i ? "," : "") << law.factors[i].describe();
          os << ")";
        } else if constexpr (std::is_same_v<T, ConvolutionLaw>) {
          os << "Convolution(";
          for (std::size_t i = 0; i < law.factors.size(); ++i) os << (i ? "," : "") << law.factors[i].describe();
          os << ")";
        } else if constexpr (std::is_same_v<T, PushforwardLaw>) {
          os << "Pushforward(" << law.name << "," << law.base.describe() << ")";
        } else {
          os << "Tilt(" << law.B.name() << "," << law.base.describe() << ")";
        }
      },
      node_->v);
  return os.str();
}

/// Tilt normalizer E_base e^B (cached at construction).
inline double tilt_normalizer(const Measure& m) {
  const auto* t = std::get_if<TiltLaw>(&m.node().v);
  if (!t) throw DomainError("tilt_normalizer: measure is not a tilt");
  return t->z;
}

inline const GaussianLaw* as_gaussian(const Measure& m) { return std::get_if<GaussianLaw>(&m.node().v); }
inline const AtomsLaw* as_atoms(const Measure& m) { return std::get_if<AtomsLaw>(&m.node().v); }
inline const PoissonLawNode* as_poisson(const Measure& m) { return std::get_if<PoissonLawNode>(&m.node().v); }

// --- log-concavity -------------------------------------------------------------------

namespace detail {

inline double min_eigenvalue(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EvaluationError("eigenvalue computation failed");
  return es.eigenvalues().minCoeff();
}

}  // namespace detail

/// Finite-difference Hessian of W at x: five-point stencil on the diagonal,
/// four-point stencil off it.
inline Eigen::MatrixXd fd_hessian(const ScalarField& W, Point x) {
  const std::size_t d = W.arity();
  Eigen::MatrixXd H(d, d);
  Vec y(x.begin(), x.end());
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    y[i] += di;
    y[j] += dj;
    const double v = W(y);
    y[i] = x[i];
    y[j] = x[j];
    return v;
  };
  const double f0 = W(x);
  for (std::size_t i = 0; i < d; ++i) {
    const double h = std::pow(kEps, 1.0 / 6.0) * std::max(1.0, std::abs(x[i]));
    const double v = (-at(i, 2 * h, i, 0) + 16 * at(i, h, i, 0) - 30 * f0 + 16 * at(i, -h, i, 0) - at(i, -2 * h, i, 0)) /
                     (12 * h * h);
    H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = v;
    for (std::size_t j = 0; j < i; ++j) {
      const double hj = std::pow(kEps, 0.25) * std::max(1.0, std::abs(x[j]));
      const double hi = std::pow(kEps, 0.25) * std::max(1.0, std::abs(x[i]));
      const double m = (at(i, hi, j, hj) - at(i, hi, j, -hj) - at(i, -hi, j, hj) + at(i, -hi, j, -hj)) / (4 * hi * hj);
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m;
      H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = m;
    }
  }
  if (!H.allFinite()) throw EvaluationError("log_concavity_rho: Hessian is not finite");
  return H;
}

/// Smallest Hessian eigenvalue of the potential W over the grid: the
/// curvature constant rho with Hess W >= rho I on the sampled points.
inline double log_concavity_rho(const ScalarField& W, const std::vector<Vec>& grid) {
  if (grid.empty()) throw DomainError("log_concavity_rho: empty grid");
  double rho = kInf;
  for (const auto& x : grid) {
    if (x.size() != W.arity()) throw DomainError("log_concavity_rho: grid point dimension mismatch");
    rho = std::min(rho, detail::min_eigenvalue(fd_hessian(W, x)));
  }
  return rho;
}

/// rho for N(m, Sigma): 1 / max eigenvalue of Sigma.
inline double gaussian_rho(const Measure& mu) {
  const auto* g = as_gaussian(mu);
  if (!g) throw DomainError("gaussian_rho: measure is not Gaussian");
  const double top = g->eigvals.back();
  if (!(top > 0.0)) throw DomainError("gaussian_rho: degenerate covariance");
  return 1.0 / top;
}

}  // namespace phisob
