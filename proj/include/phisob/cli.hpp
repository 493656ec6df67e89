// SPDX-License-Identifier: Apache-2.0
//
// Subcommand implementations behind tools/phisob.cpp.
//
// Exit codes: 0 pass, 1 verified failure or hypothesis refusal, 2 parse
// error, 3 evaluation error.
#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "phisob/concentration.hpp"
#include "phisob/config.hpp"
#include "phisob/io.hpp"
#include "phisob/maxent.hpp"
#include "phisob/semigroup.hpp"
#include "phisob/verify.hpp"

namespace phisob::cli {

enum Exit : int { kPass = 0, kFail = 1, kParse = 2, kEval = 3 };

struct GlobalOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::optional<double> tol;  // overrides the absolute tolerance
  std::string out_dir;
  std::string format = "csv";
};

/// Writes the table under out_dir, or prints it when no directory is set.
inline void emit(const GlobalOptions& g, const std::string& stem, const io::Table& t, std::ostream& out) {
  if (g.out_dir.empty()) {
    out << (g.format == "json" ? t.json().dump(2) + "\n" : t.csv());
    return;
  }
  out << "wrote " << io::write_table(g.out_dir, stem, t, g.format).string() << "\n";
}

// --- verify ----------------------------------------------------------------

namespace detail {

inline const config::MeasureSpec& expect_kind(const config::CheckSpec& c, const char* kind) {
  if (c.measure.kind != kind)
    throw DomainError(c.inequality + " needs a " + kind + " measure, got " + c.measure.kind);
  return c.measure;
}

inline Measure jump_law(const config::CheckSpec& c) { return Measure::atoms1(c.jumps, c.jump_weights); }

}  // namespace detail

/// Runs one configured check. Hypothesis refusals propagate as HypothesisError.
inline std::vector<DeficitReport> run_check(const config::CheckSpec& c, std::uint64_t seed, const Tolerance& tol) {
  using config::build_field;
  using config::build_measure;
  using config::build_plan;
  const std::string& q = c.inequality;
  const PhiFunction phi = q == "beckner" || q == "poisson_l1" ? xlogx() : builtin_phi(c.phi);
  std::vector<DeficitReport> out;
  if (q == "gaussian") {
    const auto& m = detail::expect_kind(c, "gaussian");
    out.push_back(verify_gaussian(phi, m.mean, m.cov, build_field(c.f, m.mean.size()),
                                  build_plan(c.plan, seed, ExpectationPlan::gauss_hermite(40)), tol));
  } else if (q == "brownian") {
    out.push_back(verify_brownian_multitime(phi, c.times, build_field(c.f, c.times.size()),
                                            build_plan(c.plan, seed, {}), tol));
  } else if (q == "poisson") {
    out.push_back(verify_poisson(phi, c.rate, build_field(c.f, 1),
                                 build_plan(c.plan, seed, ExpectationPlan::poisson_sum()), tol));
  } else if (q == "levy") {
    out.push_back(verify_levy(phi, c.rate, detail::jump_law(c), c.t, build_field(c.f, 1),
                              build_plan(c.plan, seed, ExpectationPlan::poisson_sum()), tol));
  } else if (q == "levy_multitime") {
    out.push_back(verify_levy_multitime(phi, c.rate, detail::jump_law(c), c.times,
                                        build_field(c.f, c.times.size()),
                                        build_plan(c.plan, seed, ExpectationPlan::poisson_sum()), tol));
  } else if (q == "tensorisation") {
    const auto& m = detail::expect_kind(c, "product");
    std::vector<Measure> fs;
    std::size_t dim = 0;
    for (const auto& f : m.factors) {
      fs.push_back(build_measure(f));
      dim += fs.back().dim();
    }
    out.push_back(verify_tensorisation(phi, fs, build_field(c.f, dim), build_plan(c.plan, seed, {}), tol));
  } else if (q == "convolution") {
    const auto& m = detail::expect_kind(c, "convolution");
    std::vector<std::pair<Measure, double>> specs;
    for (const auto& f : m.factors) specs.emplace_back(build_measure(f), f.constant);
    const std::size_t dim = specs.front().first.dim();
    out.push_back(verify_convolution(phi, specs, build_field(c.f, dim), build_plan(c.plan, seed, {}),
                                     DiffusionForm{}, tol));
  } else if (q == "perturbation") {
    const Measure mu = build_measure(c.measure);
    out.push_back(verify_perturbation(phi, mu, c.constant, build_field(*c.B, mu.dim()), build_field(c.f, mu.dim()),
                                      build_plan(c.plan, seed, {}), tol));
  } else if (q == "beckner") {
    const Measure mu = build_measure(c.measure);
    const auto rep = verify_beckner(mu, build_field(c.f, mu.dim()), build_plan(c.plan, seed, {}), c.q, c.rho, tol);
    out = rep.per_q;
  } else if (q == "poisson_l1") {
    out.push_back(poisson_l1_lsi(c.rate, c.t, build_field(c.f, 1), 0.0,
                                 build_plan(c.plan, seed, ExpectationPlan::poisson_sum()), tol));
  } else {
    throw DomainError("unknown inequality '" + q + "'");
  }
  for (auto& r : out) r.name = out.size() == 1 ? c.name : c.name + "/" + r.name;
  return out;
}

struct CheckOutcome {
  std::vector<DeficitReport> rows;
  std::string error;  // evaluation error, empty on success
};

struct VerifyOutcome {
  std::vector<CheckOutcome> checks;
  int status = kPass;

  [[nodiscard]] std::vector<DeficitReport> rows() const {
    std::vector<DeficitReport> all;
    for (const auto& c : checks) all.insert(all.end(), c.rows.begin(), c.rows.end());
    return all;
  }
};

/// Runs every check, PHISOB_THREADS at a time; results stay in config order.
inline VerifyOutcome run_verify(const config::RunConfig& rc) {
  VerifyOutcome vo;
  const std::size_t n = rc.checks.size();
  vo.checks.resize(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& c = rc.checks[i];
      auto& slot = vo.checks[i];
      const Tolerance tol = c.tol.value_or(rc.tol);
      try {
        slot.rows = run_check(c, config::entry_seed(rc.seed, i), tol);
      } catch (const HypothesisError& e) {
        DeficitReport r;
        r.name = c.name;
        r.lhs = r.rhs = r.constant = r.deficit = std::nan("");
        r.pass = false;
        r.refused = true;
        r.note = e.what();
        slot.rows = {r};
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };
  const std::size_t threads = std::min(n, std::max<std::size_t>(1, phisob::detail::thread_cap()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  bool failed = false;
  bool errored = false;
  for (const auto& c : vo.checks) {
    errored |= !c.error.empty();
    for (const auto& r : c.rows) failed |= !r.pass;
  }
  vo.status = errored ? kEval : (failed ? kFail : kPass);
  return vo;
}

inline int cmd_verify(const std::string& path, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  config::RunConfig rc;
  try {
    rc = config::load_run_config(path);
  } catch (const ParseError& e) {
    err << path << ": " << e.what() << "\n";
    return kParse;
  }
  if (g.seed) rc.seed = *g.seed;
  if (g.tol) {
    rc.tol.abs = *g.tol;
    for (auto& c : rc.checks)
      if (c.tol) c.tol->abs = *g.tol;
  }
  const VerifyOutcome vo = run_verify(rc);
  for (std::size_t i = 0; i < vo.checks.size(); ++i) {
    const auto& c = vo.checks[i];
    if (!c.error.empty()) {
      err << "ERROR " << rc.checks[i].name << " (line " << rc.checks[i].line << "): " << c.error << "\n";
      continue;
    }
    for (const auto& r : c.rows) {
      if (r.refused) {
        out << "REFUSED " << r.name << ": " << r.note << "\n";
      } else {
        out << (r.pass ? "PASS " : "FAIL ") << r.name << " deficit=" << io::fmt(r.deficit) << " tol=" << io::fmt(r.tol)
            << "\n";
      }
    }
  }
  GlobalOptions g2 = g;
  if (g2.out_dir.empty()) g2.out_dir = rc.out_dir;
  const auto rows = vo.rows();
  try {
    emit(g2, rc.stem, io::deficit_table(rows), out);
    if (!g2.out_dir.empty()) {
      io::Json j;
      j["seed"] = rc.seed;
      j["status"] = vo.status;
      io::Json arr = io::Json::array();
      for (std::size_t i = 0; i < vo.checks.size(); ++i) {
        for (const auto& r : vo.checks[i].rows) arr.push_back(io::to_json(r));
        if (!vo.checks[i].error.empty()) arr.push_back({{"name", rc.checks[i].name}, {"error", vo.checks[i].error}});
      }
      j["reports"] = arr;
      io::write_file(std::filesystem::path(g2.out_dir) / (rc.stem + "_report.json"), j.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kEval;
  }
  return vo.status;
}

// --- check-phi -------------------------------------------------------------

struct GridOptions {
  std::optional<double> lo;
  std::optional<double> hi;
  std::optional<std::size_t> n;
  std::optional<bool> log_scaled;
};

inline int cmd_check_phi(const PhiSpec& spec, const std::vector<Hypothesis>& hyps, const GridOptions& go,
                         const GlobalOptions& g, std::ostream& out) {
  const PhiFunction phi = builtin_phi(spec);
  IntervalGrid grid = default_grid(phi.interval());
  if (go.lo) grid.lo = *go.lo;
  if (go.hi) grid.hi = *go.hi;
  if (go.n) grid.n = *go.n;
  if (go.log_scaled) grid.log_scaled = *go.log_scaled;
  io::Table t{{"hypothesis", "holds", "margin", "witness", "grid"}, {}};
  bool all = true;
  for (Hypothesis h : hyps) {
    const ConditionReport r = h == Hypothesis::H1   ? check_H1(phi, grid)
                              : h == Hypothesis::H2 ? check_H2(phi, grid)
                                                    : check_H2prime(phi, grid);
    all &= r.holds;
    std::string w;
    for (std::size_t i = 0; i < r.witness.size(); ++i) w += (i ? " " : "") + io::fmt(r.witness[i]);
    out << to_string(h) << (r.holds ? " holds" : " fails") << " for " << phi.name() << " margin=" << io::fmt(r.margin)
        << (w.empty() ? "" : " witness=" + w) << "\n";
    t.rows.push_back({to_string(h), r.holds ? "true" : "false", io::fmt(r.margin), w, r.grid});
  }
  emit(g, "check_phi", t, out);
  return all ? kPass : kFail;
}

// --- entropy ---------------------------------------------------------------

inline int cmd_entropy(const PhiSpec& spec, const config::MeasureSpec& ms, const config::FieldSpec& fs,
                       const GlobalOptions& g, std::ostream& out) {
  const PhiFunction phi = builtin_phi(spec);
  const Measure mu = config::build_measure(ms);
  const ExpectationPlan plan = default_plan(mu, g.seed.value_or(0));
  const EntropyValue v = phi_entropy(phi, mu, config::build_field(fs, mu.dim()), plan);
  out << "Ent = " << io::fmt(v.value) << " (E f = " << io::fmt(v.mean) << ", " << v.plan
      << (v.clamped ? ", clamped" : "") << ")\n";
  io::Table t{{"phi", "measure", "value", "mean", "se", "plan", "clamped"}, {}};
  t.rows.push_back({phi.name(), mu.describe(), io::fmt(v.value), io::fmt(v.mean), io::fmt(v.se), v.plan,
                    v.clamped ? "true" : "false"});
  emit(g, "entropy", t, out);
  return kPass;
}

// --- decay -----------------------------------------------------------------

inline int cmd_decay(const Semigroup& sg, const PhiSpec& spec, const config::FieldSpec& fs, double t_max,
                     std::size_t steps, const GlobalOptions& g, std::ostream& out) {
  if (!(t_max > 0.0) || steps < 2) throw DomainError("decay: need t_max > 0 and at least two steps");
  const PhiFunction phi = builtin_phi(spec);
  const DecayTrace tr = decay_rate(sg, phi, config::build_field(fs, 1), linspace(0.0, t_max, steps));
  out << "fitted rate " << io::fmt(tr.fitted_rate) << " over " << tr.used << " points"
      << (tr.monotone ? "" : ", NOT monotone") << (tr.degenerate ? ", degenerate" : "") << "\n";
  emit(g, "decay", io::decay_table(tr), out);
  return tr.monotone ? kPass : kFail;
}

// --- tail ------------------------------------------------------------------

/// Herbst bound for N(0, var) with c = 2 var, or the Beckner tail with
/// exponent a when given.
inline int cmd_tail(double c, const config::FieldSpec& F, double var, std::optional<double> beckner_a,
                    std::size_t n, const GlobalOptions& g, std::ostream& out) {
  const Measure mu = Measure::gaussian1(0.0, var);
  const ScalarField f = config::build_field(F, 1);
  TailReport rep;
  bool ok = false;
  if (beckner_a) {
    rep = beckner_tail(c, *beckner_a, f, mu, default_tail_grid(), n, g.seed.value_or(0));
    ok = rep.degenerate || rep.fit.exponent_match;
    out << "regime " << rep.fit.regime << ", r = " << io::fmt(rep.r);
    if (rep.fit.points < kMinFitPoints)
      out << ", only " << rep.fit.points << " tail points with enough hits, no fit\n";
    else
      out << ", fitted r in [" << io::fmt(rep.fit.r_lo) << ", " << io::fmt(rep.fit.r_hi)
          << "], K = " << io::fmt(rep.fit.k_hat) << "\n";
  } else {
    rep = herbst_gaussian_tail(c, f, mu, default_tail_grid(), n, g.seed.value_or(0));
    ok = rep.dominated();
    out << (ok ? "empirical tails under 2 exp(-t^2/c) within 3 se" : "empirical tails EXCEED the bound") << "\n";
  }
  emit(g, "tail", io::tail_table(rep), out);
  return ok ? kPass : kFail;
}

// --- maxent ----------------------------------------------------------------

inline int cmd_maxent(const PhiSpec& spec, const config::FieldSpec& W, double c, double lo, double hi,
                      std::size_t points, const GlobalOptions& g, std::ostream& out) {
  const MaxentResult res = solve_maxent({builtin_phi(spec), config::build_field(W, 1), c, linspace(lo, hi, points)});
  out << "lambda = " << io::fmt(res.lambda) << ", beta = " << io::fmt(res.beta) << ", mass = " << io::fmt(res.mass)
      << ", E W = " << io::fmt(res.moment) << ", iterations " << res.iterations << (res.clipped ? ", clipped" : "")
      << "\n";
  emit(g, "maxent_density", io::density_table(res), out);
  if (!g.out_dir.empty()) {
    const auto path = std::filesystem::path(g.out_dir) / "maxent_trace.json";
    io::write_file(path, io::trace_json(res).dump(2) + "\n");
    out << "wrote " << path.string() << "\n";
  }
  return kPass;
}

/// Maps library exceptions to exit codes.
template <class Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const HypothesisError& e) {
    err << "refused: " << e.what() << "\n";
    return kFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kEval;
  }
}

}  // namespace phisob::cli
