// SPDX-License-Identifier: Apache-2.0
//
// Deficit reports and the verification tolerance.
#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/phi.hpp"

namespace phisob {

/// pass <=> deficit >= -(abs + rel |constant * rhs| + mc_sigmas * se).
struct Tolerance {
  double abs = 1e-7;
  double rel = 1e-6;
  double mc_sigmas = 3.0;

  [[nodiscard]] double at(double scaled_rhs, double se) const {
    return abs + rel * std::abs(scaled_rhs) + mc_sigmas * se;
  }
};

struct DeficitReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;       // energy term before the constant
  double constant = 1.0;
  double deficit = 0.0;   // constant * rhs - lhs
  double tol = 0.0;
  double se = 0.0;        // Monte Carlo standard error of the deficit
  bool pass = true;
  bool refused = false;   // hypothesis not certified; no verdict on the inequality
  std::string f_description;
  std::string plan;
  std::string note;
  std::vector<std::pair<std::string, double>> extras;

  [[nodiscard]] double extra(const std::string& key) const {
    for (const auto& [k, v] : extras)
      if (k == key) return v;
    throw DomainError("report has no entry '" + key + "'");
  }
  [[nodiscard]] bool has_extra(const std::string& key) const {
    for (const auto& kv : extras)
      if (kv.first == key) return true;
    return false;
  }
};

inline DeficitReport make_report(std::string name, double lhs, double rhs, double constant, double se,
                                 const Tolerance& tol = {}) {
  DeficitReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.constant = constant;
  r.deficit = constant * rhs - lhs;
  r.se = se;
  r.tol = tol.at(constant * rhs, se);
  r.pass = r.deficit >= -r.tol;
  return r;
}

/// Runs the checker for h on the default grid of phi, caching verdicts by
/// (name, interval). Throws HypothesisError when the hypothesis fails.
inline const ConditionReport& require_hypothesis(const PhiFunction& phi, Hypothesis h) {
  static std::mutex mu;
  static std::map<std::string, ConditionReport> cache;
  const std::string key = phi.name() + "|" + phi.interval().str() + "|" + to_string(h);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) {
      if (!it->second.holds)
        throw HypothesisError(std::string(to_string(h)) + " does not hold for " + phi.name() + " (margin " +
                              std::to_string(it->second.margin) + ")");
      return it->second;
    }
  }
  const IntervalGrid grid = default_grid(phi.interval());
  ConditionReport rep = h == Hypothesis::H1   ? check_H1(phi, grid)
                        : h == Hypothesis::H2 ? check_H2(phi, grid)
                                              : check_H2prime(phi, grid);
  std::lock_guard<std::mutex> lock(mu);
  const auto& stored = cache.emplace(key, std::move(rep)).first->second;
  if (!stored.holds)
    throw HypothesisError(std::string(to_string(h)) + " does not hold for " + phi.name() + " (margin " +
                          std::to_string(stored.margin) + ")");
  return stored;
}

}  // namespace phisob
