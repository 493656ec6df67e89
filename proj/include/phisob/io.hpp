// SPDX-License-Identifier: Apache-2.0
//
// CSV and JSON artifacts. Doubles are written with 17 significant digits so
// identical runs produce identical bytes.
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phisob/concentration.hpp"
#include "phisob/error.hpp"
#include "phisob/maxent.hpp"
#include "phisob/phi.hpp"
#include "phisob/report.hpp"
#include "phisob/semigroup.hpp"

namespace phisob::io {

using Json = nlohmann::ordered_json;

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::string csv() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_field(cells[i]);
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }

  /// Array of objects keyed by the header. Numeric cells stay strings to
  /// keep the exact decimal text.
  [[nodiscard]] Json json() const {
    Json arr = Json::array();
    for (const auto& r : rows) {
      Json o = Json::object();
      for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r[i];
      arr.push_back(std::move(o));
    }
    return arr;
  }
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EvaluationError("cannot write " + path.string());
  out << text;
  if (!out) throw EvaluationError("write failed for " + path.string());
}

/// Writes the table as <stem>.csv or <stem>.json.
inline std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& stem, const Table& t,
                                         const std::string& format) {
  const auto path = dir / (stem + (format == "json" ? ".json" : ".csv"));
  write_file(path, format == "json" ? t.json().dump(2) + "\n" : t.csv());
  return path;
}

// --- fixed schemas -------------------------------------------------------

/// name, lhs, rhs, constant, deficit, pass (true | false | refused).
inline Table deficit_table(const std::vector<DeficitReport>& reps) {
  Table t{{"name", "lhs", "rhs", "constant", "deficit", "pass"}, {}};
  for (const auto& r : reps)
    t.rows.push_back({r.name, fmt(r.lhs), fmt(r.rhs), fmt(r.constant), fmt(r.deficit),
                      r.refused ? "refused" : (r.pass ? "true" : "false")});
  return t;
}

/// t, bound, empirical, stderr.
inline Table tail_table(const TailReport& rep) {
  Table t{{"t", "bound", "empirical", "stderr"}, {}};
  for (std::size_t i = 0; i < rep.t.size(); ++i)
    t.rows.push_back({fmt(rep.t[i]), fmt(rep.bound[i]), fmt(rep.empirical[i]), fmt(rep.stderr_[i])});
  return t;
}

/// t, entropy, envelope.
inline Table decay_table(const DecayTrace& tr) {
  Table t{{"t", "entropy", "envelope"}, {}};
  for (std::size_t i = 0; i < tr.times.size(); ++i)
    t.rows.push_back({fmt(tr.times[i]), fmt(tr.entropies[i]), fmt(tr.envelope[i])});
  return t;
}

/// x, f(x).
inline Table density_table(const MaxentResult& res) {
  Table t{{"x", "f(x)"}, {}};
  for (std::size_t i = 0; i < res.x.size(); ++i) t.rows.push_back({fmt(res.x[i]), fmt(res.f[i])});
  return t;
}

// --- JSON records --------------------------------------------------------

inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(fmt(x)); }

inline Json to_json(const DeficitReport& r) {
  Json j;
  j["name"] = r.name;
  j["lhs"] = num(r.lhs);
  j["rhs"] = num(r.rhs);
  j["constant"] = num(r.constant);
  j["deficit"] = num(r.deficit);
  j["tol"] = num(r.tol);
  j["se"] = num(r.se);
  j["pass"] = r.pass;
  j["refused"] = r.refused;
  j["f"] = r.f_description;
  j["plan"] = r.plan;
  j["note"] = r.note;
  Json ex = Json::object();
  for (const auto& [k, v] : r.extras) ex[k] = num(v);
  j["extras"] = ex;
  return j;
}

inline Json to_json(const ConditionReport& r) {
  Json j;
  j["hypothesis"] = to_string(r.hypothesis);
  j["holds"] = r.holds;
  j["margin"] = num(r.margin);
  Json w = Json::array();
  for (double x : r.witness) w.push_back(num(x));
  j["witness"] = w;
  j["grid"] = r.grid;
  if (r.inconsistent) j["inconsistent"] = true;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json to_json(const TailFit& f) {
  Json j;
  j["regime"] = f.regime;
  j["r_theory"] = num(f.r_theory);
  j["r_hat"] = num(f.r_hat);
  j["r_lo"] = num(f.r_lo);
  j["r_hi"] = num(f.r_hi);
  j["k_hat"] = num(f.k_hat);
  j["points"] = f.points;
  j["exponent_match"] = f.exponent_match;
  j["decays_at_least"] = f.decays_at_least;
  return j;
}

inline Json trace_json(const MaxentResult& res) {
  Json j;
  j["lambda"] = num(res.lambda);
  j["beta"] = num(res.beta);
  j["mass"] = num(res.mass);
  j["moment"] = num(res.moment);
  j["entropy"] = num(res.entropy);
  j["iterations"] = res.iterations;
  j["clipped"] = res.clipped;
  Json steps = Json::array();
  for (const auto& s : res.trace) {
    Json o;
    o["iter"] = s.iter;
    o["lambda"] = num(s.lambda);
    o["beta"] = num(s.beta);
    o["dual"] = num(s.dual);
    o["residual"] = num(s.residual);
    o["step"] = num(s.step);
    steps.push_back(std::move(o));
  }
  j["trace"] = steps;
  return j;
}

}  // namespace phisob::io
