// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a sectioned key = value text format.
//
//   document  := { line }
//   line      := [ header | key "=" value ] [ "#" comment ]
//   header    := "[" key "]" | "[[" key "]]"
//   value     := string | number | bool | array | table
//   string    := '"' chars '"'            escapes: \" \\ \n \t
//   number    := decimal or exponent form (finite)
//   bool      := true | false
//   array     := "[" [ value { "," value } [","] ] "]"
//   table     := "{" [ key "=" value { "," key "=" value } ] "}"
//   key       := [A-Za-z_][A-Za-z0-9_-]*
//
// Values stay on one line. "[name]" opens a table, "[[name]]" appends a
// table to an array. Duplicate and unknown keys are errors.
#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "phisob/error.hpp"
#include "phisob/field.hpp"
#include "phisob/measure.hpp"
#include "phisob/phi.hpp"
#include "phisob/report.hpp"

namespace phisob {

namespace config {

struct Table;

struct Value {
  enum class Kind { boolean, number, string, array, table };
  Kind kind = Kind::number;
  bool b = false;
  double num = 0.0;
  bool integral = false;
  std::string str;
  std::vector<Value> items;
  std::shared_ptr<Table> table;
  int line = 0;

  [[nodiscard]] const char* kind_name() const {
    switch (kind) {
      case Kind::boolean: return "bool";
      case Kind::number: return "number";
      case Kind::string: return "string";
      case Kind::array: return "array";
      case Kind::table: return "table";
    }
    return "?";
  }
};

/// Ordered key/value table that remembers which keys were read.
struct Table {
  std::vector<std::pair<std::string, Value>> entries;
  std::vector<bool> used;
  int line = 0;
  std::string path;

  [[nodiscard]] const Value* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }
  Value* find_mut(const std::string& key) {
    for (auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }
  void add(std::string key, Value v) {
    if (find(key)) throw ParseError(v.line, "duplicate key '" + qualified(key) + "'");
    entries.emplace_back(std::move(key), std::move(v));
    used.push_back(false);
  }
  [[nodiscard]] std::string qualified(const std::string& key) const { return path.empty() ? key : path + "." + key; }

  const Value* take(const std::string& key) {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].first == key) {
        used[i] = true;
        return &entries[i].second;
      }
    return nullptr;
  }
  const Value& require(const std::string& key) {
    const Value* v = take(key);
    if (!v) throw ParseError(line, "missing key '" + qualified(key) + "'");
    return *v;
  }
  /// Rejects keys that nobody read.
  void finish() const {
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (!used[i]) throw ParseError(entries[i].second.line, "unknown key '" + qualified(entries[i].first) + "'");
  }

  double number(const std::string& key, std::optional<double> dflt = std::nullopt);
  std::string string(const std::string& key, std::optional<std::string> dflt = std::nullopt);
  bool boolean(const std::string& key, std::optional<bool> dflt = std::nullopt);
  std::uint64_t uinteger(const std::string& key, std::optional<std::uint64_t> dflt = std::nullopt);
  Vec numbers(const std::string& key, std::optional<Vec> dflt = std::nullopt);
  Table& table(const std::string& key);
  std::vector<std::shared_ptr<Table>> tables(const std::string& key);
};

namespace detail {

inline ParseError type_error(const Table& t, const std::string& key, const Value& v, const char* want) {
  return ParseError(v.line, "'" + t.qualified(key) + "' must be a " + want + ", got " + v.kind_name());
}

inline double as_number(const Table& t, const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::number) throw type_error(t, key, v, "number");
  return v.num;
}

}  // namespace detail

inline double Table::number(const std::string& key, std::optional<double> dflt) {
  const Value* v = take(key);
  if (!v) {
    if (dflt) return *dflt;
    throw ParseError(line, "missing key '" + qualified(key) + "'");
  }
  return detail::as_number(*this, key, *v);
}

inline std::string Table::string(const std::string& key, std::optional<std::string> dflt) {
  const Value* v = take(key);
  if (!v) {
    if (dflt) return *dflt;
    throw ParseError(line, "missing key '" + qualified(key) + "'");
  }
  if (v->kind != Value::Kind::string) throw detail::type_error(*this, key, *v, "string");
  return v->str;
}

inline bool Table::boolean(const std::string& key, std::optional<bool> dflt) {
  const Value* v = take(key);
  if (!v) {
    if (dflt) return *dflt;
    throw ParseError(line, "missing key '" + qualified(key) + "'");
  }
  if (v->kind != Value::Kind::boolean) throw detail::type_error(*this, key, *v, "bool");
  return v->b;
}

inline std::uint64_t Table::uinteger(const std::string& key, std::optional<std::uint64_t> dflt) {
  const Value* v = take(key);
  if (!v) {
    if (dflt) return *dflt;
    throw ParseError(line, "missing key '" + qualified(key) + "'");
  }
  if (v->kind != Value::Kind::number || !v->integral || v->num < 0 || v->num > 9.007199254740992e15)
    throw detail::type_error(*this, key, *v, "non-negative integer");
  return static_cast<std::uint64_t>(v->num);
}

inline Vec Table::numbers(const std::string& key, std::optional<Vec> dflt) {
  const Value* v = take(key);
  if (!v) {
    if (dflt) return *dflt;
    throw ParseError(line, "missing key '" + qualified(key) + "'");
  }
  if (v->kind != Value::Kind::array) throw detail::type_error(*this, key, *v, "array of numbers");
  Vec out;
  for (const auto& it : v->items) out.push_back(detail::as_number(*this, key, it));
  return out;
}

inline Table& Table::table(const std::string& key) {
  const Value& v = require(key);
  if (v.kind != Value::Kind::table) throw detail::type_error(*this, key, v, "table");
  return *v.table;
}

inline std::vector<std::shared_ptr<Table>> Table::tables(const std::string& key) {
  const Value* v = take(key);
  if (!v) return {};
  if (v->kind != Value::Kind::array) throw detail::type_error(*this, key, *v, "array of tables");
  std::vector<std::shared_ptr<Table>> out;
  for (const auto& it : v->items) {
    if (it.kind != Value::Kind::table) throw detail::type_error(*this, key, it, "array of tables");
    out.push_back(it.table);
  }
  return out;
}

// --- parser ----------------------------------------------------------------

namespace detail {

class LineParser {
public:
  LineParser(const std::string& s, int line) : s_(s), line_(line) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r')) ++i_;
  }
  [[nodiscard]] bool at_end() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#';
  }
  [[nodiscard]] char peek() {
    skip_ws();
    return i_ < s_.size() ? s_[i_] : '\0';
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }
  bool accept(char c) {
    if (peek() != c) return false;
    ++i_;
    return true;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(line_, what + " at column " + std::to_string(i_ + 1));
  }

  std::string key() {
    skip_ws();
    const std::size_t start = i_;
    if (i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
      ++i_;
      while (i_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-'))
        ++i_;
    }
    if (i_ == start) fail("expected a key");
    return s_.substr(start, i_ - start);
  }

  Value value(const std::string& path) {
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.kind = Value::Kind::string;
      v.str = string_literal();
    } else if (c == '[') {
      ++i_;
      v.kind = Value::Kind::array;
      while (peek() != ']') {
        v.items.push_back(value(path));
        if (!accept(',')) break;
      }
      expect(']');
    } else if (c == '{') {
      ++i_;
      v.kind = Value::Kind::table;
      v.table = std::make_shared<Table>();
      v.table->line = line_;
      v.table->path = path;
      while (peek() != '}') {
        const std::string k = key();
        expect('=');
        v.table->add(k, value(path.empty() ? k : path + "." + k));
        if (!accept(',')) break;
      }
      expect('}');
    } else if (s_.compare(i_, 4, "true") == 0 && !ident_char(i_ + 4)) {
      i_ += 4;
      v.kind = Value::Kind::boolean;
      v.b = true;
    } else if (s_.compare(i_, 5, "false") == 0 && !ident_char(i_ + 5)) {
      i_ += 5;
      v.kind = Value::Kind::boolean;
      v.b = false;
    } else {
      v.kind = Value::Kind::number;
      number(v);
    }
    return v;
  }

private:
  [[nodiscard]] bool ident_char(std::size_t j) const {
    return j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) || s_[j] == '_');
  }

  std::string string_literal() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char ch = s_[i_++];
      if (ch == '\\') {
        if (i_ >= s_.size()) fail("unterminated escape");
        const char e = s_[i_++];
        switch (e) {
          case '"': ch = '"'; break;
          case '\\': ch = '\\'; break;
          case 'n': ch = '\n'; break;
          case 't': ch = '\t'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out.push_back(ch);
    }
    if (i_ >= s_.size()) fail("unterminated string");
    ++i_;
    return out;
  }

  void number(Value& v) {
    const std::size_t start = i_;
    if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
    bool digits = false;
    bool integral = true;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_, digits = true;
    if (i_ < s_.size() && s_[i_] == '.') {
      integral = false;
      ++i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_, digits = true;
    }
    if (!digits) fail("expected a value");
    if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
      integral = false;
      ++i_;
      if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
      const std::size_t e0 = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ == e0) fail("malformed exponent");
    }
    if (ident_char(i_)) fail("malformed number");
    const std::string tok = s_.substr(start, i_ - start);
    v.num = std::strtod(tok.c_str(), nullptr);
    if (!std::isfinite(v.num)) fail("number out of range");
    v.integral = integral;
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int line_;
};

}  // namespace detail

/// Parses a document into its root table.
inline Table parse(std::istream& in) {
  Table root;
  root.line = 1;
  Table* current = &root;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    detail::LineParser p(text, line);
    if (p.at_end()) continue;
    if (p.accept('[')) {
      const bool array = p.accept('[');
      const std::string name = p.key();
      p.expect(']');
      if (array) p.expect(']');
      if (!p.at_end()) p.fail("trailing characters after header");
      auto tbl = std::make_shared<Table>();
      tbl->line = line;
      tbl->path = name;
      Value* slot = root.find_mut(name);
      if (array) {
        if (!slot) {
          Value arr;
          arr.kind = Value::Kind::array;
          arr.line = line;
          root.add(name, std::move(arr));
          slot = root.find_mut(name);
        } else if (slot->kind != Value::Kind::array) {
          throw ParseError(line, "'" + name + "' is not an array of tables");
        }
        tbl->path = name + "[" + std::to_string(slot->items.size()) + "]";
        Value v;
        v.kind = Value::Kind::table;
        v.line = line;
        v.table = tbl;
        slot->items.push_back(std::move(v));
      } else {
        if (slot) throw ParseError(line, "duplicate table '" + name + "'");
        Value v;
        v.kind = Value::Kind::table;
        v.line = line;
        v.table = tbl;
        root.add(name, std::move(v));
      }
      current = tbl.get();
      continue;
    }
    const std::string k = p.key();
    p.expect('=');
    Value v = p.value(current->qualified(k));
    if (!p.at_end()) p.fail("trailing characters after value");
    current->add(k, std::move(v));
  }
  return root;
}

inline Table parse_string(const std::string& s) {
  std::istringstream in(s);
  return parse(in);
}

// --- run configuration -----------------------------------------------------

struct FieldSpec {
  std::string kind = "linear";  // linear | exponential | sine | square | abs | tabulated
  double a = 1.0;
  double b = 0.0;
  double theta = 1.0;
  double s = 0.0;
  double w = 1.0;
  double phase = 0.0;
  Vec values;
  std::size_t coordinate = 0;  // 1-based; 0 acts on x_1 + ... + x_d
};

struct MeasureSpec {
  std::string kind = "gaussian";  // gaussian | poisson | atoms | product | convolution
  Vec mean{0.0};
  Vec cov{1.0};
  double rate = 1.0;
  std::size_t dim = 1;
  Vec points;
  Vec weights;
  double constant = 0.0;  // convolution factors; <= 0 selects the certified value
  std::vector<MeasureSpec> factors;
  int line = 0;
};

struct PlanSpec {
  bool given = false;
  std::string kind = "default";  // default | exact | gauss_hermite | poisson_sum | monte_carlo
  int order = 40;
  double tail_tol = 1e-12;
  std::size_t n = 200000;
  std::optional<std::uint64_t> seed;
};

struct CheckSpec {
  std::string name;
  std::string inequality;
  int line = 0;
  PhiSpec phi;
  MeasureSpec measure;
  FieldSpec f;
  std::optional<FieldSpec> B;
  PlanSpec plan;
  double constant = 0.0;
  double rate = 1.0;
  double t = 1.0;
  double rho = 0.0;
  Vec times;
  Vec jumps;
  Vec jump_weights;
  Vec q;
  std::optional<Tolerance> tol;
};

struct RunConfig {
  std::uint64_t seed = 0;
  Tolerance tol;
  std::string out_dir;
  std::string stem = "report";
  std::vector<CheckSpec> checks;
};

inline const std::vector<std::string>& inequality_kinds() {
  static const std::vector<std::string> k{"gaussian",      "brownian",    "poisson",      "levy",
                                          "levy_multitime", "tensorisation", "convolution", "perturbation",
                                          "beckner",       "poisson_l1"};
  return k;
}

namespace detail {

inline PhiSpec phi_spec(Table& t) {
  PhiSpec s;
  const std::string kind = t.string("kind");
  if (kind == "xlogx") {
    s.kind = PhiKind::xlogx;
  } else if (kind == "power") {
    s.kind = PhiKind::power;
    s.p = t.number("p");
  } else if (kind == "square") {
    s.kind = PhiKind::square;
  } else if (kind == "quadratic") {
    s.kind = PhiKind::quadratic;
    s.a = t.number("a");
    s.b = t.number("b", 0.0);
    s.c = t.number("c", 0.0);
  } else {
    throw ParseError(t.line, "unknown phi kind '" + kind + "'");
  }
  t.finish();
  return s;
}

inline FieldSpec field_spec(Table& t) {
  FieldSpec s;
  s.kind = t.string("kind");
  if (s.kind == "linear") {
    s.a = t.number("a", 1.0);
    s.b = t.number("b", 0.0);
  } else if (s.kind == "exponential") {
    s.theta = t.number("theta");
    s.s = t.number("s", 0.0);
  } else if (s.kind == "sine") {
    s.a = t.number("a", 1.0);
    s.w = t.number("w", 1.0);
    s.phase = t.number("phase", 0.0);
    s.b = t.number("b", 0.0);
  } else if (s.kind == "square" || s.kind == "abs") {
  } else if (s.kind == "tabulated") {
    s.values = t.numbers("values");
  } else {
    throw ParseError(t.line, "unknown function kind '" + s.kind + "'");
  }
  s.coordinate = t.uinteger("coordinate", 0);
  t.finish();
  return s;
}

inline MeasureSpec measure_spec(Table& t, bool allow_constant = false) {
  MeasureSpec s;
  s.line = t.line;
  s.kind = t.string("kind");
  if (allow_constant) s.constant = t.number("constant", 0.0);
  if (s.kind == "gaussian") {
    s.mean = t.numbers("mean", Vec{0.0});
    s.cov = t.numbers("cov", Vec{1.0});
  } else if (s.kind == "poisson") {
    s.rate = t.number("rate");
  } else if (s.kind == "atoms") {
    s.dim = t.uinteger("dim", 1);
    s.points = t.numbers("points");
    s.weights = t.numbers("weights");
  } else if (s.kind == "product" || s.kind == "convolution") {
    const auto fs = t.tables("factors");
    if (fs.empty()) throw ParseError(t.line, "'" + t.qualified("factors") + "' must list at least one table");
    for (const auto& f : fs) s.factors.push_back(measure_spec(*f, s.kind == "convolution"));
  } else {
    throw ParseError(t.line, "unknown measure kind '" + s.kind + "'");
  }
  t.finish();
  return s;
}

inline PlanSpec plan_spec(Table& t) {
  PlanSpec s;
  s.given = true;
  s.kind = t.string("kind");
  if (s.kind == "gauss_hermite") {
    s.order = static_cast<int>(t.uinteger("order", 40));
  } else if (s.kind == "poisson_sum") {
    s.tail_tol = t.number("tail_tol", 1e-12);
  } else if (s.kind == "monte_carlo") {
    s.n = t.uinteger("n", 200000);
    if (t.find("seed")) s.seed = t.uinteger("seed");
  } else if (s.kind != "exact" && s.kind != "default") {
    throw ParseError(t.line, "unknown plan kind '" + s.kind + "'");
  }
  t.finish();
  return s;
}

inline Tolerance tolerance(Table& t, Tolerance base = {}) {
  base.abs = t.number("abs", base.abs);
  base.rel = t.number("rel", base.rel);
  base.mc_sigmas = t.number("mc_sigmas", base.mc_sigmas);
  t.finish();
  return base;
}

inline bool needs(const std::string& ineq, const char* what) {
  const std::string w = what;
  if (w == "phi") return ineq != "beckner" && ineq != "poisson_l1";
  if (w == "measure")
    return ineq == "gaussian" || ineq == "tensorisation" || ineq == "convolution" || ineq == "perturbation" ||
           ineq == "beckner";
  if (w == "rate") return ineq == "poisson" || ineq == "levy" || ineq == "levy_multitime" || ineq == "poisson_l1";
  if (w == "t") return ineq == "levy" || ineq == "poisson_l1";
  if (w == "times") return ineq == "brownian" || ineq == "levy_multitime";
  if (w == "jumps") return ineq == "levy" || ineq == "levy_multitime";
  if (w == "constant") return ineq == "perturbation";
  if (w == "B") return ineq == "perturbation";
  if (w == "q") return ineq == "beckner";
  return false;
}

inline CheckSpec check_spec(Table& t) {
  CheckSpec c;
  c.line = t.line;
  c.name = t.string("name");
  c.inequality = t.string("inequality");
  const auto& kinds = inequality_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.inequality) == kinds.end())
    throw ParseError(t.line, "unknown inequality '" + c.inequality + "'");
  const std::string& q = c.inequality;
  if (needs(q, "phi")) c.phi = phi_spec(t.table("phi"));
  if (needs(q, "measure")) c.measure = measure_spec(t.table("measure"));
  c.f = field_spec(t.table("f"));
  if (needs(q, "rate")) c.rate = t.number("rate");
  if (needs(q, "t")) c.t = t.number("t");
  if (needs(q, "times")) c.times = t.numbers("times");
  if (needs(q, "jumps")) {
    c.jumps = t.numbers("jumps");
    c.jump_weights = t.numbers("jump_weights");
  }
  if (needs(q, "constant")) c.constant = t.number("constant");
  if (needs(q, "B")) c.B = field_spec(t.table("B"));
  if (needs(q, "q")) {
    c.q = t.numbers("q", Vec{1.0, 1.25, 1.5, 1.75, 1.9, 1.99});
    c.rho = t.number("rho", 0.0);
  }
  if (t.find("plan")) c.plan = plan_spec(t.table("plan"));
  if (t.find("tolerance")) c.tol = tolerance(t.table("tolerance"));
  t.finish();
  return c;
}

}  // namespace detail

inline RunConfig run_config(Table root) {
  RunConfig rc;
  rc.seed = root.uinteger("seed", 0);
  if (root.find("tolerance")) rc.tol = detail::tolerance(root.table("tolerance"));
  if (root.find("output")) {
    Table& o = root.table("output");
    rc.out_dir = o.string("dir", "");
    rc.stem = o.string("stem", "report");
    o.finish();
  }
  for (const auto& t : root.tables("check")) rc.checks.push_back(detail::check_spec(*t));
  root.finish();
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open config '" + path + "'");
  return run_config(parse(in));
}

// --- builders --------------------------------------------------------------

/// Field of the given arity: the family acts on x_k when coordinate = k,
/// else on x_1 + ... + x_d.
inline ScalarField build_field(const FieldSpec& s, std::size_t arity) {
  if (s.coordinate > arity) throw DomainError("function coordinate exceeds the dimension " + std::to_string(arity));
  ScalarField base;
  if (s.kind == "linear") base = linear_field(s.a, s.b);
  else if (s.kind == "exponential") base = exponential_field(s.theta, s.s);
  else if (s.kind == "sine") base = sine_field(s.a, s.w, s.phase, s.b);
  else if (s.kind == "square")
    base = field1("x^2", [](double x) { return x * x; }, [](double x) { return 2.0 * x; }, {0.0, kInf});
  else if (s.kind == "abs")
    base = field1("|x|", [](double x) { return std::abs(x); }, [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); },
                  {0.0, kInf});
  else if (s.kind == "tabulated") base = tabulated_field(s.values);
  else throw DomainError("unknown function kind '" + s.kind + "'");
  if (arity == 1 && s.coordinate <= 1) return base;
  const ScalarField inner = s.coordinate > 0
                                ? coordinate_field(arity, s.coordinate - 1)
                                : ScalarField(
                                      arity,
                                      [](Point x) {
                                        double acc = 0.0;
                                        for (double v : x) acc += v;
                                        return acc;
                                      },
                                      [](Point, std::span<double> g) {
                                        for (auto& v : g) v = 1.0;
                                      },
                                      Interval::real_line(), "sum");
  std::function<double(double)> g = [base](double x) { return base(Point(&x, 1)); };
  std::function<double(double)> d;
  if (base.has_grad())
    d = [base](double x) {
      double out = 0.0;
      base.gradient(Point(&x, 1), std::span<double>(&out, 1));
      return out;
    };
  return compose(g, d, inner, base.name() + "(" + inner.name() + ")", base.codomain());
}

inline Measure build_measure(const MeasureSpec& s) {
  if (s.kind == "gaussian") return Measure::gaussian(s.mean, s.cov);
  if (s.kind == "poisson") return Measure::poisson(s.rate);
  if (s.kind == "atoms") return Measure::atoms(s.dim, s.points, s.weights);
  std::vector<Measure> fs;
  for (const auto& f : s.factors) fs.push_back(build_measure(f));
  if (s.kind == "product") return Measure::product(std::move(fs));
  if (s.kind == "convolution") return Measure::convolution(std::move(fs));
  throw DomainError("unknown measure kind '" + s.kind + "'");
}

inline ExpectationPlan build_plan(const PlanSpec& s, std::uint64_t seed, ExpectationPlan dflt) {
  if (!s.given || s.kind == "default") {
    dflt.seed = seed;
    return dflt;
  }
  if (s.kind == "exact") return ExpectationPlan::exact();
  if (s.kind == "gauss_hermite") return ExpectationPlan::gauss_hermite(s.order);
  if (s.kind == "poisson_sum") return ExpectationPlan::poisson_sum(s.tail_tol);
  return ExpectationPlan::monte_carlo(s.n, s.seed.value_or(seed));
}

/// Deterministic per-entry seed derived from the master seed (splitmix64).
inline std::uint64_t entry_seed(std::uint64_t master, std::size_t index) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace config

}  // namespace phisob
