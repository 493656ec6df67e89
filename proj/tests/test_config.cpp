// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "phisob/config.hpp"

using namespace phisob;
using namespace phisob::config;

namespace {

int error_line(const std::string& text) {
  try {
    run_config(parse_string(text));
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

const char* kGood = R"(# master seed
seed = 42

[tolerance]
abs = 1e-9
rel = 0

[[check]]
name = "gauss \"tilted\""
inequality = "gaussian"
phi = {kind = "xlogx"}
measure = {kind = "gaussian", mean = [0], cov = [1]}
f = {kind = "exponential", theta = 0.5, s = -0.125}
plan = {kind = "gauss_hermite", order = 40}

[[check]]
name = "conv"
inequality = "convolution"
phi = {kind = "power", p = 1.5}
measure = {kind = "convolution", factors = [{kind = "gaussian", constant = 0.5}, {kind = "atoms", points = [-1, 1], weights = [0.5, 0.5]}]}
f = {kind = "sine", a = 0.5, w = 2,}
tolerance = {abs = 1e-6}
)";

}  // namespace

TEST(ConfigParser, ScalarsArraysAndTables) {
  Table root = parse_string("a = 1\nb = -2.5e-3  # trailing\nc = true\nd = \"x\\ty\"\ne = [1, 2, 3,]\ng = {h = [], i = {j = false}}\n");
  EXPECT_EQ(root.uinteger("a"), 1u);
  EXPECT_EQ(root.number("b"), -2.5e-3);
  EXPECT_TRUE(root.boolean("c"));
  EXPECT_EQ(root.string("d"), "x\ty");
  EXPECT_EQ(root.numbers("e"), (Vec{1, 2, 3}));
  Table& g = root.table("g");
  EXPECT_TRUE(g.numbers("h").empty());
  EXPECT_FALSE(g.table("i").boolean("j"));
  EXPECT_NO_THROW(root.finish());
}

TEST(ConfigParser, SyntaxErrorsCarryLineNumbers) {
  for (const auto& [text, line] : std::vector<std::pair<std::string, int>>{
           {"a = 1\nb = \n", 2},
           {"a = 1\n\n c = \"open\n", 3},
           {"x = [1, 2\n", 1},
           {"a = 1\na = 2\n", 2},
           {"a = 1.5.2\n", 1},
           {"[t]\nk = {p = 1 q = 2}\n", 2},
           {"[t]\n[t]\n", 2},
           {"a = 1 2\n", 1},
           {"= 3\n", 1},
           {"a = nan\n", 1},
           {"a = 1e999\n", 1},
           {"a = \"bad \\q\"\n", 1},
       }) {
    try {
      parse_string(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << text << " -> " << e.what();
    }
  }
}

TEST(RunConfig, ParsesChecks) {
  const RunConfig rc = run_config(parse_string(kGood));
  EXPECT_EQ(rc.seed, 42u);
  EXPECT_EQ(rc.tol.abs, 1e-9);
  EXPECT_EQ(rc.tol.rel, 0.0);
  EXPECT_EQ(rc.tol.mc_sigmas, 3.0);
  ASSERT_EQ(rc.checks.size(), 2u);
  const auto& a = rc.checks[0];
  EXPECT_EQ(a.name, "gauss \"tilted\"");
  EXPECT_EQ(a.phi.kind, PhiKind::xlogx);
  EXPECT_EQ(a.f.kind, "exponential");
  EXPECT_EQ(a.f.theta, 0.5);
  EXPECT_EQ(a.plan.order, 40);
  EXPECT_FALSE(a.tol.has_value());
  const auto& b = rc.checks[1];
  EXPECT_EQ(b.phi.kind, PhiKind::power);
  EXPECT_EQ(b.phi.p, 1.5);
  ASSERT_EQ(b.measure.factors.size(), 2u);
  EXPECT_EQ(b.measure.factors[0].constant, 0.5);
  EXPECT_EQ(b.measure.factors[1].constant, 0.0);
  ASSERT_TRUE(b.tol.has_value());
  EXPECT_EQ(b.tol->abs, 1e-6);
}

TEST(RunConfig, UnknownKeysRejectedWithLine) {
  EXPECT_EQ(error_line("seed = 1\ncolour = 3\n"), 2);
  EXPECT_EQ(error_line("[[check]]\nname = \"a\"\ninequality = \"poisson\"\nphi = {kind = \"square\"}\nrate = 1\n"
                       "f = {kind = \"linear\", slope = 2}\n"),
            6);
  EXPECT_EQ(error_line("[[check]]\nname = \"a\"\ninequality = \"poisson\"\nphi = {kind = \"square\"}\nrate = 1\n"
                       "f = {kind = \"linear\"}\nmeasure = {kind = \"poisson\", rate = 1}\n"),
            7);
  EXPECT_EQ(error_line("[[check]]\nname = \"a\"\ninequality = \"nosuch\"\n"), 1);
  EXPECT_EQ(error_line("[tolerance]\nabs = \"small\"\n"), 2);
  EXPECT_EQ(error_line("seed = -1\n"), 1);
  EXPECT_EQ(error_line("seed = 1.5\n"), 1);
}

TEST(RunConfig, MissingKeyNamesField) {
  try {
    run_config(parse_string("[[check]]\nname = \"a\"\ninequality = \"gaussian\"\nphi = {kind = \"xlogx\"}\n"
                            "measure = {kind = \"gaussian\"}\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("check[0].f"), std::string::npos) << e.what();
    EXPECT_EQ(e.line(), 1);
  }
}

TEST(RunConfig, EmptyDocument) {
  const RunConfig rc = run_config(parse_string("# nothing\n\n"));
  EXPECT_TRUE(rc.checks.empty());
  EXPECT_EQ(rc.seed, 0u);
}

TEST(Builders, FieldAritiesAndCoordinates) {
  FieldSpec s;
  s.kind = "exponential";
  s.theta = 0.5;
  const auto f1 = build_field(s, 1);
  EXPECT_DOUBLE_EQ(f1(2.0), std::exp(1.0));
  const auto f2 = build_field(s, 2);
  const Vec x{1.0, 3.0};
  EXPECT_DOUBLE_EQ(f2(x), std::exp(2.0));
  EXPECT_DOUBLE_EQ(f2.gradient(x)[1], 0.5 * std::exp(2.0));
  s.coordinate = 2;
  EXPECT_DOUBLE_EQ(build_field(s, 2)(x), std::exp(1.5));
  s.coordinate = 3;
  EXPECT_THROW(build_field(s, 2), DomainError);
}

TEST(Builders, MeasuresAndPlans) {
  RunConfig rc = run_config(parse_string(kGood));
  const Measure m = build_measure(rc.checks[1].measure);
  EXPECT_EQ(m.dim(), 1u);
  MeasureSpec bad;
  bad.kind = "gaussian";
  bad.cov = {-1.0};
  EXPECT_THROW(build_measure(bad), DomainError);
  PlanSpec p;
  EXPECT_EQ(build_plan(p, 7, ExpectationPlan::poisson_sum()).method, ExpectationPlan::Method::poisson_sum);
  p.given = true;
  p.kind = "monte_carlo";
  p.n = 1000;
  const auto mc = build_plan(p, 7, {});
  EXPECT_EQ(mc.seed, 7u);
  EXPECT_EQ(mc.n, 1000u);
}

TEST(Builders, EntrySeedsDistinctAndStable) {
  EXPECT_EQ(entry_seed(1, 0), entry_seed(1, 0));
  EXPECT_NE(entry_seed(1, 0), entry_seed(1, 1));
  EXPECT_NE(entry_seed(1, 0), entry_seed(2, 0));
}
