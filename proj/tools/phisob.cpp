// SPDX-License-Identifier: Apache-2.0
//
// phisob: command-line front end.
//
//   phisob check-phi --kind power --p 1.5
//   phisob verify configs/saturation.toml --out-dir out
//   phisob decay --sg ou --rho 1 --phi square --f linear
//   phisob tail --c 2 --F identity
//   phisob maxent --phi xlogx --W square --c 1
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "phisob/phisob.hpp"

using namespace phisob;

namespace {

const std::map<std::string, PhiKind> kPhiKinds{
    {"xlogx", PhiKind::xlogx}, {"power", PhiKind::power}, {"square", PhiKind::square}, {"quadratic", PhiKind::quadratic}};

const std::map<std::string, std::string> kFieldKinds{{"identity", "linear"}, {"linear", "linear"},
                                                     {"square", "square"},   {"abs", "abs"},
                                                     {"sine", "sine"},       {"exponential", "exponential"}};

struct PhiArgs {
  PhiKind kind = PhiKind::xlogx;
  double p = 1.5, a = 1.0, b = 0.0, c = 0.0;
  [[nodiscard]] PhiSpec spec() const { return {kind, p, a, b, c}; }
};

void add_phi(CLI::App* app, PhiArgs& pa, const std::string& flag, bool coefficients) {
  app->add_option(flag, pa.kind, "xlogx | power | square | quadratic")
      ->transform(CLI::CheckedTransformer(kPhiKinds, CLI::ignore_case))
      ->required();
  app->add_option("--p", pa.p, "exponent for power");
  if (coefficients) {
    app->add_option("--a", pa.a, "quadratic a x^2 + b x + c");
    app->add_option("--b", pa.b);
    app->add_option("--c", pa.c);
  }
}

struct FieldArgs {
  std::string kind = "linear";
  double theta = 1.0;
  [[nodiscard]] config::FieldSpec spec() const {
    config::FieldSpec s;
    s.kind = kind;
    s.theta = theta;
    return s;
  }
};

void add_field(CLI::App* app, FieldArgs& fa, const std::string& flag) {
  app->add_option(flag, fa.kind, "identity | linear | square | abs | sine | exponential")
      ->transform(CLI::CheckedTransformer(kFieldKinds, CLI::ignore_case))
      ->required();
  app->add_option("--theta", fa.theta, "rate of the exponential family");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phi-entropy and Phi-Sobolev inequality checks"};
  app.require_subcommand(1);
  app.fallthrough();

  cli::GlobalOptions g;
  std::uint64_t seed = 0;
  double tol = 0.0;
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* tol_opt = app.add_option("--tol", tol, "absolute tolerance")->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", g.out_dir, "directory for CSV/JSON artifacts");
  app.add_option("--format", g.format, "table format")->check(CLI::IsMember({"csv", "json"}));

  // check-phi
  auto* check = app.add_subcommand("check-phi", "H1 / H2 / H2' checks on a grid");
  PhiArgs check_phi;
  add_phi(check, check_phi, "--kind", true);
  std::vector<std::string> hyps{"H1", "H2", "H2prime"};
  cli::GridOptions grid;
  double glo = 0, ghi = 0;
  std::size_t gn = 0;
  bool linear = false;
  check->add_option("--hyp", hyps, "hypotheses to check")->check(CLI::IsMember({"H1", "H2", "H2prime"}));
  auto* glo_opt = check->add_option("--grid-lo", glo);
  auto* ghi_opt = check->add_option("--grid-hi", ghi);
  auto* gn_opt = check->add_option("--grid-n", gn)->check(CLI::Range(3, 100000));
  auto* glin = check->add_flag("--linear-grid", linear);

  // entropy
  auto* ent = app.add_subcommand("entropy", "Ent^Phi_mu(f)");
  PhiArgs ent_phi;
  FieldArgs ent_f;
  std::string ent_measure = "gaussian";
  double mean = 0.0, var = 1.0, rate = 1.0;
  add_phi(ent, ent_phi, "--phi", false);
  add_field(ent, ent_f, "--f");
  ent->add_option("--measure", ent_measure)->check(CLI::IsMember({"gaussian", "poisson"}));
  ent->add_option("--mean", mean);
  ent->add_option("--var", var);
  ent->add_option("--rate", rate);

  // verify
  auto* ver = app.add_subcommand("verify", "batch verification from a config file");
  std::string cfg;
  ver->add_option("config", cfg, "config path")->required();

  // decay
  auto* dec = app.add_subcommand("decay", "entropy decay along a semigroup");
  std::string sg = "ou";
  double rho = 1.0, sg_rate = 1.0, t_max = 2.0;
  long period = 0;
  std::size_t steps = 21;
  PhiArgs dec_phi;
  FieldArgs dec_f;
  dec->add_option("--sg", sg)->check(CLI::IsMember({"ou", "heat", "poisson"}));
  dec->add_option("--rho", rho);
  dec->add_option("--rate", sg_rate);
  dec->add_option("--period", period, "cycle length of the Poisson walk (0: Z)");
  dec->add_option("--t-max", t_max);
  dec->add_option("--steps", steps);
  add_phi(dec, dec_phi, "--phi", false);
  add_field(dec, dec_f, "--f");

  // tail
  auto* tail = app.add_subcommand("tail", "tail bounds against Monte Carlo tails");
  double c = 2.0, tail_var = 1.0, a = 0.0;
  std::size_t n = kDefaultTailSamples;
  FieldArgs tail_f;
  tail->add_option("--c", c, "constant of the inequality");
  add_field(tail, tail_f, "--F");
  tail->add_option("--var", tail_var, "variance of the Gaussian reference law");
  auto* a_opt = tail->add_option("--beckner-a", a, "Beckner exponent a in [0, 1]");
  tail->add_option("--n", n, "samples");

  // maxent
  auto* mx = app.add_subcommand("maxent", "maximum Phi-entropy density under E W = c");
  PhiArgs mx_phi;
  FieldArgs mx_w;
  double mx_c = 1.0, lo = -12.0, hi = 12.0;
  std::size_t points = 4801;
  add_phi(mx, mx_phi, "--phi", false);
  add_field(mx, mx_w, "--W");
  mx->add_option("--c", mx_c)->required();
  mx->add_option("--lo", lo);
  mx->add_option("--hi", hi);
  mx->add_option("--points", points);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kParse;
  }
  if (*seed_opt) g.seed = seed;
  if (*tol_opt) g.tol = tol;

  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
  return cli::guarded(
      [&]() -> int {
        if (*check) {
          std::vector<Hypothesis> hs;
          for (const auto& h : hyps)
            hs.push_back(h == "H1" ? Hypothesis::H1 : (h == "H2" ? Hypothesis::H2 : Hypothesis::H2prime));
          if (*glo_opt) grid.lo = glo;
          if (*ghi_opt) grid.hi = ghi;
          if (*gn_opt) grid.n = gn;
          if (*glin) grid.log_scaled = !linear;
          return cli::cmd_check_phi(check_phi.spec(), hs, grid, g, out);
        }
        if (*ent) {
          config::MeasureSpec ms;
          ms.kind = ent_measure;
          ms.mean = {mean};
          ms.cov = {var};
          ms.rate = rate;
          return cli::cmd_entropy(ent_phi.spec(), ms, ent_f.spec(), g, out);
        }
        if (*ver) return cli::cmd_verify(cfg, g, out, err);
        if (*dec) {
          Semigroup s = OUSemigroup{rho};
          if (sg == "heat") s = HeatSemigroup{};
          if (sg == "poisson") s = PoissonSemigroup{sg_rate, period};
          return cli::cmd_decay(s, dec_phi.spec(), dec_f.spec(), t_max, steps, g, out);
        }
        if (*tail) {
          std::optional<double> ba;
          if (*a_opt) ba = a;
          return cli::cmd_tail(c, tail_f.spec(), tail_var, ba, n, g, out);
        }
        return cli::cmd_maxent(mx_phi.spec(), mx_w.spec(), mx_c, lo, hi, points, g, out);
      },
      err);
}
