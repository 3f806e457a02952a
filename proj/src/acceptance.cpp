// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "nlab/asymptotics.hpp"
#include "nlab/control.hpp"
#include "nlab/ebsde.hpp"
#include "nlab/pde_oracle.hpp"
#include "nlab/rng.hpp"
#include "nlab/sde.hpp"

namespace nlab {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

SdeCoefficients brownian_interval() {
  return make_coefficients([](std::span<const double>, std::span<double> o) { o[0] = 0.0; }, Matrix::Identity(1, 1),
                           ConvexDomain::interval(1.0));
}

NeumannProblem benchmark(Driver driver = Driver::zero()) {
  return NeumannProblem{brownian_interval(), std::move(driver), [](std::span<const double>) { return 1.0; },
                        [](std::span<const double>) { return 0.0; }};
}

Vector point(double x) {
  Vector v(1);
  v << x;
  return v;
}

// One CSV table of checks: what, value, reference, tolerance, pass.
class CheckTable {
 public:
  CheckTable() { os_ << std::setprecision(17) << "check,value,reference,tolerance,pass\n"; }

  bool near(const std::string& what, double value, double ref, double tol) {
    return add(what, value, ref, tol, std::abs(value - ref) <= tol);
  }
  bool add(const std::string& what, double value, double ref, double tol, bool pass) {
    os_ << what << ',' << value << ',' << ref << ',' << tol << ',' << (pass ? 1 : 0) << '\n';
    all_ = all_ && pass;
    if (!pass && failed_.empty()) {
      std::ostringstream d;
      d << std::setprecision(5) << what << " = " << value << " vs " << ref << " (tol " << tol << ")";
      failed_ = d.str();
    }
    return pass;
  }
  bool all() const { return all_; }
  const std::string& first_failure() const { return failed_; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  bool all_ = true;
  std::string failed_;
};

struct Suite {
  fs::path dir;
  std::uint64_t seed;
  std::size_t workers;
  std::ostream* log;
  ArtifactWriter out;
  std::vector<CriterionResult> results;
  std::map<std::string, double> metrics;

  std::uint64_t seed_for(const char* tag) const { return derive_seed(seed, tag); }

  void finish(int id, const std::string& name, const CheckTable& t, const std::string& file, std::string detail) {
    out.write(file, t.str());
    if (!t.all()) detail = t.first_failure();
    results.push_back({id, name, t.all(), detail});
    if (log) *log << format_criterion(results.back()) << std::endl;
  }
};

std::string fmt(double v, int p = 5) {
  std::ostringstream os;
  os << std::setprecision(p) << v;
  return os.str();
}

void c1_ergodic(Suite& s) {
  const NeumannProblem p = benchmark();
  CheckTable t;
  const ErgodicFd fd = solve_ergodic_fd(p);
  double fd_err = 0.0;
  for (std::size_t i = 0; i < fd.x.size(); ++i) fd_err = std::max(fd_err, std::abs(fd.v[i] - 0.5 * fd.x[i] * fd.x[i]));
  t.near("fd.lambda", fd.lambda, 0.5, 1e-4);
  t.add("fd.v_sup_error", fd_err, 0.0, 1e-4, fd_err <= 1e-4);
  s.metrics["lambda_hat"] = fd.lambda;

  std::string detail = "fd lambda " + fmt(fd.lambda, 10);
  for (const ErgodicMethod m : {ErgodicMethod::differencing, ErgodicMethod::discounted}) {
    ErgodicConfig ec;
    ec.method = m;
    ec.bsde.seed = s.seed_for(m == ErgodicMethod::differencing ? "c1.differencing" : "c1.discounted");
    ec.bsde.workers = s.workers;
    if (m == ErgodicMethod::differencing) {
      ec.bsde.n_paths = 20000;
      ec.bsde.n_steps = 3000;
    } else {
      ec.bsde.n_paths = 10000;
    }
    ec.discounted.bsde = ec.bsde;
    const ErgodicSolution sol = solve_ergodic(p, ec);
    double err = 0.0;
    for (std::size_t i = 0; i < sol.points.size(); ++i) {
      const double x = sol.points[i](0);
      err = std::max(err, std::abs(sol.v[i] - 0.5 * x * x));
    }
    const std::string name = to_string(m);
    t.near(name + ".lambda", sol.lambda, 0.5, std::max(1e-2, 3.0 * sol.lambda_se));
    t.add(name + ".v_sup_error", err, 0.0, 2e-2, err <= 2e-2);
    s.metrics[name + ".lambda_hat"] = sol.lambda;
    s.metrics[name + ".lambda_se"] = sol.lambda_se;
    detail += ", " + name + " " + fmt(sol.lambda, 4) + " +- " + fmt(sol.lambda_se, 2) + " (v err " + fmt(err, 2) + ")";
    if (!sol.flags.empty()) detail += " [" + name + " flagged: " + sol.flags.front() + "]";
  }
  s.finish(1, "ergodic benchmark", t, "c1_ergodic.csv", detail);
}

void c2_limit(Suite& s) {
  NeumannProblem p = benchmark();
  CheckTable t;
  AsymptoticsConfig ac;
  ac.horizons = {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 5.0};
  ac.xs = {point(0.0)};
  const AsymptoticsReport r1 = run_asymptotics(p, ac);
  const LimitFit& f1 = r1.fits.front().second;
  t.near("h0.L_hat", f1.L_hat, -1.0 / 6.0, 1e-2);
  t.near("h0.eta_hat_ratio", f1.eta_hat / (kPi * kPi / 2.0), 1.0, 0.15);

  p.h = [](std::span<const double> x) { return x[0]; };
  ac.horizons = {1, 2, 3, 4, 5, 6, 7, 8, 10, 16};
  ac.xs = {point(0.5)};
  const AsymptoticsReport r2 = run_asymptotics(p, ac);
  const LimitFit& f2 = r2.fits.front().second;
  t.near("hx.eta_hat_ratio", f2.eta_hat / (kPi * kPi / 8.0), 1.0, 0.15);

  for (const auto* r : {&r1, &r2}) {
    for (const auto& row : r->table.rows) {
      t.add("w(T=" + fmt(row.T) + ",x=" + fmt(row.x(0)) + ")", row.w, f1.L_hat, 0.0, true);
    }
  }
  s.metrics["L_hat"] = f1.L_hat;
  s.metrics["eta_hat"] = f1.eta_hat;
  s.metrics["eta_hat_h_x"] = f2.eta_hat;
  s.finish(2, "large-time expansion", t, "c2_limit.csv",
           "L " + fmt(f1.L_hat, 6) + ", eta " + fmt(f1.eta_hat) + ", eta(h=x) " + fmt(f2.eta_hat));
}

void c3_lambda_rate(Suite& s) {
  const NeumannProblem p = benchmark();
  CheckTable t;
  const LambdaSweep ls = lambda_sweep(p, {2, 4, 8, 16}, point(0.0), 0.5, Source::fd);
  for (const auto& r : ls.rows) t.add("error(T=" + fmt(r.T) + ")", r.error, 0.0, 0.0, true);
  t.add("slope", ls.slope, -1.0, 0.3, ls.slope >= -1.3 && ls.slope <= -0.7);
  t.near("signed_error_T2", ls.rows.front().error, -1.0 / 12.0, 2e-3);
  s.metrics["lambda_rate_slope"] = ls.slope;
  s.finish(3, "lambda rate", t, "c3_lambda_rate.csv",
           "slope " + fmt(ls.slope) + ", error(T=2) " + fmt(ls.rows.front().error, 6));
}

void c4_representation(Suite& s) {
  CheckTable t;
  double worst = 0.0;
  for (const auto& [name, driver] : {std::pair{"zero", Driver::zero()}, std::pair{"neg_abs_z", Driver::neg_abs_z()}}) {
    const NeumannProblem p = benchmark(driver);
    for (double T : {0.5, 1.0, 2.0}) {
      const GridField fd = solve_parabolic_fd(p, T);
      for (double x : {-0.5, 0.0, 0.5}) {
        BsdeConfig bc;
        bc.n_paths = 10000;
        bc.n_steps = static_cast<std::size_t>(std::llround(T * 1000));
        bc.seed = s.seed_for("c4");
        bc.workers = s.workers;
        const BsdeSolution sol = solve_finite_horizon(p, T, point(x), bc);
        const double u = fd.value(fd.values.size() - 1, x);
        const double tol = std::max(2e-2, 3.0 * sol.y0_se);
        t.near(std::string(name) + "(T=" + fmt(T) + ",x=" + fmt(x) + ")", sol.y0, u, tol);
        worst = std::max(worst, std::abs(sol.y0 - u) / tol);
      }
    }
  }
  s.finish(4, "regression MC vs FD", t, "c4_representation.csv", "worst |y0 - u|/tol " + fmt(worst, 3));
}

void c5_flow(Suite& s) {
  const NeumannProblem p = benchmark();
  CheckTable t;
  const double r0 = flow_composition_check(p, 1.0, 1.0);
  FdConfig fine;
  fine.n_intervals *= 2;
  fine.dt /= 2;
  const double r1 = flow_composition_check(p, 1.0, 1.0, fine);
  t.add("residual_default", r0, 0.0, 5e-4, r0 <= 5e-4);
  t.add("residual_refined", r1, 0.0, 0.0, true);
  // An exact zero after refinement counts as shrinking.
  const double ratio = r1 > 0.0 ? r0 / r1 : std::numeric_limits<double>::infinity();
  t.add("refinement_ratio", ratio, 3.0, 0.0, ratio >= 3.0);
  s.finish(5, "flow identity", t, "c5_flow.csv", "residual " + fmt(r0, 3) + ", ratio " + fmt(ratio, 3));
}

void c6_penalization(Suite& s) {
  CheckTable t;
  const auto ext = extend_drift([](std::span<const double>, std::span<double> o) { o[0] = 0.0; },
                                ConvexDomain::interval(1.0), 0.0);
  SimulationConfig sc;
  sc.n_paths = 2000;
  sc.seed = s.seed_for("c6");
  sc.workers = s.workers;
  const auto rows = penalization_sweep(ext, Matrix::Identity(1, 1), point(0.0), {8, 16, 32, 64, 128},
                                       uniform_grid(1.0, 1000), sc);
  std::string detail;
  for (const auto& r : rows) {
    t.add("mean_sup_sq(n=" + std::to_string(r.n) + ")", r.mean_sup_sq, 0.0, r.se, true);
    detail += (detail.empty() ? "" : " ") + fmt(r.mean_sup_sq, 3);
  }
  const bool ok = decreasing_with_tolerance(rows, 2.0);
  t.add("decreasing", ok ? 1.0 : 0.0, 1.0, 0.0, ok);
  s.finish(6, "penalization", t, "c6_penalization.csv", "E sup|X^n - X|^2: " + detail);
}

void c7_coupling(Suite& s) {
  CheckTable t;
  const PerturbedSde ou{[](std::span<const double> x, std::span<double> o) { o[0] = -x[0]; }, Matrix::Identity(1, 1)};
  const BoundedFunction ind{[](std::span<const double> x) { return x[0] > 0.0 ? 1.0 : 0.0; }, 1.0};
  SimulationConfig sc;
  sc.n_paths = 20000;
  sc.seed = s.seed_for("c7");
  sc.workers = s.workers;
  const auto grid = uniform_grid(3.0, 3000);
  const CouplingResult res = coupling_gap(ou, ind, point(1.0), point(-1.0), grid, sc);
  const std::size_t k1 = 1000;
  const double s1 = std::sqrt((1.0 - std::exp(-2.0)) / 2.0);
  const double exact = 2.0 * std_normal_cdf(std::exp(-1.0) / s1) - 1.0;
  t.near("gap(t=1)", res.gap[k1], exact, 3.0 * res.se[k1]);
  const DecayFit fit = fit_decay_rate(res, 0.5);
  t.add("log_gap_slope", -fit.rate, 0.0, 0.0, fit.rate > 0.0);
  t.near("rate", fit.rate, 1.0, 0.15);
  s.finish(7, "coupling", t, "c7_coupling.csv",
           "gap(1) " + fmt(res.gap[k1], 4) + " +- " + fmt(res.se[k1], 2) + " vs " + fmt(exact, 4) + ", rate " + fmt(fit.rate, 4));
}

void c8_moments(Suite& s) {
  CheckTable t;
  SimulationConfig sc;
  sc.n_paths = 20000;
  sc.seed = s.seed_for("c8");
  sc.workers = s.workers;
  const auto grid = uniform_grid(1.0, 1000);
  const PerturbedSde ou{[](std::span<const double> x, std::span<double> o) { o[0] = -x[0]; }, Matrix::Identity(1, 1)};
  const PathBundle b = simulate_perturbed(ou, point(0.0), grid, sc);
  const MomentEstimate m = moment_at(b, 2, grid.size() - 1);
  const double exact = (1.0 - std::exp(-2.0)) / 2.0;
  t.near("ou.m2(t=1)", m.value, exact, 3.0 * m.se);

  sc.n_paths = 5000;
  const PathBundle r = simulate_reflected(brownian_interval(), point(0.5), grid, sc);
  const double diam = 2.0;
  const MomentEstimate r2 = moment_estimate(r, 2);
  const MomentEstimate r4 = moment_estimate(r, 4);
  t.add("reflected.max_m2", r2.value, diam * diam, 0.0, r2.value <= diam * diam);
  t.add("reflected.max_m4", r4.value, std::pow(diam, 4), 0.0, r4.value <= std::pow(diam, 4));
  s.finish(8, "moment bound", t, "c8_moments.csv",
           "OU m2 " + fmt(m.value, 4) + " +- " + fmt(m.se, 2) + " vs " + fmt(exact, 4) + ", reflected max m2 " + fmt(r2.value, 3));
}

void c9_control(Suite& s) {
  CheckTable t;
  const ControlProblem cp{brownian_interval(),
                          {point(-1.0), point(1.0)},
                          {"minus", "plus"},
                          [](std::span<const double>, std::size_t) { return 0.0; },
                          [](std::span<const double>) { return 0.0; },
                          [](std::span<const double>) { return 1.0; }};
  ExpansionConfig ec;
  ec.cost.n_paths = 10000;
  ec.cost.seed = s.seed_for("c9");
  ec.cost.workers = s.workers;
  ec.suboptimal_controls = {0, 1};
  ec.include_adversarial = true;
  const ExpansionReport rep = verify_expansion(cp, {2.0, 4.0, 8.0}, point(0.0), ec);
  for (const auto& r : rep.rows) {
    t.near("optimal.J(T=" + fmt(r.T) + ")", r.J, r.u_fd, std::max(2e-2, 3.0 * r.se));
  }
  std::vector<std::string> policies;
  for (const auto& r : rep.suboptimal) {
    t.add(r.policy + ".J(T=" + fmt(r.T) + ")", r.J, r.u_fd - 3.0 * r.se, 0.0, r.J >= r.u_fd - 3.0 * r.se);
    if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) policies.push_back(r.policy);
  }
  t.add("suboptimal_policies", static_cast<double>(policies.size()), 3.0, 0.0, policies.size() >= 3);
  for (const auto& r : rep.rows) {
    t.near("renormalized(T=" + fmt(r.T) + ")", r.renormalized, rep.L_hat, std::max(2e-2, 3.0 * r.se));
  }
  s.metrics["control.lambda_hat"] = rep.lambda;
  s.metrics["control.L_hat"] = rep.L_hat;
  s.metrics["control.empirical_limit"] = rep.empirical_limit;
  std::string ren;
  for (const auto& r : rep.rows) ren += (ren.empty() ? "" : " ") + fmt(r.renormalized, 3);
  s.finish(9, "control", t, "c9_control.csv", "L " + fmt(rep.L_hat, 4) + ", J - lambda T - v: " + ren);
}

std::vector<CriterionResult> run_suite(const fs::path& dir, std::uint64_t seed, std::size_t workers, std::ostream* log,
                                       std::map<std::string, std::string>* hashes, std::map<std::string, double>* metrics) {
  Suite s{dir, seed, workers, log, ArtifactWriter(dir), {}, {}};
  c1_ergodic(s);
  c2_limit(s);
  c3_lambda_rate(s);
  c4_representation(s);
  c5_flow(s);
  c6_penalization(s);
  c7_coupling(s);
  c8_moments(s);
  c9_control(s);
  if (hashes) *hashes = s.out.hashes();
  if (metrics) *metrics = s.metrics;
  return s.results;
}

}  // namespace

std::string format_criterion(const CriterionResult& r) {
  std::ostringstream os;
  os << "criterion " << std::setw(2) << r.id << " [" << r.name << "]: " << (r.pass ? "PASS" : "FAIL") << "  " << r.detail;
  return os.str();
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt) {
  Manifest man;
  man.name = "bench";
  man.kind = "bench";
  man.seed = opt.seed;
  {
    std::ostringstream cfg;
    cfg << "[experiment]\nkind=bench\nseed=" << opt.seed << "\nworkers=" << opt.workers << "\ndeterminism="
        << (opt.determinism ? "true" : "false") << '\n';
    man.config = cfg.str();
  }
  fs::create_directories(opt.dir);
  write_manifest(opt.dir, man);

  std::map<std::string, std::string> hashes;
  auto results = run_suite(opt.dir, opt.seed, opt.workers, opt.log, &hashes, &man.metrics);
  man.artifacts = hashes;
  man.criteria = results;
  write_manifest(opt.dir, man);

  if (opt.determinism) {
    // Same master seed, different worker count.
    const fs::path rerun = opt.dir / "rerun";
    if (opt.log) *opt.log << "rerunning the suite for the determinism check" << std::endl;
    std::map<std::string, std::string> again;
    run_suite(rerun, opt.seed, opt.workers + 1, nullptr, &again, nullptr);
    std::size_t same = 0;
    std::string mismatch;
    for (const auto& [name, hash] : hashes) {
      const auto it = again.find(name);
      if (it != again.end() && read_file(opt.dir / name) == read_file(rerun / name)) {
        ++same;
      } else if (mismatch.empty()) {
        mismatch = name;
      }
    }
    const bool pass = same == hashes.size() && again.size() == hashes.size();
    results.push_back({10, "determinism", pass,
                       std::to_string(same) + "/" + std::to_string(hashes.size()) + " CSVs byte-identical" +
                           (mismatch.empty() ? "" : ", first mismatch " + mismatch)});
    if (opt.log) *opt.log << format_criterion(results.back()) << std::endl;
  }
  man.criteria = results;
  man.status = "complete";
  const bool all = std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
  man.exit_code = all ? 0 : 3;
  write_manifest(opt.dir, man);
  return results;
}

}  // namespace nlab
