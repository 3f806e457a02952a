// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <boost/algorithm/string/split.hpp>
#include <boost/algorithm/string/trim.hpp>

#include "nlab/asymptotics.hpp"
#include "nlab/ebsde.hpp"
#include "nlab/expression.hpp"
#include "nlab/io.hpp"
#include "nlab/pde_oracle.hpp"
#include "nlab/sde.hpp"

namespace nlab {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_trimmed(const std::string& s, char sep) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, s, [sep](char c) { return c == sep; });
  for (auto& p : parts) boost::algorithm::trim(p);
  return parts;
}

Vector point_from(const RunConfig& cfg, const std::string& key, std::size_t dim) {
  const auto v = cfg.get_list(key, std::vector<double>(dim, 0.0));
  if (v.size() != dim) {
    throw ParameterError("config key '" + key + "' needs " + std::to_string(dim) + " coordinates");
  }
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(dim));
}

// Points on the first axis, padded with zeros.
std::vector<Vector> axis_points(const std::vector<double>& xs, std::size_t dim) {
  std::vector<Vector> out;
  for (double x : xs) {
    Vector p = Vector::Zero(static_cast<Eigen::Index>(dim));
    p(0) = x;
    out.push_back(p);
  }
  return out;
}

std::string csv_header_x(std::size_t dim) {
  std::string s;
  for (std::size_t j = 0; j < dim; ++j) s += "x_" + std::to_string(j + 1) + ",";
  return s;
}

struct Context {
  const RunConfig& cfg;
  ArtifactWriter& out;
  Manifest& man;
  std::ostream& log;
  std::uint64_t seed;
  std::size_t workers;

  void metric(const std::string& k, double v) { man.metrics[k] = v; }
  void flags(const std::vector<std::string>& f) { man.flags.insert(man.flags.end(), f.begin(), f.end()); }
  void warnings(const std::vector<std::string>& w) { man.warnings.insert(man.warnings.end(), w.begin(), w.end()); }
};

std::ostringstream csv() {
  std::ostringstream os;
  os << std::setprecision(17);
  return os;
}

void run_simulate(Context& c) {
  const auto& cfg = c.cfg;
  const SdeCoefficients coeffs = coefficients_from_config(cfg);
  const std::size_t d = coeffs.dim();
  const std::string scheme = cfg.get("simulate.scheme", "reflected");
  const Vector x0 = point_from(cfg, "simulate.x0", d);
  const double T = cfg.get_double("simulate.horizon", 1.0);
  const auto grid = uniform_grid(T, cfg.get_size("simulate.n_steps", 1000));
  SimulationConfig sc;
  sc.n_paths = cfg.get_size("simulate.n_paths", 1000);
  sc.seed = c.seed;
  sc.workers = c.workers;
  sc.boundary_correction = cfg.get_bool("simulate.boundary_correction", false);

  PathBundle b;
  if (scheme == "reflected") {
    b = simulate_reflected(coeffs, x0, grid, sc);
  } else if (scheme == "penalized") {
    const auto ext = extend_drift(coeffs.drift, coeffs.domain, cfg.get_double("sde.drift_bound", 1.0));
    b = simulate_penalized(ext, coeffs.sigma, x0, static_cast<int>(cfg.get_int("simulate.n", 16)), grid, sc);
  } else if (scheme == "perturbed") {
    b = simulate_perturbed(PerturbedSde{coeffs.drift, coeffs.sigma}, x0, grid, sc);
  } else {
    throw ParameterError("config key 'simulate.scheme': unknown scheme '" + scheme + "'");
  }
  c.warnings(b.diagnostics);

  const std::size_t dump = std::min(b.n_paths, cfg.get_size("simulate.dump_paths", 10));
  auto paths = csv();
  paths << "path_id,t," << csv_header_x(d) << "K\n";
  for (std::size_t p = 0; p < dump; ++p) {
    for (std::size_t k = 0; k < b.n_times(); ++k) {
      paths << p << ',' << b.times[k] << ',';
      for (double v : b.state(k, p)) paths << v << ',';
      paths << b.K(k, p) << '\n';
    }
  }
  c.out.write("paths.csv", paths.str());

  const std::size_t last = b.n_times() - 1;
  const std::size_t stride = std::max<std::size_t>(1, last / 100);
  auto mom = csv();
  mom << "t,m2,se_m2,m4,se_m4,mean_K\n";
  for (std::size_t k = 0; k <= last; k += stride) {
    const auto m2 = moment_at(b, 2, k);
    const auto m4 = moment_at(b, 4, k);
    double mk = 0.0;
    for (std::size_t p = 0; p < b.n_paths; ++p) mk += b.K(k, p);
    mom << b.times[k] << ',' << m2.value << ',' << m2.se << ',' << m4.value << ',' << m4.se << ','
        << mk / static_cast<double>(b.n_paths) << '\n';
  }
  c.out.write("moments.csv", mom.str());

  double mean_k = 0.0;
  bool monotone = true, inside = true;
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    mean_k += b.K(last, p);
    for (std::size_t k = 1; k <= last; ++k) {
      if (b.K(k, p) < b.K(k - 1, p)) monotone = false;
      if (scheme == "reflected" && !coeffs.domain.contains(b.state(k, p), 1e-9)) inside = false;
    }
  }
  mean_k /= static_cast<double>(b.n_paths);
  const auto m2 = moment_estimate(b, 2);
  c.metric("mean_K_T", mean_k);
  c.metric("mean_K_T_over_T", mean_k / T);
  c.metric("moment2_max", m2.value);
  c.metric("moment2_se", m2.se);
  c.metric("moment2_time", m2.time);
  if (!monotone) c.man.flags.push_back("local time decreased along a path");
  if (!inside) c.man.flags.push_back("a reflected state left the closed domain");
}

void run_bsde(Context& c) {
  const auto& cfg = c.cfg;
  const NeumannProblem problem = problem_from_config(cfg);
  problem.validate(c.seed);
  const std::size_t d = problem.dim();
  const double T = cfg.get_double("bsde.horizon", 1.0);
  const Vector x0 = point_from(cfg, "bsde.x0", d);
  const BsdeConfig bc = bsde_from_config(cfg);
  const BsdeSolution sol = solve_finite_horizon(problem, T, x0, bc);
  c.warnings(sol.warnings);
  c.flags(sol.flags);
  c.metric("y0", sol.y0);
  c.metric("y0_se", sol.y0_se);
  c.metric("mean_local_time", sol.mean_local_time);
  for (Eigen::Index j = 0; j < sol.z0.size(); ++j) c.metric("z0_" + std::to_string(j + 1), sol.z0(j));

  auto y = csv();
  if (bc.init == CloudInit::uniform) {
    const auto pts = ergodic_grid(problem.coeffs.domain, cfg.get_size("bsde.n_grid", 41));
    const auto u = evaluate_u(sol, problem, pts);
    y << csv_header_x(d) << "u,se_u\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (Eigen::Index j = 0; j < pts[i].size(); ++j) y << pts[i](j) << ',';
      y << u[i] << ',' << surface_standard_error(sol, pts[i]) << '\n';
    }
    c.out.write("surface.csv", y.str());
  } else {
    y << csv_header_x(d) << "y0,se\n";
    for (Eigen::Index j = 0; j < x0.size(); ++j) y << x0(j) << ',';
    y << sol.y0 << ',' << sol.y0_se << '\n';
    c.out.write("y0.csv", y.str());
  }

  if (d == 1 && cfg.get_bool("bsde.compare_fd", true)) {
    const auto fd = solve_parabolic_fd(problem, T);
    const double u = fd.value(fd.values.size() - 1, x0(0));
    c.metric("u_fd", u);
    c.metric("y0_minus_u_fd", sol.y0 - u);
  }
}

ErgodicConfig ergodic_from_config(const RunConfig& cfg) {
  ErgodicConfig ec;
  ec.method = ergodic_method_from_string(cfg.get("ergodic.method", to_string(ec.method)));
  ec.bsde = bsde_from_config(cfg);
  ec.alphas = cfg.get_list("ergodic.alphas", ec.alphas);
  ec.horizons = cfg.get_list("ergodic.horizons", ec.horizons);
  ec.discounted.bsde = ec.bsde;
  ec.discounted.horizon = cfg.get_double("ergodic.truncation", 0.0);
  ec.discounted.horizon_factor = cfg.get_double("ergodic.horizon_factor", ec.discounted.horizon_factor);
  ec.discounted.step = cfg.get_double("ergodic.step", ec.discounted.step);
  ec.discounted.lift = cfg.get_bool("ergodic.lift", ec.discounted.lift);
  ec.discounted.alpha_h = cfg.get_double("ergodic.alpha_h", ec.discounted.alpha_h);
  ec.surface_paths = cfg.get_size("ergodic.surface_paths", ec.surface_paths);
  ec.n_grid = cfg.get_size("ergodic.n_grid", ec.n_grid);
  ec.v_bound = cfg.get_double("ergodic.v_bound", ec.v_bound);
  return ec;
}

void run_ergodic(Context& c) {
  const auto& cfg = c.cfg;
  const NeumannProblem problem = problem_from_config(cfg);
  problem.validate(c.seed);
  const ErgodicSolution sol = solve_ergodic(problem, ergodic_from_config(cfg));
  c.flags(sol.flags);
  c.warnings(sol.warnings);
  c.metric("lambda_hat", sol.lambda);
  c.metric("lambda_se", sol.lambda_se);
  c.metric("lipschitz", sol.lipschitz);

  auto v = csv();
  sol.write_csv(v);
  c.out.write("v.csv", v.str());
  auto s = csv();
  s << "parameter,estimate,se\n";
  for (const auto& r : sol.sweep) s << r.parameter << ',' << r.estimate << ',' << r.se << '\n';
  c.out.write("sweep.csv", s.str());

  if (problem.dim() == 1 && cfg.get_bool("ergodic.compare_fd", true)) {
    const auto fd = solve_ergodic_fd(problem);
    double err = 0.0;
    for (std::size_t i = 0; i < sol.points.size(); ++i) {
      err = std::max(err, std::abs(sol.v[i] - fd.v_at(sol.points[i](0))));
    }
    c.metric("lambda_fd", fd.lambda);
    c.metric("v_sup_error_vs_fd", err);
  }
}

void run_asymptotics_kind(Context& c) {
  const auto& cfg = c.cfg;
  const NeumannProblem problem = problem_from_config(cfg);
  problem.validate(c.seed);
  AsymptoticsConfig ac;
  ac.source = source_from_string(cfg.get("asymptotics.source", "fd"));
  ac.horizons = cfg.get_list("asymptotics.horizons", {0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 5.0});
  ac.xs = axis_points(cfg.get_list("asymptotics.xs", {0.0}), problem.dim());
  ac.fit_index = cfg.get_size("asymptotics.fit_index", 0);
  ac.solver.fd.n_intervals = cfg.get_size("oracle.n_intervals", ac.solver.fd.n_intervals);
  ac.solver.fd.dt = cfg.get_double("oracle.dt", ac.solver.fd.dt);
  ac.solver.bsde = bsde_from_config(cfg);
  ac.solver.bsde_step = cfg.get_double("asymptotics.bsde_step", ac.solver.bsde_step);
  ac.fit.burn_in = cfg.get_double("asymptotics.burn_in", ac.fit.burn_in);
  ac.w_bound = cfg.get_double("asymptotics.w_bound", ac.w_bound);
  if (problem.dim() != 1) ac.ergodic = ergodic_from_config(cfg);

  const AsymptoticsReport rep = run_asymptotics(problem, ac);
  c.flags(rep.flags);
  c.metric("lambda_hat", rep.lambda_hat);
  for (const auto& [src, fit] : rep.fits) {
    const std::string p = rep.fits.size() > 1 ? to_string(src) + "." : "";
    c.metric(p + "L_hat", fit.L_hat);
    c.metric(p + "L_se", fit.L_se);
    c.metric(p + "eta_hat", fit.eta_hat);
    c.metric(p + "r2", fit.r2);
    c.metric(p + "window_lo", fit.window_lo);
    c.metric(p + "window_hi", fit.window_hi);
  }
  auto r = csv();
  rep.write_csv(r);
  c.out.write("report.csv", r.str());
  auto s = csv();
  s << "source,T,spread\n";
  for (const auto& row : rep.table.spread) s << to_string(row.source) << ',' << row.T << ',' << row.spread << '\n';
  c.out.write("spread.csv", s.str());
  auto f = csv();
  rep.write_summary(f);
  c.out.write("fit.txt", f.str());

  const auto [lo, hi] = std::minmax_element(ac.horizons.begin(), ac.horizons.end());
  if (*lo > 0 && *hi / *lo >= 8.0 && ac.source != Source::bsde) {
    const auto ls = lambda_sweep(problem, ac.horizons, ac.xs.at(ac.fit_index), rep.lambda_hat, Source::fd, ac.solver);
    auto l = csv();
    l << "T,u,se,ratio,error\n";
    for (const auto& row : ls.rows) l << row.T << ',' << row.u << ',' << row.se << ',' << row.ratio << ',' << row.error << '\n';
    c.out.write("lambda_rate.csv", l.str());
    c.metric("lambda_rate_slope", ls.slope);
  }
}

void run_control(Context& c) {
  const auto& cfg = c.cfg;
  const ControlProblem cp = control_from_config(cfg);
  cp.validate(c.seed);
  const std::size_t d = cp.coeffs.dim();
  const auto horizons = cfg.get_list("control.horizons", {2.0, 4.0, 8.0});
  const Vector x0 = point_from(cfg, "control.x0", d);

  ExpansionConfig ec;
  ec.cost.n_paths = cfg.get_size("control.n_paths", ec.cost.n_paths);
  ec.cost.step = cfg.get_double("control.step", ec.cost.step);
  ec.cost.seed = c.seed;
  ec.cost.workers = c.workers;
  ec.cost.boundary_correction = cfg.get_bool("control.boundary_correction", true);
  const std::string mode = cfg.get("control.mode", "controlled");
  if (mode == "girsanov") {
    ec.cost.mode = CostMode::girsanov;
  } else if (mode != "controlled") {
    throw ParameterError("config key 'control.mode': unknown mode '" + mode + "'");
  }
  std::vector<double> all;
  for (std::size_t a = 0; a < cp.n_controls(); ++a) all.push_back(static_cast<double>(a));
  for (double a : cfg.get_list("control.suboptimal", all)) {
    if (a < 0 || a >= static_cast<double>(cp.n_controls())) throw ParameterError("config key 'control.suboptimal': no control " + format_double(a));
    ec.suboptimal_controls.push_back(static_cast<std::size_t>(a));
  }
  ec.include_adversarial = cfg.get_bool("control.adversarial", true);

  const ExpansionReport rep = verify_expansion(cp, horizons, x0, ec);
  c.flags(rep.flags);
  c.metric("lambda_hat", rep.lambda);
  c.metric("v_x0", rep.v_x);
  c.metric("L_hat", rep.L_hat);
  c.metric("empirical_limit", rep.empirical_limit);
  auto e = csv();
  e << "T,J,se,u_fd,renormalized\n";
  for (const auto& r : rep.rows) e << r.T << ',' << r.J << ',' << r.se << ',' << r.u_fd << ',' << r.renormalized << '\n';
  c.out.write("expansion.csv", e.str());
  auto s = csv();
  s << "policy,T,J,se,u_fd\n";
  for (const auto& r : rep.suboptimal) s << r.policy << ',' << r.T << ',' << r.J << ',' << r.se << ',' << r.u_fd << '\n';
  c.out.write("suboptimal.csv", s.str());

  const double t_erg = cfg.get_double("control.ergodic_horizon", 0.0);
  if (t_erg > 0.0) {
    const auto erg = solve_ergodic_fd(cp.neumann());
    const auto ec2 = ergodic_cost(cp, fd_stationary_policy(cp, erg), t_erg, x0, ec.cost);
    c.metric("ergodic_cost", ec2.value);
    c.metric("ergodic_cost_se", ec2.se);
    c.metric("ergodic_cost_tail", ec2.tail);
    c.metric("ergodic_cost_tail_se", ec2.tail_se);
  }
}

void run_oracle(Context& c) {
  const auto& cfg = c.cfg;
  const NeumannProblem problem = problem_from_config(cfg);
  problem.validate(c.seed);
  FdConfig fc;
  fc.n_intervals = cfg.get_size("oracle.n_intervals", fc.n_intervals);
  fc.dt = cfg.get_double("oracle.dt", fc.dt);
  const double T = cfg.get_double("oracle.horizon", 1.0);
  const std::size_t snaps = std::max<std::size_t>(1, cfg.get_size("oracle.snapshots", 20));
  fc.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(T / fc.dt / static_cast<double>(snaps))));
  const GridField field = solve_parabolic_fd(problem, T, fc);
  auto u = csv();
  field.write_csv(u);
  c.out.write("u_field.csv", u.str());
  c.metric("u_T_0", field.value(field.values.size() - 1, 0.0));
  c.metric("boundary_residual", boundary_residual(field));
  c.metric("dt_used", field.dt_used);

  if (cfg.get_bool("oracle.ergodic", true)) {
    ErgodicFdConfig ec;
    ec.grid = fc;
    ec.grid.record_every = 0;
    ec.t_max = cfg.get_double("oracle.t_max", ec.t_max);
    const ErgodicFd erg = solve_ergodic_fd(problem, ec);
    auto v = csv();
    v << "x,v\n";
    for (std::size_t i = 0; i < erg.x.size(); ++i) v << erg.x[i] << ',' << erg.v[i] << '\n';
    c.out.write("v.csv", v.str());
    c.metric("lambda_hat", erg.lambda);
    c.metric("lambda_spread", erg.lambda_spread);
    c.metric("t_stationary", erg.t_stationary);
  }
  const double s = cfg.get_double("oracle.flow_shift", 0.0);
  if (s > 0.0) {
    FdConfig plain = fc;
    plain.record_every = 0;
    c.metric("flow_residual", flow_composition_check(problem, T, s, plain));
  }
}

BoundedFunction test_function(const RunConfig& cfg) {
  const std::string name = cfg.get("coupling.test", "indicator_pos");
  if (name == "indicator_pos") {
    return {[](std::span<const double> x) { return x[0] > 0.0 ? 1.0 : 0.0; }, 1.0};
  }
  const double bound = cfg.get_double("coupling.test_bound", 0.0);
  if (!(bound > 0.0)) throw ParameterError("config key 'coupling.test_bound' must declare a positive sup norm");
  const ScalarField f = scalar_field(name);
  return {[f, bound](std::span<const double> x) { return std::clamp(f(x), -bound, bound); }, bound};
}

void run_coupling(Context& c) {
  const auto& cfg = c.cfg;
  const SdeCoefficients coeffs = coefficients_from_config(cfg);
  const std::size_t d = coeffs.dim();
  const Vector x = point_from(cfg, "coupling.x", d);
  const Vector y = point_from(cfg, "coupling.y", d);
  const auto grid = uniform_grid(cfg.get_double("coupling.horizon", 3.0), cfg.get_size("coupling.n_steps", 300));
  SimulationConfig sc;
  sc.n_paths = cfg.get_size("coupling.n_paths", 20000);
  sc.seed = c.seed;
  sc.workers = c.workers;
  const auto res = coupling_gap(PerturbedSde{coeffs.drift, coeffs.sigma}, test_function(cfg), x, y, grid, sc);
  auto g = csv();
  g << "t,gap,se\n";
  for (std::size_t k = 0; k < res.times.size(); ++k) g << res.times[k] << ',' << res.gap[k] << ',' << res.se[k] << '\n';
  c.out.write("gap.csv", g.str());
  const auto fit = fit_decay_rate(res, cfg.get_double("coupling.t_min", 0.5));
  c.metric("decay_rate", fit.rate);
  c.metric("decay_r2", fit.r2);
  c.metric("decay_points", static_cast<double>(fit.n_points));
  if (fit.n_points >= 2 && fit.rate <= 0.0) c.man.flags.push_back("coupling gap does not decay");
}

void run_penalization(Context& c) {
  const auto& cfg = c.cfg;
  const SdeCoefficients coeffs = coefficients_from_config(cfg);
  const Vector x0 = point_from(cfg, "penalization.x0", coeffs.dim());
  std::vector<int> ns;
  for (double n : cfg.get_list("penalization.ns", {8, 16, 32, 64, 128})) ns.push_back(static_cast<int>(n));
  const auto grid = uniform_grid(cfg.get_double("penalization.horizon", 1.0), cfg.get_size("penalization.n_steps", 1000));
  SimulationConfig sc;
  sc.n_paths = cfg.get_size("penalization.n_paths", 2000);
  sc.seed = c.seed;
  sc.workers = c.workers;
  const auto ext = extend_drift(coeffs.drift, coeffs.domain, cfg.get_double("sde.drift_bound", 1.0));
  const auto rows = penalization_sweep(ext, coeffs.sigma, x0, ns, grid, sc);
  auto p = csv();
  p << "n,mean_sup_sq,se\n";
  for (const auto& r : rows) p << r.n << ',' << r.mean_sup_sq << ',' << r.se << '\n';
  c.out.write("penalization.csv", p.str());
  const bool ok = decreasing_with_tolerance(rows);
  c.metric("monotone", ok ? 1.0 : 0.0);
  if (!ok) c.man.flags.push_back("penalization error is not decreasing in n");
}

std::string summary_text(const Manifest& m) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "name = " << m.name << "\nkind = " << m.kind << "\nstatus = " << m.status << "\nexit_code = " << m.exit_code << '\n';
  if (!m.error.empty()) os << "error = " << m.error << '\n';
  for (const auto& [k, v] : m.metrics) os << k << " = " << v << '\n';
  for (const auto& f : m.flags) os << "flag = " << f << '\n';
  for (const auto& w : m.warnings) os << "warning = " << w << '\n';
  return os.str();
}

}  // namespace

fs::path default_output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? fs::path(env) : fs::path("lab_runs");
}

ConvexDomain domain_from_config(const RunConfig& cfg) {
  const std::string kind = cfg.get("domain.kind", "interval");
  if (kind == "interval") return ConvexDomain::interval(cfg.get_double("domain.half_width", 1.0));
  if (kind == "ball") return ConvexDomain::ball(cfg.get_size("domain.dim", 2), cfg.get_double("domain.radius", 1.0));
  if (kind == "ellipsoid") return ConvexDomain::ellipsoid(cfg.get_list("domain.axes", {1.0, 0.5}));
  throw ParameterError("config key 'domain.kind': unknown domain '" + kind + "'");
}

SdeCoefficients coefficients_from_config(const RunConfig& cfg) {
  ConvexDomain domain = domain_from_config(cfg);
  const std::size_t d = domain.dim();

  std::vector<std::string> parts = split_trimmed(cfg.get("sde.drift", "0"), ';');
  if (parts.size() == 1 && d > 1 && parts[0] == "0") parts.assign(d, "0");
  if (parts.size() != d) throw ParameterError("config key 'sde.drift' needs " + std::to_string(d) + " components");
  std::vector<ScalarField> comps;
  for (const auto& p : parts) comps.push_back(scalar_field(p));
  VectorField drift = [comps](std::span<const double> x, std::span<double> out) {
    for (std::size_t j = 0; j < comps.size(); ++j) out[j] = comps[j](x);
  };

  const auto idx = static_cast<Eigen::Index>(d);
  Matrix sigma;
  const auto rows = split_trimmed(cfg.get("sde.sigma", "1"), ';');
  if (rows.size() == 1 && split_trimmed(rows[0], ',').size() == 1) {
    sigma = Matrix::Identity(idx, idx) * std::stod(rows[0]);
  } else {
    if (rows.size() != d) throw ParameterError("config key 'sde.sigma' needs " + std::to_string(d) + " rows");
    sigma.resize(idx, idx);
    for (std::size_t i = 0; i < d; ++i) {
      const auto cols = split_trimmed(rows[i], ',');
      if (cols.size() != d) throw ParameterError("config key 'sde.sigma' row " + std::to_string(i + 1) + " has the wrong length");
      for (std::size_t j = 0; j < d; ++j) sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::stod(cols[j]);
    }
  }
  return make_coefficients(std::move(drift), sigma, std::move(domain), cfg.get_double("sde.drift_lipschitz", 0.0));
}

NeumannProblem problem_from_config(const RunConfig& cfg) {
  SdeCoefficients coeffs = coefficients_from_config(cfg);
  const std::string spec = cfg.get("problem.driver", "zero");
  Driver driver;
  try {
    driver = make_driver(spec, cfg.get_double("problem.driver_lipschitz", 1.0));
  } catch (const ParameterError& e) {
    throw ParameterError(std::string("config key 'problem.driver': unknown driver (") + e.what() + ")");
  }
  return NeumannProblem{std::move(coeffs), std::move(driver), scalar_field(cfg.get("problem.g", "1")),
                        scalar_field(cfg.get("problem.h", "0"))};
}

ControlProblem control_from_config(const RunConfig& cfg) {
  SdeCoefficients coeffs = coefficients_from_config(cfg);
  const std::size_t d = coeffs.dim();
  const auto values = cfg.get_list("control.values", {-1.0, 1.0});
  if (values.empty()) throw ParameterError("config key 'control.values' is empty");
  const auto r_parts = split_trimmed(cfg.get("control.R", "a"), ';');
  if (r_parts.size() != d) throw ParameterError("config key 'control.R' needs " + std::to_string(d) + " components");
  std::vector<Expression> r_expr;
  for (const auto& p : r_parts) {
    auto e = Expression::parse(p);
    if (e.uses_z() || e.uses_y()) throw ParameterError("config key 'control.R' may only use a");
    r_expr.push_back(std::move(e));
  }
  const Vector origin = Vector::Zero(static_cast<Eigen::Index>(d));
  std::vector<Vector> R;
  std::vector<std::string> names;
  for (double a : values) {
    Vector r(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) r(static_cast<Eigen::Index>(j)) = r_expr[j](Variables{as_span(origin), a, 0.0, {}});
    R.push_back(r);
    names.push_back("a=" + format_double(a));
  }
  const auto cost = Expression::parse(cfg.get("control.running_cost", "0"));
  if (cost.uses_z() || cost.uses_y()) throw ParameterError("config key 'control.running_cost' may only use x and a");
  RunningCost running = [cost, values](std::span<const double> x, std::size_t a) {
    return cost(Variables{x, values[a], 0.0, {}});
  };
  ControlProblem cp{std::move(coeffs), std::move(R), std::move(names), std::move(running),
                    scalar_field(cfg.get("control.terminal_cost", "0")), scalar_field(cfg.get("problem.g", "1"))};
  cp.cost_bound = cfg.get_double("control.cost_bound", cp.cost_bound);
  cp.drift_bound = cfg.get_double("control.drift_bound", cp.drift_bound);
  return cp;
}

BsdeConfig bsde_from_config(const RunConfig& cfg) {
  BsdeConfig bc;
  bc.n_paths = cfg.get_size("bsde.n_paths", bc.n_paths);
  bc.n_steps = cfg.get_size("bsde.n_steps", bc.n_steps);
  bc.basis.family = basis_family_from_string(cfg.get("bsde.basis.family", to_string(bc.basis.family)));
  bc.basis.degree = static_cast<int>(cfg.get_int("bsde.basis.degree", bc.basis.degree));
  bc.picard_iters = static_cast<int>(cfg.get_int("bsde.picard_iters", bc.picard_iters));
  bc.z_cap = cfg.get_double("bsde.z_cap", bc.z_cap);
  const std::string init = cfg.get("bsde.init", "point");
  if (init == "uniform") {
    bc.init = CloudInit::uniform;
  } else if (init != "point") {
    throw ParameterError("config key 'bsde.init': unknown cloud init '" + init + "'");
  }
  bc.boundary_correction = cfg.get_bool("bsde.boundary_correction", bc.boundary_correction);
  bc.memory_limit_mb = cfg.get_size("bsde.memory_limit_mb", bc.memory_limit_mb);
  bc.seed = cfg.get_u64("experiment.seed", 1);
  bc.workers = cfg.get_size("experiment.workers", 1);
  return bc;
}

RunOutcome run_experiment(const std::string& config_path, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = RunConfig::load(config_path);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return {kExitPrecondition, {}, e.what()};
  }
  return run_config(cfg, fs::path(config_path).stem().string(), log);
}

RunOutcome run_config(const RunConfig& cfg, const std::string& default_name, std::ostream& log) {
  RunOutcome outcome;
  Manifest man;
  std::unique_ptr<ArtifactWriter> out;
  try {
    man.name = cfg.get("experiment.name", default_name);
    man.kind = cfg.get("experiment.kind");
    man.seed = cfg.get_u64("experiment.seed", 1);
    const fs::path dir = cfg.get("experiment.output", (default_output_root() / man.name).string());
    out = std::make_unique<ArtifactWriter>(dir);
    outcome.dir = dir;
    man.config = cfg.resolved().serialize();
    write_manifest(dir, man);

    Context c{cfg, *out, man, log, man.seed, cfg.get_size("experiment.workers", 1)};
    if (c.workers == 0) throw ParameterError("config key 'experiment.workers' must be positive");
    log << "running " << man.kind << " -> " << dir.string() << '\n';
    if (man.kind == "simulate") {
      run_simulate(c);
    } else if (man.kind == "bsde") {
      run_bsde(c);
    } else if (man.kind == "ergodic") {
      run_ergodic(c);
    } else if (man.kind == "asymptotics") {
      run_asymptotics_kind(c);
    } else if (man.kind == "control") {
      run_control(c);
    } else if (man.kind == "oracle") {
      run_oracle(c);
    } else if (man.kind == "coupling") {
      run_coupling(c);
    } else if (man.kind == "penalization") {
      run_penalization(c);
    } else {
      throw ParameterError("config key 'experiment.kind': unknown kind '" + man.kind + "'");
    }
    for (const auto& k : cfg.unused()) man.warnings.push_back("unused config key '" + k + "'");
    man.exit_code = man.flags.empty() ? kExitOk : kExitNumerical;
    man.status = "complete";
  } catch (const NumericalError& e) {
    man.exit_code = kExitNumerical;
    man.status = "failed";
    man.error = e.what();
  } catch (const Error& e) {
    man.exit_code = kExitPrecondition;
    man.status = "failed";
    man.error = e.what();
  } catch (const std::exception& e) {
    // Parse failures of numbers inside matrices and the like.
    man.exit_code = kExitPrecondition;
    man.status = "failed";
    man.error = e.what();
  }

  outcome.exit_code = man.exit_code;
  outcome.message = man.error;
  if (out) {
    try {
      man.config = cfg.resolved().serialize();
      out->write("summary.txt", summary_text(man));
      man.artifacts = out->hashes();
      write_manifest(out->dir(), man);
    } catch (const Error& e) {
      outcome.exit_code = kExitPrecondition;
      outcome.message = e.what();
    }
  }
  if (!man.error.empty()) log << "error: " << man.error << '\n';
  for (const auto& f : man.flags) log << "flag: " << f << '\n';
  log << "exit " << outcome.exit_code << '\n';
  return outcome;
}

namespace {

bool artifacts_intact(const fs::path& dir, const Manifest& m) {
  for (const auto& [name, hash] : m.artifacts) {
    if (sha256_file(dir / name) != hash) return false;
  }
  return true;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

}  // namespace

int emit_report(const fs::path& dir, std::ostream& out) {
  std::vector<fs::path> runs;
  if (fs::exists(dir / "manifest.json")) runs.push_back(dir);
  if (fs::is_directory(dir)) {
    std::vector<fs::path> subs;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "manifest.json")) subs.push_back(e.path());
    }
    std::sort(subs.begin(), subs.end());
    runs.insert(runs.end(), subs.begin(), subs.end());
  }
  if (runs.empty()) {
    out << "error: no manifest.json in '" << dir.string() << "'\n";
    return kExitPrecondition;
  }

  std::ostringstream long_csv;
  long_csv << std::setprecision(17) << "run,kind,status,key,value\n";
  out << std::left << std::setw(28) << "run" << std::setw(14) << "kind" << std::setw(12) << "status"
      << std::setw(14) << "lambda_hat" << std::setw(14) << "L_hat" << "eta_hat\n";
  std::vector<std::pair<std::string, Manifest>> benches;
  for (const auto& r : runs) {
    Manifest m;
    try {
      m = read_manifest(r);
    } catch (const PreconditionError& e) {
      out << "error: " << e.what() << '\n';
      return kExitPrecondition;
    }
    const std::string run = r == dir ? std::string(".") : r.filename().string();
    std::string status = m.status;
    if (status == "complete" && !artifacts_intact(r, m)) status = "incomplete";
    if (status == "running") status = "incomplete";
    if (status == "complete" && m.exit_code != kExitOk) status = "flagged";

    auto metric = [&](const std::string& k) -> std::string {
      for (const std::string& key : {k, "fd." + k}) {
        if (auto it = m.metrics.find(key); it != m.metrics.end()) return fmt(it->second);
      }
      return "-";
    };
    out << std::setw(28) << run << std::setw(14) << m.kind << std::setw(12) << status << std::setw(14)
        << metric("lambda_hat") << std::setw(14) << metric("L_hat") << metric("eta_hat") << '\n';
    for (const auto& [k, v] : m.metrics) long_csv << run << ',' << m.kind << ',' << status << ',' << k << ',' << v << '\n';
    for (const auto& cr : m.criteria) {
      long_csv << run << ',' << m.kind << ',' << status << ",criterion_" << cr.id << ',' << (cr.pass ? "pass" : "fail") << '\n';
    }
    if (m.kind == "bench") benches.emplace_back(run, m);
  }

  for (const auto& [run, m] : benches) {
    out << "\nacceptance (" << run << ")\n";
    for (int id = 1; id <= 10; ++id) {
      const auto it = std::find_if(m.criteria.begin(), m.criteria.end(), [id](const CriterionResult& c) { return c.id == id; });
      out << "  " << std::right << std::setw(2) << id << std::left << "  ";
      if (it == m.criteria.end()) {
        out << "incomplete\n";
      } else {
        out << (it->pass ? "pass" : "FAIL") << "  " << it->name << "  " << it->detail << '\n';
      }
    }
  }
  std::ofstream f(dir / "report.csv");
  f << long_csv.str();
  return kExitOk;
}

}  // namespace nlab
