// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/bsde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlab/parallel.hpp"
#include "nlab/rng.hpp"

namespace nlab {
namespace {

constexpr std::size_t kReduceBlock = 256;

void push_unique(std::vector<std::string>& list, const std::string& msg) {
  if (std::find(list.begin(), list.end(), msg) == list.end()) list.push_back(msg);
}

std::vector<double> initial_cloud(const NeumannProblem& problem, const Vector& x0, const BsdeConfig& cfg) {
  const std::size_t d = problem.dim();
  std::vector<double> init(cfg.n_paths * d);
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    auto dst = std::span<double>(init).subspan(p * d, d);
    if (cfg.init == CloudInit::point) {
      std::copy(x0.data(), x0.data() + x0.size(), dst.begin());
    } else {
      PathStream stream(cfg.seed, p, Substream::initial_state);
      problem.coeffs.domain.sample_uniform(stream, dst);
    }
  }
  return init;
}

void check_inputs(const NeumannProblem& problem, double horizon, const Vector& x0, const BsdeConfig& cfg) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("bsde: horizon T must be > 0");
  if (cfg.n_paths < 2 || cfg.n_steps == 0) throw ParameterError("bsde: need n_paths >= 2 and n_steps >= 1");
  if (static_cast<std::size_t>(x0.size()) != problem.dim()) throw ParameterError("bsde: x0 dimension mismatch");
  check_finite(as_span(x0), "bsde");
  if (!problem.coeffs.domain.contains(as_span(x0))) throw PreconditionError("bsde: x0 is outside closure(G)");
  if (!problem.driver.eval || !problem.g || !problem.h) throw ParameterError("bsde: incomplete problem");
}

// c + h f(x, y, z) with `iters` Picard sweeps on y, starting from y = c.
double implicit_y(const Driver& f, std::span<const double> x, double c, std::span<const double> z,
                  double h, int iters) {
  double y = c;
  const int n = f.depends_on_y ? std::max(1, iters) : 1;
  for (int it = 0; it < n; ++it) y = c + h * f(x, y, z);
  return y;
}

}  // namespace

Driver Driver::zero() {
  return {[](std::span<const double>, double, std::span<const double>) { return 0.0; }, 0.0, false, false,
          "zero"};
}

Driver Driver::constant(double c) {
  std::ostringstream name;
  name << "constant:" << c;
  return {[c](std::span<const double>, double, std::span<const double>) { return c; }, 0.0, false, false,
          name.str()};
}

Driver Driver::neg_abs_z() {
  return {[](std::span<const double>, double, std::span<const double> z) { return -norm(z); }, 1.0, true,
          false, "neg_abs_z"};
}

Driver Driver::of_x(ScalarField f, std::string name) {
  return {[f = std::move(f)](std::span<const double> x, double, std::span<const double>) { return f(x); }, 0.0,
          false, false, std::move(name)};
}

void NeumannProblem::validate(std::uint64_t seed) const {
  coeffs.validate();
  if (!driver.eval || !g || !h) throw ParameterError("problem: driver, g and h are required");
  const std::size_t d = dim();
  PathStream stream(seed, 0, Substream::auxiliary);
  std::vector<double> x(d), z1(d), z2(d);
  for (int trial = 0; trial < 64; ++trial) {
    coeffs.domain.sample_uniform(stream, x);
    for (std::size_t j = 0; j < d; ++j) {
      z1[j] = 4.0 * (2.0 * stream.uniform() - 1.0);
      z2[j] = 4.0 * (2.0 * stream.uniform() - 1.0);
    }
    const double f1 = driver(x, 0.0, z1);
    const double f2 = driver(x, 0.0, z2);
    if (!std::isfinite(f1) || !std::isfinite(f2)) throw ParameterError("problem: driver is not finite");
    double dz = 0.0;
    for (std::size_t j = 0; j < d; ++j) dz += (z1[j] - z2[j]) * (z1[j] - z2[j]);
    dz = std::sqrt(dz);
    if (std::abs(f1 - f2) > driver.lipschitz_z * dz + 1e-12 * (1.0 + std::abs(f1))) {
      throw ParameterError("problem: driver violates its declared Lipschitz-in-z constant");
    }
    if (!std::isfinite(g(x)) || !std::isfinite(h(x))) throw ParameterError("problem: g or h not finite");
  }
}

BsdeSolution solve_finite_horizon(const NeumannProblem& problem, double horizon, const Vector& x0,
                                  const BsdeConfig& cfg) {
  check_inputs(problem, horizon, x0, cfg);
  problem.coeffs.validate();
  const std::size_t d = problem.dim();
  const std::size_t m = cfg.n_paths;
  const std::size_t n = cfg.n_steps;
  const double bytes = static_cast<double>(m) * static_cast<double>(n + 1) * static_cast<double>(d + 1) * 8.0;
  if (bytes > static_cast<double>(cfg.memory_limit_mb) * 1024.0 * 1024.0) {
    throw ParameterError("bsde: forward cloud of n_paths x n_steps exceeds memory_limit_mb");
  }

  const auto grid = uniform_grid(horizon, n);
  const double dt = horizon / static_cast<double>(n);
  const auto init = initial_cloud(problem, x0, cfg);
  SimulationConfig sim;
  sim.n_paths = m;
  sim.seed = cfg.seed;
  sim.boundary_correction = cfg.boundary_correction;
  sim.workers = cfg.workers;
  const PathBundle cloud = simulate_reflected_from(problem.coeffs, init, grid, sim);
  const ReflectedEuler stepper(problem.coeffs, cfg.boundary_correction, grid);

  BsdeSolution sol;
  sol.times = grid;
  sol.basis = cfg.basis;
  sol.init = cfg.init;
  sol.x0 = x0;
  sol.y_fits.resize(n);
  sol.z_fits.resize(n);

  const Driver& f = problem.driver;
  std::vector<double> y(m), pathwise(m), f_val(m);
  double sup_h = 0.0, sup_f = 0.0, sup_g = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    y[p] = problem.h(cloud.state(n, p));
    pathwise[p] = y[p];
    sup_h = std::max(sup_h, std::abs(y[p]));
  }
  {
    double k_sum = 0.0;
    for (std::size_t p = 0; p < m; ++p) k_sum += cloud.K(n, p);
    sol.mean_local_time = k_sum / static_cast<double>(m);
  }

  Matrix target(static_cast<Eigen::Index>(m), 1);
  Matrix z_target(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  Matrix z_vals = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  std::vector<double> boundary_term(m);
  std::size_t z_breaches = 0;

  for (std::size_t k = n; k-- > 0;) {
    const std::span<const double> states(cloud.states.data() + k * m * d, m * d);
    const RegressionDesign design(cfg.basis, d, states, &sol.warnings);

    parallel_for(m, cfg.workers, [&](std::size_t begin, std::size_t end) {
      std::vector<double> xb(d);
      for (std::size_t p = begin; p < end; ++p) {
        const double dk = cloud.K(k + 1, p) - cloud.K(k, p);
        double gterm = 0.0;
        if (dk > 0.0) {
          const auto xn = cloud.state(k + 1, p);
          std::copy(xn.begin(), xn.end(), xb.begin());
          stepper.to_true_boundary(xb);
          gterm = problem.g(xb) * dk;
        }
        boundary_term[p] = gterm;
        target(static_cast<Eigen::Index>(p), 0) = y[p] + gterm;
      }
    });
    for (std::size_t p = 0; p < m; ++p) {
      if (boundary_term[p] != 0.0) {
        const double dk = cloud.K(k + 1, p) - cloud.K(k, p);
        sup_g = std::max(sup_g, std::abs(boundary_term[p]) / dk);
      }
    }
    const RegressionResult cond = design.fit(target);
    sol.y_fits[k] = cond.fit;

    const bool need_z = f.depends_on_z || k == 0;
    if (need_z) {
      parallel_for(m, cfg.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> dw(d);
        for (std::size_t p = begin; p < end; ++p) {
          brownian_increment(cfg.seed, p, k, dt, dw);
          const double centred = target(static_cast<Eigen::Index>(p), 0) - cond.fitted(static_cast<Eigen::Index>(p), 0);
          for (std::size_t j = 0; j < d; ++j) {
            z_target(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = centred * dw[j] / dt;
          }
        }
      });
      RegressionResult zr = design.fit(z_target);
      sol.z_fits[k] = zr.fit;
      z_vals = std::move(zr.fitted);
      for (Eigen::Index p = 0; p < z_vals.rows(); ++p) {
        const double len = z_vals.row(p).norm();
        if (len > cfg.z_cap) {
          z_vals.row(p) *= cfg.z_cap / len;
          ++z_breaches;
        }
      }
    }

    parallel_for(m, cfg.workers, [&](std::size_t begin, std::size_t end) {
      std::vector<double> z(d);
      for (std::size_t p = begin; p < end; ++p) {
        for (std::size_t j = 0; j < d; ++j) z[j] = z_vals(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j));
        const auto x = cloud.state(k, p);
        const double c = cond.fitted(static_cast<Eigen::Index>(p), 0);
        const double yk = implicit_y(f, x, c, z, dt, cfg.picard_iters);
        f_val[p] = (yk - c) / dt;
        y[p] = yk;
        pathwise[p] += f_val[p] * dt + boundary_term[p];
      }
    });
    for (std::size_t p = 0; p < m; ++p) sup_f = std::max(sup_f, std::abs(f_val[p]));
  }

  if (z_breaches > 0) {
    sol.flags.push_back("z_cap breached on " + std::to_string(z_breaches) + " path-steps");
  }

  if (cfg.init == CloudInit::point) {
    sol.y0 = y[0];
    sol.y0_se = sample_estimate(pathwise).se;
    sol.z0 = z_vals.row(0).transpose();
  } else {
    const std::span<const double> states0(cloud.states.data(), m * d);
    Matrix pw(static_cast<Eigen::Index>(m), 1);
    for (std::size_t p = 0; p < m; ++p) pw(static_cast<Eigen::Index>(p), 0) = pathwise[p];
    sol.functional_fit = least_squares(cfg.basis, d, states0, pw, &sol.warnings).fit;
    sol.y0 = evaluate_u(sol, problem, {x0})[0];
    sol.y0_se = sol.functional_fit.standard_error(as_span(x0));
    sol.z0 = Vector(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) sol.z0(static_cast<Eigen::Index>(j)) = sol.z_fits[0].evaluate(as_span(x0), j);
  }

  // a-priori bound |y0| <= sup|h| + T sup|f| + sup|g| E[K_T]
  const double bound = sup_h + horizon * sup_f + sup_g * sol.mean_local_time + 5.0 * sol.y0_se + 1e-9;
  if (std::abs(sol.y0) > bound) {
    std::ostringstream os;
    os << "a-priori bound violated: |y0| = " << std::abs(sol.y0) << " > " << bound;
    sol.flags.push_back(os.str());
  }
  sol.pathwise = std::move(pathwise);
  std::vector<std::string> unique;
  for (const auto& w : sol.warnings) push_unique(unique, w);
  sol.warnings = std::move(unique);
  return sol;
}

Estimate direct_estimator(const NeumannProblem& problem, double horizon, const Vector& x0,
                          const BsdeConfig& cfg) {
  if (problem.driver.depends_on_z || problem.driver.depends_on_y) {
    throw PreconditionError("direct_estimator: driver must not depend on z (or y)");
  }
  check_inputs(problem, horizon, x0, cfg);
  const std::size_t d = problem.dim();
  const std::size_t m = cfg.n_paths;
  const std::size_t n = cfg.n_steps;
  const auto grid = uniform_grid(horizon, n);
  const ReflectedEuler stepper(problem.coeffs, cfg.boundary_correction, grid);
  const auto init = initial_cloud(problem, x0, cfg);
  const std::size_t n_blocks = (m + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> block_sum(n_blocks, 0.0), block_sq(n_blocks, 0.0);

  parallel_for(n_blocks, cfg.workers, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> x(d), xb(d), dw(d), zero(d, 0.0);
    for (std::size_t blk = b0; blk < b1; ++blk) {
      const std::size_t p_end = std::min(m, (blk + 1) * kReduceBlock);
      for (std::size_t p = blk * kReduceBlock; p < p_end; ++p) {
        PathStream stream(cfg.seed, p, Substream::brownian);
        std::copy(init.begin() + static_cast<std::ptrdiff_t>(p * d),
                  init.begin() + static_cast<std::ptrdiff_t>((p + 1) * d), x.begin());
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double h = grid[k + 1] - grid[k];
          acc += problem.driver(x, 0.0, zero) * h;
          const double s = std::sqrt(h);
          for (std::size_t j = 0; j < d; ++j) dw[j] = s * stream.normal();
          const double dk = stepper.step(x, k, dw);
          if (dk > 0.0) {
            xb = x;
            stepper.to_true_boundary(xb);
            acc += problem.g(xb) * dk;
          }
        }
        acc += problem.h(x);
        block_sum[blk] += acc;
        block_sq[blk] += acc * acc;
      }
    }
  });
  double s = 0.0, ss = 0.0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    s += block_sum[b];
    ss += block_sq[b];
  }
  const double mm = static_cast<double>(m);
  const double mean = s / mm;
  const double var = std::max(0.0, (ss - mm * mean * mean) / (mm - 1.0));
  return {mean, std::sqrt(var / mm)};
}

std::vector<double> evaluate_u(const BsdeSolution& solution, const NeumannProblem& problem,
                               const std::vector<Vector>& points, std::vector<std::string>* warnings) {
  std::vector<double> out;
  out.reserve(points.size());
  if (points.empty()) return out;
  if (solution.y_fits.empty()) throw ParameterError("evaluate_u: empty solution");
  const double dt = solution.times[1] - solution.times[0];
  const std::size_t d = problem.dim();
  bool projected = false;
  std::vector<double> z(d);
  for (const auto& pt : points) {
    Vector x = pt;
    if (!problem.coeffs.domain.contains(as_span(x))) {
      x = problem.coeffs.domain.project(x);
      projected = true;
    }
    const double c = solution.y_fits[0].evaluate(as_span(x));
    for (std::size_t j = 0; j < d; ++j) z[j] = solution.z_fits[0].evaluate(as_span(x), j);
    out.push_back(implicit_y(problem.driver, as_span(x), c, z, dt, 1));
  }
  if (projected && warnings) warnings->push_back("evaluate_u: points outside closure(G) were projected");
  return out;
}

double surface_standard_error(const BsdeSolution& solution, const Vector& x) {
  if (solution.init != CloudInit::uniform) throw PreconditionError("surface_standard_error: needs a uniform cloud");
  return solution.functional_fit.standard_error(as_span(x));
}

}  // namespace nlab
