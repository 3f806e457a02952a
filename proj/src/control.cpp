// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "nlab/parallel.hpp"
#include "nlab/rng.hpp"

namespace nlab {
namespace {

constexpr std::size_t kReduceBlock = 256;

std::vector<Vector> all_thetas(const ControlProblem& cp) {
  std::vector<Vector> th;
  for (std::size_t a = 0; a < cp.n_controls(); ++a) th.push_back(cp.girsanov_drift(a));
  return th;
}

struct PathCost {
  double total = 0.0;  // running + boundary + terminal
  double half = 0.0;   // running + boundary up to the middle of the grid
};

// Simulates every path and hands the per-path result to `sink(path, cost)`.
template <class Sink>
void simulate_costs(const ControlProblem& cp, const Policy& policy, double horizon, const Vector& x0,
                    const CostConfig& cfg, bool terminal, Sink&& sink) {
  if (!(horizon > 0.0)) throw ParameterError("control: horizon must be > 0");
  if (!(cfg.step > 0.0)) throw ParameterError("control: step must be > 0");
  if (cfg.n_paths < 2) throw ParameterError("control: need at least 2 paths");
  if (!cp.coeffs.domain.contains(as_span(x0))) throw PreconditionError("control: x0 is outside closure(G)");
  const std::size_t d = cp.coeffs.dim();
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / cfg.step - 1e-9)));
  const auto grid = uniform_grid(horizon, n);
  const ReflectedEuler stepper(cp.coeffs, cfg.boundary_correction, grid);
  const std::vector<Vector> theta = all_thetas(cp);
  const bool girsanov = cfg.mode == CostMode::girsanov;
  const std::size_t mid = n / 2;

  parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(d), xb(d), dw(d), extra(d);
    for (std::size_t p = begin; p < end; ++p) {
      PathStream stream(cfg.seed, p, Substream::brownian);
      std::copy(x0.data(), x0.data() + x0.size(), x.begin());
      double acc = 0.0, half = 0.0, log_rho = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == mid) half = acc;
        const double h = grid[k + 1] - grid[k];
        const std::size_t a = policy(grid[k], x);
        if (a >= cp.n_controls()) throw ParameterError("control: policy returned an unknown control");
        acc += cp.running_cost(x, a) * h;
        const double s = std::sqrt(h);
        for (std::size_t j = 0; j < d; ++j) dw[j] = s * stream.normal();
        double dk;
        if (girsanov) {
          for (std::size_t j = 0; j < d; ++j) log_rho += theta[a](static_cast<Eigen::Index>(j)) * dw[j];
          log_rho -= 0.5 * theta[a].squaredNorm() * h;
          dk = stepper.step(x, k, dw);
        } else {
          for (std::size_t j = 0; j < d; ++j) extra[j] = cp.R[a](static_cast<Eigen::Index>(j));
          dk = stepper.step(x, k, dw, extra);
        }
        if (dk > 0.0) {
          xb = x;
          stepper.to_true_boundary(xb);
          acc += cp.g(xb) * dk;
        }
      }
      if (n == mid) half = acc;
      if (terminal && cp.terminal_cost) acc += cp.terminal_cost(x);
      const double w = girsanov ? std::exp(log_rho) : 1.0;
      sink(p, PathCost{w * acc, w * half});
    }
  });
}

Estimate block_estimate(const std::vector<double>& v) {
  // fixed 256-path blocks combined in order: independent of worker count
  const std::size_t n = v.size();
  double s = 0.0, ss = 0.0;
  for (std::size_t b = 0; b < n; b += kReduceBlock) {
    double bs = 0.0, bss = 0.0;
    for (std::size_t i = b; i < std::min(n, b + kReduceBlock); ++i) {
      bs += v[i];
      bss += v[i] * v[i];
    }
    s += bs;
    ss += bss;
  }
  const double dn = static_cast<double>(n);
  const double mean = s / dn;
  const double var = std::max(0.0, (ss - dn * mean * mean) / (dn - 1.0));
  return {mean, std::sqrt(var / dn)};
}

// Enumerates L(x, a) + z theta(a); ties keep the lowest index.
std::size_t select(const ControlProblem& cp, const std::vector<Vector>& theta, std::span<const double> x,
                   std::span<const double> z, bool maximize, double* value = nullptr) {
  if (theta.empty()) throw ParameterError("control: empty control set");
  std::size_t best = 0;
  double best_v = 0.0;
  for (std::size_t a = 0; a < theta.size(); ++a) {
    double v = cp.running_cost(x, a);
    for (std::size_t j = 0; j < z.size(); ++j) v += z[j] * theta[a](static_cast<Eigen::Index>(j));
    if (a == 0 || (maximize ? v > best_v : v < best_v)) {
      best_v = v;
      best = a;
    }
  }
  if (value) *value = best_v;
  return best;
}

}  // namespace

void ControlProblem::validate(std::uint64_t seed) const {
  coeffs.validate();
  if (R.empty()) throw ParameterError("control: empty control set");
  if (!running_cost || !g) throw ParameterError("control: running cost and g are required");
  const std::size_t d = coeffs.dim();
  for (const auto& r : R) {
    if (static_cast<std::size_t>(r.size()) != d) throw ParameterError("control: R(a) dimension mismatch");
    if (!all_finite(as_span(r)) || r.norm() > drift_bound) throw ParameterError("control: |R(a)| exceeds its bound");
  }
  if (!std::isfinite(girsanov_bound())) throw ParameterError("control: sigma^{-1} R unbounded");
  PathStream stream(seed, 0, Substream::auxiliary);
  std::vector<double> x(d);
  for (int t = 0; t < 64; ++t) {
    coeffs.domain.sample_uniform(stream, x);
    for (std::size_t a = 0; a < R.size(); ++a) {
      const double l = running_cost(x, a);
      if (!std::isfinite(l) || std::abs(l) > cost_bound) throw ParameterError("control: |L| exceeds its bound");
    }
  }
}

Vector ControlProblem::girsanov_drift(std::size_t a) const { return coeffs.sigma.partialPivLu().solve(R.at(a)); }

double ControlProblem::girsanov_bound() const {
  double m = 0.0;
  for (std::size_t a = 0; a < R.size(); ++a) m = std::max(m, girsanov_drift(a).norm());
  return m;
}

double ControlProblem::hamiltonian(std::span<const double> x, std::span<const double> z) const {
  double v = 0.0;
  select(*this, all_thetas(*this), x, z, false, &v);
  return v;
}

std::size_t ControlProblem::argmin_selector(std::span<const double> x, std::span<const double> z) const {
  return select(*this, all_thetas(*this), x, z, false);
}

Driver ControlProblem::driver() const {
  if (R.empty()) throw ParameterError("control: empty control set");
  Driver f;
  auto self = std::make_shared<const ControlProblem>(*this);
  auto theta = std::make_shared<const std::vector<Vector>>(all_thetas(*this));
  f.eval = [self, theta](std::span<const double> x, double, std::span<const double> z) {
    double v = 0.0;
    select(*self, *theta, x, z, false, &v);
    return v;
  };
  f.lipschitz_z = girsanov_bound();
  f.depends_on_z = girsanov_bound() > 0.0;
  f.depends_on_y = false;
  f.name = "hamiltonian";
  return f;
}

NeumannProblem ControlProblem::neumann() const {
  ScalarField h = terminal_cost ? terminal_cost : ScalarField([](std::span<const double>) { return 0.0; });
  return NeumannProblem{coeffs, driver(), g, h};
}

Policy constant_policy(std::size_t a) {
  return [a](double, std::span<const double>) { return a; };
}

Policy fd_feedback_policy(const ControlProblem& cp, const GridField& field, double horizon) {
  const double s = cp.coeffs.sigma(0, 0);
  auto fld = std::make_shared<GridField>(field.derivative_field());
  auto self = std::make_shared<const ControlProblem>(cp);
  auto theta = std::make_shared<const std::vector<Vector>>(all_thetas(cp));
  return [self, theta, fld, horizon, s](double t, std::span<const double> x) {
    const double z = fld->at(horizon - t, x[0]) * s;
    return select(*self, *theta, x, std::span<const double>(&z, 1), false);
  };
}

Policy fd_stationary_policy(const ControlProblem& cp, const ErgodicFd& ergodic) {
  const double s = cp.coeffs.sigma(0, 0);
  auto e = std::make_shared<GridField>();
  e->x = ergodic.x;
  e->times = {0.0};
  e->values = {ergodic.v};
  e->slope_left = ergodic.slope_left;
  e->slope_right = ergodic.slope_right;
  *e = e->derivative_field();
  auto self = std::make_shared<const ControlProblem>(cp);
  auto theta = std::make_shared<const std::vector<Vector>>(all_thetas(cp));
  return [self, theta, e, s](double, std::span<const double> x) {
    const double z = e->value(0, x[0]) * s;
    return select(*self, *theta, x, std::span<const double>(&z, 1), false);
  };
}

Estimate finite_cost(const ControlProblem& cp, const Policy& policy, double horizon, const Vector& x0,
                     const CostConfig& cfg) {
  cp.validate();
  std::vector<double> v(cfg.n_paths);
  simulate_costs(cp, policy, horizon, x0, cfg, true, [&](std::size_t p, PathCost c) { v[p] = c.total; });
  return block_estimate(v);
}

ErgodicCost ergodic_cost(const ControlProblem& cp, const Policy& policy, double t_max, const Vector& x0,
                         const CostConfig& cfg) {
  cp.validate();
  std::vector<double> full(cfg.n_paths), tail(cfg.n_paths);
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t_max / cfg.step - 1e-9)));
  const double t_half = t_max * static_cast<double>(n - n / 2) / static_cast<double>(n);
  simulate_costs(cp, policy, t_max, x0, cfg, false, [&](std::size_t p, PathCost c) {
    full[p] = c.total / t_max;
    tail[p] = (c.total - c.half) / t_half;
  });
  const Estimate a = block_estimate(full);
  const Estimate b = block_estimate(tail);
  return {a.value, a.se, b.value, b.se};
}

ExpansionReport verify_expansion(const ControlProblem& cp, const std::vector<double>& horizons, const Vector& x0,
                                 const ExpansionConfig& cfg) {
  cp.validate();
  if (cp.coeffs.dim() != 1) throw PreconditionError("verify_expansion: 1D problems only");
  if (horizons.empty()) throw ParameterError("verify_expansion: empty horizon grid");
  const NeumannProblem np = cp.neumann();
  ExpansionReport rep;
  const ErgodicFd erg = solve_ergodic_fd(np, cfg.ergodic_fd);
  rep.lambda = erg.lambda;
  rep.v_x = erg.v_at(x0(0));

  AsymptoticsConfig ac;
  ac.source = Source::fd;
  ac.horizons = cfg.fit_horizons;
  ac.xs = {x0};
  ac.solver.fd = cfg.fd;
  ac.ergodic_fd = cfg.ergodic_fd;
  const AsymptoticsReport ar = run_asymptotics(np, ac);
  rep.L_hat = ar.fits.at(0).second.L_hat;

  FdConfig fc = cfg.fd;
  fc.record_every = std::max<std::size_t>(1, fc.record_every ? fc.record_every : 10);
  const double t_big = *std::max_element(horizons.begin(), horizons.end());
  const GridField field = solve_parabolic_fd(np, t_big, fc);

  for (double t : horizons) {
    // u(T - s) for s in [0, T] is the prefix of the long FD field
    const Policy opt = fd_feedback_policy(cp, field, t);
    CostConfig cc = cfg.cost;
    const Estimate j = finite_cost(cp, opt, t, x0, cc);
    ExpansionRow row;
    row.T = t;
    row.J = j.value;
    row.se = j.se;
    row.u_fd = field.at(t, x0(0));
    row.renormalized = j.value - rep.lambda * t - rep.v_x;
    rep.rows.push_back(row);

    std::vector<std::pair<std::string, Policy>> subs;
    for (std::size_t a : cfg.suboptimal_controls) {
      const std::string name = a < cp.names.size() ? cp.names[a] : std::to_string(a);
      subs.emplace_back("constant:" + name, constant_policy(a));
    }
    if (cfg.include_adversarial) {
      const double s = cp.coeffs.sigma(0, 0);
      auto fld = std::make_shared<GridField>(field.derivative_field());
      auto self = std::make_shared<const ControlProblem>(cp);
      auto theta = std::make_shared<const std::vector<Vector>>(all_thetas(cp));
      subs.emplace_back("adversarial", [self, theta, fld, t, s](double tt, std::span<const double> x) {
        const double z = fld->at(t - tt, x[0]) * s;
        return select(*self, *theta, x, std::span<const double>(&z, 1), true);
      });
    }
    for (const auto& [name, pol] : subs) {
      const Estimate js = finite_cost(cp, pol, t, x0, cc);
      rep.suboptimal.push_back({name, t, js.value, js.se, row.u_fd});
      if (js.value < row.u_fd - 3.0 * js.se) {
        std::ostringstream os;
        os << "policy " << name << " beats the value function at T = " << t;
        rep.flags.push_back(os.str());
      }
    }
  }
  rep.empirical_limit = rep.rows.back().renormalized;
  for (const auto& r : rep.rows) {
    if (std::abs(r.renormalized - rep.L_hat) > std::max(2e-2, 3.0 * r.se)) {
      std::ostringstream os;
      os << "J - lambda T - v(x) = " << r.renormalized << " at T = " << r.T << " is away from L = " << rep.L_hat;
      rep.flags.push_back(os.str());
    }
  }
  return rep;
}

}  // namespace nlab
