// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/pde_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace nlab {
namespace {

// Interpolates node data at xq (clamped to the grid).
double interp(const std::vector<double>& x, const std::vector<double>& u, double xq) {
  const double lo = x.front();
  const double dx = x[1] - x[0];
  const std::size_t n = x.size() - 1;
  const double s = std::clamp((xq - lo) / dx, 0.0, static_cast<double>(n));
  const std::size_t i = std::min(n - 1, static_cast<std::size_t>(s));
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * u[i] + w * u[i + 1];
}

std::vector<double> node_derivative(const std::vector<double>& u, double dx, double left, double right) {
  const std::size_t n = u.size() - 1;
  std::vector<double> d(u.size());
  d[0] = left;
  d[n] = right;
  for (std::size_t i = 1; i < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
  return d;
}

// u' = (L + f) u on the node grid with ghost-point Neumann ends.
class CnIntegrator {
 public:
  CnIntegrator(const NeumannProblem& problem, std::size_t n_intervals, double dt) : problem_(problem), dt_(dt) {
    if (problem.dim() != 1 || problem.coeffs.domain.kind() != ConvexDomain::Kind::interval) {
      throw PreconditionError("fd oracle: 1D interval domain required");
    }
    if (n_intervals < 4) throw ParameterError("fd oracle: need at least 4 intervals");
    if (!(dt > 0.0)) throw ParameterError("fd oracle: dt must be positive");
    const double a = problem.coeffs.domain.semi_axes()[0];
    const std::size_t n = n_intervals;
    dx_ = 2.0 * a / static_cast<double>(n);
    x_.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) x_[i] = -a + dx_ * static_cast<double>(i);
    x_[n] = a;
    sigma_ = problem.coeffs.sigma(0, 0);
    const double diff = 0.5 * sigma_ * sigma_;
    double lo = -a, hi = a;
    slope_left_ = -problem.g(std::span<const double>(&lo, 1));
    slope_right_ = problem.g(std::span<const double>(&hi, 1));

    lower_.assign(n + 1, 0.0);
    diag_.assign(n + 1, 0.0);
    upper_.assign(n + 1, 0.0);
    src_.assign(n + 1, 0.0);
    const double k2 = diff / (dx_ * dx_);
    double b = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      problem.coeffs.drift(std::span<const double>(&x_[i], 1), std::span<double>(&b, 1));
      diag_[i] = -2.0 * k2;
      if (i == 0) {
        upper_[i] = 2.0 * k2;
        src_[i] = (2.0 * diff / dx_) * (-slope_left_) + b * slope_left_;
      } else if (i == n) {
        lower_[i] = 2.0 * k2;
        src_[i] = (2.0 * diff / dx_) * slope_right_ + b * slope_right_;
      } else {
        lower_[i] = k2 - b / (2.0 * dx_);
        upper_[i] = k2 + b / (2.0 * dx_);
      }
    }
    // Thomas factorization of I - dt/2 A.
    cprime_.assign(n + 1, 0.0);
    denom_.assign(n + 1, 0.0);
    const double th = 0.5 * dt_;
    for (std::size_t i = 0; i <= n; ++i) {
      const double l = -th * lower_[i];
      const double d = 1.0 - th * diag_[i];
      const double u = -th * upper_[i];
      const double den = i == 0 ? d : d - l * cprime_[i - 1];
      denom_[i] = den;
      cprime_[i] = u / den;
    }
  }

  const std::vector<double>& x() const { return x_; }
  double slope_left() const { return slope_left_; }
  double slope_right() const { return slope_right_; }
  double dt() const { return dt_; }

  void nonlinear(const std::vector<double>& u, std::vector<double>& out) const {
    const std::size_t n = u.size() - 1;
    out.resize(u.size());
    for (std::size_t i = 0; i <= n; ++i) {
      double ux = i == 0 ? slope_left_ : i == n ? slope_right_ : (u[i + 1] - u[i - 1]) / (2.0 * dx_);
      const double z = ux * sigma_;
      out[i] = problem_.driver(std::span<const double>(&x_[i], 1), u[i], std::span<const double>(&z, 1));
    }
  }

  // (I - dt/2 A) u' = rhs
  void solve(std::vector<double>& rhs) const {
    const std::size_t n = rhs.size() - 1;
    const double th = 0.5 * dt_;
    rhs[0] /= denom_[0];
    for (std::size_t i = 1; i <= n; ++i) rhs[i] = (rhs[i] + th * lower_[i] * rhs[i - 1]) / denom_[i];
    for (std::size_t i = n; i-- > 0;) rhs[i] -= cprime_[i] * rhs[i + 1];
  }

  // A u + src
  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const std::size_t n = u.size() - 1;
    out.resize(u.size());
    for (std::size_t i = 0; i <= n; ++i) {
      double v = diag_[i] * u[i] + src_[i];
      if (i > 0) v += lower_[i] * u[i - 1];
      if (i < n) v += upper_[i] * u[i + 1];
      out[i] = v;
    }
  }

  void implicit_half_step(std::vector<double>& u) {
    nonlinear(u, f_cur_);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += 0.5 * dt_ * (src_[i] + f_cur_[i]);
    solve(u);
  }

  void cn_step(std::vector<double>& u, const std::vector<double>& f_ext) {
    apply(u, work_);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += 0.5 * dt_ * work_[i] + 0.5 * dt_ * src_[i] + dt_ * f_ext[i];
    }
    solve(u);
  }

 private:
  const NeumannProblem& problem_;
  double dt_;
  double dx_ = 0.0;
  double sigma_ = 1.0;
  double slope_left_ = 0.0, slope_right_ = 0.0;
  std::vector<double> x_, lower_, diag_, upper_, src_, cprime_, denom_;
  std::vector<double> work_, f_cur_;
};

// Time stepper with Rannacher start and AB2 extrapolation of f.
class Marcher {
 public:
  Marcher(CnIntegrator& cn, std::vector<double> u0, int rannacher_half_steps)
      : cn_(cn), u_(std::move(u0)), rannacher_(rannacher_half_steps) {}

  const std::vector<double>& u() const { return u_; }

  void step() {
    if (started_ < (rannacher_ + 1) / 2) {
      // two implicit half steps make one full step
      cn_.implicit_half_step(u_);
      cn_.implicit_half_step(u_);
      ++started_;
      have_prev_ = false;
      return;
    }
    cn_.nonlinear(u_, f_cur_);
    ext_.resize(u_.size());
    if (have_prev_) {
      for (std::size_t i = 0; i < u_.size(); ++i) ext_[i] = 1.5 * f_cur_[i] - 0.5 * f_prev_[i];
    } else {
      ext_ = f_cur_;
    }
    cn_.cn_step(u_, ext_);
    f_prev_.swap(f_cur_);
    have_prev_ = true;
  }

  bool healthy() const {
    for (double v : u_) {
      if (!std::isfinite(v) || std::abs(v) > 1e12) return false;
    }
    return true;
  }

 private:
  CnIntegrator& cn_;
  std::vector<double> u_;
  int rannacher_;
  int started_ = 0;
  bool have_prev_ = false;
  std::vector<double> f_cur_, f_prev_, ext_;
};

GridField march(const NeumannProblem& problem, const std::vector<double>* initial, double horizon,
                const FdConfig& cfg) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ParameterError("fd oracle: horizon must be > 0");
  double dt_target = cfg.dt;
  for (int attempt = 0; attempt <= cfg.max_halvings; ++attempt, dt_target *= 0.5) {
    const std::size_t n_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / dt_target - 1e-9)));
    const double dt = horizon / static_cast<double>(n_steps);
    CnIntegrator cn(problem, cfg.n_intervals, dt);
    std::vector<double> u0(cn.x().size());
    if (initial) {
      if (initial->size() != u0.size()) throw ParameterError("fd oracle: initial data size mismatch");
      u0 = *initial;
    } else {
      for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = problem.h(std::span<const double>(&cn.x()[i], 1));
    }
    std::vector<std::size_t> marks;
    for (double t : cfg.record_times) {
      if (t < 0.0 || t > horizon + 1e-12) continue;
      marks.push_back(static_cast<std::size_t>(std::llround(t / dt)));
    }
    std::sort(marks.begin(), marks.end());

    GridField field;
    field.x = cn.x();
    field.slope_left = cn.slope_left();
    field.slope_right = cn.slope_right();
    field.dt_used = dt;
    field.times.push_back(0.0);
    field.values.push_back(u0);
    Marcher m(cn, std::move(u0), cfg.rannacher_half_steps);
    bool ok = true;
    std::size_t next_mark = 0;
    while (next_mark < marks.size() && marks[next_mark] == 0) ++next_mark;
    for (std::size_t k = 1; k <= n_steps; ++k) {
      m.step();
      if (!m.healthy()) {
        ok = false;
        break;
      }
      bool record = k == n_steps || (cfg.record_every > 0 && k % cfg.record_every == 0);
      while (next_mark < marks.size() && marks[next_mark] <= k) {
        if (marks[next_mark] == k) record = true;
        ++next_mark;
      }
      if (record) {
        field.times.push_back(k == n_steps ? horizon : static_cast<double>(k) * dt);
        field.values.push_back(m.u());
      }
    }
    if (ok) return field;
  }
  throw NumericalError("fd oracle: blow-up persists after dt halvings");
}

}  // namespace

double GridField::value(std::size_t k, double xq) const { return interp(x, values.at(k), xq); }

double GridField::derivative(std::size_t k, double xq) const {
  return interp(x, node_derivative(values.at(k), dx(), slope_left, slope_right), xq);
}

GridField GridField::derivative_field() const {
  GridField d = *this;
  for (auto& v : d.values) v = node_derivative(v, dx(), slope_left, slope_right);
  return d;
}

std::size_t GridField::nearest(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  if (it == times.end()) return times.size() - 1;
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  return (t - times[k - 1] <= times[k] - t) ? k - 1 : k;
}

double GridField::at(double t, double xq) const {
  if (t <= times.front()) return value(0, xq);
  if (t >= times.back()) return value(times.size() - 1, xq);
  const std::size_t k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1.0 - w) * value(k - 1, xq) + w * value(k, xq);
}

double GridField::derivative_at(double t, double xq) const {
  if (t <= times.front()) return derivative(0, xq);
  if (t >= times.back()) return derivative(times.size() - 1, xq);
  const std::size_t k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1.0 - w) * derivative(k - 1, xq) + w * derivative(k, xq);
}

void GridField::write_csv(std::ostream& os) const {
  os << "t,x,u\n" << std::setprecision(17);
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) os << times[k] << ',' << x[i] << ',' << values[k][i] << '\n';
  }
}

double boundary_residual(const GridField& field) {
  const auto& u = field.final();
  const std::size_t n = u.size() - 1;
  const double dx = field.dx();
  const double right = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * dx);
  const double left = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
  return std::max(std::abs(right - field.slope_right), std::abs(left - field.slope_left));
}

GridField solve_parabolic_fd(const NeumannProblem& problem, double horizon, const FdConfig& cfg) {
  return march(problem, nullptr, horizon, cfg);
}

GridField solve_parabolic_fd_from(const NeumannProblem& problem, const std::vector<double>& initial,
                                  double horizon, const FdConfig& cfg) {
  return march(problem, &initial, horizon, cfg);
}

double ErgodicFd::v_at(double xq) const { return interp(x, v, xq); }

double ErgodicFd::v_prime_at(double xq) const {
  return interp(x, node_derivative(v, x[1] - x[0], slope_left, slope_right), xq);
}

ErgodicFd solve_ergodic_fd(const NeumannProblem& problem, const ErgodicFdConfig& cfg) {
  const std::size_t per_unit = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.0 / cfg.grid.dt)));
  CnIntegrator cn(problem, cfg.grid.n_intervals, 1.0 / static_cast<double>(per_unit));
  const auto& x = cn.x();
  const double a = x.back();
  Marcher m(cn, std::vector<double>(x.size(), 0.0), cfg.grid.rannacher_half_steps);

  auto profile = [&](const std::vector<double>& u) {
    std::vector<double> p(u.size());
    const double u0 = interp(x, u, 0.0);
    for (std::size_t i = 0; i < u.size(); ++i) p[i] = u[i] - u0;
    return p;
  };
  std::vector<double> prev_u = m.u();
  std::vector<double> prev_p = profile(prev_u);
  double change = 0.0;
  for (double t = 1.0; t <= cfg.t_max + 1e-9; t += 1.0) {
    for (std::size_t k = 0; k < per_unit; ++k) m.step();
    if (!m.healthy()) throw NumericalError("ergodic fd: solution blew up");
    const auto p = profile(m.u());
    change = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) change = std::max(change, std::abs(p[i] - prev_p[i]));
    if (change < cfg.tolerance) {
      ErgodicFd out;
      out.x = x;
      out.v = p;
      out.t_stationary = t;
      out.last_change = change;
      out.slope_left = cn.slope_left();
      out.slope_right = cn.slope_right();
      const auto& u = m.u();
      out.lambda = interp(x, u, 0.0) - interp(x, prev_u, 0.0);
      double lo = out.lambda, hi = out.lambda;
      for (double xp : {-0.5 * a, 0.5 * a}) {
        const double l = interp(x, u, xp) - interp(x, prev_u, xp);
        lo = std::min(lo, l);
        hi = std::max(hi, l);
      }
      out.lambda_spread = hi - lo;
      return out;
    }
    prev_u = m.u();
    prev_p = p;
  }
  throw NumericalError("ergodic fd: not stationary by t_max; last profile change " + std::to_string(change));
}

double flow_composition_check(const NeumannProblem& problem, double t, double s, const FdConfig& cfg) {
  if (!(t > 0.0) || !(s > 0.0)) throw ParameterError("flow check: T and S must be > 0");
  FdConfig plain = cfg;
  plain.record_every = 0;
  plain.record_times.clear();
  const GridField direct = solve_parabolic_fd(problem, t + s, plain);
  const GridField first = solve_parabolic_fd(problem, t, plain);
  const GridField second = solve_parabolic_fd_from(problem, first.final(), s, plain);
  double r = 0.0;
  for (std::size_t i = 0; i < direct.x.size(); ++i) r = std::max(r, std::abs(direct.final()[i] - second.final()[i]));
  return r;
}

}  // namespace nlab
