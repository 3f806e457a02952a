// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

namespace nlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_1d_interval(const NeumannProblem& p) {
  return p.dim() == 1 && p.coeffs.domain.kind() == ConvexDomain::Kind::interval;
}

void check_horizons(const std::vector<double>& hs) {
  if (hs.empty()) throw ParameterError("asymptotics: empty horizon grid");
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0)) throw ParameterError("asymptotics: horizons must be positive");
    if (i > 0 && !(hs[i] > hs[i - 1])) throw ParameterError("asymptotics: horizons must increase");
  }
}

// u(T, x) per [horizon][point].
std::vector<std::vector<Estimate>> horizon_values(const NeumannProblem& problem, const std::vector<double>& hs,
                                                  const std::vector<Vector>& xs, Source source,
                                                  const HorizonSolver& solver) {
  std::vector<std::vector<Estimate>> out(hs.size(), std::vector<Estimate>(xs.size()));
  if (source == Source::fd) {
    FdConfig fc = solver.fd;
    fc.record_times = hs;
    const GridField field = solve_parabolic_fd(problem, hs.back(), fc);
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::size_t k = field.nearest(hs[i]);
      for (std::size_t j = 0; j < xs.size(); ++j) out[i][j] = {field.value(k, xs[j](0)), 0.0};
    }
    return out;
  }
  for (std::size_t i = 0; i < hs.size(); ++i) {
    BsdeConfig bc = solver.bsde;
    bc.init = CloudInit::point;
    bc.n_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hs[i] / solver.bsde_step)));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const BsdeSolution s = solve_finite_horizon(problem, hs[i], xs[j], bc);
      out[i][j] = {s.y0, s.y0_se};
    }
  }
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0.0 && syy > 0.0) ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

// Residual sum of squares of w = L + C exp(-eta T) with L, C by least squares.
double joint_sse(const std::vector<WPoint>& pts, double eta, double& L, double& C) {
  double s1 = 0.0, se = 0.0, see = 0.0, sw = 0.0, swe = 0.0;
  for (const auto& p : pts) {
    const double e = std::exp(-eta * p.T);
    s1 += 1.0;
    se += e;
    see += e * e;
    sw += p.w;
    swe += p.w * e;
  }
  const double det = s1 * see - se * se;
  if (std::abs(det) < 1e-300) {
    L = sw / s1;
    C = 0.0;
  } else {
    L = (see * sw - se * swe) / det;
    C = (s1 * swe - se * sw) / det;
  }
  double sse = 0.0;
  for (const auto& p : pts) {
    const double r = p.w - L - C * std::exp(-eta * p.T);
    sse += r * r;
  }
  return sse;
}

}  // namespace

std::string to_string(Source s) {
  switch (s) {
    case Source::fd: return "fd";
    case Source::bsde: return "bsde";
    case Source::both: return "both";
  }
  return "fd";
}

Source source_from_string(const std::string& s) {
  if (s == "fd" || s == "fd_oracle") return Source::fd;
  if (s == "bsde") return Source::bsde;
  if (s == "both") return Source::both;
  throw ParameterError("unknown source: " + s);
}

ErgodicReference fd_reference(const NeumannProblem& problem, const ErgodicFdConfig& cfg) {
  const auto sol = std::make_shared<ErgodicFd>(solve_ergodic_fd(problem, cfg));
  ErgodicReference ref;
  ref.lambda = sol->lambda;
  ref.v = [sol](const Vector& x) { return sol->v_at(x(0)); };
  ref.origin = "fd";
  return ref;
}

LambdaSweep lambda_sweep(const NeumannProblem& problem, const std::vector<double>& horizons, const Vector& x,
                         double lambda, Source source, const HorizonSolver& solver) {
  check_horizons(horizons);
  if (horizons.back() / horizons.front() < 8.0 - 1e-12) {
    throw ParameterError("lambda_sweep: horizon grid must span a factor >= 8");
  }
  if (source == Source::both) throw ParameterError("lambda_sweep: pick one source");
  if (source == Source::fd && !is_1d_interval(problem)) throw PreconditionError("lambda_sweep: fd source needs 1D");
  const auto vals = horizon_values(problem, horizons, {x}, source, solver);
  LambdaSweep out;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    LambdaRow r;
    r.T = horizons[i];
    r.u = vals[i][0].value;
    r.se = vals[i][0].se;
    r.ratio = r.u / r.T;
    r.error = r.ratio - lambda;
    out.rows.push_back(r);
    if (std::abs(r.error) > 2.0 * r.se / r.T && r.error != 0.0) {
      lx.push_back(std::log(r.T));
      ly.push_back(std::log(std::abs(r.error)));
    } else {
      out.truncated.push_back(r.T);
    }
  }
  out.n_fit = lx.size();
  if (lx.size() >= 2) {
    const LineFit f = ols(lx, ly);
    out.slope = f.slope;
    out.r2 = f.r2;
  }
  return out;
}

ProfileTable renormalized_profile(const NeumannProblem& problem, const std::vector<double>& horizons,
                                  const std::vector<Vector>& xs, const ErgodicReference& ref, Source source,
                                  const HorizonSolver& solver) {
  check_horizons(horizons);
  if (xs.empty()) throw ParameterError("renormalized_profile: empty x grid");
  if (!ref.v) throw ParameterError("renormalized_profile: missing v");
  std::vector<Source> sources;
  if (source == Source::fd || source == Source::both) sources.push_back(Source::fd);
  if (source == Source::bsde || source == Source::both) sources.push_back(Source::bsde);
  if (std::find(sources.begin(), sources.end(), Source::fd) != sources.end() && !is_1d_interval(problem)) {
    throw PreconditionError("renormalized_profile: fd source needs 1D");
  }
  std::vector<double> v(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) v[j] = ref.v(xs[j]);

  ProfileTable table;
  for (Source s : sources) {
    const auto vals = horizon_values(problem, horizons, xs, s, solver);
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      double lo = kInf, hi = -kInf;
      for (std::size_t j = 0; j < xs.size(); ++j) {
        ProfileRow r;
        r.source = s;
        r.T = horizons[i];
        r.x = xs[j];
        r.u = vals[i][j].value;
        r.se = vals[i][j].se;
        r.w = r.u - ref.lambda * r.T - v[j];
        lo = std::min(lo, r.w);
        hi = std::max(hi, r.w);
        table.rows.push_back(r);
      }
      table.spread.push_back({s, horizons[i], hi - lo});
    }
  }
  return table;
}

LimitFit fit_limit_and_rate(const std::vector<WPoint>& input, const FitConfig& cfg) {
  if (input.size() < 5) throw ParameterError("fit_limit_and_rate: need at least 5 horizons");
  std::vector<WPoint> w = input;
  std::sort(w.begin(), w.end(), [](const WPoint& a, const WPoint& b) { return a.T < b.T; });
  LimitFit fit;
  const WPoint& last = w.back();
  fit.L_hat = last.w;
  fit.L_se = last.se;

  std::vector<double> tx, ly, dev;
  bool constant = true;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double d = std::abs(w[i].w - fit.L_hat);
    if (d > cfg.floor) constant = false;
    if (w[i].T < cfg.burn_in) continue;
    const double noise = cfg.noise_z * std::hypot(w[i].se, last.se);
    if (d <= std::max(cfg.floor, noise)) continue;
    tx.push_back(w[i].T);
    ly.push_back(std::log(d));
    dev.push_back(d);
  }
  fit.n_window = tx.size();
  if (!tx.empty()) {
    fit.window_lo = tx.front();
    fit.window_hi = tx.back();
  }

  // joint fit over the post-burn-in points
  std::vector<WPoint> late;
  for (const auto& p : w) {
    if (p.T >= cfg.burn_in) late.push_back(p);
  }
  if (constant) {
    fit.eta_hat = kInf;
    fit.eta_joint = kInf;
    fit.L_joint = fit.L_hat;
    fit.note = "w constant in T";
    return fit;
  }
  if (late.size() >= 3) {
    double best_eta = 0.0, best = kInf, L = 0.0, C = 0.0;
    const int n_grid = 600;
    const double lo = std::log(1e-3), hi = std::log(1e2);
    for (int i = 0; i <= n_grid; ++i) {
      const double eta = std::exp(lo + (hi - lo) * i / n_grid);
      const double sse = joint_sse(late, eta, L, C);
      if (sse < best) {
        best = sse;
        best_eta = eta;
      }
    }
    // golden-section refinement in log eta
    const double step = (hi - lo) / n_grid;
    double a = std::log(best_eta) - step, b = std::log(best_eta) + step;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80; ++it) {
      const double c = b - gr * (b - a), d = a + gr * (b - a);
      if (joint_sse(late, std::exp(c), L, C) < joint_sse(late, std::exp(d), L, C)) {
        b = d;
      } else {
        a = c;
      }
    }
    fit.eta_joint = std::exp(0.5 * (a + b));
    joint_sse(late, fit.eta_joint, fit.L_joint, fit.C_joint);
  }

  if (tx.size() < 2) {
    // Noise-dominated: only the bound implied by the decay from the one
    // resolved horizon to the next one's noise level (0 when none is resolved).
    fit.eta_hat = 0.0;
    fit.eta_lower_bound = true;
    fit.note = "fewer than two horizons above the noise floor; eta is a lower bound";
    if (tx.size() == 1) {
      for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        if (w[i].T <= tx[0]) continue;
        const double noise = std::max(cfg.floor, cfg.noise_z * std::hypot(w[i].se, last.se));
        fit.eta_hat = std::max(0.0, std::log(dev[0] / noise) / (w[i].T - tx[0]));
        break;
      }
    }
    return fit;
  }
  const LineFit lf = ols(tx, ly);
  fit.eta_hat = -lf.slope;
  fit.r2 = lf.r2;
  for (std::size_t i = 1; i < dev.size(); ++i) {
    if (dev[i] > dev[i - 1]) {
      fit.eta_lower_bound = true;
      fit.note = "non-monotone tail; eta is a lower bound";
      break;
    }
  }
  return fit;
}

AsymptoticsReport run_asymptotics(const NeumannProblem& problem, const AsymptoticsConfig& cfg) {
  check_horizons(cfg.horizons);
  if (cfg.xs.empty()) throw ParameterError("asymptotics: empty x grid");
  if (cfg.fit_index >= cfg.xs.size()) throw ParameterError("asymptotics: fit_index out of range");
  AsymptoticsReport rep;
  rep.source = cfg.source;

  ErgodicReference ref;
  if (is_1d_interval(problem)) {
    ref = fd_reference(problem, cfg.ergodic_fd);
  } else {
    if (cfg.source != Source::bsde) throw PreconditionError("asymptotics: fd source needs a 1D interval");
    auto sol = std::make_shared<ErgodicSolution>(solve_ergodic(problem, cfg.ergodic));
    ref.lambda = sol->lambda;
    ref.v = [sol](const Vector& x) {
      // piecewise linear along the first axis of the ergodic grid
      const auto& p = sol->points;
      const double q = x(0);
      if (q <= p.front()(0)) return sol->v.front();
      for (std::size_t i = 1; i < p.size(); ++i) {
        if (q <= p[i](0)) {
          const double t = (q - p[i - 1](0)) / (p[i](0) - p[i - 1](0));
          return (1.0 - t) * sol->v[i - 1] + t * sol->v[i];
        }
      }
      return sol->v.back();
    };
    ref.origin = "ebsde";
    for (const auto& f : sol->flags) rep.flags.push_back("ergodic: " + f);
  }
  rep.lambda_hat = ref.lambda;
  for (const auto& x : cfg.xs) rep.v_values.push_back(ref.v(x));
  rep.table = renormalized_profile(problem, cfg.horizons, cfg.xs, ref, cfg.source, cfg.solver);

  const Vector& xf = cfg.xs[cfg.fit_index];
  for (Source s : {Source::fd, Source::bsde}) {
    std::vector<WPoint> pts;
    for (const auto& r : rep.table.rows) {
      if (r.source == s && (r.x - xf).norm() == 0.0) pts.push_back({r.T, r.w, r.se});
    }
    if (pts.empty()) continue;
    if (pts.size() >= 5) {
      rep.fits.emplace_back(s, fit_limit_and_rate(pts, cfg.fit));
    } else {
      rep.flags.push_back(to_string(s) + ": fewer than 5 horizons, no limit fit");
    }
  }

  double wmax = 0.0;
  for (const auto& r : rep.table.rows) wmax = std::max(wmax, std::abs(r.w));
  if (wmax > cfg.w_bound) {
    std::ostringstream os;
    os << "max |w| = " << wmax << " exceeds bound " << cfg.w_bound;
    rep.flags.push_back(os.str());
  }
  double prev = kInf;
  for (const auto& s : rep.table.spread) {
    if (s.source != Source::fd) continue;
    if (s.spread > prev + 1e-6) {
      rep.flags.push_back("fd spread increased at T = " + std::to_string(s.T));
      break;
    }
    prev = s.spread;
  }
  if (cfg.source == Source::both) {
    const std::size_t n = rep.table.rows.size() / 2;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = rep.table.rows[i];
      const auto& b = rep.table.rows[n + i];
      if (std::abs(a.w - b.w) > std::max(3.0 * b.se, 2e-2)) {
        std::ostringstream os;
        os << "sources disagree at T = " << a.T << ", x = " << a.x(0) << ": " << a.w << " vs " << b.w;
        rep.flags.push_back(os.str());
      }
    }
  }
  return rep;
}

void AsymptoticsReport::write_csv(std::ostream& os) const {
  const std::size_t d = table.rows.empty() ? 1 : static_cast<std::size_t>(table.rows[0].x.size());
  os << "source,T,";
  if (d == 1) {
    os << "x,";
  } else {
    for (std::size_t j = 0; j < d; ++j) os << "x_" << j + 1 << ',';
  }
  os << "u,se_u,w\n" << std::setprecision(17);
  for (const auto& r : table.rows) {
    os << to_string(r.source) << ',' << r.T << ',';
    for (Eigen::Index j = 0; j < r.x.size(); ++j) os << r.x(j) << ',';
    os << r.u << ',' << r.se << ',' << r.w << '\n';
  }
}

void AsymptoticsReport::write_summary(std::ostream& os) const {
  os << std::setprecision(17);
  os << "source = " << to_string(source) << '\n';
  os << "lambda_hat = " << lambda_hat << '\n';
  for (const auto& [s, f] : fits) {
    const std::string p = to_string(s) + ".";
    os << p << "L_hat = " << f.L_hat << '\n';
    os << p << "L_se = " << f.L_se << '\n';
    os << p << "eta_hat = " << f.eta_hat << '\n';
    os << p << "eta_lower_bound = " << (f.eta_lower_bound ? "true" : "false") << '\n';
    os << p << "r2 = " << f.r2 << '\n';
    os << p << "window = " << f.window_lo << ' ' << f.window_hi << ' ' << f.n_window << '\n';
    os << p << "L_joint = " << f.L_joint << '\n';
    os << p << "eta_joint = " << f.eta_joint << '\n';
    if (!f.note.empty()) os << p << "note = " << f.note << '\n';
  }
  for (const auto& s : table.spread) os << "spread = " << to_string(s.source) << ' ' << s.T << ' ' << s.spread << '\n';
  for (const auto& f : flags) os << "flag = " << f << '\n';
}

}  // namespace nlab
