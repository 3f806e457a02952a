// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/ebsde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nlab/rng.hpp"

namespace nlab {
namespace {

double scalar_at(const ScalarField& f, double x) { return f(std::span<const double>(&x, 1)); }

// OLS weights w with intercept = sum w_i y_i for y = c0 + c1 * t.
std::vector<double> intercept_weights(const std::vector<double>& t) {
  const std::size_t n = t.size();
  if (n == 1) return {1.0};
  double mean = 0.0;
  for (double v : t) mean += v;
  mean /= static_cast<double>(n);
  double sxx = 0.0;
  for (double v : t) sxx += (v - mean) * (v - mean);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / static_cast<double>(n) - mean * (t[i] - mean) / sxx;
  return w;
}

Vector origin(std::size_t d) { return Vector::Zero(static_cast<Eigen::Index>(d)); }

void finish(ErgodicSolution& out, double v_bound) {
  double sup = 0.0;
  for (double v : out.v) sup = std::max(sup, std::abs(v));
  if (sup > v_bound) {
    std::ostringstream os;
    os << "sup|v| = " << sup << " exceeds bound " << v_bound;
    out.flags.push_back(os.str());
  }
  out.lipschitz = 0.0;
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    const double dx = (out.points[i] - out.points[i - 1]).norm();
    if (dx > 0.0) out.lipschitz = std::max(out.lipschitz, std::abs(out.v[i] - out.v[i - 1]) / dx);
  }
}

}  // namespace

HelmholtzLift helmholtz_lift(const ConvexDomain& domain, const ScalarField& g, double alpha_h) {
  if (domain.dim() != 1 || domain.kind() != ConvexDomain::Kind::interval) {
    throw PreconditionError("helmholtz_lift: 1D interval domain required");
  }
  if (!(alpha_h > 0.0) || !std::isfinite(alpha_h)) throw ParameterError("helmholtz_lift: alpha_h must be > 0");
  HelmholtzLift lift;
  lift.half_width = domain.semi_axes()[0];
  lift.alpha_h = alpha_h;
  lift.k = std::sqrt(alpha_h);
  const double a = lift.half_width;
  const double gr = scalar_at(g, a);
  const double gl = scalar_at(g, -a);
  const double s = std::sinh(lift.k * a);
  const double c = std::cosh(lift.k * a);
  if (!(s > 0.0) || !std::isfinite(c)) throw NumericalError("helmholtz_lift: singular boundary system");
  lift.A = (gr + gl) / (2.0 * lift.k * s);
  lift.B = (gr - gl) / (2.0 * lift.k * c);
  return lift;
}

double DiscountedSolution::value(const Vector& x) const {
  double v = evaluate_u(bsde, *solved, {x})[0];
  if (lift) v += lift->value(x(0));
  return v;
}

double DiscountedSolution::standard_error(const Vector& x) const {
  return bsde.functional_fit.standard_error(as_span(x));
}

double DiscountedSolution::difference_standard_error(const Vector& x, const Vector& y) const {
  return bsde.functional_fit.difference_standard_error(as_span(x), as_span(y));
}

DiscountedSolution solve_discounted(const NeumannProblem& problem, double alpha, const DiscountedConfig& cfg) {
  if (!(alpha > 0.0) || alpha > 1.0) throw ParameterError("solve_discounted: alpha must lie in (0, 1]");
  const double required = 5.0 / alpha;
  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : cfg.horizon_factor / alpha;
  if (horizon < required * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "solve_discounted: truncation horizon " << horizon << " < 5/alpha = " << required;
    throw PreconditionError(os.str());
  }
  const std::size_t d = problem.dim();
  DiscountedSolution out;
  out.alpha = alpha;
  out.horizon = horizon;

  const Driver base = problem.driver;
  const bool use_lift = cfg.lift && d == 1 && problem.coeffs.domain.kind() == ConvexDomain::Kind::interval;
  if (use_lift) {
    const HelmholtzLift lift = helmholtz_lift(problem.coeffs.domain, problem.g, cfg.alpha_h);
    out.lift = lift;
    const VectorField drift = problem.coeffs.drift;
    const double s = problem.coeffs.sigma(0, 0);
    Driver lifted;
    lifted.eval = [=](std::span<const double> x, double y, std::span<const double> z) {
      const double v1 = lift.value(x[0]);
      const double dv1 = lift.derivative(x[0]);
      double b = 0.0;
      drift(x, std::span<double>(&b, 1));
      const double zz = z[0] + dv1 * s;
      const double gen = 0.5 * s * s * lift.second(x[0]) + b * dv1;
      return gen + base(x, y + v1, std::span<const double>(&zz, 1)) - alpha * (v1 + y);
    };
    lifted.lipschitz_z = base.lipschitz_z;
    lifted.depends_on_z = base.depends_on_z;
    lifted.depends_on_y = true;
    lifted.name = base.name + "+lift";
    out.solved = NeumannProblem{problem.coeffs, lifted, [](std::span<const double>) { return 0.0; },
                                [lift](std::span<const double> x) { return -lift.value(x[0]); }};
  } else {
    Driver disc;
    disc.eval = [=](std::span<const double> x, double y, std::span<const double> z) {
      return base(x, y, z) - alpha * y;
    };
    disc.lipschitz_z = base.lipschitz_z;
    disc.depends_on_z = base.depends_on_z;
    disc.depends_on_y = true;
    disc.name = base.name + "-alpha*y";
    out.solved = NeumannProblem{problem.coeffs, disc, problem.g, [](std::span<const double>) { return 0.0; }};
  }
  BsdeConfig bc = cfg.bsde;
  bc.init = CloudInit::uniform;
  if (cfg.step > 0.0) bc.n_steps = static_cast<std::size_t>(std::ceil(horizon / cfg.step - 1e-9));
  out.bsde = solve_finite_horizon(*out.solved, horizon, origin(d), bc);
  return out;
}

std::string to_string(ErgodicMethod m) { return m == ErgodicMethod::discounted ? "discounted" : "differencing"; }

ErgodicMethod ergodic_method_from_string(const std::string& s) {
  if (s == "discounted") return ErgodicMethod::discounted;
  if (s == "differencing") return ErgodicMethod::differencing;
  throw ParameterError("unknown ergodic method: " + s);
}

std::vector<Vector> ergodic_grid(const ConvexDomain& domain, std::size_t n) {
  if (n < 3) n = 3;
  if (n % 2 == 0) ++n;
  const double r = domain.semi_axes()[0];
  std::vector<Vector> pts;
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    Vector p = origin(domain.dim());
    p(0) = i == half ? 0.0 : r * (static_cast<double>(i) - static_cast<double>(half)) / static_cast<double>(half);
    pts.push_back(p);
  }
  return pts;
}

ErgodicSolution solve_ergodic(const NeumannProblem& problem, const ErgodicConfig& cfg) {
  ErgodicSolution out;
  out.method = cfg.method;
  const std::size_t d = problem.dim();
  const Vector x_ref = origin(d);
  out.points = ergodic_grid(problem.coeffs.domain, cfg.n_grid);
  const std::uint64_t master = cfg.bsde.seed;

  if (cfg.method == ErgodicMethod::discounted) {
    if (cfg.alphas.empty()) throw ParameterError("ergodic: empty alpha sweep");
    for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
      if (!(cfg.alphas[i] > 0.0) || cfg.alphas[i] > 1.0) throw ParameterError("ergodic: alphas must lie in (0, 1]");
      if (i > 0 && !(cfg.alphas[i] < cfg.alphas[i - 1])) throw ParameterError("ergodic: alpha sweep must decrease");
    }
    std::vector<DiscountedSolution> runs;
    for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
      DiscountedConfig dc = cfg.discounted;
      dc.bsde.seed = derive_seed(master, "alpha:" + std::to_string(i));
      runs.push_back(solve_discounted(problem, cfg.alphas[i], dc));
      const auto& r = runs.back();
      out.sweep.push_back({cfg.alphas[i], r.alpha * r.value(x_ref), r.alpha * r.standard_error(x_ref)});
      for (const auto& w : r.bsde.warnings) out.warnings.push_back("alpha " + std::to_string(r.alpha) + ": " + w);
      for (const auto& f : r.bsde.flags) out.flags.push_back("alpha " + std::to_string(r.alpha) + ": " + f);
    }
    const auto w = intercept_weights(cfg.alphas);
    double lam = 0.0, var = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      lam += w[i] * out.sweep[i].estimate;
      var += w[i] * w[i] * out.sweep[i].se * out.sweep[i].se;
    }
    out.lambda = lam;
    out.lambda_se = std::sqrt(var);
    if (w.size() >= 3) {
      // two-point extrapolations from either end of the sweep
      const auto& s = out.sweep;
      const std::size_t n = s.size();
      auto two_point = [&](std::size_t i, std::size_t j, double& se) {
        const double wi = s[j].parameter / (s[j].parameter - s[i].parameter);
        const double wj = -s[i].parameter / (s[j].parameter - s[i].parameter);
        se = std::hypot(wi * s[i].se, wj * s[j].se);
        return wi * s[i].estimate + wj * s[j].estimate;
      };
      double se_a = 0.0, se_b = 0.0;
      const double la = two_point(0, 1, se_a);
      const double lb = two_point(n - 2, n - 1, se_b);
      if (std::abs(la - lb) > 5.0 * std::hypot(se_a, se_b)) {
        std::ostringstream os;
        os << "inconsistent alpha sweep: " << la << " vs " << lb;
        out.flags.push_back(os.str());
      }
    }
    for (const auto& p : out.points) {
      double v = 0.0, vv = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        v += w[i] * (runs[i].value(p) - runs[i].value(x_ref));
        const double se = runs[i].difference_standard_error(p, x_ref);
        vv += w[i] * w[i] * se * se;
      }
      out.v.push_back(p.norm() == 0.0 ? 0.0 : v);
      out.v_se.push_back(std::sqrt(vv));
    }
  } else {
    const auto& hs = cfg.horizons;
    if (hs.size() < 2) throw ParameterError("ergodic: differencing needs at least two horizons");
    for (std::size_t i = 1; i < hs.size(); ++i) {
      if (hs[i] - hs[i - 1] < 1.0 - 1e-12) throw ParameterError("ergodic: horizons must be increasing, at least 1 apart");
    }
    if (!(hs[0] > 0.0)) throw ParameterError("ergodic: horizons must be positive");
    const double dt = hs.back() / static_cast<double>(cfg.bsde.n_steps);
    std::vector<BsdeSolution> runs;
    for (double t : hs) {
      BsdeConfig bc = cfg.bsde;
      bc.init = CloudInit::point;
      bc.n_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / dt)));
      runs.push_back(solve_finite_horizon(problem, t, x_ref, bc));
      out.sweep.push_back({t, runs.back().y0, runs.back().y0_se});
      for (const auto& wmsg : runs.back().warnings) out.warnings.push_back("T " + std::to_string(t) + ": " + wmsg);
      for (const auto& f : runs.back().flags) out.flags.push_back("T " + std::to_string(t) + ": " + f);
    }
    // paired differences share the Brownian paths (same seed)
    std::vector<Estimate> pairs;
    for (std::size_t i = 1; i < runs.size(); ++i) {
      std::vector<double> diff(runs[i].pathwise.size());
      const double span = hs[i] - hs[i - 1];
      for (std::size_t p = 0; p < diff.size(); ++p) diff[p] = (runs[i].pathwise[p] - runs[i - 1].pathwise[p]) / span;
      pairs.push_back(sample_estimate(diff));
    }
    out.lambda = pairs.back().value;
    out.lambda_se = pairs.back().se;
    for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
      if (std::abs(pairs[i].value - out.lambda) > 5.0 * std::hypot(pairs[i].se, out.lambda_se)) {
        std::ostringstream os;
        os << "inconsistent T sweep: " << pairs[i].value << " vs " << out.lambda;
        out.flags.push_back(os.str());
      }
    }
    BsdeConfig sc = cfg.bsde;
    sc.init = CloudInit::uniform;
    sc.n_steps = runs.back().times.size() - 1;
    if (cfg.surface_paths > 0) sc.n_paths = cfg.surface_paths;
    sc.seed = derive_seed(master, "surface");
    const BsdeSolution surf = solve_finite_horizon(problem, hs.back(), x_ref, sc);
    for (const auto& wmsg : surf.warnings) out.warnings.push_back("surface: " + wmsg);
    for (const auto& f : surf.flags) out.flags.push_back("surface: " + f);
    const auto u = evaluate_u(surf, problem, out.points);
    const double u0 = evaluate_u(surf, problem, {x_ref})[0];
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      out.v.push_back(out.points[i].norm() == 0.0 ? 0.0 : u[i] - u0);
      out.v_se.push_back(surf.functional_fit.difference_standard_error(as_span(out.points[i]), as_span(x_ref)));
    }
  }
  finish(out, cfg.v_bound);
  return out;
}

void ErgodicSolution::write_csv(std::ostream& os) const {
  const std::size_t d = points.empty() ? 1 : static_cast<std::size_t>(points[0].size());
  for (std::size_t j = 0; j < d; ++j) os << "x_" << j + 1 << ',';
  os << "v\n" << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (Eigen::Index j = 0; j < points[i].size(); ++j) os << points[i](j) << ',';
    os << v[i] << '\n';
  }
}

void ErgodicSolution::write_summary(std::ostream& os) const {
  os << std::setprecision(17);
  os << "method = " << to_string(method) << '\n';
  os << "lambda = " << lambda << '\n';
  os << "lambda_se = " << lambda_se << '\n';
  os << "lipschitz = " << lipschitz << '\n';
  for (const auto& r : sweep) os << "sweep = " << r.parameter << ' ' << r.estimate << ' ' << r.se << '\n';
  for (const auto& f : flags) os << "flag = " << f << '\n';
  for (const auto& w : warnings) os << "warning = " << w << '\n';
}

}  // namespace nlab
