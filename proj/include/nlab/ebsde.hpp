// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nlab/bsde.hpp"

namespace nlab {

/// v1 = A cosh(k x) + B sinh(k x), k = sqrt(alpha_h): solves v1'' = alpha_h v1
/// on [-a, a] with v1'(a) = g(a), v1'(-a) = -g(-a).
struct HelmholtzLift {
  double half_width = 1.0;
  double alpha_h = 1.0;
  double k = 1.0;
  double A = 0.0;
  double B = 0.0;

  double value(double x) const { return A * std::cosh(k * x) + B * std::sinh(k * x); }
  double derivative(double x) const { return k * (A * std::sinh(k * x) + B * std::cosh(k * x)); }
  double second(double x) const { return k * k * value(x); }
};

HelmholtzLift helmholtz_lift(const ConvexDomain& domain, const ScalarField& g, double alpha_h);

struct DiscountedConfig {
  /// Truncation horizon; 0 picks horizon_factor / alpha. Must be >= 5 / alpha.
  double horizon = 0.0;
  double horizon_factor = 8.0;
  /// Time step; when > 0 it overrides bsde.n_steps.
  double step = 1e-2;
  BsdeConfig bsde{};
  /// 1D only: subtract the Helmholtz lift so the regression sees no boundary term.
  bool lift = true;
  double alpha_h = 1.0;
};

/// Y^alpha on closure(G) from a uniform cloud.
struct DiscountedSolution {
  double alpha = 0.0;
  double horizon = 0.0;
  BsdeSolution bsde;
  std::optional<HelmholtzLift> lift;
  /// Problem actually regressed (lifted if the lift is on).
  std::optional<NeumannProblem> solved;

  double value(const Vector& x) const;
  double standard_error(const Vector& x) const;
  /// Standard error of value(x) - value(y).
  double difference_standard_error(const Vector& x, const Vector& y) const;
};

DiscountedSolution solve_discounted(const NeumannProblem& problem, double alpha, const DiscountedConfig& cfg);

enum class ErgodicMethod { discounted, differencing };
std::string to_string(ErgodicMethod m);
ErgodicMethod ergodic_method_from_string(const std::string& s);

struct SweepRow {
  double parameter = 0.0;  // alpha or T
  double estimate = 0.0;   // alpha Y^alpha(x_ref) or u(T, x_ref)
  double se = 0.0;
};

struct ErgodicConfig {
  ErgodicMethod method = ErgodicMethod::differencing;
  /// Decreasing, in (0, 1].
  std::vector<double> alphas{0.5, 0.25, 0.125};
  DiscountedConfig discounted{};
  /// Increasing; consecutive horizons at least 1 apart.
  std::vector<double> horizons{2.0, 3.0};
  BsdeConfig bsde{};
  /// Paths for the uniform cloud giving v at the largest horizon (0: bsde.n_paths).
  std::size_t surface_paths = 0;
  std::size_t n_grid = 41;
  double v_bound = 1e3;
};

struct ErgodicSolution {
  ErgodicMethod method = ErgodicMethod::differencing;
  double lambda = 0.0;
  double lambda_se = 0.0;
  std::vector<Vector> points;
  std::vector<double> v;
  std::vector<double> v_se;
  std::vector<SweepRow> sweep;
  /// Largest |v(x) - v(y)| / |x - y| over grid neighbours.
  double lipschitz = 0.0;
  std::vector<std::string> flags;
  std::vector<std::string> warnings;

  /// CSV with columns x_1..x_d, v.
  void write_csv(std::ostream& os) const;
  /// key = value lines.
  void write_summary(std::ostream& os) const;
};

/// Grid on the first coordinate axis of closure(G), containing the origin.
std::vector<Vector> ergodic_grid(const ConvexDomain& domain, std::size_t n);

ErgodicSolution solve_ergodic(const NeumannProblem& problem, const ErgodicConfig& cfg);

}  // namespace nlab
