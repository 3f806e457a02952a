// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlab/common.hpp"
#include "nlab/regression.hpp"
#include "nlab/sde.hpp"

namespace nlab {

/// Driver f(x, y, z) of the backward equation; z is the row vector Z (size d).
/// Drivers of the parabolic problem ignore y; the discounted ergodic solver
/// adds a -alpha y term.
struct Driver {
  std::function<double(std::span<const double> x, double y, std::span<const double> z)> eval;
  double lipschitz_z = 0.0;
  bool depends_on_z = true;
  bool depends_on_y = false;
  std::string name;

  double operator()(std::span<const double> x, double y, std::span<const double> z) const {
    return eval(x, y, z);
  }

  static Driver zero();
  static Driver constant(double c);
  /// -|z| (Euclidean norm), the Hamiltonian of the two-point control problem.
  static Driver neg_abs_z();
  /// Driver depending on x only.
  static Driver of_x(ScalarField f, std::string name);
};

/// Coefficients of the Neumann problem
///   du/dt = L u + f(x, grad u sigma) in G,  du/dn + g = 0 on dG,  u(0) = h,
/// with n the inward normal. Its probabilistic form is the generalized BSDE
///   dY = -f(X, Z) ds - g(X) dK + Z dW,  Y_T = h(X_T).
struct NeumannProblem {
  SdeCoefficients coeffs;
  Driver driver;
  ScalarField g;
  ScalarField h;

  std::size_t dim() const { return coeffs.dim(); }
  /// Spot-checks the Lipschitz-in-z bound of the driver on random triples and
  /// finiteness of g and h on probe points; throws ParameterError on failure.
  void validate(std::uint64_t seed = 7) const;
};

enum class CloudInit { point, uniform };

struct BsdeConfig {
  std::size_t n_paths = 10000;
  std::size_t n_steps = 1000;
  BasisSpec basis{};
  int picard_iters = 1;
  double z_cap = 1e3;
  CloudInit init = CloudInit::point;
  std::uint64_t seed = 1;
  bool boundary_correction = true;
  std::size_t workers = 1;
  /// Refuse forward clouds larger than this many megabytes.
  std::size_t memory_limit_mb = 3072;
};

struct BsdeSolution {
  std::vector<double> times;
  BasisSpec basis;
  CloudInit init = CloudInit::point;
  Vector x0;
  /// Regression of E[Y_{k+1} + g dK | X_k] and of Z_k, one per step.
  std::vector<RegressionFit> y_fits;
  std::vector<RegressionFit> z_fits;
  double y0 = 0.0;
  double y0_se = 0.0;
  Vector z0;
  /// Mean boundary local time at the horizon.
  double mean_local_time = 0.0;
  /// Regression of the pathwise functional on the initial cloud (uniform
  /// init only); gives standard errors of the time-zero surface.
  RegressionFit functional_fit;
  /// Per-path value of h(X_T) + sum f h + sum g dK along the solved Y; its
  /// mean equals y0 for a point cloud.
  std::vector<double> pathwise;
  std::vector<std::string> warnings;
  /// Set when a run violates a sanity guard (z cap, a-priori bound).
  std::vector<std::string> flags;

  double horizon() const { return times.back() - times.front(); }
};

/// Backward regression Monte Carlo for the generalized BSDE on [0, T].
BsdeSolution solve_finite_horizon(const NeumannProblem& problem, double horizon, const Vector& x0,
                                  const BsdeConfig& cfg);

/// Plain Monte-Carlo estimate of E[h(X_T) + int f(X) ds + int g(X) dK] for a
/// driver that depends on x only.
Estimate direct_estimator(const NeumannProblem& problem, double horizon, const Vector& x0,
                          const BsdeConfig& cfg);

/// Time-zero regression surface at arbitrary points (`problem` must be the
/// one that was solved). Points outside closure(G)
/// are projected and a warning is appended. No standard errors.
std::vector<double> evaluate_u(const BsdeSolution& solution, const NeumannProblem& problem,
                               const std::vector<Vector>& points,
                               std::vector<std::string>* warnings = nullptr);

/// Standard error of the time-zero surface at x (uniform init only).
double surface_standard_error(const BsdeSolution& solution, const Vector& x);

}  // namespace nlab
