// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nlab/asymptotics.hpp"
#include "nlab/bsde.hpp"
#include "nlab/pde_oracle.hpp"

namespace nlab {

using RunningCost = std::function<double(std::span<const double> x, std::size_t control)>;

/// Finite control set U = {0, .., n-1} with drifts R(a), running cost L(x, a),
/// terminal cost h0 and boundary cost g over reflected dynamics.
struct ControlProblem {
  SdeCoefficients coeffs;
  std::vector<Vector> R;
  std::vector<std::string> names;
  RunningCost running_cost;
  ScalarField terminal_cost;
  ScalarField g;
  /// Declared bounds on |L| and |R|.
  double cost_bound = 1e3;
  double drift_bound = 1e3;

  std::size_t n_controls() const { return R.size(); }
  /// Checks U non-empty, dimensions, declared bounds on probe points.
  void validate(std::uint64_t seed = 11) const;
  /// sigma^{-1} R(a)
  Vector girsanov_drift(std::size_t a) const;
  /// max_a |sigma^{-1} R(a)|
  double girsanov_bound() const;

  /// f0(x, z) = min_a { L(x, a) + z sigma^{-1} R(a) }.
  double hamiltonian(std::span<const double> x, std::span<const double> z) const;
  /// Minimizing control, ties to the lowest index.
  std::size_t argmin_selector(std::span<const double> x, std::span<const double> z) const;
  /// f0 as a BSDE driver.
  Driver driver() const;
  /// Neumann problem with driver f0, boundary g and terminal h0.
  NeumannProblem neumann() const;
};

/// Feedback a = policy(t, x).
using Policy = std::function<std::size_t(double t, std::span<const double> x)>;

Policy constant_policy(std::size_t a);
/// a_t = gamma(X_t, u_x(T - t, X_t) sigma) from an FD field of horizon T (1D).
Policy fd_feedback_policy(const ControlProblem& cp, const GridField& field, double horizon);
/// a = gamma(X, v'(X) sigma) from an FD ergodic solution (1D).
Policy fd_stationary_policy(const ControlProblem& cp, const ErgodicFd& ergodic);

enum class CostMode { controlled, girsanov };

struct CostConfig {
  std::size_t n_paths = 10000;
  double step = 1e-3;
  std::uint64_t seed = 3;
  bool boundary_correction = true;
  std::size_t workers = 1;
  CostMode mode = CostMode::controlled;
};

/// J^T(x, a) = E[int L ds + int g dK + h0(X_T)].
Estimate finite_cost(const ControlProblem& cp, const Policy& policy, double horizon, const Vector& x0,
                     const CostConfig& cfg);

struct ErgodicCost {
  double value = 0.0;  // (1/T) E[int_0^T L + int g dK]
  double se = 0.0;
  /// Average over [T/2, T].
  double tail = 0.0;
  double tail_se = 0.0;
};

ErgodicCost ergodic_cost(const ControlProblem& cp, const Policy& policy, double t_max, const Vector& x0,
                         const CostConfig& cfg);

struct ExpansionRow {
  double T = 0.0;
  double J = 0.0;
  double se = 0.0;
  double u_fd = 0.0;
  double renormalized = 0.0;  // J - lambda T - v(x)
};

struct SuboptimalRow {
  std::string policy;
  double T = 0.0;
  double J = 0.0;
  double se = 0.0;
  double u_fd = 0.0;
};

struct ExpansionReport {
  double lambda = 0.0;
  double v_x = 0.0;
  double L_hat = 0.0;
  std::vector<ExpansionRow> rows;
  std::vector<SuboptimalRow> suboptimal;
  /// Sign of the empirical limit of J - lambda T - v(x).
  double empirical_limit = 0.0;
  std::vector<std::string> flags;
};

struct ExpansionConfig {
  CostConfig cost{};
  FdConfig fd{};
  ErgodicFdConfig ergodic_fd{};
  /// Horizons used to fit L on the FD source.
  std::vector<double> fit_horizons{0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 5.0};
  /// Fixed controls evaluated as suboptimal policies.
  std::vector<std::size_t> suboptimal_controls;
  /// Also evaluate "always push toward the nearest boundary".
  bool include_adversarial = true;
};

/// Tabulates J^T(x, a^T) - lambda T - v(x) against the FD limit L and the
/// suboptimal sweep (1D).
ExpansionReport verify_expansion(const ControlProblem& cp, const std::vector<double>& horizons, const Vector& x0,
                                 const ExpansionConfig& cfg);

}  // namespace nlab
