// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <vector>

#include "nlab/bsde.hpp"

namespace nlab {

/// Finite-difference reference solver in 1D on [-a, a].
struct FdConfig {
  std::size_t n_intervals = 400;
  double dt = 1e-3;
  /// Blow-up retries; each halves dt.
  int max_halvings = 6;
  /// Implicit Euler half steps at the start (damps the CN kink response).
  int rannacher_half_steps = 4;
  /// Store a snapshot every this many steps (0: only the requested times).
  std::size_t record_every = 0;
  /// Extra snapshot times (rounded to the nearest step).
  std::vector<double> record_times;
};

/// u(t, x) on a uniform node grid; snapshots at increasing times.
struct GridField {
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  /// u_x at the end nodes (the Neumann data).
  double slope_left = 0.0;
  double slope_right = 0.0;
  double dt_used = 0.0;

  const std::vector<double>& final() const { return values.back(); }
  double dx() const { return x[1] - x[0]; }
  /// Linear interpolation in x of snapshot k.
  double value(std::size_t k, double xq) const;
  /// Central-difference derivative of snapshot k, interpolated in x.
  double derivative(std::size_t k, double xq) const;
  /// Bilinear in (t, x) over the stored snapshots.
  double at(double t, double xq) const;
  double derivative_at(double t, double xq) const;
  /// Same snapshots holding u_x (central differences, Neumann data at the ends).
  GridField derivative_field() const;
  /// Index of the snapshot closest to t.
  std::size_t nearest(double t) const;
  /// CSV with columns t, x, u.
  void write_csv(std::ostream& os) const;
};

/// Max over both ends of |one-sided second-order u_x - prescribed slope| on
/// the last snapshot.
double boundary_residual(const GridField& field);

/// Crank-Nicolson for u_t = s^2/2 u_xx + b u_x + f(x, u, u_x s), u(0) = h,
/// u_x(a) = g(a), u_x(-a) = -g(-a) (inward normal), nonlinearity by AB2.
GridField solve_parabolic_fd(const NeumannProblem& problem, double horizon, const FdConfig& cfg = {});

/// Same, starting from node values `initial` instead of h.
GridField solve_parabolic_fd_from(const NeumannProblem& problem, const std::vector<double>& initial,
                                  double horizon, const FdConfig& cfg = {});

struct ErgodicFdConfig {
  FdConfig grid{};
  double t_max = 200.0;
  /// Profile change per unit time below which the run counts as stationary.
  double tolerance = 1e-8;
};

struct ErgodicFd {
  double lambda = 0.0;
  std::vector<double> x;
  std::vector<double> v;  // v(0) = 0
  double t_stationary = 0.0;
  double last_change = 0.0;
  /// Max minus min of the lambda estimate over three probe points.
  double lambda_spread = 0.0;
  double slope_left = 0.0;
  double slope_right = 0.0;

  double v_at(double xq) const;
  double v_prime_at(double xq) const;
};

/// Long-time integration from u = 0 until the normalized profile is stationary.
ErgodicFd solve_ergodic_fd(const NeumannProblem& problem, const ErgodicFdConfig& cfg = {});

/// Sup-norm gap between a direct solve to T + S and a solve to T continued
/// for S from u(T).
double flow_composition_check(const NeumannProblem& problem, double t, double s, const FdConfig& cfg = {});

}  // namespace nlab
