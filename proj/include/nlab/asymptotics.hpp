// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "nlab/ebsde.hpp"
#include "nlab/pde_oracle.hpp"

namespace nlab {

enum class Source { fd, bsde, both };
std::string to_string(Source s);
Source source_from_string(const std::string& s);

/// Reference ergodic pair used to renormalize u.
struct ErgodicReference {
  double lambda = 0.0;
  std::function<double(const Vector&)> v;
  std::string origin;
};

/// lambda and v from the FD oracle (1D).
ErgodicReference fd_reference(const NeumannProblem& problem, const ErgodicFdConfig& cfg = {});

struct HorizonSolver {
  FdConfig fd{};
  BsdeConfig bsde{};
  /// BSDE time step; n_steps = T / step per horizon.
  double bsde_step = 1e-3;
};

struct LambdaRow {
  double T = 0.0;
  double u = 0.0;
  double se = 0.0;
  double ratio = 0.0;  // u / T
  double error = 0.0;  // u / T - lambda
};

struct LambdaSweep {
  std::vector<LambdaRow> rows;
  double slope = 0.0;  // of log|error| against log T
  double r2 = 0.0;
  std::size_t n_fit = 0;
  /// Horizons dropped because |error| was within 2 s.e. of zero.
  std::vector<double> truncated;
};

/// |u(T,x)/T - lambda| over the T grid (max/min >= 8) with its log-log slope.
LambdaSweep lambda_sweep(const NeumannProblem& problem, const std::vector<double>& horizons, const Vector& x,
                         double lambda, Source source, const HorizonSolver& solver = {});

struct ProfileRow {
  Source source = Source::fd;
  double T = 0.0;
  Vector x;
  double u = 0.0;
  double se = 0.0;
  double w = 0.0;
};

struct SpreadRow {
  Source source = Source::fd;
  double T = 0.0;
  double spread = 0.0;  // sup_x w - inf_x w
};

struct ProfileTable {
  std::vector<ProfileRow> rows;
  std::vector<SpreadRow> spread;
};

/// w_T(0, x) = u(T, x) - lambda T - v(x) for every (T, x). `source` = both
/// produces rows for each source.
ProfileTable renormalized_profile(const NeumannProblem& problem, const std::vector<double>& horizons,
                                  const std::vector<Vector>& xs, const ErgodicReference& ref, Source source,
                                  const HorizonSolver& solver = {});

struct WPoint {
  double T = 0.0;
  double w = 0.0;
  double se = 0.0;
};

struct FitConfig {
  double burn_in = 0.5;
  /// |w - L| at or below this is treated as converged.
  double floor = 1e-9;
  /// Points within this many s.e. of L are excluded from the rate fit.
  double noise_z = 3.0;
};

struct LimitFit {
  double L_hat = 0.0;
  double L_se = 0.0;
  double eta_hat = 0.0;  // +inf when w is constant in T
  double r2 = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t n_window = 0;
  bool eta_lower_bound = false;
  /// Joint least-squares fit w = L + C exp(-eta T) over T >= burn_in.
  double L_joint = 0.0;
  double eta_joint = 0.0;
  double C_joint = 0.0;
  std::string note;

  bool eta_infinite() const { return eta_hat == std::numeric_limits<double>::infinity(); }
};

/// Needs >= 5 horizons. L from the largest horizon, eta from the log-linear
/// slope of |w - L| against T.
LimitFit fit_limit_and_rate(const std::vector<WPoint>& w, const FitConfig& cfg = {});

struct AsymptoticsConfig {
  Source source = Source::fd;
  std::vector<double> horizons;
  std::vector<Vector> xs;
  HorizonSolver solver{};
  FitConfig fit{};
  ErgodicFdConfig ergodic_fd{};
  /// Used when the problem is not 1D (no FD reference).
  ErgodicConfig ergodic{};
  /// Guard on max |w| over the T grid.
  double w_bound = 1e3;
  /// x at which L and eta are fitted (index into xs).
  std::size_t fit_index = 0;
};

struct AsymptoticsReport {
  Source source = Source::fd;
  double lambda_hat = 0.0;
  std::vector<double> v_values;  // per xs
  ProfileTable table;
  /// One fit per source (fd first) at xs[fit_index].
  std::vector<std::pair<Source, LimitFit>> fits;
  std::vector<std::string> flags;

  /// CSV with columns source, T, x (or x_1..x_d), u, se_u, w.
  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

AsymptoticsReport run_asymptotics(const NeumannProblem& problem, const AsymptoticsConfig& cfg);

}  // namespace nlab
