// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nlab/common.hpp"
#include "nlab/geometry.hpp"

namespace nlab {

/// Continuity-correction constant -zeta(1/2)/sqrt(2 pi) for discretely
/// monitored Brownian motion.
inline constexpr double kBoundaryShiftBeta = 0.5825971579390107;

/// Coefficients of the reflected SDE dX = b(X)dt + sigma dW + grad phi(X) dK.
struct SdeCoefficients {
  VectorField drift;
  Matrix sigma;  // constant, invertible
  ConvexDomain domain;
  double drift_lipschitz = 0.0;

  std::size_t dim() const { return domain.dim(); }
  /// Throws ParameterError unless sigma is square, finite and invertible.
  void validate() const;
  /// sqrt of the largest eigenvalue of sigma sigma^T.
  double noise_scale() const;
};

SdeCoefficients make_coefficients(VectorField drift, Matrix sigma, ConvexDomain domain,
                                  double drift_lipschitz = 0.0);

/// SDE on R^d without reflection, dX = b(X)dt + sigma dW.
struct PerturbedSde {
  VectorField drift;
  Matrix sigma;
  std::size_t dim() const { return static_cast<std::size_t>(sigma.rows()); }
};

std::vector<double> uniform_grid(double horizon, std::size_t n_steps, double t0 = 0.0);
/// Throws ParameterError unless the grid has >= 2 strictly increasing points.
void validate_grid(const std::vector<double>& grid);

enum class PenalizedStep { automatic, explicit_euler, semi_implicit };

struct SimulationConfig {
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  /// Project onto G shrunk by beta * noise_scale * sqrt(h); removes the
  /// O(sqrt h) deficit of the projected scheme's local time.
  bool boundary_correction = false;
  std::size_t workers = 1;
  PenalizedStep penalized_step = PenalizedStep::automatic;
};

enum class Scheme { projected, penalized, unconstrained };

/// Simulated trajectories. Storage is step-major: state (k, path) starts at
/// ((k * n_paths) + path) * dim.
struct PathBundle {
  std::vector<double> times;
  std::size_t dim = 0;
  std::size_t n_paths = 0;
  Scheme scheme = Scheme::projected;
  std::uint64_t seed = 0;
  std::vector<double> states;
  /// Cumulative local time K (penalized: integral of 2n dist(X, G) ds).
  std::vector<double> local_time;
  std::vector<std::string> diagnostics;

  std::size_t n_times() const { return times.size(); }
  std::span<const double> state(std::size_t k, std::size_t path) const {
    return {states.data() + (k * n_paths + path) * dim, dim};
  }
  double K(std::size_t k, std::size_t path) const { return local_time[k * n_paths + path]; }
  /// CSV with columns path_id, t, x_1..x_d, K.
  void write_csv(std::ostream& os) const;
};

/// Standard Brownian increment of `path` over step k of length dt, exactly as
/// used by the simulators for the same seed.
void brownian_increment(std::uint64_t seed, std::uint64_t path, std::size_t step, double dt,
                        std::span<double> out);

/// One Euler-with-projection step of the reflected SDE.
class ReflectedEuler {
 public:
  /// `grid` fixes the step sizes used for the boundary shift.
  ReflectedEuler(const SdeCoefficients& coeffs, bool boundary_correction,
                 const std::vector<double>& grid);

  /// Advances x over step k with Brownian increment dw and an additional drift
  /// (may be empty). Returns the local-time increment |X^ - Pi(X^)|.
  double step(std::span<double> x, std::size_t k, std::span<const double> dw,
              std::span<const double> extra_drift = {}) const;
  /// Domain onto which step k projects.
  const ConvexDomain& step_domain(std::size_t k) const;
  /// Maps a point pushed onto the (possibly shrunk) step boundary to the
  /// matching point of the true boundary, where boundary data live.
  void to_true_boundary(std::span<double> x) const;
  const SdeCoefficients& coefficients() const { return coeffs_; }

 private:
  SdeCoefficients coeffs_;
  std::vector<double> dt_;
  std::vector<ConvexDomain> domains_;  // one per step, or a single shared one
  bool corrected_ = false;
};

PathBundle simulate_reflected(const SdeCoefficients& coeffs, const Vector& x0,
                              const std::vector<double>& grid, const SimulationConfig& cfg);

/// Same scheme, one starting point per path (n_paths * dim values, each in
/// closure(G)).
PathBundle simulate_reflected_from(const SdeCoefficients& coeffs, std::span<const double> initial,
                                   const std::vector<double>& grid, const SimulationConfig& cfg);

PathBundle simulate_penalized(const DriftExtension& drift, const Matrix& sigma, const Vector& x0,
                              int n, const std::vector<double>& grid, const SimulationConfig& cfg);

PathBundle simulate_perturbed(const PerturbedSde& sde, const Vector& x0,
                              const std::vector<double>& grid, const SimulationConfig& cfg);

struct MomentEstimate {
  double value = 0.0;
  double se = 0.0;
  double time = 0.0;  // grid time attaining the maximum
};

/// Empirical E|X_t|^p at grid index k.
MomentEstimate moment_at(const PathBundle& bundle, int p, std::size_t k);
/// Maximum over grid times of the empirical p-th moment, p in {2, 4}.
MomentEstimate moment_estimate(const PathBundle& bundle, int p);

struct BoundedFunction {
  ScalarField f;
  double sup_norm = 1.0;
};

struct CouplingResult {
  std::vector<double> times;
  std::vector<double> gap;
  std::vector<double> se;
};

/// |P_t[phi](x) - P_t[phi](y)| per grid time. Both starting points are driven
/// by the same Brownian paths (synchronous coupling), so x == y gives 0.
CouplingResult coupling_gap(const PerturbedSde& sde, const BoundedFunction& test, const Vector& x,
                            const Vector& y, const std::vector<double>& grid,
                            const SimulationConfig& cfg);

struct DecayFit {
  double rate = 0.0;  // -slope of log(gap) against t
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n_points = 0;
};

/// Least-squares fit of log(gap) vs t over times >= t_min whose gap exceeds
/// `z` standard errors.
DecayFit fit_decay_rate(const CouplingResult& gaps, double t_min, double z = 3.0);

struct PenalizationRow {
  int n = 0;
  double mean_sup_sq = 0.0;  // E sup_t |X^n_t - X_t|^2
  double se = 0.0;
};

/// Common-random-number comparison of penalized paths with the projected
/// scheme on the same noise.
std::vector<PenalizationRow> penalization_sweep(const DriftExtension& drift, const Matrix& sigma,
                                                const Vector& x0, const std::vector<int>& ns,
                                                const std::vector<double>& grid,
                                                const SimulationConfig& cfg);

/// True when the sequence strictly decreases, allowing at most one inversion
/// that lies within `z` combined standard errors.
bool decreasing_with_tolerance(const std::vector<PenalizationRow>& rows, double z = 2.0);

}  // namespace nlab
