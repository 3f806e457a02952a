// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "nlab/parallel.hpp"
#include "nlab/rng.hpp"

namespace nlab {
namespace {

constexpr std::size_t kReduceBlock = 256;

// sigma * dw for small dimensions without allocation.
inline void add_noise(const Matrix& sigma, std::span<const double> dw, std::span<double> x) {
  const std::size_t d = x.size();
  if (d == 1) {
    x[0] += sigma(0, 0) * dw[0];
    return;
  }
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += sigma(i, j) * dw[j];
    x[i] += s;
  }
}

// Fixed-size block partial sums, combined in block order so the result is
// independent of the worker count.
struct BlockSums {
  std::vector<double> sum;
  std::vector<double> sumsq;
};

}  // namespace

void SdeCoefficients::validate() const {
  if (!drift) throw ParameterError("sde: drift is empty");
  const auto d = static_cast<Eigen::Index>(domain.dim());
  if (sigma.rows() != d || sigma.cols() != d) {
    throw ParameterError("sde: sigma must be a square matrix matching the domain dimension");
  }
  if (!sigma.allFinite()) throw ParameterError("sde: sigma has non-finite entries");
  if (std::abs(sigma.determinant()) <= 1e-12) throw ParameterError("sde: sigma is not invertible");
  Eigen::JacobiSVD<Matrix> svd(sigma);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 0.0) || !std::isfinite(sv(0) / sv(sv.size() - 1))) {
    throw ParameterError("sde: sigma is singular");
  }
}

double SdeCoefficients::noise_scale() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma * sigma.transpose());
  return std::sqrt(es.eigenvalues().maxCoeff());
}

SdeCoefficients make_coefficients(VectorField drift, Matrix sigma, ConvexDomain domain,
                                  double drift_lipschitz) {
  SdeCoefficients c{std::move(drift), std::move(sigma), std::move(domain), drift_lipschitz};
  c.validate();
  return c;
}

std::vector<double> uniform_grid(double horizon, std::size_t n_steps, double t0) {
  if (!(horizon > 0.0) || n_steps == 0) throw ParameterError("uniform_grid: need horizon > 0 and n_steps >= 1");
  std::vector<double> g(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    g[k] = t0 + horizon * static_cast<double>(k) / static_cast<double>(n_steps);
  }
  return g;
}

void validate_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw ParameterError("time grid needs at least two points");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw ParameterError("time grid must be strictly increasing");
  }
}

void PathBundle::write_csv(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "path_id,t";
  for (std::size_t j = 0; j < dim; ++j) os << ",x_" << (j + 1);
  os << ",K\n";
  for (std::size_t p = 0; p < n_paths; ++p) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      os << p << ',' << times[k];
      for (double v : state(k, p)) os << ',' << v;
      os << ',' << K(k, p) << '\n';
    }
  }
  os.precision(old_precision);
}

void brownian_increment(std::uint64_t seed, std::uint64_t path, std::size_t step, double dt,
                        std::span<double> out) {
  const PathStream stream(seed, path, Substream::brownian);
  const double s = std::sqrt(dt);
  const std::uint64_t base = static_cast<std::uint64_t>(step) * out.size();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = s * stream.normal_at(base + j);
}

ReflectedEuler::ReflectedEuler(const SdeCoefficients& coeffs, bool boundary_correction,
                               const std::vector<double>& grid)
    : coeffs_(coeffs) {
  validate_grid(grid);
  dt_.resize(grid.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) dt_[k] = grid[k + 1] - grid[k];
  if (!boundary_correction) {
    domains_.push_back(coeffs_.domain);
    return;
  }
  corrected_ = true;
  const double scale = kBoundaryShiftBeta * coeffs_.noise_scale();
  const bool uniform = std::all_of(dt_.begin(), dt_.end(), [&](double h) {
    return std::abs(h - dt_[0]) <= 1e-12 * dt_[0];
  });
  if (uniform) {
    domains_.push_back(coeffs_.domain.shrunk(scale * std::sqrt(dt_[0])));
  } else {
    for (double h : dt_) domains_.push_back(coeffs_.domain.shrunk(scale * std::sqrt(h)));
  }
}

const ConvexDomain& ReflectedEuler::step_domain(std::size_t k) const {
  return domains_.size() == 1 ? domains_[0] : domains_[k];
}

void ReflectedEuler::to_true_boundary(std::span<double> x) const {
  if (corrected_) coeffs_.domain.radial_to_boundary(x);
}

double ReflectedEuler::step(std::span<double> x, std::size_t k, std::span<const double> dw,
                            std::span<const double> extra_drift) const {
  const std::size_t d = x.size();
  const double h = dt_[k];
  double b[8];
  std::vector<double> heap;
  std::span<double> drift;
  if (d <= 8) {
    drift = std::span<double>(b, d);
  } else {
    heap.resize(d);
    drift = heap;
  }
  coeffs_.drift(x, drift);
  for (std::size_t i = 0; i < d; ++i) {
    x[i] += (drift[i] + (extra_drift.empty() ? 0.0 : extra_drift[i])) * h;
  }
  add_noise(coeffs_.sigma, dw, x);
  return step_domain(k).project_in_place(x);
}

PathBundle simulate_reflected(const SdeCoefficients& coeffs, const Vector& x0,
                              const std::vector<double>& grid, const SimulationConfig& cfg) {
  check_finite(as_span(x0), "simulate_reflected");
  if (static_cast<std::size_t>(x0.size()) != coeffs.dim()) {
    throw ParameterError("simulate_reflected: x0 dimension mismatch");
  }
  std::vector<double> initial(cfg.n_paths * coeffs.dim());
  for (std::size_t p = 0; p < cfg.n_paths; ++p) {
    std::copy(x0.data(), x0.data() + x0.size(), initial.begin() + static_cast<std::ptrdiff_t>(p * coeffs.dim()));
  }
  return simulate_reflected_from(coeffs, initial, grid, cfg);
}

PathBundle simulate_reflected_from(const SdeCoefficients& coeffs, std::span<const double> initial,
                                   const std::vector<double>& grid, const SimulationConfig& cfg) {
  coeffs.validate();
  validate_grid(grid);
  const std::size_t d = coeffs.dim();
  const std::size_t m = cfg.n_paths;
  if (m == 0) throw ParameterError("simulate_reflected: n_paths must be positive");
  if (initial.size() != m * d) throw ParameterError("simulate_reflected: initial states size mismatch");
  check_finite(initial, "simulate_reflected");
  for (std::size_t p = 0; p < m; ++p) {
    if (!coeffs.domain.contains(initial.subspan(p * d, d))) {
      throw PreconditionError("simulate_reflected: x0 is outside closure(G)");
    }
  }

  const ReflectedEuler stepper(coeffs, cfg.boundary_correction, grid);
  const std::size_t nt = grid.size();

  PathBundle out;
  out.times = grid;
  out.dim = d;
  out.n_paths = m;
  out.scheme = Scheme::projected;
  out.seed = cfg.seed;
  out.states.resize(nt * m * d);
  out.local_time.assign(nt * m, 0.0);

  parallel_for(m, cfg.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(d), dw(d);
    for (std::size_t p = begin; p < end; ++p) {
      PathStream stream(cfg.seed, p, Substream::brownian);
      std::copy(initial.begin() + static_cast<std::ptrdiff_t>(p * d),
                initial.begin() + static_cast<std::ptrdiff_t>((p + 1) * d), x.begin());
      std::copy(x.begin(), x.end(), out.states.begin() + static_cast<std::ptrdiff_t>(p * d));
      double k_acc = 0.0;
      for (std::size_t k = 0; k + 1 < nt; ++k) {
        const double s = std::sqrt(grid[k + 1] - grid[k]);
        for (std::size_t j = 0; j < d; ++j) dw[j] = s * stream.normal();
        k_acc += stepper.step(x, k, dw);
        std::copy(x.begin(), x.end(),
                  out.states.begin() + static_cast<std::ptrdiff_t>(((k + 1) * m + p) * d));
        out.local_time[(k + 1) * m + p] = k_acc;
      }
    }
  });
  return out;
}

PathBundle simulate_penalized(const DriftExtension& drift, const Matrix& sigma, const Vector& x0,
                              int n, const std::vector<double>& grid, const SimulationConfig& cfg) {
  if (n < 1) throw ParameterError("simulate_penalized: n must be >= 1");
  validate_grid(grid);
  check_finite(as_span(x0), "simulate_penalized");
  const std::size_t d = drift.domain().dim();
  if (static_cast<std::size_t>(x0.size()) != d || sigma.rows() != static_cast<Eigen::Index>(d)) {
    throw ParameterError("simulate_penalized: dimension mismatch");
  }
  if (cfg.n_paths == 0) throw ParameterError("simulate_penalized: n_paths must be positive");

  const std::size_t m = cfg.n_paths;
  const std::size_t nt = grid.size();
  PathBundle out;
  out.times = grid;
  out.dim = d;
  out.n_paths = m;
  out.scheme = Scheme::penalized;
  out.seed = cfg.seed;
  out.states.resize(nt * m * d);
  out.local_time.assign(nt * m, 0.0);

  double max_h = 0.0;
  for (std::size_t k = 0; k + 1 < nt; ++k) max_h = std::max(max_h, grid[k + 1] - grid[k]);
  const bool stiff = 2.0 * n * max_h >= 1.0;
  bool implicit = cfg.penalized_step == PenalizedStep::semi_implicit;
  if (stiff) {
    if (cfg.penalized_step == PenalizedStep::automatic) {
      implicit = true;
      out.diagnostics.push_back("stiff penalization (2nh >= 1): switched to semi-implicit step");
    } else if (cfg.penalized_step == PenalizedStep::explicit_euler) {
      out.diagnostics.push_back("stiff penalization (2nh >= 1): explicit step is unstable");
    }
  }

  const ConvexDomain& domain = drift.domain();
  parallel_for(m, cfg.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(d), y(d), b(d), dw(d), p(d);
    for (std::size_t path = begin; path < end; ++path) {
      PathStream stream(cfg.seed, path, Substream::brownian);
      for (std::size_t j = 0; j < d; ++j) x[j] = x0(static_cast<Eigen::Index>(j));
      std::copy(x.begin(), x.end(), out.states.begin() + static_cast<std::ptrdiff_t>(path * d));
      double k_acc = 0.0;
      for (std::size_t k = 0; k + 1 < nt; ++k) {
        const double h = grid[k + 1] - grid[k];
        const double s = std::sqrt(h);
        for (std::size_t j = 0; j < d; ++j) dw[j] = s * stream.normal();
        drift.extended(x, b);
        if (implicit) {
          // resolvent of x -> x + 2nh (x - Pi x): stay on the ray through Pi(y)
          for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + b[j] * h;
          add_noise(sigma, dw, y);
          std::copy(y.begin(), y.end(), p.begin());
          domain.project_in_place(p);
          const double c = 2.0 * n * h;
          for (std::size_t j = 0; j < d; ++j) x[j] = p[j] + (y[j] - p[j]) / (1.0 + c);
          k_acc += 2.0 * n * domain.distance(x) * h;
        } else {
          std::copy(x.begin(), x.end(), p.begin());
          const double dist = domain.project_in_place(p);
          k_acc += 2.0 * n * dist * h;
          for (std::size_t j = 0; j < d; ++j) x[j] += (b[j] - 2.0 * n * (x[j] - p[j])) * h;
          add_noise(sigma, dw, x);
        }
        std::copy(x.begin(), x.end(),
                  out.states.begin() + static_cast<std::ptrdiff_t>(((k + 1) * m + path) * d));
        out.local_time[(k + 1) * m + path] = k_acc;
      }
    }
  });
  return out;
}

PathBundle simulate_perturbed(const PerturbedSde& sde, const Vector& x0,
                              const std::vector<double>& grid, const SimulationConfig& cfg) {
  validate_grid(grid);
  check_finite(as_span(x0), "simulate_perturbed");
  const std::size_t d = sde.dim();
  if (!sde.drift || static_cast<std::size_t>(x0.size()) != d || sde.sigma.cols() != sde.sigma.rows()) {
    throw ParameterError("simulate_perturbed: inconsistent coefficients");
  }
  if (cfg.n_paths == 0) throw ParameterError("simulate_perturbed: n_paths must be positive");
  const std::size_t m = cfg.n_paths;
  const std::size_t nt = grid.size();
  PathBundle out;
  out.times = grid;
  out.dim = d;
  out.n_paths = m;
  out.scheme = Scheme::unconstrained;
  out.seed = cfg.seed;
  out.states.resize(nt * m * d);
  out.local_time.assign(nt * m, 0.0);
  parallel_for(m, cfg.workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> x(d), b(d), dw(d);
    for (std::size_t p = begin; p < end; ++p) {
      PathStream stream(cfg.seed, p, Substream::brownian);
      for (std::size_t j = 0; j < d; ++j) x[j] = x0(static_cast<Eigen::Index>(j));
      std::copy(x.begin(), x.end(), out.states.begin() + static_cast<std::ptrdiff_t>(p * d));
      for (std::size_t k = 0; k + 1 < nt; ++k) {
        const double h = grid[k + 1] - grid[k];
        const double s = std::sqrt(h);
        for (std::size_t j = 0; j < d; ++j) dw[j] = s * stream.normal();
        sde.drift(x, b);
        for (std::size_t j = 0; j < d; ++j) x[j] += b[j] * h;
        add_noise(sde.sigma, dw, x);
        std::copy(x.begin(), x.end(),
                  out.states.begin() + static_cast<std::ptrdiff_t>(((k + 1) * m + p) * d));
      }
    }
  });
  return out;
}

MomentEstimate moment_at(const PathBundle& bundle, int p, std::size_t k) {
  if (p <= 0 || p % 2 != 0) throw ParameterError("moment_estimate: p must be an even positive integer");
  if (bundle.n_paths == 0) throw ParameterError("moment_estimate: empty bundle");
  std::vector<double> vals(bundle.n_paths);
  for (std::size_t i = 0; i < bundle.n_paths; ++i) {
    double s = 0.0;
    for (double v : bundle.state(k, i)) s += v * v;
    vals[i] = std::pow(s, p / 2);
  }
  const auto e = sample_estimate(vals);
  return {e.value, e.se, bundle.times[k]};
}

MomentEstimate moment_estimate(const PathBundle& bundle, int p) {
  if (p != 2 && p != 4) throw ParameterError("moment_estimate: p must be 2 or 4");
  MomentEstimate best{-1.0, 0.0, 0.0};
  for (std::size_t k = 0; k < bundle.n_times(); ++k) {
    const auto e = moment_at(bundle, p, k);
    if (e.value > best.value) best = e;
  }
  return best;
}

CouplingResult coupling_gap(const PerturbedSde& sde, const BoundedFunction& test, const Vector& x,
                            const Vector& y, const std::vector<double>& grid,
                            const SimulationConfig& cfg) {
  if (!test.f || !std::isfinite(test.sup_norm) || test.sup_norm < 0.0) {
    throw ParameterError("coupling_gap: test function must be bounded (finite sup-norm metadata)");
  }
  validate_grid(grid);
  check_finite(as_span(x), "coupling_gap");
  check_finite(as_span(y), "coupling_gap");
  const std::size_t d = sde.dim();
  if (static_cast<std::size_t>(x.size()) != d || static_cast<std::size_t>(y.size()) != d) {
    throw ParameterError("coupling_gap: dimension mismatch");
  }
  const std::size_t m = cfg.n_paths;
  const std::size_t nt = grid.size();
  const std::size_t n_blocks = (m + kReduceBlock - 1) / kReduceBlock;
  std::vector<BlockSums> blocks(n_blocks, BlockSums{std::vector<double>(nt, 0.0), std::vector<double>(nt, 0.0)});

  parallel_for(n_blocks, cfg.workers, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> xa(d), xb(d), ba(d), bb(d), dw(d);
    for (std::size_t blk = b0; blk < b1; ++blk) {
      auto& acc = blocks[blk];
      const std::size_t p_end = std::min(m, (blk + 1) * kReduceBlock);
      for (std::size_t p = blk * kReduceBlock; p < p_end; ++p) {
        PathStream stream(cfg.seed, p, Substream::brownian);
        for (std::size_t j = 0; j < d; ++j) {
          xa[j] = x(static_cast<Eigen::Index>(j));
          xb[j] = y(static_cast<Eigen::Index>(j));
        }
        auto record = [&](std::size_t k) {
          const double diff = test.f(xa) - test.f(xb);
          acc.sum[k] += diff;
          acc.sumsq[k] += diff * diff;
        };
        record(0);
        for (std::size_t k = 0; k + 1 < nt; ++k) {
          const double h = grid[k + 1] - grid[k];
          const double s = std::sqrt(h);
          for (std::size_t j = 0; j < d; ++j) dw[j] = s * stream.normal();
          sde.drift(xa, ba);
          sde.drift(xb, bb);
          for (std::size_t j = 0; j < d; ++j) {
            xa[j] += ba[j] * h;
            xb[j] += bb[j] * h;
          }
          add_noise(sde.sigma, dw, xa);
          add_noise(sde.sigma, dw, xb);
          record(k + 1);
        }
      }
    }
  });

  CouplingResult out;
  out.times = grid;
  out.gap.resize(nt);
  out.se.resize(nt);
  const double mm = static_cast<double>(m);
  for (std::size_t k = 0; k < nt; ++k) {
    double s = 0.0, ss = 0.0;
    for (const auto& blk : blocks) {
      s += blk.sum[k];
      ss += blk.sumsq[k];
    }
    const double mean = s / mm;
    const double var = m > 1 ? std::max(0.0, (ss - mm * mean * mean) / (mm - 1.0)) : 0.0;
    out.gap[k] = std::abs(mean);
    out.se[k] = std::sqrt(var / mm);
  }
  return out;
}

DecayFit fit_decay_rate(const CouplingResult& gaps, double t_min, double z) {
  std::vector<double> ts, ls;
  for (std::size_t k = 0; k < gaps.times.size(); ++k) {
    if (gaps.times[k] < t_min) continue;
    if (!(gaps.gap[k] > z * gaps.se[k]) || !(gaps.gap[k] > 0.0)) continue;
    ts.push_back(gaps.times[k]);
    ls.push_back(std::log(gaps.gap[k]));
  }
  DecayFit fit;
  fit.n_points = ts.size();
  if (ts.size() < 2) return fit;
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= n;
  ml /= n;
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - mt) * (ts[i] - mt);
    stl += (ts[i] - mt) * (ls[i] - ml);
    sll += (ls[i] - ml) * (ls[i] - ml);
  }
  const double slope = stl / stt;
  fit.rate = -slope;
  fit.intercept = ml - slope * mt;
  fit.r2 = sll > 0.0 ? (stl * stl) / (stt * sll) : 1.0;
  return fit;
}

std::vector<PenalizationRow> penalization_sweep(const DriftExtension& drift, const Matrix& sigma,
                                                const Vector& x0, const std::vector<int>& ns,
                                                const std::vector<double>& grid,
                                                const SimulationConfig& cfg) {
  validate_grid(grid);
  const ConvexDomain& domain = drift.domain();
  const std::size_t d = domain.dim();
  if (static_cast<std::size_t>(x0.size()) != d) throw ParameterError("penalization_sweep: dimension mismatch");
  if (!domain.contains(as_span(x0))) throw PreconditionError("penalization_sweep: x0 outside closure(G)");
  for (int n : ns) {
    if (n < 1) throw ParameterError("penalization_sweep: n must be >= 1");
  }
  const std::size_t m = cfg.n_paths;
  const std::size_t nn = ns.size();
  const std::size_t nt = grid.size();
  const std::size_t n_blocks = (m + kReduceBlock - 1) / kReduceBlock;
  std::vector<BlockSums> blocks(n_blocks, BlockSums{std::vector<double>(nn, 0.0), std::vector<double>(nn, 0.0)});

  double max_h = 0.0;
  for (std::size_t k = 0; k + 1 < nt; ++k) max_h = std::max(max_h, grid[k + 1] - grid[k]);

  parallel_for(n_blocks, cfg.workers, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> xr(d), b(d), dw(d), p(d), y(d);
    std::vector<std::vector<double>> xn(nn, std::vector<double>(d));
    std::vector<double> sup(nn);
    for (std::size_t blk = b0; blk < b1; ++blk) {
      const std::size_t p_end = std::min(m, (blk + 1) * kReduceBlock);
      for (std::size_t path = blk * kReduceBlock; path < p_end; ++path) {
        PathStream stream(cfg.seed, path, Substream::brownian);
        for (std::size_t j = 0; j < d; ++j) xr[j] = x0(static_cast<Eigen::Index>(j));
        for (auto& v : xn) v = xr;
        std::fill(sup.begin(), sup.end(), 0.0);
        for (std::size_t k = 0; k + 1 < nt; ++k) {
          const double h = grid[k + 1] - grid[k];
          const double s = std::sqrt(h);
          for (std::size_t j = 0; j < d; ++j) dw[j] = s * stream.normal();
          // projected reference path
          drift.base(xr, b);
          for (std::size_t j = 0; j < d; ++j) xr[j] += b[j] * h;
          add_noise(sigma, dw, xr);
          domain.project_in_place(xr);
          for (std::size_t q = 0; q < nn; ++q) {
            auto& x = xn[q];
            const double n = ns[q];
            const bool implicit = cfg.penalized_step == PenalizedStep::semi_implicit ||
                                  (cfg.penalized_step == PenalizedStep::automatic && 2.0 * n * max_h >= 1.0);
            drift.extended(x, b);
            if (implicit) {
              for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + b[j] * h;
              add_noise(sigma, dw, y);
              p = y;
              domain.project_in_place(p);
              const double c = 2.0 * n * h;
              for (std::size_t j = 0; j < d; ++j) x[j] = p[j] + (y[j] - p[j]) / (1.0 + c);
            } else {
              p = x;
              domain.project_in_place(p);
              for (std::size_t j = 0; j < d; ++j) x[j] += (b[j] - 2.0 * n * (x[j] - p[j])) * h;
              add_noise(sigma, dw, x);
            }
            double e2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) e2 += (x[j] - xr[j]) * (x[j] - xr[j]);
            sup[q] = std::max(sup[q], e2);
          }
        }
        for (std::size_t q = 0; q < nn; ++q) {
          blocks[blk].sum[q] += sup[q];
          blocks[blk].sumsq[q] += sup[q] * sup[q];
        }
      }
    }
  });

  std::vector<PenalizationRow> rows(nn);
  const double mm = static_cast<double>(m);
  for (std::size_t q = 0; q < nn; ++q) {
    double s = 0.0, ss = 0.0;
    for (const auto& blk : blocks) {
      s += blk.sum[q];
      ss += blk.sumsq[q];
    }
    const double mean = s / mm;
    const double var = m > 1 ? std::max(0.0, (ss - mm * mean * mean) / (mm - 1.0)) : 0.0;
    rows[q] = {ns[q], mean, std::sqrt(var / mm)};
  }
  return rows;
}

bool decreasing_with_tolerance(const std::vector<PenalizationRow>& rows, double z) {
  int inversions = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mean_sup_sq < rows[i - 1].mean_sup_sq) continue;
    const double combined = std::hypot(rows[i].se, rows[i - 1].se);
    if (rows[i].mean_sup_sq - rows[i - 1].mean_sup_sq > z * combined) return false;
    ++inversions;
  }
  return inversions <= 1;
}

}  // namespace nlab
