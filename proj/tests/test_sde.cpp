// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "nlab/sde.hpp"

using namespace nlab;

namespace {

const VectorField kZero = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
const VectorField kOu = [](std::span<const double> x, std::span<double> o) { o[0] = -x[0]; };

Vector pt(double x) {
  Vector v(1);
  v << x;
  return v;
}

}  // namespace

TEST_CASE("reflected paths stay in the domain and K only grows at the boundary") {
  const auto coeffs = make_coefficients(kZero, Matrix::Identity(1, 1), ConvexDomain::interval(1.0));
  SimulationConfig sc;
  sc.n_paths = 200;
  sc.seed = 3;
  const auto grid = uniform_grid(1.0, 500);
  const auto b = simulate_reflected(coeffs, pt(0.9), grid, sc);
  bool inside = true, monotone = true, support = true;
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    CHECK(b.K(0, p) == 0.0);
    for (std::size_t k = 1; k < b.n_times(); ++k) {
      inside = inside && coeffs.domain.contains(b.state(k, p), 1e-12);
      monotone = monotone && b.K(k, p) >= b.K(k - 1, p);
      // K grows only on steps that end on the boundary.
      if (b.K(k, p) > b.K(k - 1, p)) support = support && std::abs(std::abs(b.state(k, p)[0]) - 1.0) < 1e-12;
    }
  }
  CHECK(inside);
  CHECK(monotone);
  CHECK(support);
}

TEST_CASE("zero noise interior start never touches the boundary") {
  const auto coeffs = make_coefficients(kZero, Matrix::Identity(1, 1) * 1e-8, ConvexDomain::interval(1.0));
  SimulationConfig sc;
  sc.n_paths = 10;
  const auto b = simulate_reflected(coeffs, pt(0.3), uniform_grid(1.0, 100), sc);
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    CHECK(b.K(b.n_times() - 1, p) == 0.0);
    CHECK(b.state(b.n_times() - 1, p)[0] == doctest::Approx(0.3).epsilon(1e-6));
  }
}

TEST_CASE("paths do not depend on the worker count") {
  const auto coeffs = make_coefficients(kZero, Matrix::Identity(1, 1), ConvexDomain::interval(1.0));
  SimulationConfig sc;
  sc.n_paths = 300;
  sc.seed = 11;
  const auto grid = uniform_grid(0.5, 100);
  const auto a = simulate_reflected(coeffs, pt(0.0), grid, sc);
  sc.workers = 3;
  const auto b = simulate_reflected(coeffs, pt(0.0), grid, sc);
  CHECK(a.states == b.states);
  CHECK(a.local_time == b.local_time);
}

TEST_CASE("preconditions") {
  const auto coeffs = make_coefficients(kZero, Matrix::Identity(1, 1), ConvexDomain::interval(1.0));
  SimulationConfig sc;
  CHECK_THROWS_AS(simulate_reflected(coeffs, pt(1.5), uniform_grid(1.0, 10), sc), PreconditionError);
  CHECK_THROWS_AS(simulate_reflected(coeffs, pt(0.0), {0.0, 0.5, 0.5}, sc), ParameterError);
  CHECK_THROWS_AS(make_coefficients(kZero, Matrix::Zero(1, 1), ConvexDomain::interval(1.0)), ParameterError);
  const auto b = simulate_reflected(coeffs, pt(0.0), uniform_grid(1.0, 10), sc);
  CHECK_THROWS_AS(moment_estimate(b, 3), ParameterError);
}

TEST_CASE("OU variance at t = 1") {
  SimulationConfig sc;
  sc.n_paths = 20000;
  sc.seed = 5;
  const auto b = simulate_perturbed(PerturbedSde{kOu, Matrix::Identity(1, 1)}, pt(0.0), uniform_grid(1.0, 500), sc);
  const auto m = moment_at(b, 2, b.n_times() - 1);
  CHECK(std::abs(m.value - (1.0 - std::exp(-2.0)) / 2.0) < 3.0 * m.se);
}

TEST_CASE("deterministic path moment") {
  const auto coeffs = make_coefficients(kZero, Matrix::Identity(1, 1) * 1e-9, ConvexDomain::interval(1.0));
  SimulationConfig sc;
  sc.n_paths = 5;
  const auto b = simulate_reflected(coeffs, pt(0.5), uniform_grid(1.0, 50), sc);
  CHECK(moment_estimate(b, 2).value <= 0.25 + 1e-9);
}

TEST_CASE("penalized path without noise stays put inside") {
  const auto ext = extend_drift(kZero, ConvexDomain::interval(1.0), 0.0);
  SimulationConfig sc;
  sc.n_paths = 3;
  const auto b = simulate_penalized(ext, Matrix::Identity(1, 1) * 1e-12, pt(0.2), 64, uniform_grid(1.0, 100), sc);
  CHECK(b.state(b.n_times() - 1, 0)[0] == doctest::Approx(0.2));
  CHECK(b.K(b.n_times() - 1, 0) == 0.0);
}

TEST_CASE("stiff penalization is diagnosed") {
  const auto ext = extend_drift(kZero, ConvexDomain::interval(1.0), 0.0);
  SimulationConfig sc;
  sc.n_paths = 10;
  const auto b = simulate_penalized(ext, Matrix::Identity(1, 1), pt(0.0), 1000, uniform_grid(1.0, 100), sc);
  REQUIRE(!b.diagnostics.empty());
  CHECK(b.diagnostics.front().find("stiff") != std::string::npos);
  for (double v : b.states) CHECK(std::isfinite(v));
}

TEST_CASE("coupling gap vanishes for identical starts") {
  const BoundedFunction ind{[](std::span<const double> x) { return x[0] > 0.0 ? 1.0 : 0.0; }, 1.0};
  SimulationConfig sc;
  sc.n_paths = 1000;
  const auto r = coupling_gap(PerturbedSde{kOu, Matrix::Identity(1, 1)}, ind, pt(0.4), pt(0.4), uniform_grid(1.0, 50), sc);
  for (double g : r.gap) CHECK(g == 0.0);
  const BoundedFunction unbounded{ind.f, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(coupling_gap(PerturbedSde{kOu, Matrix::Identity(1, 1)}, unbounded, pt(0.4), pt(0.4), uniform_grid(1.0, 5), sc),
                  ParameterError);
}

TEST_CASE("penalization error decreases in n") {
  const auto ext = extend_drift(kZero, ConvexDomain::interval(1.0), 0.0);
  SimulationConfig sc;
  sc.n_paths = 500;
  sc.seed = 2;
  const auto rows = penalization_sweep(ext, Matrix::Identity(1, 1), pt(0.0), {8, 32, 128}, uniform_grid(1.0, 1000), sc);
  CHECK(decreasing_with_tolerance(rows));
}

TEST_CASE("decreasing check tolerates one noisy inversion") {
  std::vector<PenalizationRow> rows{{8, 1.0, 0.01}, {16, 0.5, 0.01}, {32, 0.51, 0.01}, {64, 0.2, 0.01}};
  CHECK(decreasing_with_tolerance(rows));
  rows[2].mean_sup_sq = 0.9;
  CHECK_FALSE(decreasing_with_tolerance(rows));
}
