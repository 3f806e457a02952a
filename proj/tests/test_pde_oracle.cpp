// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "nlab/pde_oracle.hpp"

using namespace nlab;

namespace {

NeumannProblem benchmark() {
  return NeumannProblem{make_coefficients([](std::span<const double>, std::span<double> o) { o[0] = 0.0; },
                                          Matrix::Identity(1, 1), ConvexDomain::interval(1.0)),
                        Driver::zero(), [](std::span<const double>) { return 1.0; },
                        [](std::span<const double>) { return 0.0; }};
}

// t/2 + x^2/2 - 1/6 + sum_n 2 (-1)^(n+1) / (n pi)^2 cos(n pi x) exp(-(n pi)^2 t / 2)
double exact(double t, double x) {
  const double pi = 3.14159265358979323846;
  double u = t / 2 + x * x / 2 - 1.0 / 6.0;
  for (int n = 1; n < 200; ++n) {
    const double k = n * pi;
    u += 2.0 * (n % 2 ? 1.0 : -1.0) / (k * k) * std::cos(k * x) * std::exp(-k * k * t / 2);
  }
  return u;
}

}  // namespace

TEST_CASE("benchmark field matches the eigenexpansion") {
  const auto f = solve_parabolic_fd(benchmark(), 2.0);
  for (double x : {-1.0, -0.5, 0.0, 0.3, 1.0}) CHECK(f.value(f.values.size() - 1, x) == doctest::Approx(exact(2.0, x)).epsilon(1e-4));
  CHECK(boundary_residual(f) < 1e-3);
}

TEST_CASE("derivative data match the Neumann condition") {
  const auto f = solve_parabolic_fd(benchmark(), 3.0);
  CHECK(f.slope_right == doctest::Approx(1.0));
  CHECK(f.slope_left == doctest::Approx(-1.0));
  CHECK(f.derivative(f.values.size() - 1, 0.5) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("ergodic limit of the benchmark") {
  const auto e = solve_ergodic_fd(benchmark());
  CHECK(e.lambda == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(e.v_at(0.6) == doctest::Approx(0.18).epsilon(1e-6));
  CHECK(e.v_prime_at(0.6) == doctest::Approx(0.6).epsilon(1e-3));
}

TEST_CASE("flow composition residual is small and shrinks under refinement") {
  const auto p = benchmark();
  const double r0 = flow_composition_check(p, 1.0, 1.0);
  FdConfig fine;
  fine.n_intervals = 800;
  fine.dt = 5e-4;
  const double r1 = flow_composition_check(p, 1.0, 1.0, fine);
  CHECK(r0 <= 5e-4);
  CHECK(r1 * 3.0 <= r0);
}

TEST_CASE("only 1D intervals are supported") {
  auto p = benchmark();
  p.coeffs = make_coefficients([](std::span<const double>, std::span<double> o) { o[0] = o[1] = 0.0; },
                               Matrix::Identity(2, 2), ConvexDomain::ball(2));
  CHECK_THROWS_AS(solve_parabolic_fd(p, 1.0), PreconditionError);
}

TEST_CASE("csv export") {
  FdConfig c;
  c.n_intervals = 4;
  c.dt = 0.1;
  const auto f = solve_parabolic_fd(benchmark(), 0.2, c);
  std::ostringstream os;
  f.write_csv(os);
  CHECK(os.str().rfind("t,x,u\n", 0) == 0);
}
