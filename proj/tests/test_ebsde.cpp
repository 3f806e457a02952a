// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nlab/ebsde.hpp"

using namespace nlab;

namespace {

NeumannProblem benchmark() {
  return NeumannProblem{make_coefficients([](std::span<const double>, std::span<double> o) { o[0] = 0.0; },
                                          Matrix::Identity(1, 1), ConvexDomain::interval(1.0)),
                        Driver::zero(), [](std::span<const double>) { return 1.0; },
                        [](std::span<const double>) { return 0.0; }};
}

Vector pt(double x) {
  Vector v(1);
  v << x;
  return v;
}

}  // namespace

TEST_CASE("Helmholtz lift satisfies its boundary conditions") {
  const auto g = [](std::span<const double> x) { return 1.0 + 0.5 * x[0]; };
  const auto lift = helmholtz_lift(ConvexDomain::interval(1.0), g, 1.5);
  CHECK(lift.derivative(1.0) == doctest::Approx(1.5));
  CHECK(lift.derivative(-1.0) == doctest::Approx(-0.5));
  CHECK(lift.second(0.3) == doctest::Approx(1.5 * lift.value(0.3)));
}

TEST_CASE("discounted value on the benchmark") {
  DiscountedConfig c;
  c.bsde.n_paths = 4000;
  c.bsde.seed = 9;
  const double alpha = 0.5;
  const auto s = solve_discounted(benchmark(), alpha, c);
  // alpha Y(0) = alpha / (k sinh k), k = sqrt(2 alpha)
  const double k = std::sqrt(2.0 * alpha);
  CHECK(std::abs(alpha * s.value(pt(0.0)) - alpha / (k * std::sinh(k))) < std::max(1e-2, 3.0 * alpha * s.standard_error(pt(0.0))));
}

TEST_CASE("discounted preconditions") {
  DiscountedConfig c;
  CHECK_THROWS_AS(solve_discounted(benchmark(), 0.0, c), ParameterError);
  CHECK_THROWS_AS(solve_discounted(benchmark(), 2.0, c), ParameterError);
  c.horizon = 1.0;
  CHECK_THROWS_AS(solve_discounted(benchmark(), 0.5, c), PreconditionError);
}

TEST_CASE("differencing recovers lambda and the profile") {
  ErgodicConfig c;
  c.bsde.n_paths = 5000;
  c.bsde.n_steps = 1500;
  c.bsde.seed = 4;
  c.n_grid = 11;
  const auto s = solve_ergodic(benchmark(), c);
  CHECK(std::abs(s.lambda - 0.5) <= std::max(2e-2, 3.0 * s.lambda_se));
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const double x = s.points[i](0);
    CHECK(std::abs(s.v[i] - 0.5 * x * x) < 5e-2);
  }
  std::ostringstream os;
  s.write_csv(os);
  CHECK(os.str().rfind("x_1,v\n", 0) == 0);
}

TEST_CASE("grid contains the origin and method names round-trip") {
  const auto g = ergodic_grid(ConvexDomain::interval(1.0), 10);
  bool has_zero = false;
  for (const auto& p : g) has_zero = has_zero || p(0) == 0.0;
  CHECK(has_zero);
  for (auto m : {ErgodicMethod::discounted, ErgodicMethod::differencing}) CHECK(ergodic_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(ergodic_method_from_string("magic"), ParameterError);
}
