// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "nlab/control.hpp"

using namespace nlab;

namespace {

Vector pt(double x) {
  Vector v(1);
  v << x;
  return v;
}

ControlProblem two_point() {
  return ControlProblem{make_coefficients([](std::span<const double>, std::span<double> o) { o[0] = 0.0; },
                                          Matrix::Identity(1, 1), ConvexDomain::interval(1.0)),
                        {pt(-1.0), pt(1.0)},
                        {"minus", "plus"},
                        [](std::span<const double>, std::size_t) { return 0.0; },
                        [](std::span<const double>) { return 0.0; },
                        [](std::span<const double>) { return 1.0; }};
}

}  // namespace

TEST_CASE("Hamiltonian of the two-point control set is -|z|") {
  const auto cp = two_point();
  const double x = 0.1;
  for (double z : {-2.0, -0.5, 0.0, 0.7}) {
    CHECK(cp.hamiltonian({&x, 1}, {&z, 1}) == doctest::Approx(-std::abs(z)));
  }
  const double z = 0.0, zp = 1.0;
  CHECK(cp.argmin_selector({&x, 1}, {&z, 1}) == 0);  // tie goes to the lowest index
  CHECK(cp.argmin_selector({&x, 1}, {&zp, 1}) == 0);
  CHECK(cp.girsanov_bound() == doctest::Approx(1.0));
}

TEST_CASE("singleton control reduces to the benchmark") {
  auto cp = two_point();
  cp.R = {pt(0.0)};
  cp.names = {"still"};
  const auto erg = solve_ergodic_fd(cp.neumann());
  CHECK(erg.lambda == doctest::Approx(0.5).epsilon(1e-6));
  CostConfig c;
  c.n_paths = 4000;
  c.step = 2e-3;
  const auto j = finite_cost(cp, constant_policy(0), 1.0, pt(0.0), c);
  const auto fd = solve_parabolic_fd(cp.neumann(), 1.0);
  CHECK(std::abs(j.value - fd.value(fd.values.size() - 1, 0.0)) < std::max(2e-2, 3.0 * j.se));
}

TEST_CASE("controlled and Girsanov costs agree") {
  const auto cp = two_point();
  CostConfig c;
  c.n_paths = 4000;
  c.step = 2e-3;
  const auto a = finite_cost(cp, constant_policy(1), 0.5, pt(0.0), c);
  c.mode = CostMode::girsanov;
  const auto b = finite_cost(cp, constant_policy(1), 0.5, pt(0.0), c);
  CHECK(std::abs(a.value - b.value) < 3.0 * std::hypot(a.se, b.se) + 1e-2);
}

TEST_CASE("invalid control problems are rejected") {
  auto cp = two_point();
  cp.R.clear();
  cp.names.clear();
  CHECK_THROWS_AS(cp.validate(), ParameterError);
  auto big = two_point();
  big.running_cost = [](std::span<const double>, std::size_t) { return 1e9; };
  CHECK_THROWS_AS(big.validate(), ParameterError);
}
