// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "nlab/bsde.hpp"
#include "nlab/pde_oracle.hpp"

using namespace nlab;

namespace {

NeumannProblem benchmark(Driver d = Driver::zero()) {
  return NeumannProblem{make_coefficients([](std::span<const double>, std::span<double> o) { o[0] = 0.0; },
                                          Matrix::Identity(1, 1), ConvexDomain::interval(1.0)),
                        std::move(d), [](std::span<const double>) { return 1.0; },
                        [](std::span<const double>) { return 0.0; }};
}

Vector pt(double x) {
  Vector v(1);
  v << x;
  return v;
}

BsdeConfig small() {
  BsdeConfig c;
  c.n_paths = 4000;
  c.n_steps = 250;
  c.seed = 17;
  return c;
}

}  // namespace

TEST_CASE("no boundary cost and constant driver give y0 = c T exactly") {
  auto p = benchmark(Driver::constant(0.7));
  p.g = [](std::span<const double>) { return 0.0; };
  const auto s = solve_finite_horizon(p, 2.0, pt(0.1), small());
  CHECK(s.y0 == doctest::Approx(1.4).epsilon(1e-10));
  CHECK(s.flags.empty());
}

TEST_CASE("benchmark value at T = 1 matches the finite-difference oracle") {
  const auto p = benchmark();
  const auto s = solve_finite_horizon(p, 1.0, pt(0.0), small());
  const auto fd = solve_parabolic_fd(p, 1.0);
  const double u = fd.value(fd.values.size() - 1, 0.0);
  CHECK(std::abs(s.y0 - u) <= std::max(2e-2, 3.0 * s.y0_se));
  CHECK(s.mean_local_time > 0.0);
}

TEST_CASE("runs are bit-reproducible across worker counts") {
  const auto p = benchmark(Driver::neg_abs_z());
  auto c = small();
  c.n_paths = 1000;
  c.n_steps = 100;
  const auto a = solve_finite_horizon(p, 0.5, pt(0.2), c);
  c.workers = 2;
  const auto b = solve_finite_horizon(p, 0.5, pt(0.2), c);
  CHECK(a.y0 == b.y0);
  CHECK(a.y0_se == b.y0_se);
  CHECK(a.pathwise == b.pathwise);
}

TEST_CASE("direct estimator agrees with the regression scheme for x-only drivers") {
  const auto p = benchmark();
  const auto s = solve_finite_horizon(p, 0.5, pt(0.0), small());
  const auto d = direct_estimator(p, 0.5, pt(0.0), small());
  CHECK(std::abs(s.y0 - d.value) < 1e-9);
  CHECK_THROWS_AS(direct_estimator(benchmark(Driver::neg_abs_z()), 0.5, pt(0.0), small()), Error);
}

TEST_CASE("uniform clouds give a time-zero surface") {
  const auto p = benchmark();
  auto c = small();
  c.init = CloudInit::uniform;
  c.n_paths = 8000;
  const auto s = solve_finite_horizon(p, 1.0, pt(0.0), c);
  const auto fd = solve_parabolic_fd(p, 1.0);
  const std::vector<Vector> pts{pt(-0.5), pt(0.0), pt(0.5)};
  const auto u = evaluate_u(s, p, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double ref = fd.value(fd.values.size() - 1, pts[i](0));
    CHECK(std::abs(u[i] - ref) <= std::max(2e-2, 3.0 * surface_standard_error(s, pts[i])));
  }
}

TEST_CASE("input errors") {
  const auto p = benchmark();
  CHECK_THROWS_AS(solve_finite_horizon(p, 0.0, pt(0.0), small()), ParameterError);
  CHECK_THROWS_AS(solve_finite_horizon(p, 1.0, pt(2.0), small()), PreconditionError);
  auto bad = benchmark(Driver::neg_abs_z());
  bad.driver.lipschitz_z = 0.1;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("z cap breaches flag the run") {
  auto c = small();
  c.z_cap = 1e-6;
  const auto s = solve_finite_horizon(benchmark(Driver::neg_abs_z()), 0.5, pt(0.5), c);
  CHECK_FALSE(s.flags.empty());
}
