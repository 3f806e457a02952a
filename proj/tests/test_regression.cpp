// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "nlab/regression.hpp"
#include "nlab/rng.hpp"

using namespace nlab;

TEST_CASE("polynomial targets are reproduced exactly") {
  PathStream s(1, 0);
  const std::size_t n = 500;
  std::vector<double> cloud(n);
  Matrix y(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    cloud[i] = 2.0 * s.uniform() - 1.0;
    y(static_cast<Eigen::Index>(i), 0) = 1.0 - 2.0 * cloud[i] + 0.5 * cloud[i] * cloud[i] * cloud[i];
  }
  const auto r = least_squares({BasisFamily::polynomial, 4}, 1, cloud, y);
  for (double x : {-0.9, 0.0, 0.3, 0.8}) {
    CHECK(r.fit.evaluate({&x, 1}) == doctest::Approx(1.0 - 2.0 * x + 0.5 * x * x * x).epsilon(1e-9));
  }
  CHECK(r.fit.residual_var(0) < 1e-20);
}

TEST_CASE("noisy fits report sensible standard errors") {
  PathStream s(2, 0);
  const std::size_t n = 4000;
  std::vector<double> cloud(n);
  Matrix y(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    cloud[i] = 2.0 * s.uniform() - 1.0;
    y(static_cast<Eigen::Index>(i), 0) = cloud[i] * cloud[i] + 0.1 * s.normal();
  }
  const auto r = least_squares({BasisFamily::polynomial, 3}, 1, cloud, y);
  const double x = 0.5, z = 0.0;
  const double se = r.fit.standard_error({&x, 1});
  CHECK(se > 0.0);
  CHECK(se < 0.02);
  CHECK(std::abs(r.fit.evaluate({&x, 1}) - 0.25) < 5.0 * se);
  CHECK(r.fit.difference_standard_error({&x, 1}, {&z, 1}) > 0.0);
  CHECK(r.fit.residual_var(0) == doctest::Approx(0.01).epsilon(0.1));
}

TEST_CASE("piecewise linear basis fits a hat exactly") {
  std::vector<double> cloud;
  Matrix y(201, 1);
  for (int i = 0; i <= 200; ++i) {
    cloud.push_back(-1.0 + i * 0.01);
    y(i, 0) = std::abs(cloud.back());
  }
  const auto r = least_squares({BasisFamily::piecewise_linear, 2}, 1, cloud, y);
  const double x = -0.37;
  CHECK(r.fit.evaluate({&x, 1}) == doctest::Approx(0.37).epsilon(1e-9));
}

TEST_CASE("degenerate clouds degrade gracefully") {
  std::vector<double> cloud(100, 0.25);
  Matrix y = Matrix::Constant(100, 1, 3.0);
  std::vector<std::string> warnings;
  const auto r = least_squares({BasisFamily::polynomial, 4}, 1, cloud, y, &warnings);
  const double x = 0.25;
  CHECK(r.fit.evaluate({&x, 1}) == doctest::Approx(3.0));
}

TEST_CASE("basis family names round-trip") {
  for (auto f : {BasisFamily::polynomial, BasisFamily::piecewise_linear}) CHECK(basis_family_from_string(to_string(f)) == f);
  CHECK_THROWS_AS(basis_family_from_string("spline"), ParameterError);
}
