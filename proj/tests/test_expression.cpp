// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "nlab/expression.hpp"

using namespace nlab;

TEST_CASE("arithmetic and precedence") {
  const double x[2] = {2.0, -3.0};
  const double z[1] = {-0.5};
  const auto v = Variables{x, 1.5, 4.0, z};
  CHECK(Expression::parse("1 + 2 * 3")(v) == 7.0);
  CHECK(Expression::parse("-x^2")(v) == -4.0);
  CHECK(Expression::parse("(x1 + x2) * a")(v) == -1.5);
  CHECK(Expression::parse("x^3 / 4 - y")(v) == -2.0);
  CHECK(Expression::parse("abs(z) + norm_z")(v) == 1.0);
  CHECK(Expression::parse("1e-1 * 10")(v) == doctest::Approx(1.0));
}

TEST_CASE("variable usage is tracked") {
  const auto e = Expression::parse("x * z + y");
  CHECK(e.uses_z());
  CHECK(e.uses_y());
  CHECK_FALSE(e.uses_a());
}

TEST_CASE("malformed expressions name the problem") {
  CHECK_THROWS_AS(Expression::parse("1 +"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("(x"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("sin(x)"), ParameterError);
  CHECK_THROWS_AS(Expression::parse("x^0.5"), ParameterError);
  try {
    Expression::parse("foo + 1");
  } catch (const ParameterError& e) {
    CHECK(std::string(e.what()).find("foo") != std::string::npos);
  }
}

TEST_CASE("named and expression drivers") {
  const double x = 0.0, z = -2.0;
  CHECK(make_driver("zero")({&x, 1}, 0.0, {&z, 1}) == 0.0);
  CHECK(make_driver("constant:2.5")({&x, 1}, 0.0, {&z, 1}) == 2.5);
  CHECK(make_driver("neg_abs_z")({&x, 1}, 0.0, {&z, 1}) == -2.0);
  CHECK(make_driver("abs_z")({&x, 1}, 0.0, {&z, 1}) == -2.0);
  const auto d = make_driver("x - 0.5 * abs(z)", 0.5);
  CHECK(d({&x, 1}, 0.0, {&z, 1}) == -1.0);
  CHECK(d.depends_on_z);
  CHECK(d.lipschitz_z == 0.5);
  CHECK_THROWS_AS(make_driver("constant:abc"), ParameterError);
  CHECK_THROWS_AS(make_driver("mystery"), ParameterError);
}

TEST_CASE("scalar fields reject non-spatial variables") {
  CHECK_THROWS_AS(scalar_field("x + z"), ParameterError);
  const double x = 3.0;
  CHECK(scalar_field("x^2")({&x, 1}) == 9.0);
}
