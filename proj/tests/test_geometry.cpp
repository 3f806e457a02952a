// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "nlab/geometry.hpp"
#include "nlab/rng.hpp"

using namespace nlab;

namespace {

std::vector<ConvexDomain> shapes() {
  return {ConvexDomain::interval(1.0), ConvexDomain::ball(2, 1.5), ConvexDomain::ellipsoid({1.0, 0.5, 0.75})};
}

Vector random_point(PathStream& s, std::size_t d, double scale) {
  Vector x(static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(j)) = scale * (2.0 * s.uniform() - 1.0);
  return x;
}

}  // namespace

TEST_CASE("interval phi and inward normal") {
  const auto g = ConvexDomain::interval(1.0);
  const double one = 1.0, minus = -1.0, zero = 0.0;
  CHECK(g.phi({&one, 1}) == doctest::Approx(0.0));
  CHECK(g.phi({&zero, 1}) > 0.0);
  double n = 0.0;
  g.grad_phi({&one, 1}, {&n, 1});
  CHECK(n == doctest::Approx(-1.0));
  g.grad_phi({&minus, 1}, {&n, 1});
  CHECK(n == doctest::Approx(1.0));
}

TEST_CASE("unit gradient on the boundary") {
  PathStream s(5, 0);
  for (const auto& g : shapes()) {
    for (int i = 0; i < 50; ++i) {
      Vector x = random_point(s, g.dim(), 1.0);
      if (x.norm() < 1e-3) continue;
      g.radial_to_boundary(as_span(x));
      CHECK(std::abs(g.phi(as_span(x))) < 1e-9);
      Vector n(x.size());
      g.grad_phi(as_span(x), as_span(n));
      CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(n.dot(x) < 0.0);  // points inward
    }
  }
}

TEST_CASE("projection is idempotent and non-expansive") {
  PathStream s(6, 0);
  for (const auto& g : shapes()) {
    for (int i = 0; i < 200; ++i) {
      const Vector x = random_point(s, g.dim(), 3.0);
      const Vector y = random_point(s, g.dim(), 3.0);
      const Vector px = g.project(x), py = g.project(y);
      CHECK(g.contains(as_span(px), 1e-9));
      CHECK((g.project(px) - px).norm() < 1e-9);
      CHECK((px - py).norm() <= (x - y).norm() + 1e-9);
      CHECK(g.distance(as_span(x)) == doctest::Approx((x - px).norm()).epsilon(1e-9));
    }
  }
}

TEST_CASE("segments between points of the closure stay inside") {
  PathStream s(7, 0);
  for (const auto& g : shapes()) {
    for (int i = 0; i < 100; ++i) {
      const Vector x = g.project(random_point(s, g.dim(), 2.0));
      const Vector y = g.project(random_point(s, g.dim(), 2.0));
      for (double t : {0.1, 0.5, 0.9}) {
        const Vector z = t * x + (1.0 - t) * y;
        CHECK(g.phi(as_span(z)) >= -1e-12);
      }
    }
  }
}

TEST_CASE("uniform sampling lands in the domain") {
  for (const auto& g : shapes()) {
    PathStream s(8, 1, Substream::initial_state);
    Vector x(static_cast<Eigen::Index>(g.dim()));
    for (int i = 0; i < 200; ++i) {
      g.sample_uniform(s, as_span(x));
      CHECK(g.contains(as_span(x)));
    }
  }
}

TEST_CASE("drift extension agrees inside and is dissipative outside") {
  const auto g = ConvexDomain::interval(1.0);
  const auto ext = extend_drift([](std::span<const double> x, std::span<double> o) { o[0] = std::sin(x[0]); }, g, 1.0);
  Vector in(1), out(1);
  in << 0.3;
  out << 5.0;
  CHECK(ext.extended(in)(0) == doctest::Approx(std::sin(0.3)));
  CHECK(ext.extended(out)(0) == doctest::Approx(-5.0 + std::sin(1.0) + 1.0));
  CHECK(std::abs(ext.extended(out)(0) + 5.0) <= ext.remainder_bound());
}

TEST_CASE("invalid shapes are rejected") {
  CHECK_THROWS_AS(ConvexDomain::interval(-1.0), ParameterError);
  CHECK_THROWS_AS(ConvexDomain::ellipsoid({1.0, 0.0}), ParameterError);
  const auto g = ConvexDomain::interval(1.0);
  const double bad = std::nan("");
  CHECK_THROWS(g.phi({&bad, 1}));
}
