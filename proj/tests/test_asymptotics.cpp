// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "nlab/asymptotics.hpp"

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

TEST_CASE("synthetic exponential decay is fitted") {
  std::vector<WPoint> w;
  for (double T : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 8.0}) w.push_back({T, -0.2 + 0.3 * std::exp(-2.0 * T), 0.0});
  const auto f = fit_limit_and_rate(w);
  CHECK(f.L_hat == doctest::Approx(-0.2).epsilon(1e-6));
  CHECK(f.eta_hat == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("constant w gives the infinite-rate sentinel") {
  std::vector<WPoint> w;
  for (double T : {1.0, 2.0, 3.0, 4.0, 5.0}) w.push_back({T, 0.25, 0.0});
  const auto f = fit_limit_and_rate(w);
  CHECK(f.L_hat == 0.25);
  CHECK(f.eta_infinite());
}

TEST_CASE("too few horizons") {
  std::vector<WPoint> w{{1, 0, 0}, {2, 0, 0}};
  CHECK_THROWS_AS(fit_limit_and_rate(w), ParameterError);
}

TEST_CASE("benchmark profile flattens towards -1/6") {
  const std::vector<Vector> xs{pt(-0.5), pt(0.0), pt(0.5)};
  const auto ref = fd_reference(benchmark());
  const auto table = renormalized_profile(benchmark(), {0.5, 2.0}, xs, ref, Source::fd);
  for (const auto& r : table.rows) {
    if (r.T == 2.0) CHECK(r.w == doctest::Approx(-1.0 / 6.0).epsilon(5e-3));
  }
  for (const auto& s : table.spread) {
    if (s.T == 2.0) CHECK(s.spread < 5e-3);
  }
}

TEST_CASE("lambda sweep needs a wide horizon range") {
  CHECK_THROWS_AS(lambda_sweep(benchmark(), {2.0, 4.0}, pt(0.0), 0.5, Source::fd), ParameterError);
  const auto ls = lambda_sweep(benchmark(), {2.0, 4.0, 8.0, 16.0}, pt(0.0), 0.5, Source::fd);
  CHECK(ls.rows.front().error == doctest::Approx(-1.0 / 12.0).epsilon(0.02));
}

TEST_CASE("report with both sources lists both in the CSV") {
  AsymptoticsConfig c;
  c.source = Source::both;
  c.horizons = {0.5, 0.75, 1.0, 1.25, 1.5};
  c.xs = {pt(0.0)};
  c.solver.bsde.n_paths = 2000;
  c.solver.bsde_step = 5e-3;
  const auto rep = run_asymptotics(benchmark(), c);
  std::ostringstream os;
  rep.write_csv(os);
  CHECK(os.str().find("\nfd,") != std::string::npos);
  CHECK(os.str().find("\nbsde,") != std::string::npos);
  CHECK(rep.fits.size() == 2);
}

TEST_CASE("source names round-trip") {
  for (auto s : {Source::fd, Source::bsde, Source::both}) CHECK(source_from_string(to_string(s)) == s);
}

TEST_CASE("noise-dominated w gives a finite lower bound only") {
  std::vector<WPoint> w;
  for (double T : {1.0, 2.0, 3.0, 4.0, 5.0}) w.push_back({T, -0.2 + (T == 1.0 ? 0.5 : 0.0), 0.01});
  const auto f = fit_limit_and_rate(w);
  CHECK(f.eta_lower_bound);
  CHECK_FALSE(f.eta_infinite());
  CHECK(f.eta_hat > 0.0);
  for (auto& p : w) p.w = -0.2 + 0.001 * (p.T == 2.0);
  const auto g = fit_limit_and_rate(w);
  CHECK(g.eta_lower_bound);
  CHECK(g.eta_hat == 0.0);
}
