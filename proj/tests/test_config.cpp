// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "nlab/common.hpp"
#include "nlab/config.hpp"

using namespace nlab;

TEST_CASE("parse, serialize and parse again is lossless") {
  const auto c = RunConfig::parse(
      "# benchmark\n[experiment]\nkind = oracle\nseed = 7\n\n[bsde]\nbasis.degree = 3\nn_paths=100\n"
      "[problem]\ndriver = x - abs(z)  # trailing comment\n");
  CHECK(c.get("experiment.kind") == "oracle");
  CHECK(c.get("bsde.basis.degree") == "3");
  CHECK(c.get("problem.driver") == "x - abs(z)");
  const auto again = RunConfig::parse(c.serialize());
  CHECK(again.entries() == c.entries());
}

TEST_CASE("typed getters and defaults") {
  const auto c = RunConfig::parse("[a]\nx = 1.5\nn = 4\nflag = yes\nlist = 1, 2.5 ,3\n");
  CHECK(c.get_double("a.x", 0.0) == 1.5);
  CHECK(c.get_size("a.n", 0) == 4);
  CHECK(c.get_bool("a.flag", false));
  CHECK(c.get_list("a.list", {}) == std::vector<double>{1.0, 2.5, 3.0});
  CHECK(c.get_double("a.missing", 0.25) == 0.25);
  CHECK_THROWS_AS(c.get("a.absent"), ParameterError);
  CHECK_THROWS_AS(c.get_size("a.x", 0), ParameterError);
  const auto r = c.resolved();
  CHECK(r.get("a.missing") == "0.25");
  CHECK(c.unused().empty());
}

TEST_CASE("unused keys are reported") {
  const auto c = RunConfig::parse("[a]\nused = 1\ntypo = 2\n");
  c.get_double("a.used", 0.0);
  CHECK(c.unused() == std::vector<std::string>{"a.typo"});
}

TEST_CASE("numbers print in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-3) == "0.001");
  CHECK(format_list({1.0, 0.5}) == "1, 0.5");
}
