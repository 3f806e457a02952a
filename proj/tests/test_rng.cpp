// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>

#include "doctest.h"
#include "nlab/rng.hpp"

using namespace nlab;

TEST_CASE("philox known answers") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{~0u, ~0u, ~0u, ~0u}, K{~0u, ~0u}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of seed, path and index") {
  PathStream a(42, 7), b(42, 7);
  for (int i = 0; i < 10; ++i) CHECK(a.normal() == b.normal());
  PathStream c(42, 7);
  CHECK(c.normal_at(5) == PathStream(42, 7).normal_at(5));
  c.seek_normal(5);
  CHECK(c.normal() == PathStream(42, 7).normal_at(5));
  CHECK(PathStream(42, 7).normal_at(0) != PathStream(42, 8).normal_at(0));
  CHECK(PathStream(42, 7, Substream::brownian).normal_at(0) != PathStream(42, 7, Substream::auxiliary).normal_at(0));
}

TEST_CASE("normal draws have unit variance") {
  PathStream s(1, 0);
  const int n = 200000;
  double m = 0.0, v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m += z;
    v += z * z;
  }
  m /= n;
  v = v / n - m * m;
  CHECK(std::abs(m) < 5.0 / std::sqrt(n));
  CHECK(std::abs(v - 1.0) < 0.02);
}

TEST_CASE("uniforms lie in the open unit interval") {
  PathStream s(3, 1);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform();
    CHECK((u > 0.0 && u < 1.0));
  }
}

TEST_CASE("derived seeds differ by tag") {
  std::set<std::uint64_t> seen;
  for (const char* tag : {"a", "b", "c", "alpha:0", "alpha:1"}) seen.insert(derive_seed(9, tag));
  CHECK(seen.size() == 5);
  CHECK(derive_seed(9, "a") == derive_seed(9, "a"));
  CHECK(derive_seed(9, 1) != derive_seed(10, 1));
}
