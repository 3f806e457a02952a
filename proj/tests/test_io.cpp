// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "nlab/common.hpp"
#include "nlab/io.hpp"

using namespace nlab;
namespace fs = std::filesystem;

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("manifest round trip") {
  const fs::path dir = fs::temp_directory_path() / "nlab_io_test";
  fs::remove_all(dir);
  ArtifactWriter w(dir);
  w.write("a.csv", "x,y\n1,2\n");
  Manifest m;
  m.name = "t";
  m.kind = "oracle";
  m.status = "complete";
  m.seed = 42;
  m.artifacts = w.hashes();
  m.metrics = {{"lambda_hat", 0.5}, {"eta_hat", INFINITY}};
  m.criteria = {{1, "first", true, "ok"}};
  write_manifest(dir, m);
  const Manifest r = read_manifest(dir);
  CHECK(r.name == "t");
  CHECK(r.seed == 42);
  CHECK(r.metrics.at("lambda_hat") == 0.5);
  CHECK(std::isinf(r.metrics.at("eta_hat")));
  CHECK(r.artifacts.at("a.csv") == sha256_file(dir / "a.csv"));
  CHECK(r.criteria.at(0).pass);
  fs::remove_all(dir);
  CHECK_THROWS_AS(read_manifest(dir), PreconditionError);
}
