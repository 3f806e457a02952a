// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Runs the benchmark suite and prints one line per acceptance criterion.

#include <algorithm>
#include <iostream>

#include "nlab/acceptance.hpp"

int main(int argc, char** argv) {
  nlab::AcceptanceOptions opt;
  opt.dir = argc > 1 ? argv[1] : "bench";
  const auto results = nlab::run_acceptance(opt);
  for (const auto& r : results) std::cout << nlab::format_criterion(r) << '\n';
  const bool ok = results.size() == 10 &&
                  std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  std::cout << (ok ? "all criteria passed" : "some criteria failed") << std::endl;
  return ok ? 0 : 1;
}
