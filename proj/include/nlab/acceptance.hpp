// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "nlab/io.hpp"

namespace nlab {

struct AcceptanceOptions {
  std::filesystem::path dir;
  std::uint64_t seed = 2026;
  std::size_t workers = 1;
  /// Rerun the suite into dir/rerun and compare every CSV byte for byte.
  bool determinism = true;
  /// Progress lines (may be null).
  std::ostream* log = nullptr;
};

/// The shipped benchmark suite: criteria 1 to 10, one CSV per criterion plus
/// a manifest of kind "bench" in `dir`.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

/// "criterion N [name]: PASS|FAIL  detail"
std::string format_criterion(const CriterionResult& r);

}  // namespace nlab
