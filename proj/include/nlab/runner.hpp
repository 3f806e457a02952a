// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "nlab/config.hpp"
#include "nlab/control.hpp"

namespace nlab {

/// Exit statuses of the batch runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPrecondition = 2;
inline constexpr int kExitNumerical = 3;

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "LAB_OUTPUT_ROOT";

/// $LAB_OUTPUT_ROOT, else ./lab_runs.
std::filesystem::path default_output_root();

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path dir;
  std::string message;
};

/// Parses the config, runs the experiment and writes artifacts plus
/// manifest.json into experiment.output (default <root>/<experiment.name>).
RunOutcome run_experiment(const std::string& config_path, std::ostream& log);
RunOutcome run_config(const RunConfig& cfg, const std::string& default_name, std::ostream& log);

/// Collates the manifest in `dir` and those one level below into a table on
/// `out` and dir/report.csv (long format: run, kind, status, key, value).
/// Returns kExitPrecondition when no manifest is found.
int emit_report(const std::filesystem::path& dir, std::ostream& out);

// Builders shared with tests.
ConvexDomain domain_from_config(const RunConfig& cfg);
SdeCoefficients coefficients_from_config(const RunConfig& cfg);
NeumannProblem problem_from_config(const RunConfig& cfg);
ControlProblem control_from_config(const RunConfig& cfg);
BsdeConfig bsde_from_config(const RunConfig& cfg);

}  // namespace nlab
