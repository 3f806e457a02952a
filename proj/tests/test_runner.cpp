// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nlab/io.hpp"
#include "nlab/runner.hpp"

using namespace nlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "nlab_runner_test" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

RunOutcome run_text(const std::string& text, const fs::path& out) {
  auto cfg = RunConfig::parse(text);
  cfg.set("experiment.output", out.string());
  std::ostringstream log;
  return run_config(cfg, "test", log);
}

const char* kOracle =
    "[experiment]\nkind = oracle\nseed = 3\n"
    "[problem]\ndriver = zero\ng = 1\nh = 0\n"
    "[oracle]\nhorizon = 1\nn_intervals = 100\ndt = 0.005\n";

}  // namespace

TEST_CASE("oracle run writes the field, summary and manifest") {
  const auto dir = scratch("oracle");
  const auto r = run_text(kOracle, dir);
  CHECK(r.exit_code == kExitOk);
  CHECK(fs::exists(dir / "u_field.csv"));
  CHECK(fs::exists(dir / "v.csv"));
  const Manifest m = read_manifest(dir);
  CHECK(m.status == "complete");
  CHECK(m.metrics.at("lambda_hat") == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(m.config.find("n_intervals") != std::string::npos);
  CHECK(m.config.find("t_max") != std::string::npos);  // defaults are recorded
  for (const auto& [name, hash] : m.artifacts) CHECK(sha256_file(dir / name) == hash);
}

TEST_CASE("reruns are byte-identical") {
  const char* text =
      "[experiment]\nkind = bsde\nseed = 5\nworkers = 1\n"
      "[problem]\ndriver = neg_abs_z\n"
      "[bsde]\nhorizon = 0.5\nn_paths = 500\nn_steps = 50\nx0 = 0.2\n";
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  CHECK(run_text(text, a).exit_code == kExitOk);
  auto cfg2 = std::string(text);
  cfg2.replace(cfg2.find("workers = 1"), 11, "workers = 2");
  CHECK(run_text(cfg2, b).exit_code == kExitOk);
  CHECK(read_file(a / "y0.csv") == read_file(b / "y0.csv"));
}

TEST_CASE("unknown driver exits 2 naming the key") {
  const auto dir = scratch("bad_driver");
  const auto r = run_text("[experiment]\nkind = bsde\n[problem]\ndriver = warp_z\n", dir);
  CHECK(r.exit_code == kExitPrecondition);
  CHECK(r.message.find("problem.driver") != std::string::npos);
  CHECK(read_manifest(dir).status == "failed");
}

TEST_CASE("unknown kind and bad preconditions exit 2") {
  CHECK(run_text("[experiment]\nkind = teleport\n", scratch("bad_kind")).exit_code == kExitPrecondition);
  CHECK(run_text("[experiment]\nkind = bsde\n[bsde]\nx0 = 3\nn_paths = 10\nn_steps = 5\n", scratch("bad_x0")).exit_code ==
        kExitPrecondition);
  std::ostringstream log;
  CHECK(run_experiment("/nonexistent/config.ini", log).exit_code == kExitPrecondition);
}

TEST_CASE("flagged runs exit 3") {
  const auto r = run_text(
      "[experiment]\nkind = bsde\n[problem]\ndriver = neg_abs_z\n[bsde]\nhorizon = 0.5\nn_paths = 500\nn_steps = 50\n"
      "x0 = 0.5\nz_cap = 1e-6\n",
      scratch("flagged"));
  CHECK(r.exit_code == kExitNumerical);
}

TEST_CASE("asymptotics with both sources lists both") {
  const auto dir = scratch("asym");
  const auto r = run_text(
      "[experiment]\nkind = asymptotics\n[asymptotics]\nsource = both\nhorizons = 0.5, 0.75, 1, 1.25, 1.5\n"
      "bsde_step = 0.005\n[bsde]\nn_paths = 1000\n",
      dir);
  CHECK(r.exit_code != kExitPrecondition);
  const std::string csv = read_file(dir / "report.csv");
  CHECK(csv.find("\nfd,") != std::string::npos);
  CHECK(csv.find("\nbsde,") != std::string::npos);
}

TEST_CASE("simulate, coupling and penalization kinds run") {
  CHECK(run_text("[experiment]\nkind = simulate\n[simulate]\nn_paths = 100\nn_steps = 100\n", scratch("sim")).exit_code ==
        kExitOk);
  CHECK(run_text("[experiment]\nkind = coupling\n[domain]\nhalf_width = 5\n[sde]\ndrift = -x\n"
                 "[coupling]\nx = 1\ny = -1\nn_paths = 2000\nhorizon = 2\nn_steps = 200\n",
                 scratch("coupling"))
            .exit_code == kExitOk);
  CHECK(run_text("[experiment]\nkind = penalization\n[penalization]\nn_paths = 200\nns = 8, 64\n", scratch("pen")).exit_code ==
        kExitOk);
}

TEST_CASE("control config builds the two-point problem") {
  const auto cfg = RunConfig::parse("[control]\nvalues = -1, 1\nR = a\nrunning_cost = 0\n");
  const auto cp = control_from_config(cfg);
  CHECK(cp.n_controls() == 2);
  CHECK(cp.R[0](0) == -1.0);
  const double x = 0.0, z = 0.3;
  CHECK(cp.hamiltonian({&x, 1}, {&z, 1}) == doctest::Approx(-0.3));
}

TEST_CASE("report: empty directory, complete run and incomplete run") {
  const auto root = scratch("report");
  fs::create_directories(root);
  std::ostringstream out;
  CHECK(emit_report(root, out) == kExitPrecondition);

  REQUIRE(run_text(kOracle, root / "a").exit_code == kExitOk);
  REQUIRE(run_text(kOracle, root / "b").exit_code == kExitOk);
  fs::remove(root / "b" / "v.csv");
  std::ostringstream table;
  CHECK(emit_report(root, table) == kExitOk);
  CHECK(table.str().find("complete") != std::string::npos);
  CHECK(table.str().find("incomplete") != std::string::npos);
  CHECK(fs::exists(root / "report.csv"));
  CHECK(read_file(root / "report.csv").find("lambda_hat") != std::string::npos);
}

TEST_CASE("output root follows the environment") {
  setenv(kOutputRootEnv, "/tmp/somewhere", 1);
  CHECK(default_output_root() == fs::path("/tmp/somewhere"));
  unsetenv(kOutputRootEnv);
  CHECK(default_output_root() == fs::path("lab_runs"));
}
