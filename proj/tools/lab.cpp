// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// lab run <config>     run one experiment
// lab report <dir>     collate manifests into a table and report.csv
// lab bench            run the acceptance suite

#include <algorithm>
#include <iostream>

#include "CLI11.hpp"
#include "nlab/acceptance.hpp"
#include "nlab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"reflected-diffusion BSDE lab"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "run the experiment described by an INI config");
  run->add_option("config", config, "config file")->required();

  std::string dir;
  auto* report = app.add_subcommand("report", "summarize a results directory");
  report->add_option("dir", dir, "directory holding manifest.json or run subdirectories")->required();

  std::string bench_dir;
  std::uint64_t seed = 2026;
  std::size_t workers = 1;
  bool no_rerun = false;
  auto* bench = app.add_subcommand("bench", "run the acceptance suite");
  bench->add_option("--out", bench_dir, "output directory (default <output root>/bench)");
  bench->add_option("--seed", seed, "master seed");
  bench->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  bench->add_flag("--no-rerun", no_rerun, "skip the determinism rerun");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return nlab::run_experiment(config, std::cerr).exit_code;
    if (*report) return nlab::emit_report(dir, std::cout);
    if (*bench) {
      nlab::AcceptanceOptions opt;
      opt.dir = bench_dir.empty() ? nlab::default_output_root() / "bench" : std::filesystem::path(bench_dir);
      opt.seed = seed;
      opt.workers = workers;
      opt.determinism = !no_rerun;
      opt.log = &std::cerr;
      const auto results = nlab::run_acceptance(opt);
      for (const auto& r : results) std::cout << nlab::format_criterion(r) << '\n';
      const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
      return ok ? nlab::kExitOk : nlab::kExitNumerical;
    }
  } catch (const nlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nlab::kExitPrecondition;
  }
  return nlab::kExitOk;
}
