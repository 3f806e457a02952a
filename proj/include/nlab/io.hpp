// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace nlab {

std::string sha256_hex(std::string_view data);
/// Empty string when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

/// Writes artifacts into one directory and remembers their hashes.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  void write(const std::string& name, const std::string& content);
  const std::filesystem::path& dir() const { return dir_; }
  const std::map<std::string, std::string>& hashes() const { return hashes_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Run record stored as manifest.json next to the artifacts.
struct Manifest {
  std::string name;
  std::string kind;
  /// running, complete or failed
  std::string status = "running";
  int exit_code = 0;
  std::string error;
  std::uint64_t seed = 0;
  /// Resolved configuration (INI text).
  std::string config;
  std::map<std::string, std::string> artifacts;  // file -> sha256
  std::map<std::string, double> metrics;
  std::vector<std::string> flags;
  std::vector<std::string> warnings;
  std::vector<CriterionResult> criteria;
};

void write_manifest(const std::filesystem::path& dir, const Manifest& m);
/// Throws PreconditionError when dir/manifest.json is missing or malformed.
Manifest read_manifest(const std::filesystem::path& dir);

}  // namespace nlab
