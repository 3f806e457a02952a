// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nlab {

/// Experiment configuration: INI sections of key = value pairs, addressed as
/// "section.key" (keys may themselves contain dots, e.g. "bsde.basis.degree").
///
/// Getters taking a default record the value actually used, so resolved()
/// is the complete configuration a run depended on.
class RunConfig {
 public:
  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text);
  /// INI text; parse(serialize()) reproduces entries() exactly.
  std::string serialize() const;

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  /// Throws ParameterError naming the key when it is missing.
  std::string get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated numbers.
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }
  /// Entries plus every default that a getter fell back to.
  RunConfig resolved() const;
  /// Keys present in the file that no getter asked for.
  std::vector<std::string> unused() const;

 private:
  std::string lookup(const std::string& key, const std::string& fallback) const;

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> defaults_;
  mutable std::map<std::string, bool> read_;
};

std::string format_double(double v);
std::string format_list(const std::vector<double>& v);

}  // namespace nlab
