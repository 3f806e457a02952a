// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nlab/common.hpp"

namespace nlab {

namespace pt = boost::property_tree;

namespace {

// '/' as separator so dotted key names survive as single keys.
pt::ptree::path_type tree_path(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
    throw ParameterError("config key '" + key + "' must look like section.name");
  }
  return pt::ptree::path_type(key.substr(0, dot) + "/" + key.substr(dot + 1), '/');
}

RunConfig from_tree(const pt::ptree& tree) {
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ParameterError("config entry '" + section + "' is outside any section");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.data());
  }
  return cfg;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

RunConfig RunConfig::parse(const std::string& text) {
  // Strip '#' comments, which the INI reader does not know.
  std::istringstream lines(text);
  std::string cleaned, line;
  while (std::getline(lines, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    cleaned += line;
    cleaned += '\n';
  }
  std::istringstream in(cleaned);
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  return from_tree(tree);
}

std::string RunConfig::serialize() const {
  pt::ptree tree;
  for (const auto& [key, value] : values_) tree.put(tree_path(key), value);
  std::ostringstream out;
  pt::ini_parser::write_ini(out, tree);
  return out.str();
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
  tree_path(key);
  values_[key] = boost::algorithm::trim_copy(value);
}

std::string RunConfig::lookup(const std::string& key, const std::string& fallback) const {
  read_[key] = true;
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  defaults_[key] = fallback;
  return fallback;
}

std::string RunConfig::get(const std::string& key) const {
  read_[key] = true;
  const auto it = values_.find(key);
  if (it == values_.end()) throw ParameterError("missing config key '" + key + "'");
  return it->second;
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
  return lookup(key, fallback);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  const std::string s = lookup(key, format_double(fallback));
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ParameterError("config key '" + key + "': '" + s + "' is not a number");
  return v;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const std::string s = lookup(key, std::to_string(fallback));
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw ParameterError("config key '" + key + "': '" + s + "' is not an integer");
  return v;
}

std::size_t RunConfig::get_size(const std::string& key, std::size_t fallback) const {
  const auto v = get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ParameterError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const std::string s = lookup(key, std::to_string(fallback));
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || *end != '\0') {
    throw ParameterError("config key '" + key + "': '" + s + "' is not an unsigned integer");
  }
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  const std::string s = lookup(key, fallback ? "true" : "false");
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ParameterError("config key '" + key + "': '" + s + "' is not a boolean");
}

std::vector<double> RunConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const std::string s = lookup(key, format_list(fallback));
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    boost::algorithm::trim(item);
    if (item.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (*end != '\0') throw ParameterError("config key '" + key + "': '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

RunConfig RunConfig::resolved() const {
  RunConfig out;
  out.values_ = values_;
  for (const auto& [k, v] : defaults_) out.values_.emplace(k, v);
  return out;
}

std::vector<std::string> RunConfig::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!read_.count(k)) out.push_back(k);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int p = 1; p <= 17; ++p) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", p, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace nlab
