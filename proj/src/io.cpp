// Copyright 2026 The nlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "nlab/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"
#include "nlab/common.hpp"

namespace nlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

ArtifactWriter::ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) throw PreconditionError("cannot create output directory '" + dir_.string() + "'");
}

void ArtifactWriter::write(const std::string& name, const std::string& content) {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) throw PreconditionError("cannot write '" + (dir_ / name).string() + "'");
  out << content;
  if (!out) throw PreconditionError("write failed for '" + (dir_ / name).string() + "'");
  hashes_[name] = sha256_hex(content);
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  json j;
  j["name"] = m.name;
  j["kind"] = m.kind;
  j["status"] = m.status;
  j["exit_code"] = m.exit_code;
  j["error"] = m.error;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["artifacts"] = m.artifacts;
  // JSON has no inf / nan; keep them as strings.
  json metrics = json::object();
  for (const auto& [k, v] : m.metrics) {
    if (std::isfinite(v)) {
      metrics[k] = v;
    } else {
      metrics[k] = std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    }
  }
  j["metrics"] = metrics;
  j["flags"] = m.flags;
  j["warnings"] = m.warnings;
  json crit = json::array();
  for (const auto& c : m.criteria) {
    crit.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  j["criteria"] = crit;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw PreconditionError("cannot write manifest in '" + dir.string() + "'");
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& dir) {
  const fs::path file = dir / "manifest.json";
  if (!fs::exists(file)) throw PreconditionError("no manifest.json in '" + dir.string() + "'");
  Manifest m;
  try {
    const json j = json::parse(read_file(file));
    m.name = j.value("name", "");
    m.kind = j.value("kind", "");
    m.status = j.value("status", "running");
    m.exit_code = j.value("exit_code", 0);
    m.error = j.value("error", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.config = j.value("config", "");
    if (j.contains("artifacts")) m.artifacts = j["artifacts"].get<std::map<std::string, std::string>>();
    if (j.contains("metrics")) {
      for (const auto& [k, v] : j["metrics"].items()) {
        if (v.is_number()) {
          m.metrics[k] = v.get<double>();
        } else {
          const auto s = v.get<std::string>();
          m.metrics[k] = s == "inf" ? INFINITY : s == "-inf" ? -INFINITY : NAN;
        }
      }
    }
    if (j.contains("flags")) m.flags = j["flags"].get<std::vector<std::string>>();
    if (j.contains("warnings")) m.warnings = j["warnings"].get<std::vector<std::string>>();
    if (j.contains("criteria")) {
      for (const auto& c : j["criteria"]) {
        m.criteria.push_back({c.value("id", 0), c.value("name", ""), c.value("pass", false), c.value("detail", "")});
      }
    }
  } catch (const json::exception& e) {
    throw PreconditionError("malformed manifest in '" + dir.string() + "': " + e.what());
  }
  return m;
}

}  // namespace nlab
