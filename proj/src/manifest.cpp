// SPDX-License-Identifier: Apache-2.0
#include "qap/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qap/errors.hpp"
#include "qap/numerics.hpp"

namespace qap {

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = tool;
  j["version"] = version;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config_echo;
  j["wall_ms"] = wall_ms;
  j["warnings"] = warnings;
  j["outputs"] = nlohmann::json::array();
  for (const OutputRecord& out : outputs) {
    nlohmann::json o;
    o["path"] = out.path;
    o["bytes"] = out.bytes;
    o["fnv1a64"] = out.fnv1a64_hex;
    j["outputs"].push_back(o);
  }
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

void write_text_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  std::error_code ec;
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path(), ec);
    if (ec)
      throw ConfigError("write_text_atomically: cannot create directory " +
                        target.parent_path().string() + ": " + ec.message());
  }

  const fs::path temp(path + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw ConfigError("write_text_atomically: cannot open " + temp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("write_text_atomically: write failed for " + temp.string());
  }
  fs::rename(temp, target, ec);
  if (ec)
    throw ConfigError("write_text_atomically: cannot rename " + temp.string() + " to " + path +
                      ": " + ec.message());
}

OutputRecord record_output(const std::string& path, const std::string& content) {
  write_text_atomically(path, content);
  OutputRecord record;
  record.path = path;
  record.bytes = content.size();
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(content.data(), content.size())));
  record.fnv1a64_hex = hex;
  return record;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  write_text_atomically(path, manifest.to_json().dump(2) + "\n");
}

} // namespace qap
