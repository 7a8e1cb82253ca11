// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace qap {

struct OutputRecord {
  std::string path; // as written, relative to the output directory
  std::uint64_t bytes = 0;
  std::string fnv1a64_hex;
};

// Provenance sidecar for every CLI run: enough to reproduce the outputs
// (resolved config echo plus master seed) and to verify them (checksums).
struct RunManifest {
  std::string tool = "qap";
  std::string version;
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json config_echo;
  std::vector<OutputRecord> outputs;
  double wall_ms = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json extra; // per-command additions (fit separations, lock flags)

  nlohmann::json to_json() const;
};

// Writes content to path via a temp file in the same directory plus rename,
// so readers never observe a half-written file.
void write_text_atomically(const std::string& path, const std::string& content);

// Atomic write plus checksum record (path stored as given).
OutputRecord record_output(const std::string& path, const std::string& content);

void write_manifest(const std::string& path, const RunManifest& manifest);

} // namespace qap
