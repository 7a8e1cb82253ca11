// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

#include "qap/aperture.hpp"
#include "qap/comms.hpp"
#include "qap/doppler.hpp"
#include "qap/level_scheme.hpp"
#include "qap/rf_field.hpp"

namespace qap {

// Sweep/grid settings and mode selection for one CLI run.
struct RunSection {
  std::string mode; // single | multipeak | multiband | spectrum | fit | interference | multiuser | multiband_link
  double theta_start_deg = 20.0;
  double theta_stop_deg = 160.0;
  double theta_step_deg = 2.0;
  double delta_c_span_hz = 80.0e6; // spectrum sweep covers +- span/2
  int delta_c_points = 401;
  bool fit = false;            // spectrum: append a two-peak fit to the manifest
  std::string measured_csv;    // fit: input pattern path
  DopplerSpec doppler{};
};

// Link-campaign settings shared by the three scenarios.
struct CommsSection {
  std::string modulation = "qam16"; // qpsk | qam16
  double symbol_rate_hz = 4000.0;
  double rolloff = 0.35;
  double noise_density = kDefaultNoiseDensity;
  double sample_rate_hz = 144000.0;
  int bits_per_cell = 100000;
  std::vector<double> lengths_m{0.04, 0.05, 0.06, 0.07, 0.08, 0.10};
  std::vector<double> sirs_db{-6, -4, -2, 0, 2, 4, 6};
  std::vector<std::pair<double, double>> lo_dbm_schedule{
      {6, 10}, {7, 9}, {8, 8}, {9, 7}, {10, 6}};
  std::vector<std::pair<double, double>> offsets_deg{}; // per-step (band0, band1) user offsets
  bool has_interferer = false;
  double interferer_angle_deg = 75.0;
  double interferer_bandwidth_hz = 8000.0;
};

// Full resolved configuration for one run.
struct AppConfig {
  LevelScheme scheme{};
  DriveParams drive{};
  ApertureGeometry geometry{};
  LoConfiguration lo{};
  std::vector<BandConfig> bands{};
  std::vector<UserLink> users{};
  CommsSection comms{};
  RunSection run{};
  std::uint64_t seed = 1;

  void validate() const;
};

// Strict JSON ingestion: explicit-unit key names, unknown keys rejected with
// their full path, type errors reported with the offending key.
AppConfig config_from_json(const nlohmann::json& doc);
AppConfig load_config(const std::string& path);

// Resolved-config echo, invertible through config_from_json.
nlohmann::json config_to_json(const AppConfig& config);

// Built-in scenario presets mirroring the reference experiments.
AppConfig preset(const std::string& name);
std::vector<std::string> preset_names();

} // namespace qap
