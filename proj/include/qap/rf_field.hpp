// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "qap/constants.hpp"
#include "qap/errors.hpp"

namespace qap {

// One RF plane wave crossing the cell. Directions follow the receive-plane
// convention: dressing (LO) tones arrive from [180, 360] degrees, signal
// tones from [0, 180] degrees; a flag relaxes the split for co-incident
// setups. Amplitude is carried as a Rabi rate (field amplitude times the RF
// transition dipole over hbar).
struct RfTone {
  double rabi = 0.0;              // rad/s, >= 0
  double angular_frequency = 0.0; // rad/s carrier
  double direction_deg = 270.0;   // degrees
  double phase = 0.0;             // rad at y = 0, t = 0
  int band_index = 0;

  double wavelength() const { return 2.0 * kPi * kSpeedOfLight / angular_frequency; }
  double wavenumber() const { return angular_frequency / kSpeedOfLight; }

  enum class Role { dressing, signal };
  void validate(Role role, bool allow_any_half_plane = false) const {
    if (!(rabi >= 0.0)) throw ConfigError("RfTone: rabi must be >= 0");
    if (!(angular_frequency > 0.0)) throw ConfigError("RfTone: angular_frequency must be > 0");
    if (allow_any_half_plane) {
      if (direction_deg < 0.0 || direction_deg > 360.0)
        throw ConfigError("RfTone: direction_deg outside [0, 360]");
      return;
    }
    if (role == Role::dressing && (direction_deg < 180.0 || direction_deg > 360.0))
      throw ConfigError("RfTone: dressing tone direction must lie in [180, 360] degrees");
    if (role == Role::signal && (direction_deg < 0.0 || direction_deg > 180.0))
      throw ConfigError("RfTone: signal tone direction must lie in [0, 180] degrees");
  }
};

// The full dressing-field stack: one or more tones per band. Tones within a
// band share a carrier (their superposition forms the spatial profile);
// distinct bands have distinct carriers.
struct LoConfiguration {
  std::vector<RfTone> tones;

  void validate(bool allow_any_half_plane = false) const;
  std::vector<int> band_indices() const;           // sorted, unique
  std::vector<RfTone> band_tones(int band) const;  // preserves input order
};

// Dressing-field amplitude/phase at one position. When tones interfere
// destructively to below 1e-12 of the largest tone amplitude the phase is
// undefined; the sample is flagged and the phase left to the caller's
// continuation rule.
struct LoSample {
  double amplitude = 0.0;
  double phase = 0.0;
  bool amplitude_null = false;
};

// Complex sum of same-carrier tones at position y.
LoSample lo_sample(const std::vector<RfTone>& tones, double y);

// Profile along the given positions. Null samples inherit the phase of the
// nearest preceding non-null sample (or the first following one at the start
// of the grid), keeping the integrand bounded and continuous through nulls.
std::vector<LoSample> lo_profile(const std::vector<RfTone>& tones, const Eigen::VectorXd& y);

} // namespace qap
