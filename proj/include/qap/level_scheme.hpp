// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>

#include "qap/constants.hpp"
#include "qap/errors.hpp"

namespace qap {

// Atomic constants of the four-level ladder: ground (1) and optically excited
// (2) states joined by the probe beam, and two high-lying states (3, 4)
// joined by the RF field, with the coupling beam bridging 2 and 3.
struct LevelScheme {
  double gamma2 = 2.0 * kPi * 5.2e6; // rad/s, decay rate of level 2
  double gamma3 = 2.0 * kPi * 1.0e4; // rad/s, effective decay of level 3
  double gamma4 = 2.0 * kPi * 1.0e4; // rad/s, effective decay of level 4
  double mu12 = 3.8e-29;             // C*m, probe transition dipole
  double mu34 = 1.25e-26;            // C*m, RF transition dipole
  double lambda_p = 852.35e-9;       // m, probe wavelength
  double lambda_c = 509.26e-9;       // m, coupling wavelength
  double n0 = 1.0e14;                // m^-3, atomic number density
  double mass = 2.2069e-25;          // kg
  double t_env = 300.0;              // K

  static LevelScheme cesium() { return LevelScheme{}; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(std::string("LevelScheme: ") + name + " must be strictly positive");
    };
    positive(gamma2, "gamma2");
    positive(gamma3, "gamma3");
    positive(gamma4, "gamma4");
    positive(mu12, "mu12");
    positive(mu34, "mu34");
    positive(lambda_p, "lambda_p");
    positive(lambda_c, "lambda_c");
    positive(n0, "n0");
    positive(mass, "mass");
    positive(t_env, "t_env");
  }

  // Most probable thermal speed sqrt(2 kB T / m), the width of the
  // Maxwell-Boltzmann velocity density exp(-v^2/u^2)/(sqrt(pi) u).
  double thermal_speed() const { return std::sqrt(2.0 * kBoltzmann * t_env / mass); }

  double probe_wavenumber() const { return 2.0 * kPi / lambda_p; }
  double coupling_wavenumber() const { return 2.0 * kPi / lambda_c; }

  // Rabi rate (rad/s) of the RF transition for a field amplitude in V/m.
  double rf_rabi_from_field(double e_field) const { return mu34 * e_field / kHbar; }
};

// Drive operating point: optical Rabi rates, detunings, and the composite RF
// Rabi rate (complex; its phase tracks the instantaneous superposed field).
struct DriveParams {
  double omega_p = 2.0 * kPi * 5.0e6; // rad/s, probe Rabi rate
  double omega_c = 2.0 * kPi * 1.0e6; // rad/s, coupling Rabi rate
  double delta_p = 0.0;               // rad/s, probe detuning
  double delta_c = 0.0;               // rad/s, coupling detuning
  double delta_l = 0.0;               // rad/s, RF detuning
  std::complex<double> omega_rf{0.0, 0.0}; // rad/s, composite RF Rabi rate

  void validate() const {
    auto finite = [](double v, const char* name) {
      if (!std::isfinite(v))
        throw ConfigError(std::string("DriveParams: ") + name + " must be finite");
    };
    finite(omega_p, "omega_p");
    finite(omega_c, "omega_c");
    finite(delta_p, "delta_p");
    finite(delta_c, "delta_c");
    finite(delta_l, "delta_l");
    finite(omega_rf.real(), "omega_rf.re");
    finite(omega_rf.imag(), "omega_rf.im");
    if (omega_p < 0.0) throw ConfigError("DriveParams: omega_p must be >= 0");
    if (omega_c < 0.0) throw ConfigError("DriveParams: omega_c must be >= 0");
  }

  // Operating point shifted for an atom moving at velocity v along the probe
  // axis; probe and coupling beams counter-propagate.
  DriveParams doppler_shifted(double v, double k_probe, double k_coupling) const {
    DriveParams d = *this;
    d.delta_p = delta_p - k_probe * v;
    d.delta_c = delta_c + k_coupling * v;
    return d;
  }
};

} // namespace qap
