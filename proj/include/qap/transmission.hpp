// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "qap/aperture.hpp"
#include "qap/doppler.hpp"
#include "qap/level_scheme.hpp"
#include "qap/rf_field.hpp"
#include "qap/susceptibility.hpp"

namespace qap {

// Uniformly sampled probe-power AC record (arbitrary linear units once
// normalized by the caller; plain watts out of the synthesis routines).
struct Waveform {
  double sample_rate = 0.0; // Hz
  Eigen::VectorXd samples;

  double duration() const {
    return samples.size() == 0 ? 0.0 : samples.size() / sample_rate;
  }
};

struct TransmissionOptions {
  DopplerSpec doppler{};
  bool exact_signal_wavenumber = false;    // default: k_s approximated by the band's k_l
  const SusceptibilityModel* model = nullptr; // optional shared surrogate (must cover the Rabi range)
};

// Instantaneous composite RF Rabi rate at (y, t): the dressing-band sum plus
// each signal tone advanced by its offset frequency relative to the band
// carrier. All tones must share one band.
std::complex<double> composite_rabi(const std::vector<RfTone>& lo_tones,
                                    const std::vector<RfTone>& signals, double y, double t,
                                    bool exact_signal_wavenumber = false);

// Transmitted probe power at time t: the absorption exponent is the spatial
// integral of Im[chi] at the instantaneous local operating point (composite
// Simpson over [0, length]), attenuating the input power.
double delta_p_full(const LevelScheme& scheme, const DriveParams& drive_template,
                    const ApertureGeometry& geometry, const LoConfiguration& lo,
                    const std::vector<RfTone>& signals, double t,
                    const TransmissionOptions& options = {});

// Transmitted power with the dressing field alone (the DC operating point).
double lo_only_transmission(const LevelScheme& scheme, const DriveParams& drive_template,
                            const ApertureGeometry& geometry, const std::vector<RfTone>& lo_tones,
                            const DopplerSpec& spec = {});

struct LinearizedOptions {
  double dc_power = -1.0; // transmitted DC power; < 0 means use probe_input_power
  bool exact_signal_wavenumber = false;
};

// Small-signal closed form of the probe-power AC component for one dressing
// tone and one weak signal tone:
//   dP(t) = -P_dc * k_p * sensitivity * L * sinc[L/lambda (cos t_s - cos t_l)]
//           * rabi_s * cos(w_delta t + phi'),
// (a stronger composite field absorbs more when sensitivity > 0, so the
// transmitted power swings opposite the field envelope)
// with phi' = (phi_s - phi_l) + pi L (cos t_s - cos t_l)/lambda. Enforces the
// strong-dressing regime rabi_s <= 0.1 * rabi_l (WeakLoViolation otherwise).
double delta_p_linearized(const ApertureGeometry& geometry, const RfTone& lo, const RfTone& sig,
                          double sensitivity, double t, const LinearizedOptions& options = {});

// One period of the power record at the offset frequency, plus its complex
// line amplitude A = (2/N) sum_n P(t_n) e^{-j 2 pi n / N} and time average.
struct IfProbe {
  Eigen::VectorXd times;
  Eigen::VectorXd power;
  std::complex<double> if_amplitude;
  double mean_power = 0.0;
};

IfProbe sample_if_response(const LevelScheme& scheme, const DriveParams& drive_template,
                           const ApertureGeometry& geometry, const LoConfiguration& lo,
                           const std::vector<RfTone>& signals, double if_angular_freq,
                           int time_samples = 16, const TransmissionOptions& options = {});

enum class SynthesisModel { linearized, full };

struct SynthesisOptions {
  SynthesisModel model = SynthesisModel::linearized;
  std::vector<BandConfig> bands{}; // per-band coupling scales; empty = all 1
  DopplerSpec doppler{};
  bool exact_signal_wavenumber = false;
};

// Sampled multi-tone AC record (time average removed). Each signal beats at
// its own offset from its band carrier; amplitudes follow the aperture
// response of its band's dressing profile. Full mode re-evaluates the
// absorption integral per sample and is restricted to one band.
// Throws AliasingRisk when sample_rate <= 4 * max offset frequency and
// ConfigError when the record is shorter than 10 beat periods.
Waveform synthesize_waveform(const LevelScheme& scheme, const DriveParams& drive_template,
                             const ApertureGeometry& geometry, const LoConfiguration& lo,
                             const std::vector<RfTone>& signals, double duration,
                             double sample_rate, const SynthesisOptions& options = {});

// Quasi-static validity: the beat period must stay slow against the fastest
// relaxation rate; callers surface a warning when the ratio is exceeded.
inline bool quasi_static_ok(double gamma2, double if_angular_freq, double max_ratio = 0.1) {
  return std::abs(if_angular_freq) < max_ratio * gamma2;
}

} // namespace qap
