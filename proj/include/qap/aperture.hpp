// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "qap/beam_pattern.hpp"
#include "qap/constants.hpp"
#include "qap/doppler.hpp"
#include "qap/errors.hpp"
#include "qap/level_scheme.hpp"
#include "qap/rf_field.hpp"
#include "qap/susceptibility.hpp"

namespace qap {

// Vapor-cell line aperture traversed by the probe along y in [0, length].
struct ApertureGeometry {
  double length = 0.08;            // m
  int spatial_samples = 0;         // 0 = choose automatically (odd, oscillation-resolving)
  double probe_input_power = 1.5e-3; // W
  double probe_wavenumber = 2.0 * kPi / 852.35e-9; // rad/m

  void validate() const {
    if (!(length >= 0.01 && length <= 1.0))
      throw ConfigError("ApertureGeometry: length must lie in [0.01, 1.0] m");
    if (spatial_samples != 0 && spatial_samples < 2)
      throw ConfigError("ApertureGeometry: spatial_samples must be 0 (auto) or >= 2");
    if (!(probe_input_power > 0.0))
      throw ConfigError("ApertureGeometry: probe_input_power must be > 0");
    if (!(probe_wavenumber > 0.0))
      throw ConfigError("ApertureGeometry: probe_wavenumber must be > 0");
  }
};

// Odd Simpson node count resolving the fastest spatial oscillation:
// >= 40 nodes per shortest projected wavelength (2*pi / max_projected_k),
// floor 201.
int recommended_spatial_samples(double length, double max_projected_wavenumber);

// Half-power beamwidth of the uniform-aperture law, radians: 0.886 lambda / L.
double hpbw_theoretical(double length, double wavelength);

// Closed-form single-dressing-tone pattern: sinc^2[L/lambda (cos t_s - cos t_l)].
BeamPattern pattern_single_peak(const ApertureGeometry& geometry, const RfTone& lo,
                                const Eigen::VectorXd& theta_s_deg);

struct MultipeakDiagnostics {
  int spatial_samples = 0;
  int null_samples = 0; // positions where the dressing amplitude collapsed
};

// Pattern of a multi-tone (one-band) dressing profile: the squared modulus of
// the aperture integral of the local small-signal sensitivity against the
// residual phase e^{j(k y cos theta - phi_l(y))}, normalized over the grid.
// At null positions the sensitivity is evaluated at a floor of 1e-4 of the
// peak dressing amplitude and the phase continued from neighbors.
BeamPattern pattern_multipeak(const ApertureGeometry& geometry, const LoConfiguration& lo,
                              const LevelScheme& scheme, const DriveParams& drive_template,
                              const Eigen::VectorXd& theta_s_deg, const DopplerSpec& spec = {},
                              MultipeakDiagnostics* diagnostics = nullptr);

// Spatial quadrature of one dressing profile, built once and reusable across
// arrival angles: Simpson nodes/weights over [0, length], the local
// small-signal sensitivity (floor-clamped through amplitude nulls at 1e-4 of
// the profile peak), and the dressing phase. response() evaluates
// integral s(y) e^{j (k y cos theta - phi_l(y))} dy.
//
// With geometry.spatial_samples == 0 the node count starts from the
// oscillation criterion and doubles until normalized probe responses agree
// to 3e-3 (past that the pattern error is already a few 1e-4);
// multi-tone profiles need this because the sensitivity spikes near beat
// nulls on a scale much finer than the beat itself. A nonzero
// spatial_samples pins the grid exactly (reproducible objective surfaces).
class ApertureKernel {
 public:
  ApertureKernel(const ApertureGeometry& geometry, const std::vector<RfTone>& band_tones,
                 const SusceptibilityModel& model);

  std::complex<double> response(double theta_s_deg, double signal_wavenumber) const;

  const Eigen::VectorXd& nodes() const { return y_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::VectorXd& sensitivity() const { return sensitivity_; }
  const Eigen::VectorXd& lo_phase() const { return lo_phase_; }
  int spatial_samples() const { return static_cast<int>(y_.size()); }
  int null_samples() const { return null_samples_; }

 private:
  Eigen::VectorXd y_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd sensitivity_;
  Eigen::VectorXd lo_phase_;
  int null_samples_ = 0;
};

// Complex aperture response at one arrival angle for a given dressing
// profile; pattern_multipeak is its normalized squared modulus, and the
// linearized waveform amplitude is proportional to it. Units: m times the
// sensitivity's units.
std::complex<double> aperture_response(const ApertureGeometry& geometry,
                                       const std::vector<RfTone>& band_tones,
                                       const SusceptibilityModel& model, double theta_s_deg,
                                       double signal_wavenumber, int* null_samples = nullptr);

// One carrier band of a multi-band stack: wavelength, relative coupling
// strength of its RF transition, and the offset (intermediate) frequency its
// signals beat at.
struct BandConfig {
  int band_index = 0;
  double wavelength = 0.0;      // m
  double coupling_scale = 1.0;  // dimensionless
  double if_angular_freq = 0.0; // rad/s

  void validate() const {
    if (!(wavelength > 0.0)) throw ConfigError("BandConfig: wavelength must be > 0");
    if (!(coupling_scale > 0.0)) throw ConfigError("BandConfig: coupling_scale must be > 0");
  }
};

struct BandChannel {
  BandConfig band;
  RfTone lo;
};

// Independent per-band single-tone patterns at each band's wavelength; the
// per-band sensitivity and coupling scale cancel in each normalized pattern.
std::vector<BeamPattern> pattern_multiband(const ApertureGeometry& geometry,
                                           const std::vector<BandChannel>& bands,
                                           const Eigen::VectorXd& theta_s_deg);

} // namespace qap
