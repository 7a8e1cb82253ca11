// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "qap/aperture.hpp"
#include "qap/beam_pattern.hpp"
#include "qap/doppler.hpp"
#include "qap/errors.hpp"
#include "qap/level_scheme.hpp"
#include "qap/rf_field.hpp"

namespace qap {

// Absorption trace: Im[chi] sampled over a coupling-detuning grid.
struct SpectrumTrace {
  Eigen::VectorXd detunings;  // rad/s, strictly increasing
  Eigen::VectorXd absorption; // Im[chi] >= -1e-9

  void validate() const;
};

struct HpbwResult {
  double width_deg = 0.0;
  bool censored = false;  // half-power level never reached inside the sector
  bool wide_beam = false; // width above 60 degrees; small-angle law unreliable
};

// Linear-interpolated width between the two gain = 0.5 crossings bracketing
// the peak. Requires a unique global maximum away from the grid boundary
// (NoCrossing otherwise); a beam wider than the sampled sector comes back
// censored rather than invented.
HpbwResult measure_hpbw(const BeamPattern& pattern);

// Im[chi] versus coupling detuning at fixed probe/RF drive. Grid points are
// independent; threads = 0 uses hardware concurrency, 1 stays serial, and the
// result does not depend on the worker count.
SpectrumTrace eit_spectrum(const LevelScheme& scheme, const DriveParams& drive_template,
                           const Eigen::VectorXd& delta_c_grid, const DopplerSpec& spec = {},
                           int threads = 1);

// Sum of two free-sign Lorentzians plus a constant baseline, least-squares
// fitted (Levenberg-Marquardt, numeric Jacobian) with initialization from the
// two most prominent local extrema relative to the trace edges.
struct LorentzianPairFit {
  double separation = 0.0; // |c2 - c1|, rad/s
  double residual = 0.0;   // sum of squared errors in normalized coordinates
  bool converged = false;
  Eigen::VectorXd parameters; // baseline, a1, c1, w1, a2, c2, w2 (trace units)
};

// Throws DegenerateFit when fewer than two usable extrema exist or the
// fitted centers collapse to within two grid steps.
LorentzianPairFit lorentzian_pair_fit(const SpectrumTrace& trace);

// Dressing-free angular response: per arrival angle, the signal strength is
// estimated from the fitted splitting of the absorption trace; under the
// plane-wave cell model the estimate carries no angle dependence, so the
// normalized response is flat.
BeamPattern eit_at_angular_response(const LevelScheme& scheme, const DriveParams& drive_template,
                                    const RfTone& sig, const Eigen::VectorXd& theta_s_deg,
                                    const Eigen::VectorXd& delta_c_grid,
                                    const DopplerSpec& spec = {}, int threads = 1);

struct FitResult {
  Eigen::VectorXd phases; // rad, one per dressing tone, each in [0, 2 pi)
  double residual = 0.0;  // sum of squared gain errors
  bool converged = false;
  int evaluations = 0;
};

struct PhaseFitOptions {
  int grid_points = 16;    // coarse-search resolution per free phase
  int max_evaluations = 5000;
  int polish_starts = 8;   // best coarse candidates refined independently
  DopplerSpec doppler{};
  // Optional prebuilt surrogate covering the summed dressing Rabi range;
  // nullptr builds one internally.
  const SusceptibilityModel* model = nullptr;
};

// Recovers dressing-tone phases from a measured normalized pattern by
// minimizing the squared gain residual against the multi-tone model: coarse
// grid over the free phases, then independent derivative-free polish of the
// best polish_starts candidates (the landscape is multimodal and its basins
// can be narrower than one coarse cell, so the global basin's grid sample is
// not always the grid argmin). The overall phase is gauge (the pattern
// depends on differences only), so the first tone's phase is pinned to 0 and
// the rest searched. Budget exhaustion returns best-so-far with
// converged = false.
FitResult fit_lo_phases(const BeamPattern& measured, const ApertureGeometry& geometry,
                        const LoConfiguration& lo, const LevelScheme& scheme,
                        const DriveParams& drive_template, const PhaseFitOptions& options = {});

} // namespace qap
