// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>

#include "qap/doppler.hpp"
#include "qap/level_scheme.hpp"
#include "qap/numerics.hpp"

namespace qap {

// Scale between the averaged coherence and the complex susceptibility:
// chi = -2 n0 mu12^2 / (eps0 hbar omega_p) * <rho21>. Requires omega_p > 0.
double susceptibility_prefactor(const LevelScheme& scheme, double omega_p);

// Complex probe susceptibility at the drive operating point, Doppler
// averaged. Im[chi] >= 0 for this absorptive medium.
std::complex<double> susceptibility(const LevelScheme& scheme, const DriveParams& drive,
                                    const DopplerSpec& spec = {});

struct SensitivityOptions {
  double step = 1e-3;      // relative central-difference step
  bool richardson = false; // optional step-halving extrapolation
};

// d Im[chi] / d Omega at the dressing-only operating point Omega = |omega_rf|,
// by central finite difference with h = step * Omega. Requires |omega_rf| > 0
// and step in (0, 0.1]; throws StepTooSmall when h would sit below the solver
// noise floor.
double lo_sensitivity(const LevelScheme& scheme, const DriveParams& drive,
                      const DopplerSpec& spec = {}, const SensitivityOptions& options = {});

// Chebyshev surrogate of chi as a function of the RF Rabi magnitude on
// [0, max_rabi]. The coherence depends on the RF drive only through its
// magnitude (a phase rotation of level 4 removes the drive phase without
// touching the probe coherence), so a 1-D interpolant is exact in principle;
// the fit is refined until its coefficient tail drops below tail_tol
// relative to the leading coefficients. Replaces per-point quantized
// memoization for spatial/temporal scans; accuracy is asserted in tests
// against direct evaluation.
class SusceptibilityModel {
public:
  static SusceptibilityModel build(const LevelScheme& scheme, const DriveParams& drive_template,
                                   double max_rabi, const DopplerSpec& spec = {},
                                   double tail_tol = 1e-10);

  std::complex<double> chi(double rabi) const {
    return {re_(clamped(rabi)), im_(clamped(rabi))};
  }
  double im_chi(double rabi) const { return im_(clamped(rabi)); }
  // d Im[chi] / d Omega via coefficient-space differentiation.
  double im_chi_slope(double rabi) const { return d_im_(clamped(rabi)); }

  double max_rabi() const { return im_.upper(); }
  int node_count() const { return static_cast<int>(im_.coefficients().size()); }

private:
  SusceptibilityModel(ChebyshevSeries re, ChebyshevSeries im)
      : re_(std::move(re)), im_(std::move(im)), d_im_(im_.derivative()) {}

  // Guards against rounding barely outside the fitted interval; genuine
  // out-of-range use is a caller bug and throws.
  double clamped(double rabi) const;

  ChebyshevSeries re_, im_, d_im_;
};

} // namespace qap
