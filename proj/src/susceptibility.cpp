// SPDX-License-Identifier: Apache-2.0
#include "qap/susceptibility.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qap/constants.hpp"
#include "qap/errors.hpp"

namespace qap {

double susceptibility_prefactor(const LevelScheme& scheme, double omega_p) {
  if (!(omega_p > 0.0))
    throw ConfigError("susceptibility: probe Rabi rate must be > 0");
  return -2.0 * scheme.n0 * scheme.mu12 * scheme.mu12 / (kEpsilon0 * kHbar * omega_p);
}

std::complex<double> susceptibility(const LevelScheme& scheme, const DriveParams& drive,
                                    const DopplerSpec& spec) {
  const double prefactor = susceptibility_prefactor(scheme, drive.omega_p);
  return prefactor * doppler_averaged_coherence(scheme, drive, spec).average;
}

double lo_sensitivity(const LevelScheme& scheme, const DriveParams& drive, const DopplerSpec& spec,
                      const SensitivityOptions& options) {
  const double rabi = std::abs(drive.omega_rf);
  if (!(rabi > 0.0)) throw ConfigError("lo_sensitivity: dressing Rabi rate must be > 0");
  if (!(options.step > 0.0) || options.step > 0.1)
    throw ConfigError("lo_sensitivity: step must lie in (0, 0.1]");
  if (options.step < 1e-7) {
    std::ostringstream msg;
    msg << "lo_sensitivity: step " << options.step
        << " puts the finite difference below the solver noise floor";
    throw StepTooSmall(msg.str());
  }

  auto im_chi_at = [&](double omega) {
    DriveParams d = drive;
    d.omega_rf = omega;
    return susceptibility(scheme, d, spec).imag();
  };
  auto central = [&](double step) {
    const double h = step * rabi;
    return (im_chi_at(rabi + h) - im_chi_at(rabi - h)) / (2.0 * h);
  };

  const double d1 = central(options.step);
  if (!options.richardson) return d1;
  const double d2 = central(0.5 * options.step);
  return (4.0 * d2 - d1) / 3.0;
}

SusceptibilityModel SusceptibilityModel::build(const LevelScheme& scheme,
                                               const DriveParams& drive_template, double max_rabi,
                                               const DopplerSpec& spec, double tail_tol) {
  if (!(max_rabi > 0.0)) throw ConfigError("SusceptibilityModel: max_rabi must be > 0");
  const double prefactor = susceptibility_prefactor(scheme, drive_template.omega_p);

  int n = 97;
  constexpr int kMaxNodes = 769;
  for (;;) {
    const Eigen::VectorXd x = ChebyshevSeries::nodes(0.0, max_rabi, n);
    Eigen::VectorXd re(n), im(n);
    for (int j = 0; j < n; ++j) {
      DriveParams d = drive_template;
      d.omega_rf = x[j];
      const std::complex<double> avg = doppler_averaged_coherence(scheme, d, spec).average;
      re[j] = prefactor * avg.real();
      im[j] = prefactor * avg.imag();
    }
    ChebyshevSeries re_fit = ChebyshevSeries::from_samples(re, 0.0, max_rabi);
    ChebyshevSeries im_fit = ChebyshevSeries::from_samples(im, 0.0, max_rabi);

    auto tail_ok = [&](const ChebyshevSeries& s) {
      const Eigen::VectorXd& c = s.coefficients();
      const double lead = c.cwiseAbs().maxCoeff();
      const double tail = c.tail(8).cwiseAbs().maxCoeff();
      return tail <= tail_tol * lead + 1e-300;
    };
    if ((tail_ok(re_fit) && tail_ok(im_fit)) || 2 * n - 1 > kMaxNodes)
      return SusceptibilityModel(std::move(re_fit), std::move(im_fit));
    n = 2 * n - 1;
  }
}

double SusceptibilityModel::clamped(double rabi) const {
  const double hi = im_.upper();
  const double slack = 1e-9 * hi;
  if (rabi < -slack || rabi > hi + slack) {
    std::ostringstream msg;
    msg << "SusceptibilityModel: Rabi rate " << rabi << " outside fitted range [0, " << hi << "]";
    throw Error(msg.str());
  }
  return std::clamp(rabi, 0.0, hi);
}

} // namespace qap
