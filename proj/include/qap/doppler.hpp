// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>

#include "qap/errors.hpp"
#include "qap/level_scheme.hpp"

namespace qap {

// Velocity-averaging settings. node_count sets the order of the underlying
// composite panels (raising it tightens an already-converged rule; the panel
// subdivision itself is adaptive). truncation is the half-width of the
// velocity window in units of the thermal speed.
struct DopplerSpec {
  int node_count = 64;
  double truncation = 4.0;

  void validate() const {
    if (node_count < 8) throw ConfigError("DopplerSpec: node_count must be >= 8");
    if (!(truncation > 0.0) || truncation > 12.0)
      throw ConfigError("DopplerSpec: truncation must lie in (0, 12]");
  }
};

// Velocity-class average of the probe coherence. The quadrature nodes,
// the Maxwell-Boltzmann weights (renormalized to sum to 1 over the truncated
// window), and the per-node coherences are exposed for inspection.
struct DopplerAverage {
  Eigen::VectorXd velocities;
  Eigen::VectorXd weights;
  Eigen::VectorXcd coherences;
  std::complex<double> average;
};

// Averages the steady-state probe coherence over the thermal velocity
// distribution, with the probe detuning shifted by -k_p v and the coupling
// detuning by +k_c v (counter-propagating beams). Panels are seeded at the
// velocities where one-, two-, and three-photon resonances (and their
// drive-dressed sidebands) occur, then bisected until the rule converges.
DopplerAverage doppler_averaged_coherence(const LevelScheme& scheme, const DriveParams& drive,
                                          const DopplerSpec& spec = {});

} // namespace qap
