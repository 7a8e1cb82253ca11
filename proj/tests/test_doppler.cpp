// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "qap/constants.hpp"
#include "qap/doppler.hpp"
#include "qap/lindblad.hpp"

using namespace qap;

namespace {
const LevelScheme kScheme = LevelScheme::cesium();

DriveParams generic_drive() {
  DriveParams d;
  d.omega_p = 2.0 * kPi * 5.0e6;
  d.omega_c = 2.0 * kPi * 1.0e6;
  d.omega_rf = 2.0 * kPi * 10.0e6;
  return d;
}
} // namespace

TEST_CASE("weights sum to one and stay nonnegative inside the truncated window") {
  const DriveParams d = generic_drive();
  for (int nodes : {8, 64, 128}) {
    CAPTURE(nodes);
    DopplerSpec spec;
    spec.node_count = nodes;
    const DopplerAverage avg = doppler_averaged_coherence(kScheme, d, spec);
    CHECK(std::abs(avg.weights.sum() - 1.0) <= 1e-12);
    CHECK(avg.weights.minCoeff() >= 0.0);
    const double window = spec.truncation * kScheme.thermal_speed();
    CHECK(avg.velocities.cwiseAbs().maxCoeff() <= window * (1.0 + 1e-12));
    CHECK(avg.velocities.size() == avg.weights.size());
    CHECK(avg.coherences.size() == avg.weights.size());
  }
}

TEST_CASE("frozen-gas limit reproduces the unshifted coherence") {
  const DriveParams d = generic_drive();
  LevelScheme cold = kScheme;
  // most probable speed 1e-6 m/s
  cold.t_env = 1e-12 * cold.mass / (2.0 * kBoltzmann);
  const DopplerAverage avg = doppler_averaged_coherence(cold, d);
  const std::complex<double> direct = steady_state(cold, d).probe_coherence();
  CHECK(std::abs(avg.average - direct) <= 1e-9);
}

TEST_CASE("average equals the weighted sum of exposed node coherences, order-independent") {
  const DriveParams d = generic_drive();
  const DopplerAverage avg = doppler_averaged_coherence(kScheme, d);
  std::complex<double> forward = 0.0, backward = 0.0;
  const Eigen::Index n = avg.weights.size();
  for (Eigen::Index i = 0; i < n; ++i) forward += avg.weights[i] * avg.coherences[i];
  for (Eigen::Index i = n - 1; i >= 0; --i) backward += avg.weights[i] * avg.coherences[i];
  CHECK(std::abs(forward - avg.average) <= 1e-12 * std::abs(avg.average));
  CHECK(std::abs(backward - forward) <= 1e-12 * std::abs(avg.average));
}

TEST_CASE("node refinement 64 to 128 moves the average by at most 1e-6 relative") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) {
    CAPTURE(i);
    DriveParams d = oracle::random_drive(rng);
    // keep detunings inside the averaged feature span
    d.delta_p *= 0.2;
    d.delta_c *= 0.2;
    d.delta_l *= 0.2;
    DopplerSpec coarse;
    coarse.node_count = 64;
    DopplerSpec fine;
    fine.node_count = 128;
    const auto a = doppler_averaged_coherence(kScheme, d, coarse);
    const auto b = doppler_averaged_coherence(kScheme, d, fine);
    CHECK(std::abs(a.average - b.average) <= 1e-6 * std::abs(b.average));
  }
}

TEST_CASE("no probe drive means no probe coherence") {
  DriveParams d = generic_drive();
  d.omega_p = 0.0;
  const DopplerAverage avg = doppler_averaged_coherence(kScheme, d);
  CHECK(std::abs(avg.average) <= 1e-15);
}

TEST_CASE("spec validation rejects tiny node counts and bad truncation") {
  DopplerSpec spec;
  spec.node_count = 4;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.node_count = 64;
  spec.truncation = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.truncation = 13.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}
