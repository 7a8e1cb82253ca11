// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used only by tests. Everything here
// is assembled directly from the model statement (explicit matrix entries,
// explicit time stepping) without calling the library's generator or solver,
// so agreement is a genuine cross-check rather than a tautology.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <random>

#include "qap/constants.hpp"
#include "qap/level_scheme.hpp"

namespace oracle {

using Cplx = std::complex<double>;
using Mat4 = Eigen::Matrix4cd;
using Mat16 = Eigen::Matrix<Cplx, 16, 16>;
using Vec16 = Eigen::Matrix<Cplx, 16, 1>;

// Rotating-frame Hamiltonian written out entry by entry: cumulative
// detunings down the diagonal, half Rabi rates off the diagonal, the RF
// element carrying the drive phase.
inline Mat4 hamiltonian(const qap::DriveParams& d) {
  Mat4 h = Mat4::Zero();
  h(1, 1) = -d.delta_p;
  h(2, 2) = -(d.delta_p + d.delta_c);
  h(3, 3) = -(d.delta_p + d.delta_c + d.delta_l);
  h(0, 1) = 0.5 * d.omega_p;
  h(1, 0) = 0.5 * d.omega_p;
  h(1, 2) = 0.5 * d.omega_c;
  h(2, 1) = 0.5 * d.omega_c;
  h(2, 3) = 0.5 * d.omega_rf;
  h(3, 2) = 0.5 * std::conj(d.omega_rf);
  return h;
}

// Master-equation right-hand side: commutator, anticommutator decay with
// rates (0, g2, g3, g4), and repopulation 2->1, 3->2, 4->1.
inline Mat4 rhs(const qap::LevelScheme& s, const qap::DriveParams& d, const Mat4& rho) {
  const Mat4 h = hamiltonian(d);
  const Cplx j(0.0, 1.0);
  Mat4 out = -j * (h * rho - rho * h);
  const double g[4] = {0.0, s.gamma2, s.gamma3, s.gamma4};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) out(r, c) -= 0.5 * (g[r] + g[c]) * rho(r, c);
  out(0, 0) += s.gamma2 * rho(1, 1) + s.gamma4 * rho(3, 3);
  out(1, 1) += s.gamma3 * rho(2, 2);
  return out;
}

// Classic fixed-step fourth-order integration of the master equation from
// the ground state, run to t_end.
inline Mat4 rk4_integrate(const qap::LevelScheme& s, const qap::DriveParams& d, double t_end,
                          double dt) {
  Mat4 rho = Mat4::Zero();
  rho(0, 0) = 1.0;
  const long steps = static_cast<long>(t_end / dt) + 1;
  for (long i = 0; i < steps; ++i) {
    const Mat4 k1 = rhs(s, d, rho);
    const Mat4 k2 = rhs(s, d, rho + 0.5 * dt * k1);
    const Mat4 k3 = rhs(s, d, rho + 0.5 * dt * k2);
    const Mat4 k4 = rhs(s, d, rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

// Long-time limit by propagator powering: the one-step fourth-order map
// P = I + A + A^2/2 + A^3/6 + A^4/24 (A = generator * dt) fixes the
// stationary state exactly (A v = 0 implies P v = v) and contracts every
// decaying mode, so P^(2^k) applied to any unit-trace state converges to the
// steady state; squaring the matrix makes 2^60 steps affordable. The
// generator matrix is built by applying the hand-written rhs to the 16 basis
// matrices (column-major vectorization).
inline Mat4 time_limit_steady_state(const qap::LevelScheme& s, const qap::DriveParams& d) {
  Mat16 gen;
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) {
      Mat4 basis = Mat4::Zero();
      basis(r, c) = 1.0;
      const Mat4 image = rhs(s, d, basis);
      for (int cc = 0; cc < 4; ++cc)
        for (int rr = 0; rr < 4; ++rr) gen(rr + 4 * cc, r + 4 * c) = image(rr, cc);
    }

  double row_sum_max = 0.0;
  for (int r = 0; r < 16; ++r) row_sum_max = std::max(row_sum_max, gen.row(r).cwiseAbs().sum());
  const double dt = 0.4 / row_sum_max;

  const Mat16 a = gen * dt;
  Mat16 p = Mat16::Identity() + a + (a * a) / 2.0 + (a * a * a) / 6.0 + (a * a * a * a) / 24.0;
  for (int k = 0; k < 60; ++k) p = p * p;

  Vec16 v = Vec16::Zero();
  v(0) = 1.0; // vec of the ground-state projector
  v = p * v;

  Mat4 rho;
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) rho(r, c) = v(r + 4 * c);
  rho /= rho.trace();
  return rho;
}

// Shared randomized operating points: optical/RF drives up to 2 pi 30 MHz,
// detunings within +-2 pi 50 MHz, arbitrary RF phase.
inline qap::DriveParams random_drive(std::mt19937_64& rng) {
  auto uni = [&rng](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * (1.0 / 9007199254740992.0));
  };
  const double two_pi_mhz = 2.0 * qap::kPi * 1.0e6;
  qap::DriveParams d;
  d.omega_p = uni(0.5, 30.0) * two_pi_mhz;
  d.omega_c = uni(0.5, 30.0) * two_pi_mhz;
  d.delta_p = uni(-50.0, 50.0) * two_pi_mhz;
  d.delta_c = uni(-50.0, 50.0) * two_pi_mhz;
  d.delta_l = uni(-50.0, 50.0) * two_pi_mhz;
  const double mag = uni(0.0, 30.0) * two_pi_mhz;
  const double phase = uni(0.0, 2.0 * qap::kPi);
  d.omega_rf = std::polar(mag, phase);
  return d;
}

} // namespace oracle
