// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>

#include "qap/density_matrix.hpp"
#include "qap/level_scheme.hpp"

namespace qap {

using Matrix16cd = Eigen::Matrix<std::complex<double>, 16, 16>;
using Vector16cd = Eigen::Matrix<std::complex<double>, 16, 1>;

// Rotating-frame Hamiltonian divided by hbar (rad/s). Diagonal carries the
// cumulative detunings; off-diagonals carry half the Rabi rates, with the RF
// element complex to track the superposed-field phase.
Eigen::Matrix4cd build_hamiltonian(const DriveParams& drive);

// Right-hand side of the master equation: -i[H, rho] plus decay (anticommutator
// with the rate matrix) plus repopulation (4 -> 1, 3 -> 2, 2 -> 1), which
// together conserve the trace.
Eigen::Matrix4cd lindblad_rhs(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian,
                              const Eigen::Matrix4cd& rho);

// The same generator as a 16x16 matrix acting on the column-major
// vectorization of rho (entry (i, j) at index i + 4j).
Matrix16cd liouvillian(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian);

// Null vector of the generator under a unit-trace constraint, solved as a
// dense linear system with the first row replaced by the trace condition.
// Throws SingularSystem when the constrained system is numerically singular
// (reciprocal condition estimate below 1e-14); never regularized.
DensityMatrix steady_state(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian);
DensityMatrix steady_state(const LevelScheme& scheme, const DriveParams& drive);

// Max-abs entry of lindblad_rhs at rho: how stationary the state actually is.
double stationarity_residual(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian,
                             const DensityMatrix& rho);

} // namespace qap
