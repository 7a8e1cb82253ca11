// SPDX-License-Identifier: Apache-2.0
#include "qap/lindblad.hpp"

#include <sstream>

#include "qap/errors.hpp"

namespace qap {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

Eigen::Vector4d decay_rates(const LevelScheme& scheme) {
  return {0.0, scheme.gamma2, scheme.gamma3, scheme.gamma4};
}

} // namespace

Eigen::Matrix4cd build_hamiltonian(const DriveParams& drive) {
  drive.validate();
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  h(1, 1) = -drive.delta_p;
  h(2, 2) = -(drive.delta_p + drive.delta_c);
  h(3, 3) = -(drive.delta_p + drive.delta_c + drive.delta_l);
  h(0, 1) = 0.5 * drive.omega_p;
  h(1, 0) = 0.5 * drive.omega_p;
  h(1, 2) = 0.5 * drive.omega_c;
  h(2, 1) = 0.5 * drive.omega_c;
  h(2, 3) = 0.5 * drive.omega_rf;
  h(3, 2) = 0.5 * std::conj(drive.omega_rf);
  return h;
}

Eigen::Matrix4cd lindblad_rhs(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian,
                              const Eigen::Matrix4cd& rho) {
  const Eigen::Vector4d gamma = decay_rates(scheme);
  Eigen::Matrix4cd out = -kImag * (hamiltonian * rho - rho * hamiltonian);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) -= 0.5 * (gamma[i] + gamma[j]) * rho(i, j);
  // Repopulation: level 2 and level 4 decay into the ground state, level 3
  // into level 2; together with the decay term the trace is conserved.
  out(0, 0) += scheme.gamma2 * rho(1, 1) + scheme.gamma4 * rho(3, 3);
  out(1, 1) += scheme.gamma3 * rho(2, 2);
  return out;
}

Matrix16cd liouvillian(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian) {
  const Eigen::Vector4d gamma = decay_rates(scheme);
  Matrix16cd gen = Matrix16cd::Zero();
  auto idx = [](int i, int j) { return i + 4 * j; }; // column-major vec(rho)
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const int row = idx(i, j);
      for (int k = 0; k < 4; ++k) {
        gen(row, idx(k, j)) += -kImag * hamiltonian(i, k);
        gen(row, idx(i, k)) += kImag * hamiltonian(k, j);
      }
      gen(row, row) += -0.5 * (gamma[i] + gamma[j]);
    }
  }
  gen(idx(0, 0), idx(1, 1)) += scheme.gamma2;
  gen(idx(0, 0), idx(3, 3)) += scheme.gamma4;
  gen(idx(1, 1), idx(2, 2)) += scheme.gamma3;
  return gen;
}

DensityMatrix steady_state(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian) {
  scheme.validate();
  Matrix16cd gen = liouvillian(scheme, hamiltonian);
  // The generator is rank-deficient (every Lindblad generator annihilates the
  // steady state and preserves the trace); replacing one redundant row with
  // the trace condition pins the physical solution.
  gen.row(0).setZero();
  for (int i = 0; i < 4; ++i) gen(0, i + 4 * i) = 1.0;
  Vector16cd rhs = Vector16cd::Zero();
  rhs(0) = 1.0;

  const Eigen::PartialPivLU<Matrix16cd> lu(gen);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "steady_state: trace-constrained generator is numerically singular (rcond=" << rcond
        << ")";
    throw SingularSystem(msg.str());
  }
  const Vector16cd solution = lu.solve(rhs);

  Eigen::Matrix4cd rho;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) rho(i, j) = solution(i + 4 * j);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

DensityMatrix steady_state(const LevelScheme& scheme, const DriveParams& drive) {
  return steady_state(scheme, build_hamiltonian(drive));
}

double stationarity_residual(const LevelScheme& scheme, const Eigen::Matrix4cd& hamiltonian,
                             const DensityMatrix& rho) {
  return lindblad_rhs(scheme, hamiltonian, rho.matrix()).cwiseAbs().maxCoeff();
}

} // namespace qap
