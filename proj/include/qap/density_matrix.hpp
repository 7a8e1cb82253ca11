// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>

namespace qap {

// 4x4 density matrix of the ladder system. Stored exactly as solved; the
// metric accessors quantify how well the physical invariants (Hermiticity,
// unit trace, positive semidefiniteness) hold.
class DensityMatrix {
public:
  DensityMatrix() { rho_.setZero(); }
  explicit DensityMatrix(const Eigen::Matrix4cd& rho) : rho_(rho) {}

  const Eigen::Matrix4cd& matrix() const { return rho_; }

  // Level indices are 1-based (levels 1..4).
  double population(int level) const { return rho_(level - 1, level - 1).real(); }
  std::complex<double> coherence(int i, int j) const { return rho_(i - 1, j - 1); }

  // The coherence between the optically excited and ground states; its
  // imaginary part sets the probe absorption.
  std::complex<double> probe_coherence() const { return rho_(1, 0); }

  double hermiticity_error() const {
    return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  }

  double trace_error() const { return std::abs(rho_.trace() - std::complex<double>(1.0, 0.0)); }

  double min_eigenvalue() const {
    const Eigen::Matrix4cd sym = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(sym);
    return es.eigenvalues().minCoeff();
  }

private:
  Eigen::Matrix4cd rho_;
};

} // namespace qap
