// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "qap/constants.hpp"

namespace qap {

// Normalized sinc: sin(pi x)/(pi x), with the removable singularity filled by
// its Taylor expansion so the function is smooth through x = 0.
template <typename Scalar>
Scalar sinc(Scalar x) {
  const Scalar px = Scalar(kPi) * x;
  if (std::abs(px) < Scalar(1e-4)) {
    const Scalar p2 = px * px;
    return Scalar(1) - p2 / Scalar(6) + p2 * p2 / Scalar(120);
  }
  return std::sin(px) / px;
}

// Composite Simpson weights for `points` uniformly spaced samples spanning
// length `span`. `points` must be odd and >= 3.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> simpson_weights(int points, Scalar span) {
  if (points < 3 || points % 2 == 0)
    throw std::invalid_argument("simpson_weights: points must be odd and >= 3");
  const Scalar h = span / Scalar(points - 1);
  Eigen::Vector<Scalar, Eigen::Dynamic> w(points);
  w.setConstant(h * Scalar(2) / Scalar(3));
  for (int i = 1; i < points; i += 2) w[i] = h * Scalar(4) / Scalar(3);
  w[0] = w[points - 1] = h / Scalar(3);
  return w;
}

inline int next_odd_at_least(int n) { return (n % 2 == 0) ? n + 1 : n; }

// Gauss-Legendre rule on [-1, 1] via the symmetric tridiagonal Jacobi matrix
// (Golub-Welsch). Nodes are the eigenvalues; weight_k = 2 * v0k^2 where v0k is
// the first component of the k-th normalized eigenvector.
struct GaussLegendreRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

inline GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  if (n == 1) {
    GaussLegendreRule r;
    r.nodes = Eigen::VectorXd::Zero(1);
    r.weights = Eigen::VectorXd::Constant(1, 2.0);
    return r;
  }
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussLegendreRule r;
  r.nodes = es.eigenvalues();
  r.weights = 2.0 * es.eigenvectors().row(0).array().square();
  return r;
}

// Chebyshev interpolant of a smooth function on [lo, hi], first-kind nodes.
// Coefficients are stored so that f(x) = sum_k coeff[k] * T_k(t(x)) with
// t(x) = (2x - lo - hi) / (hi - lo); evaluation uses Clenshaw recurrence.
class ChebyshevSeries {
public:
  ChebyshevSeries() = default;
  ChebyshevSeries(Eigen::VectorXd coeff, double lo, double hi)
      : coeff_(std::move(coeff)), lo_(lo), hi_(hi) {}

  // First-kind interpolation points mapped onto [lo, hi], j = 0..n-1.
  static Eigen::VectorXd nodes(double lo, double hi, int n) {
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) {
      const double t = std::cos(kPi * (j + 0.5) / n);
      x[j] = 0.5 * (hi - lo) * t + 0.5 * (hi + lo);
    }
    return x;
  }

  // Builds the interpolant from samples taken at nodes(lo, hi, fx.size()).
  static ChebyshevSeries from_samples(const Eigen::VectorXd& fx, double lo, double hi) {
    const int n = static_cast<int>(fx.size());
    if (n < 2) throw std::invalid_argument("ChebyshevSeries: need >= 2 samples");
    if (!(hi > lo)) throw std::invalid_argument("ChebyshevSeries: empty interval");
    Eigen::VectorXd c(n);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += fx[j] * std::cos(kPi * k * (j + 0.5) / n);
      c[k] = 2.0 * s / n;
    }
    c[0] *= 0.5;
    return ChebyshevSeries(std::move(c), lo, hi);
  }

  template <typename Fn>
  static ChebyshevSeries fit(Fn&& f, double lo, double hi, int n) {
    const Eigen::VectorXd x = nodes(lo, hi, n);
    Eigen::VectorXd fx(n);
    for (int j = 0; j < n; ++j) fx[j] = f(x[j]);
    return from_samples(fx, lo, hi);
  }

  double operator()(double x) const {
    const double t = (2.0 * x - lo_ - hi_) / (hi_ - lo_);
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(coeff_.size()) - 1; k >= 1; --k) {
      const double b = 2.0 * t * b1 - b2 + coeff_[k];
      b2 = b1;
      b1 = b;
    }
    return t * b1 - b2 + coeff_[0];
  }

  // Coefficient-space differentiation; exact for the interpolant itself.
  ChebyshevSeries derivative() const {
    const int n = static_cast<int>(coeff_.size());
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    double next = 0.0, next2 = 0.0; // d_{k+1}, d_{k+2}
    for (int k = n - 2; k >= 0; --k) {
      const double dk = next2 + 2.0 * (k + 1) * coeff_[k + 1];
      next2 = next;
      next = dk;
      d[k] = dk;
    }
    d[0] *= 0.5;
    d *= 2.0 / (hi_ - lo_);
    return ChebyshevSeries(std::move(d), lo_, hi_);
  }

  double lower() const { return lo_; }
  double upper() const { return hi_; }
  const Eigen::VectorXd& coefficients() const { return coeff_; }

private:
  Eigen::VectorXd coeff_;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_radix2: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> step(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
}

// FNV-1a 64-bit hash; used for output file checksums in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

} // namespace qap
