// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>

namespace qap {

// Normalized receive pattern sampled on an angle grid: gains in [0, 1] with
// the sampled maximum at exactly 1.
struct BeamPattern {
  Eigen::VectorXd angles_deg;
  Eigen::VectorXd gains;

  double peak_angle_deg() const {
    Eigen::Index i = 0;
    gains.maxCoeff(&i);
    return angles_deg[i];
  }

  void validate() const;
};

// Rescales so the maximum becomes exactly 1; all-zero input is left as-is.
void normalize_gains(Eigen::VectorXd& gains);

// CSV with header `theta_deg,gain`, locale-independent formatting: angles
// with 4 decimals, gains with 9 significant digits, final row
// newline-terminated.
void write_pattern_csv(const BeamPattern& pattern, std::ostream& out);
std::string pattern_to_csv(const BeamPattern& pattern);

// Strict parse of the same format; throws ConfigError on malformed rows or
// non-increasing angles.
BeamPattern read_pattern_csv(std::istream& in);

} // namespace qap
