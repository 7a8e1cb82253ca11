// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace qap {

// CODATA 2018 values, SI units.
inline constexpr double kHbar = 1.054571817e-34;      // J*s
inline constexpr double kEpsilon0 = 8.8541878128e-12; // F/m
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;

} // namespace qap
