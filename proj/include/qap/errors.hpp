// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qap {

// Base class for all hard failures raised by this library. Soft conditions
// (amplitude nulls, fit non-convergence, demodulator lock loss) are reported
// through result flags instead, so sweeps can continue past individual cells.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Linear steady-state system is singular or near-singular (e.g. all drives
// zero, or a pathological parameter set). Never silently regularized.
class SingularSystem : public Error {
public:
  explicit SingularSystem(const std::string& what) : Error(what) {}
};

// Finite-difference step too small for the scale of the operating point;
// the difference would be dominated by solver noise.
class StepTooSmall : public Error {
public:
  explicit StepTooSmall(const std::string& what) : Error(what) {}
};

// A signal tone is too strong relative to the reference oscillator for the
// small-signal linearization to hold.
class WeakLoViolation : public Error {
public:
  explicit WeakLoViolation(const std::string& what) : Error(what) {}
};

// Sampling configuration cannot represent the requested tone spacing.
class AliasingRisk : public Error {
public:
  explicit AliasingRisk(const std::string& what) : Error(what) {}
};

// Curve fit could not be posed: too few usable extrema, coincident peaks,
// or a collapsed parameterization.
class DegenerateFit : public Error {
public:
  explicit DegenerateFit(const std::string& what) : Error(what) {}
};

// A requested level crossing does not exist inside the scanned window.
class NoCrossing : public Error {
public:
  explicit NoCrossing(const std::string& what) : Error(what) {}
};

// Paired sequences of unequal length.
class LengthMismatch : public Error {
public:
  explicit LengthMismatch(const std::string& what) : Error(what) {}
};

// Invalid or inconsistent user configuration (CLI/JSON layer).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

} // namespace qap
