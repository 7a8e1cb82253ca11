// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "qap/constants.hpp"
#include "qap/doppler.hpp"
#include "qap/susceptibility.hpp"

using namespace qap;

namespace {
const LevelScheme kScheme = LevelScheme::cesium();

DriveParams dressing_drive(double rabi) {
  DriveParams d;
  d.omega_p = 2.0 * kPi * 5.0e6;
  d.omega_c = 2.0 * kPi * 1.0e6;
  d.omega_rf = rabi;
  return d;
}

// One shared surrogate for the whole binary; building it solves the master
// equation across the fitted Rabi range once (~half a minute).
const SusceptibilityModel& shared_model() {
  static const SusceptibilityModel model = SusceptibilityModel::build(
      kScheme, dressing_drive(0.0), 2.0 * kPi * 25.0e6, DopplerSpec{});
  return model;
}
} // namespace

TEST_CASE("prefactor is positive and linear in density") {
  const double base = susceptibility_prefactor(kScheme, 2.0 * kPi * 5.0e6);
  CHECK(base > 0.0);
  LevelScheme doubled = kScheme;
  doubled.n0 *= 2.0;
  CHECK(susceptibility_prefactor(doubled, 2.0 * kPi * 5.0e6) ==
        doctest::Approx(2.0 * base).epsilon(1e-12));
  CHECK_THROWS_AS(susceptibility_prefactor(kScheme, 0.0), Error);
}

TEST_CASE("doubling the density doubles the susceptibility") {
  const DriveParams d = dressing_drive(2.0 * kPi * 10.0e6);
  const std::complex<double> chi1 = susceptibility(kScheme, d);
  LevelScheme doubled = kScheme;
  doubled.n0 *= 2.0;
  const std::complex<double> chi2 = susceptibility(doubled, d);
  CHECK(std::abs(chi2 - 2.0 * chi1) <= 1e-9 * std::abs(chi1));
}

TEST_CASE("imaginary part stays nonnegative across the detuning and drive grid") {
  const double mhz = 2.0 * kPi * 1.0e6;
  for (double dc : {-50.0, 0.0, 50.0})
    for (double dl : {-50.0, 0.0, 50.0})
      for (double om : {5.0, 30.0}) {
        CAPTURE(dc);
        CAPTURE(dl);
        CAPTURE(om);
        DriveParams d = dressing_drive(om * mhz);
        d.delta_c = dc * mhz;
        d.delta_l = dl * mhz;
        const std::complex<double> chi = susceptibility(kScheme, d);
        CHECK(chi.imag() >= -1e-9);
      }
}

TEST_CASE("coupling beam opens a transparency dip that vanishes when it is off") {
  auto im_at = [&](double omega_c, double delta_c) {
    DriveParams d;
    d.omega_p = 2.0 * kPi * 5.0e6;
    d.omega_c = omega_c;
    d.delta_c = delta_c;
    return susceptibility(kScheme, d).imag();
  };
  const double off = 2.0 * kPi * 8.0e6;
  // coupling on: local minimum at zero coupling detuning
  const double on_center = im_at(2.0 * kPi * 1.0e6, 0.0);
  CHECK(on_center < im_at(2.0 * kPi * 1.0e6, -off));
  CHECK(on_center < im_at(2.0 * kPi * 1.0e6, off));
  // coupling off: the coupling detuning no longer matters
  const double ref = im_at(0.0, 0.0);
  CHECK(std::abs(im_at(0.0, -off) - ref) <= 1e-9 * ref);
  CHECK(std::abs(im_at(0.0, off) - ref) <= 1e-9 * ref);
}

TEST_CASE("sensitivity equals its central-difference definition") {
  const double rabi = 2.0 * kPi * 10.0e6;
  const DriveParams d = dressing_drive(rabi);
  SensitivityOptions opt;
  const double got = lo_sensitivity(kScheme, d, DopplerSpec{}, opt);
  const double h = opt.step * rabi;
  const double up = susceptibility(kScheme, dressing_drive(rabi + h)).imag();
  const double dn = susceptibility(kScheme, dressing_drive(rabi - h)).imag();
  CHECK(got == doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-10));
}

TEST_CASE("sensitivity is stable under step refinement") {
  const DriveParams d = dressing_drive(2.0 * kPi * 10.0e6);
  SensitivityOptions coarse;
  coarse.step = 1e-3;
  SensitivityOptions fine;
  fine.step = 5e-4;
  const double a = lo_sensitivity(kScheme, d, DopplerSpec{}, coarse);
  const double b = lo_sensitivity(kScheme, d, DopplerSpec{}, fine);
  CHECK(std::abs(a - b) <= 0.01 * std::abs(b));
}

TEST_CASE("first-order prediction matches the finite increment at a 1% signal") {
  const double rabi = 2.0 * kPi * 10.0e6;
  const double sig = 0.01 * rabi;
  const double slope = lo_sensitivity(kScheme, dressing_drive(rabi));
  const double inc = susceptibility(kScheme, dressing_drive(rabi + sig)).imag() -
                     susceptibility(kScheme, dressing_drive(rabi)).imag();
  CHECK(std::abs(slope * sig - inc) <= 0.05 * std::abs(inc));
}

TEST_CASE("sensitivity rejects invalid steps and vanishing drives") {
  const DriveParams d = dressing_drive(2.0 * kPi * 10.0e6);
  SensitivityOptions tiny;
  tiny.step = 1e-13;
  CHECK_THROWS_AS(lo_sensitivity(kScheme, d, DopplerSpec{}, tiny), StepTooSmall);
  SensitivityOptions huge;
  huge.step = 0.5;
  CHECK_THROWS_AS(lo_sensitivity(kScheme, d, DopplerSpec{}, huge), Error);
  CHECK_THROWS_AS(lo_sensitivity(kScheme, dressing_drive(0.0)), Error);
}

TEST_CASE("surrogate matches direct evaluation across its range") {
  const SusceptibilityModel& model = shared_model();
  CHECK(model.max_rabi() == doctest::Approx(2.0 * kPi * 25.0e6).epsilon(1e-12));
  for (double frac : {0.0, 0.013, 0.2, 0.41, 0.66, 0.8, 0.97, 1.0}) {
    CAPTURE(frac);
    const double rabi = frac * model.max_rabi();
    const std::complex<double> direct = susceptibility(kScheme, dressing_drive(rabi));
    const std::complex<double> fitted = model.chi(rabi);
    CHECK(std::abs(fitted - direct) <= 1e-9 * std::abs(direct));
    CHECK(model.im_chi(rabi) == doctest::Approx(fitted.imag()).epsilon(1e-15));
  }
}

TEST_CASE("surrogate slope matches the finite-difference sensitivity") {
  const SusceptibilityModel& model = shared_model();
  const double rabi = 2.0 * kPi * 10.0e6;
  const double direct = lo_sensitivity(kScheme, dressing_drive(rabi));
  CHECK(std::abs(model.im_chi_slope(rabi) - direct) <= 0.01 * std::abs(direct));
}

TEST_CASE("surrogate covers drives with arbitrary phase through the magnitude") {
  const SusceptibilityModel& model = shared_model();
  const double rabi = 2.0 * kPi * 15.0e6;
  DriveParams d = dressing_drive(0.0);
  d.omega_rf = std::polar(rabi, 1.1);
  const std::complex<double> direct = susceptibility(kScheme, d);
  CHECK(std::abs(model.chi(rabi) - direct) <= 1e-9 * std::abs(direct));
}

TEST_CASE("surrogate rejects genuinely out-of-range magnitudes") {
  const SusceptibilityModel& model = shared_model();
  CHECK_THROWS_AS(model.chi(1.5 * model.max_rabi()), Error);
  CHECK_THROWS_AS(model.chi(-1.0), Error);
}
