// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "qap/constants.hpp"
#include "qap/errors.hpp"
#include "qap/numerics.hpp"
#include "qap/transmission.hpp"

using namespace qap;

namespace {
const LevelScheme kScheme = LevelScheme::cesium();
constexpr double kKuFreq = 15.59e9;

DriveParams dressing_template() {
  DriveParams d;
  d.omega_p = 2.0 * kPi * 5.0e6;
  d.omega_c = 2.0 * kPi * 1.0e6;
  return d;
}

const SusceptibilityModel& shared_model() {
  static const SusceptibilityModel model = SusceptibilityModel::build(
      kScheme, dressing_template(), 2.0 * kPi * 25.0e6, DopplerSpec{});
  return model;
}

TransmissionOptions with_model() {
  TransmissionOptions opt;
  opt.model = &shared_model();
  return opt;
}

RfTone make_tone(double rabi_hz, double direction_deg, double phase = 0.0,
                 double freq = kKuFreq) {
  RfTone t;
  t.rabi = 2.0 * kPi * rabi_hz;
  t.angular_frequency = 2.0 * kPi * freq;
  t.direction_deg = direction_deg;
  t.phase = phase;
  return t;
}

RfTone make_signal(double rabi_hz, double direction_deg, double offset_hz,
                   double phase = 0.0) {
  RfTone t = make_tone(rabi_hz, direction_deg, phase);
  t.angular_frequency = 2.0 * kPi * (kKuFreq + offset_hz);
  return t;
}

// Complex line amplitude A = (2/N) sum x_n e^{-j 2 pi b n / N}: recovers
// amplitude*e^{j phase} of a cosine sitting exactly on bin b.
std::complex<double> line_amplitude(const Eigen::VectorXd& x, int bin) {
  std::complex<double> acc{0.0, 0.0};
  const auto n = static_cast<double>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double arg = -2.0 * kPi * bin * static_cast<double>(i) / n;
    acc += x[i] * std::complex<double>(std::cos(arg), std::sin(arg));
  }
  return 2.0 / n * acc;
}

std::complex<double> linearized_line(const ApertureGeometry& geom, const RfTone& lo,
                                     const RfTone& sig, double sensitivity, double dc_power) {
  const double offset = sig.angular_frequency - lo.angular_frequency;
  const double period = 2.0 * kPi / offset;
  Eigen::VectorXd samples(16);
  LinearizedOptions opt;
  opt.dc_power = dc_power;
  for (int n = 0; n < 16; ++n)
    samples[n] = delta_p_linearized(geom, lo, sig, sensitivity, period * n / 16.0, opt);
  return line_amplitude(samples, 1);
}
} // namespace

TEST_CASE("composite field: single tone reproduces its own amplitude and phase") {
  const RfTone lo = make_tone(20.0e6, 300.0, 0.7);
  const double y = 0.013;
  const std::complex<double> acc = composite_rabi({lo}, {}, y, 5.0);
  CHECK(std::abs(acc) == doctest::Approx(lo.rabi).epsilon(1e-12));
  const double want = lo.wavenumber() * y * std::cos(300.0 * kPi / 180.0) + 0.7;
  CHECK(std::remainder(std::arg(acc) - want, 2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK_THROWS_AS(composite_rabi({}, {}, 0.0, 0.0), ConfigError);
}

TEST_CASE("composite field: a signal tone advances at its offset frequency") {
  const RfTone lo = make_tone(20.0e6, 270.0);
  const RfTone sig = make_signal(0.2e6, 90.0, 25.0e3);
  const double offset = sig.angular_frequency - lo.angular_frequency;
  // at y = 0: constructive at t = 0, destructive half a beat later
  const std::complex<double> sum0 = composite_rabi({lo}, {sig}, 0.0, 0.0);
  CHECK(std::abs(sum0) == doctest::Approx(lo.rabi + sig.rabi).epsilon(1e-12));
  const std::complex<double> half = composite_rabi({lo}, {sig}, 0.0, kPi / offset);
  CHECK(std::abs(half) == doctest::Approx(lo.rabi - sig.rabi).epsilon(1e-9));
}

TEST_CASE("composite field: default spatial phase uses the dressing wavenumber") {
  const RfTone lo = make_tone(20.0e6, 270.0);
  const RfTone sig = make_signal(0.2e6, 40.0, 25.0e3);
  const double y = 0.029;
  const std::complex<double> approx = composite_rabi({lo}, {sig}, y, 0.0, false);
  const std::complex<double> exact = composite_rabi({lo}, {sig}, y, 0.0, true);
  const double cos_s = std::cos(40.0 * kPi / 180.0);
  const std::complex<double> want_sig =
      sig.rabi * std::exp(std::complex<double>(0.0, lo.wavenumber() * y * cos_s));
  const std::complex<double> lo_part =
      composite_rabi({lo}, {}, y, 0.0);
  CHECK(std::abs(approx - lo_part - want_sig) <= 1e-9 * sig.rabi);
  CHECK(std::abs(exact - approx) > 1e-9 * sig.rabi); // the wavenumbers genuinely differ
}

TEST_CASE("dressing-only transmission is time-independent and matches the closed form") {
  ApertureGeometry geom;
  geom.length = 0.08;
  LoConfiguration lo;
  lo.tones = {make_tone(20.0e6, 270.0)};
  const TransmissionOptions opt = with_model();
  const double p0 = delta_p_full(kScheme, dressing_template(), geom, lo, {}, 0.0, opt);
  const double p1 = delta_p_full(kScheme, dressing_template(), geom, lo, {}, 0.37, opt);
  CHECK(p0 == p1);
  const double want = geom.probe_input_power *
                      std::exp(-geom.probe_wavenumber * geom.length *
                               shared_model().im_chi(lo.tones[0].rabi));
  CHECK(p0 == doctest::Approx(want).epsilon(1e-12));
  CHECK(p0 < geom.probe_input_power);
  CHECK(p0 > 0.0);
}

TEST_CASE("automatic spatial refinement agrees with a dense pinned grid") {
  ApertureGeometry geom;
  geom.length = 0.08;
  LoConfiguration lo;
  lo.tones = {make_tone(10.0e6, 240.0), make_tone(10.0e6, 300.0)};
  const RfTone sig = make_signal(0.1e6, 90.0, 25.0e3);
  const TransmissionOptions opt = with_model();
  const double automatic =
      delta_p_full(kScheme, dressing_template(), geom, lo, {sig}, 3.1e-6, opt);
  ApertureGeometry pinned = geom;
  pinned.spatial_samples = 25001;
  const double dense =
      delta_p_full(kScheme, dressing_template(), pinned, lo, {sig}, 3.1e-6, opt);
  CHECK(std::abs(automatic - dense) <= 1e-6 * dense);
}

TEST_CASE("transmission input validation") {
  ApertureGeometry geom;
  geom.length = 0.08;
  LoConfiguration lo;
  lo.tones = {make_tone(20.0e6, 270.0)};
  const TransmissionOptions opt = with_model();

  LoConfiguration silent;
  silent.tones = {make_tone(0.0, 270.0)};
  CHECK_THROWS_AS(delta_p_full(kScheme, dressing_template(), geom, silent, {}, 0.0, opt),
                  ConfigError);

  RfTone cross_band = make_signal(0.2e6, 90.0, 25.0e3);
  cross_band.band_index = 1;
  CHECK_THROWS_AS(
      delta_p_full(kScheme, dressing_template(), geom, lo, {cross_band}, 0.0, opt),
      ConfigError);

  LoConfiguration strong;
  strong.tones = {make_tone(30.0e6, 270.0)}; // beyond the shared surrogate's range
  CHECK_THROWS_AS(delta_p_full(kScheme, dressing_template(), geom, strong, {}, 0.0, opt),
                  ConfigError);

  CHECK_THROWS_AS(sample_if_response(kScheme, dressing_template(), geom, lo, {}, -1.0, 16, opt),
                  ConfigError);
  CHECK_THROWS_AS(sample_if_response(kScheme, dressing_template(), geom, lo, {},
                                     2.0 * kPi * 25.0e3, 3, opt),
                  ConfigError);
}

TEST_CASE("normalized beat-line gains reproduce the closed-form pattern") {
  ApertureGeometry geom;
  geom.length = 0.08;
  LoConfiguration lo;
  lo.tones = {make_tone(20.0e6, 270.0)};
  const double lam = lo.tones[0].wavelength();
  const TransmissionOptions opt = with_model();

  const std::vector<double> angles = {50.0, 70.0, 80.0, 90.0, 100.0, 110.0, 130.0, 150.0};
  std::vector<double> amp(angles.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const RfTone sig = make_signal(0.2e6, angles[i], 25.0e3);
    const IfProbe probe = sample_if_response(kScheme, dressing_template(), geom, lo, {sig},
                                             2.0 * kPi * 25.0e3, 16, opt);
    amp[i] = std::abs(probe.if_amplitude);
    peak = std::max(peak, amp[i]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double x = geom.length / lam * std::cos(angles[i] * kPi / 180.0);
    const double want = std::pow(sinc(x), 2);
    worst = std::max(worst, std::abs(amp[i] * amp[i] / (peak * peak) - want));
  }
  CHECK(worst <= 0.01);
}

TEST_CASE("small-signal closed form matches the full response at a 1% drive ratio") {
  ApertureGeometry geom;
  geom.length = 0.08;
  const RfTone lo_tone = make_tone(20.0e6, 270.0);
  LoConfiguration lo;
  lo.tones = {lo_tone};
  const TransmissionOptions opt = with_model();
  const double dc = delta_p_full(kScheme, dressing_template(), geom, lo, {}, 0.0, opt);
  const double sens = shared_model().im_chi_slope(lo_tone.rabi);

  const RfTone sig = make_signal(0.2e6, 80.0, 25.0e3, 0.4);
  const IfProbe probe = sample_if_response(kScheme, dressing_template(), geom, lo, {sig},
                                           2.0 * kPi * 25.0e3, 16, opt);
  const std::complex<double> lin = linearized_line(geom, lo_tone, sig, sens, dc);
  CHECK(std::abs(probe.if_amplitude - lin) <= 0.01 * std::abs(lin));
}

TEST_CASE("closed-form error shrinks quadratically with the drive ratio") {
  ApertureGeometry geom;
  geom.length = 0.08;
  const RfTone lo_tone = make_tone(20.0e6, 270.0);
  LoConfiguration lo;
  lo.tones = {lo_tone};
  const TransmissionOptions opt = with_model();
  const double dc = delta_p_full(kScheme, dressing_template(), geom, lo, {}, 0.0, opt);
  const double sens = shared_model().im_chi_slope(lo_tone.rabi);

  auto line_error = [&](double ratio) {
    const RfTone sig = make_signal(20.0e6 * ratio, 80.0, 25.0e3);
    const IfProbe probe = sample_if_response(kScheme, dressing_template(), geom, lo, {sig},
                                             2.0 * kPi * 25.0e3, 16, opt);
    return std::abs(probe.if_amplitude - linearized_line(geom, lo_tone, sig, sens, dc));
  };
  const double ratio = line_error(0.02) / line_error(0.01);
  CHECK(ratio >= 2.5);
  CHECK(ratio <= 6.0);
}

TEST_CASE("closed form enforces the strong-dressing regime and its exact zeros") {
  ApertureGeometry geom;
  geom.length = 0.08;
  const RfTone lo_tone = make_tone(20.0e6, 270.0);
  const double sens = 1.0e-16;

  RfTone strong = make_signal(2.1e6, 90.0, 25.0e3); // 10.5% of the dressing rate
  CHECK_THROWS_AS(delta_p_linearized(geom, lo_tone, strong, sens, 0.0), WeakLoViolation);

  const RfTone silent = make_signal(0.0, 90.0, 25.0e3);
  CHECK(delta_p_linearized(geom, lo_tone, silent, sens, 0.2) == 0.0);

  // a cell exactly one wavelength long nulls the forward direction
  ApertureGeometry one_wave = geom;
  one_wave.length = lo_tone.wavelength();
  const RfTone forward = make_signal(0.2e6, 0.0, 25.0e3);
  const double scale = geom.probe_input_power * geom.probe_wavenumber * sens *
                       one_wave.length * forward.rabi;
  CHECK(std::abs(delta_p_linearized(one_wave, lo_tone, forward, sens, 0.0)) <= 1e-12 * scale);
}

TEST_CASE("beat probe with no signal reports a flat record and zero line amplitude") {
  ApertureGeometry geom;
  geom.length = 0.08;
  LoConfiguration lo;
  lo.tones = {make_tone(20.0e6, 270.0)};
  const TransmissionOptions opt = with_model();
  const IfProbe probe = sample_if_response(kScheme, dressing_template(), geom, lo, {},
                                           2.0 * kPi * 25.0e3, 16, opt);
  CHECK(std::abs(probe.if_amplitude) <= 1e-12 * probe.mean_power);
  CHECK(probe.mean_power < geom.probe_input_power);
  CHECK((probe.power.array() - probe.mean_power).abs().maxCoeff() <= 1e-12 * probe.mean_power);
  REQUIRE(probe.times.size() == 16);
  CHECK(probe.times[0] == 0.0);
}

TEST_CASE("synthesized record rejects aliasing and too-short records up front") {
  ApertureGeometry geom;
  geom.length = 0.08;
  LoConfiguration lo;
  lo.tones = {make_tone(20.0e6, 270.0)};
  const std::vector<RfTone> sigs = {make_signal(0.2e6, 90.0, 25.0e3)};
  CHECK_THROWS_AS(synthesize_waveform(kScheme, dressing_template(), geom, lo, sigs,
                                      4.0e-4, 1.0e5, {}),
                  AliasingRisk);
  CHECK_THROWS_AS(synthesize_waveform(kScheme, dressing_template(), geom, lo, sigs,
                                      2.0e-4, 4.0e5, {}),
                  ConfigError);
}

TEST_CASE("synthesized beat lines follow the per-angle aperture response") {
  ApertureGeometry geom;
  geom.length = 0.08;
  const RfTone lo_tone = make_tone(20.0e6, 270.0);
  LoConfiguration lo;
  lo.tones = {lo_tone};
  const std::vector<RfTone> sigs = {make_signal(0.2e6, 90.0, 25.0e3, 0.0),
                                    make_signal(0.14e6, 100.0, 40.0e3, 0.7)};
  const double duration = 8.0e-4; // 20 beats of the slow line
  const double fs = 4.0e5;        // lines land on bins 20 and 32 of 320 samples

  SynthesisOptions lin_opt;
  lin_opt.model = SynthesisModel::linearized;
  const Waveform lin = synthesize_waveform(kScheme, dressing_template(), geom, lo, sigs,
                                           duration, fs, lin_opt);
  REQUIRE(lin.samples.size() == 320);
  CHECK(lin.sample_rate == fs);
  CHECK(std::abs(lin.samples.mean()) <=
        1e-12 * lin.samples.cwiseAbs().maxCoeff());

  const std::complex<double> line_a = line_amplitude(lin.samples, 20);
  const std::complex<double> line_b = line_amplitude(lin.samples, 32);

  // amplitude ratio: the uniform-profile sensitivity cancels, leaving the
  // closed-form aperture factors
  const double lam = lo_tone.wavelength();
  auto sinc_gain = [&](double deg) {
    return std::abs(sinc(geom.length / lam * std::cos(deg * kPi / 180.0)));
  };
  const double want_ratio = (sigs[0].rabi * sinc_gain(90.0)) / (sigs[1].rabi * sinc_gain(100.0));
  CHECK(std::abs(line_a) / std::abs(line_b) == doctest::Approx(want_ratio).epsilon(1e-9));

  // absolute scale against an independently built surrogate
  const double dc = geom.probe_input_power *
                    std::exp(-geom.probe_wavenumber * geom.length *
                             shared_model().im_chi(lo_tone.rabi));
  const double sens = shared_model().im_chi_slope(lo_tone.rabi);
  const double want_amp =
      dc * geom.probe_wavenumber * sens * geom.length * sinc_gain(90.0) * sigs[0].rabi;
  CHECK(std::abs(line_a) == doctest::Approx(want_amp).epsilon(1e-6));

  SynthesisOptions full_opt;
  full_opt.model = SynthesisModel::full;
  const Waveform full = synthesize_waveform(kScheme, dressing_template(), geom, lo, sigs,
                                            duration, fs, full_opt);
  REQUIRE(full.samples.size() == lin.samples.size());
  const std::complex<double> full_a = line_amplitude(full.samples, 20);
  const std::complex<double> full_b = line_amplitude(full.samples, 32);
  CHECK(std::abs(full_a - line_a) <= 0.01 * std::abs(line_a));
  CHECK(std::abs(full_b - line_b) <= 0.01 * std::abs(line_b));
  const double rms = std::sqrt(lin.samples.squaredNorm() / lin.samples.size());
  const double diff_rms =
      std::sqrt((full.samples - lin.samples).squaredNorm() / lin.samples.size());
  CHECK(diff_rms <= 0.02 * rms);
}

TEST_CASE("quasi-static guard compares the beat rate against the relaxation rate") {
  CHECK(quasi_static_ok(2.0 * kPi * 5.2e6, 2.0 * kPi * 33.0e3));
  CHECK(!quasi_static_ok(2.0 * kPi * 5.2e6, 2.0 * kPi * 600.0e3));
  CHECK(quasi_static_ok(1.0e6, -5.0e4));
  CHECK(!quasi_static_ok(1.0e6, 1.0e5)); // strict at the boundary
}
