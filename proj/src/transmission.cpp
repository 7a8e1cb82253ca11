// SPDX-License-Identifier: Apache-2.0
#include "qap/transmission.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>

#include "qap/numerics.hpp"

namespace qap {

namespace {

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

double sum_rabi(const std::vector<RfTone>& tones) {
  double s = 0.0;
  for (const RfTone& t : tones) s += t.rabi;
  return s;
}

// Offset of a signal tone from the dressing carrier it beats against.
double if_offset(const RfTone& signal, double carrier_angular_freq) {
  return signal.angular_frequency - carrier_angular_freq;
}

void check_single_band(const LoConfiguration& lo, const std::vector<RfTone>& signals) {
  const std::vector<int> bands = lo.band_indices();
  if (bands.size() != 1)
    throw ConfigError("transmission: all dressing tones must share one band");
  for (const RfTone& s : signals)
    if (s.band_index != bands.front())
      throw ConfigError("transmission: signal tones must use the dressing band");
}

int spatial_sample_count(const ApertureGeometry& geometry, const std::vector<RfTone>& lo_tones,
                         const std::vector<RfTone>& signals, bool exact_signal_wavenumber) {
  if (geometry.spatial_samples != 0)
    return next_odd_at_least(std::max(geometry.spatial_samples, 3));
  double max_k = 0.0;
  for (const RfTone& t : lo_tones) max_k = std::max(max_k, t.wavenumber());
  if (exact_signal_wavenumber)
    for (const RfTone& s : signals) max_k = std::max(max_k, s.wavenumber());
  return recommended_spatial_samples(geometry.length, 2.0 * max_k);
}

} // namespace

std::complex<double> composite_rabi(const std::vector<RfTone>& lo_tones,
                                    const std::vector<RfTone>& signals, double y, double t,
                                    bool exact_signal_wavenumber) {
  if (lo_tones.empty()) throw ConfigError("composite_rabi: no dressing tones");
  const double carrier = lo_tones.front().angular_frequency;
  const double k_carrier = lo_tones.front().wavenumber();

  std::complex<double> acc{0.0, 0.0};
  for (const RfTone& tone : lo_tones) {
    const double arg = tone.wavenumber() * y * std::cos(deg_to_rad(tone.direction_deg)) +
                       tone.phase;
    acc += tone.rabi * std::complex<double>(std::cos(arg), std::sin(arg));
  }
  for (const RfTone& sig : signals) {
    const double k = exact_signal_wavenumber ? sig.wavenumber() : k_carrier;
    const double arg = k * y * std::cos(deg_to_rad(sig.direction_deg)) + sig.phase +
                       if_offset(sig, carrier) * t;
    acc += sig.rabi * std::complex<double>(std::cos(arg), std::sin(arg));
  }
  return acc;
}

double delta_p_full(const LevelScheme& scheme, const DriveParams& drive_template,
                    const ApertureGeometry& geometry, const LoConfiguration& lo,
                    const std::vector<RfTone>& signals, double t,
                    const TransmissionOptions& options) {
  geometry.validate();
  lo.validate();
  for (const RfTone& s : signals) s.validate(RfTone::Role::signal);
  check_single_band(lo, signals);

  const double rabi_cap = sum_rabi(lo.tones) + sum_rabi(signals);
  if (!(rabi_cap > 0.0)) throw ConfigError("delta_p_full: composite field is identically zero");

  std::unique_ptr<SusceptibilityModel> local_model;
  const SusceptibilityModel* model = options.model;
  if (model == nullptr) {
    local_model = std::make_unique<SusceptibilityModel>(SusceptibilityModel::build(
        scheme, drive_template, rabi_cap * (1.0 + 1e-9), options.doppler));
    model = local_model.get();
  } else if (model->max_rabi() < rabi_cap) {
    throw ConfigError("delta_p_full: shared susceptibility model does not cover the Rabi range");
  }

  auto integrate = [&](int samples) {
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(samples, 0.0, geometry.length);
    const Eigen::VectorXd w = simpson_weights<double>(samples, geometry.length);
    double acc = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double amp =
          std::abs(composite_rabi(lo.tones, signals, y[i], t, options.exact_signal_wavenumber));
      acc += w[i] * model->im_chi(amp);
    }
    return acc;
  };

  int samples =
      spatial_sample_count(geometry, lo.tones, signals, options.exact_signal_wavenumber);
  double exponent = integrate(samples);
  if (geometry.spatial_samples == 0) {
    // Multi-tone profiles put sub-beat-scale structure into im_chi(|Omega(y)|)
    // near amplitude nulls; refine until the absorption integral settles.
    constexpr int kMaxSamples = 250000;
    while (samples < kMaxSamples) {
      samples = 2 * samples - 1;
      const double refined = integrate(samples);
      const bool settled = std::abs(refined - exponent) <= 1e-8 * std::abs(refined);
      exponent = refined;
      if (settled) break;
    }
  }
  return geometry.probe_input_power * std::exp(-geometry.probe_wavenumber * exponent);
}

double lo_only_transmission(const LevelScheme& scheme, const DriveParams& drive_template,
                            const ApertureGeometry& geometry, const std::vector<RfTone>& lo_tones,
                            const DopplerSpec& spec) {
  LoConfiguration lo;
  lo.tones = lo_tones;
  TransmissionOptions options;
  options.doppler = spec;
  return delta_p_full(scheme, drive_template, geometry, lo, {}, 0.0, options);
}

double delta_p_linearized(const ApertureGeometry& geometry, const RfTone& lo, const RfTone& sig,
                          double sensitivity, double t, const LinearizedOptions& options) {
  geometry.validate();
  lo.validate(RfTone::Role::dressing);
  sig.validate(RfTone::Role::signal);
  if (sig.rabi > 0.1 * lo.rabi)
    throw WeakLoViolation("delta_p_linearized: signal Rabi rate exceeds 0.1 of the dressing rate");

  const double dc =
      options.dc_power < 0.0 ? geometry.probe_input_power : options.dc_power;
  const double cos_s = std::cos(deg_to_rad(sig.direction_deg));
  const double cos_l = std::cos(deg_to_rad(lo.direction_deg));
  const double delta_k = options.exact_signal_wavenumber
                             ? sig.wavenumber() * cos_s - lo.wavenumber() * cos_l
                             : lo.wavenumber() * (cos_s - cos_l);
  const double x = geometry.length * delta_k / (2.0 * kPi);
  const double omega_delta = if_offset(sig, lo.angular_frequency);
  const double phi = (sig.phase - lo.phase) + 0.5 * geometry.length * delta_k;

  return -dc * geometry.probe_wavenumber * sensitivity * geometry.length * sinc(x) * sig.rabi *
         std::cos(omega_delta * t + phi);
}

IfProbe sample_if_response(const LevelScheme& scheme, const DriveParams& drive_template,
                           const ApertureGeometry& geometry, const LoConfiguration& lo,
                           const std::vector<RfTone>& signals, double if_angular_freq,
                           int time_samples, const TransmissionOptions& options) {
  if (!(if_angular_freq > 0.0))
    throw ConfigError("sample_if_response: offset frequency must be > 0");
  if (time_samples < 4) throw ConfigError("sample_if_response: need at least 4 time samples");
  lo.validate();
  check_single_band(lo, signals);

  // One shared surrogate spanning every instantaneous operating point.
  std::unique_ptr<SusceptibilityModel> local_model;
  TransmissionOptions shared = options;
  if (shared.model == nullptr) {
    const double rabi_cap = sum_rabi(lo.tones) + sum_rabi(signals);
    local_model = std::make_unique<SusceptibilityModel>(SusceptibilityModel::build(
        scheme, drive_template, rabi_cap * (1.0 + 1e-9), options.doppler));
    shared.model = local_model.get();
  }

  const double period = 2.0 * kPi / if_angular_freq;
  IfProbe probe;
  probe.times.resize(time_samples);
  probe.power.resize(time_samples);
  std::complex<double> acc{0.0, 0.0};
  double mean = 0.0;
  for (int n = 0; n < time_samples; ++n) {
    const double t = period * n / time_samples;
    const double p = delta_p_full(scheme, drive_template, geometry, lo, signals, t, shared);
    probe.times[n] = t;
    probe.power[n] = p;
    const double arg = -2.0 * kPi * n / time_samples;
    acc += p * std::complex<double>(std::cos(arg), std::sin(arg));
    mean += p;
  }
  probe.if_amplitude = 2.0 / time_samples * acc;
  probe.mean_power = mean / time_samples;
  return probe;
}

Waveform synthesize_waveform(const LevelScheme& scheme, const DriveParams& drive_template,
                             const ApertureGeometry& geometry, const LoConfiguration& lo,
                             const std::vector<RfTone>& signals, double duration,
                             double sample_rate, const SynthesisOptions& options) {
  geometry.validate();
  lo.validate();
  if (!(duration > 0.0) || !(sample_rate > 0.0))
    throw ConfigError("synthesize_waveform: duration and sample_rate must be > 0");

  const std::vector<int> bands = lo.band_indices();
  double max_offset = 0.0;
  double min_nonzero_offset = 0.0;
  for (const RfTone& sig : signals) {
    sig.validate(RfTone::Role::signal);
    const std::vector<RfTone> band_lo = lo.band_tones(sig.band_index);
    if (band_lo.empty())
      throw ConfigError("synthesize_waveform: signal tone references a band with no dressing");
    const double offset = std::abs(if_offset(sig, band_lo.front().angular_frequency));
    max_offset = std::max(max_offset, offset);
    if (offset > 0.0)
      min_nonzero_offset =
          min_nonzero_offset == 0.0 ? offset : std::min(min_nonzero_offset, offset);
  }
  if (max_offset > 0.0 && sample_rate <= 4.0 * max_offset / (2.0 * kPi))
    throw AliasingRisk("synthesize_waveform: sample_rate must exceed 4x the largest offset");
  if (min_nonzero_offset > 0.0 && duration < 10.0 * 2.0 * kPi / min_nonzero_offset)
    throw ConfigError("synthesize_waveform: record must span at least 10 beat periods");

  const auto n_samples = static_cast<Eigen::Index>(std::llround(duration * sample_rate));
  if (n_samples < 2) throw ConfigError("synthesize_waveform: record too short");

  Waveform wave;
  wave.sample_rate = sample_rate;
  wave.samples = Eigen::VectorXd::Zero(n_samples);

  auto coupling_scale = [&options](int band_index) {
    for (const BandConfig& band : options.bands)
      if (band.band_index == band_index) return band.coupling_scale;
    return 1.0;
  };

  if (options.model == SynthesisModel::full) {
    if (bands.size() != 1)
      throw ConfigError("synthesize_waveform: full model supports a single band");
    if (coupling_scale(bands.front()) != 1.0)
      throw ConfigError("synthesize_waveform: full model requires coupling_scale == 1");
    const double rabi_cap = sum_rabi(lo.tones) + sum_rabi(signals);
    const SusceptibilityModel model = SusceptibilityModel::build(
        scheme, drive_template, rabi_cap * (1.0 + 1e-9), options.doppler);
    TransmissionOptions topt;
    topt.doppler = options.doppler;
    topt.exact_signal_wavenumber = options.exact_signal_wavenumber;
    topt.model = &model;
    for (Eigen::Index n = 0; n < n_samples; ++n)
      wave.samples[n] =
          delta_p_full(scheme, drive_template, geometry, lo, signals, n / sample_rate, topt);
  } else {
    for (int band_index : bands) {
      const std::vector<RfTone> band_lo = lo.band_tones(band_index);
      const double carrier = band_lo.front().angular_frequency;
      const double dc_power =
          lo_only_transmission(scheme, drive_template, geometry, band_lo, options.doppler);
      const SusceptibilityModel model = SusceptibilityModel::build(
          scheme, drive_template, sum_rabi(band_lo) * (1.0 + 1e-9), options.doppler);
      const double scale = coupling_scale(band_index);

      for (const RfTone& sig : signals) {
        if (sig.band_index != band_index) continue;
        const double k = options.exact_signal_wavenumber ? sig.wavenumber()
                                                         : band_lo.front().wavenumber();
        const std::complex<double> response =
            aperture_response(geometry, band_lo, model, sig.direction_deg, k);
        const double amp = dc_power * geometry.probe_wavenumber * scale * sig.rabi *
                           std::abs(response);
        const double phase0 = sig.phase + std::arg(response);
        const double omega_delta = if_offset(sig, carrier);
        for (Eigen::Index n = 0; n < n_samples; ++n)
          wave.samples[n] -= amp * std::cos(omega_delta * n / sample_rate + phase0);
      }
    }
  }

  wave.samples.array() -= wave.samples.mean();
  return wave;
}

} // namespace qap
