// SPDX-License-Identifier: Apache-2.0
#include "qap/rf_field.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

namespace qap {

void LoConfiguration::validate(bool allow_any_half_plane) const {
  if (tones.empty()) throw ConfigError("LoConfiguration: at least one tone required");
  std::map<int, double> band_freq;
  for (const RfTone& tone : tones) {
    tone.validate(RfTone::Role::dressing, allow_any_half_plane);
    auto [it, inserted] = band_freq.emplace(tone.band_index, tone.angular_frequency);
    if (!inserted && it->second != tone.angular_frequency)
      throw ConfigError("LoConfiguration: tones within one band must share a carrier frequency");
  }
  for (auto a = band_freq.begin(); a != band_freq.end(); ++a)
    for (auto b = std::next(a); b != band_freq.end(); ++b)
      if (a->second == b->second)
        throw ConfigError("LoConfiguration: distinct bands must use distinct carrier frequencies");
}

std::vector<int> LoConfiguration::band_indices() const {
  std::vector<int> bands;
  for (const RfTone& tone : tones) bands.push_back(tone.band_index);
  std::sort(bands.begin(), bands.end());
  bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
  return bands;
}

std::vector<RfTone> LoConfiguration::band_tones(int band) const {
  std::vector<RfTone> out;
  for (const RfTone& tone : tones)
    if (tone.band_index == band) out.push_back(tone);
  return out;
}

LoSample lo_sample(const std::vector<RfTone>& tones, double y) {
  if (tones.empty()) throw ConfigError("lo_sample: empty tone list");
  const double freq = tones.front().angular_frequency;
  double max_amp = 0.0;
  std::complex<double> sum{0.0, 0.0};
  for (const RfTone& tone : tones) {
    if (tone.angular_frequency != freq)
      throw ConfigError("lo_sample: tones must share one carrier frequency");
    const double arg =
        tone.wavenumber() * y * std::cos(tone.direction_deg * kPi / 180.0) + tone.phase;
    sum += std::polar(tone.rabi, arg);
    max_amp = std::max(max_amp, tone.rabi);
  }
  LoSample s;
  s.amplitude = std::abs(sum);
  if (s.amplitude < 1e-12 * max_amp) {
    s.amplitude_null = true;
    s.phase = 0.0;
  } else {
    s.phase = std::arg(sum);
  }
  return s;
}

std::vector<LoSample> lo_profile(const std::vector<RfTone>& tones, const Eigen::VectorXd& y) {
  std::vector<LoSample> profile(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) profile[i] = lo_sample(tones, y[i]);
  // Phase is undefined where the tones cancel; continue it from the nearest
  // resolved sample so downstream integrands stay bounded.
  int first_valid = -1;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (!profile[i].amplitude_null) {
      first_valid = static_cast<int>(i);
      break;
    }
  }
  if (first_valid < 0) return profile; // fully collapsed profile; caller decides
  for (int i = first_valid - 1; i >= 0; --i) profile[i].phase = profile[first_valid].phase;
  for (std::size_t i = first_valid + 1; i < profile.size(); ++i)
    if (profile[i].amplitude_null) profile[i].phase = profile[i - 1].phase;
  return profile;
}

} // namespace qap
