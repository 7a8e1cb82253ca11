// SPDX-License-Identifier: Apache-2.0
#include "qap/comms.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "qap/numerics.hpp"
#include "qap/parallel.hpp"
#include "qap/rng.hpp"

namespace qap {

namespace {

constexpr std::complex<double> kJ{0.0, 1.0};

double wrap_two_pi(double phase) {
  const double two_pi = 2.0 * kPi;
  double w = std::fmod(phase, two_pi);
  if (w < 0.0) w += two_pi;
  return w;
}

double wrap_pi(double phase) {
  double w = std::fmod(phase + kPi, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  return w - kPi;
}

// Integer samples-per-symbol; the modem works on an exact symbol grid.
int resolve_sps(double sample_rate, double symbol_rate, const char* who) {
  const double ratio = sample_rate / symbol_rate;
  const int sps = static_cast<int>(std::lround(ratio));
  if (sps < 4 || std::abs(ratio - sps) > 1e-6 * ratio)
    throw ConfigError(std::string(who) +
                      ": sample_rate must be an integer multiple (>= 4x) of the symbol rate");
  return sps;
}

// Per-axis Gray levels, adjacent levels differing in one bit:
// 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
double axis_level(std::uint8_t hi, std::uint8_t lo) {
  if (hi == 0) return lo == 0 ? -3.0 : -1.0;
  return lo == 1 ? 1.0 : 3.0;
}

void axis_bits(double level, std::uint8_t& hi, std::uint8_t& lo) {
  const int idx = std::clamp(static_cast<int>(std::lround((level + 3.0) / 2.0)), 0, 3);
  hi = idx >= 2 ? 1 : 0;
  lo = (idx == 1 || idx == 2) ? 1 : 0;
}

double srrc_impulse(double t, double beta) {
  const double a = 4.0 * beta * t;
  if (std::abs(t) < 1e-10) return 1.0 - beta + 4.0 * beta / kPi;
  if (std::abs(1.0 - a * a) < 1e-8) {
    const double x = kPi / (4.0 * beta);
    return beta / std::sqrt(2.0) *
           ((1.0 + 2.0 / kPi) * std::sin(x) + (1.0 - 2.0 / kPi) * std::cos(x));
  }
  return (std::sin(kPi * t * (1.0 - beta)) + a * std::cos(kPi * t * (1.0 + beta))) /
         (kPi * t * (1.0 - a * a));
}

std::vector<std::complex<double>> convolve_full(const std::vector<std::complex<double>>& x,
                                                const Eigen::VectorXd& taps) {
  std::vector<std::complex<double>> out(x.size() + taps.size() - 1, {0.0, 0.0});
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::complex<double> xi = x[i];
    if (xi == std::complex<double>{0.0, 0.0}) continue;
    for (Eigen::Index j = 0; j < taps.size(); ++j) out[i + j] += xi * taps[j];
  }
  return out;
}

std::vector<std::uint8_t> seeded_bits(std::uint64_t seed, std::size_t count) {
  NormalSampler rng(seed);
  std::vector<std::uint8_t> bits(count);
  for (std::size_t i = 0; i < count; ++i) bits[i] = rng.uniform() < 0.5 ? 0 : 1;
  return bits;
}

// Complex Gaussian noise low-passed to the requested bandwidth (windowed-sinc
// FIR, unity DC gain), normalized to unit mean power.
std::vector<std::complex<double>> bandlimited_noise(std::uint64_t seed, double bandwidth_hz,
                                                    double sample_rate, Eigen::Index n) {
  const double fc = 0.5 * bandwidth_hz / sample_rate;
  if (!(fc > 0.0 && fc < 0.5))
    throw ConfigError("channel_apply: interferer bandwidth incompatible with the sample rate");

  NormalSampler rng(seed);
  std::vector<std::complex<double>> white(static_cast<std::size_t>(n));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (auto& w : white) w = std::complex<double>(rng() * inv_sqrt2, rng() * inv_sqrt2);

  constexpr int kHalf = 256;
  Eigen::VectorXd h(2 * kHalf + 1);
  for (int m = 0; m <= 2 * kHalf; ++m) {
    const int t = m - kHalf;
    const double ideal = t == 0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * t) / (kPi * t);
    const double window = 0.5 - 0.5 * std::cos(2.0 * kPi * m / (2.0 * kHalf));
    h[m] = ideal * window;
  }
  h /= h.sum();

  const auto full = convolve_full(white, h);
  std::vector<std::complex<double>> out(full.begin() + kHalf, full.begin() + kHalf + n);
  double power = 0.0;
  for (const auto& v : out) power += std::norm(v);
  power /= static_cast<double>(n);
  if (power > 0.0) {
    const double scale = 1.0 / std::sqrt(power);
    for (auto& v : out) v *= scale;
  }
  return out;
}

double mean_square(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.squaredNorm() / static_cast<double>(v.size());
}

// Largest power-of-two Welch segment not exceeding the record (cap 4096).
int psd_segment_for(Eigen::Index n) {
  if (n < 64) throw ConfigError("welch_psd: record too short for a spectral estimate");
  int seg = 64;
  while (seg * 2 <= std::min<Eigen::Index>(n, 4096)) seg *= 2;
  return seg;
}

// Per-band receiver state reused across every tone of the band.
struct BandContext {
  const BandConfig* cfg = nullptr;
  std::vector<RfTone> lo_tones;
  double carrier_wavenumber = 0.0;
  double dc_power = 0.0;
  std::unique_ptr<ApertureKernel> kernel;
  double peak_response = 0.0; // max |response| over arrival angles
};

std::vector<int> referenced_bands(const Scenario& sc) {
  std::vector<int> bands;
  auto add = [&bands](int idx) {
    if (std::find(bands.begin(), bands.end(), idx) == bands.end()) bands.push_back(idx);
  };
  for (const UserLink& u : sc.users) add(u.tone.band_index);
  for (const InterfererSpec& i : sc.interferers) add(i.tone.band_index);
  return bands;
}

double max_referenced_rabi_sum(const Scenario& sc) {
  double cap = 0.0;
  for (int idx : referenced_bands(sc)) {
    double sum = 0.0;
    for (const RfTone& t : sc.lo.band_tones(idx)) sum += t.rabi;
    cap = std::max(cap, sum);
  }
  return cap;
}

std::vector<BandContext> build_band_contexts(const Scenario& sc, const SusceptibilityModel& model) {
  std::vector<BandContext> contexts;
  for (int idx : referenced_bands(sc)) {
    BandContext ctx;
    ctx.cfg = &sc.band(idx);
    ctx.lo_tones = sc.lo.band_tones(idx);
    ctx.carrier_wavenumber = ctx.lo_tones.front().wavenumber();

    LoConfiguration band_lo;
    band_lo.tones = ctx.lo_tones;
    TransmissionOptions topt;
    topt.doppler = sc.doppler;
    topt.model = &model;
    ctx.dc_power = delta_p_full(sc.scheme, sc.drive, sc.geometry, band_lo, {}, 0.0, topt);

    ctx.kernel = std::make_unique<ApertureKernel>(sc.geometry, ctx.lo_tones, model);
    // Coarse 0.5-degree scan, then golden-section refinement in the winning
    // 1-degree bracket; the gain is smooth there, so the peak value converges
    // far below the metric tolerances.
    auto gain_at = [&ctx](double deg) {
      return std::abs(ctx.kernel->response(deg, ctx.carrier_wavenumber));
    };
    double best_deg = 0.0;
    double peak = 0.0;
    for (int g = 0; g <= 360; ++g) {
      const double v = gain_at(0.5 * g);
      if (v > peak) {
        peak = v;
        best_deg = 0.5 * g;
      }
    }
    double lo_deg = std::max(0.0, best_deg - 0.5);
    double hi_deg = std::min(180.0, best_deg + 0.5);
    constexpr double kGolden = 0.6180339887498949;
    double a = hi_deg - kGolden * (hi_deg - lo_deg);
    double b = lo_deg + kGolden * (hi_deg - lo_deg);
    double fa = gain_at(a);
    double fb = gain_at(b);
    for (int it = 0; it < 60 && hi_deg - lo_deg > 1e-7; ++it) {
      if (fa < fb) {
        lo_deg = a;
        a = b;
        fa = fb;
        b = lo_deg + kGolden * (hi_deg - lo_deg);
        fb = gain_at(b);
      } else {
        hi_deg = b;
        b = a;
        fb = fa;
        a = hi_deg - kGolden * (hi_deg - lo_deg);
        fa = gain_at(a);
      }
      peak = std::max(peak, std::max(fa, fb));
    }
    ctx.peak_response = peak;
    contexts.push_back(std::move(ctx));
  }
  return contexts;
}

const BandContext& context_for(const std::vector<BandContext>& contexts, int band_index) {
  for (const BandContext& ctx : contexts)
    if (ctx.cfg->band_index == band_index) return ctx;
  throw ConfigError("channel_apply: tone references a band with no receiver context");
}

ChannelOutput apply_impl(const Scenario& sc, const SusceptibilityModel* shared_model) {
  sc.validate();

  std::unique_ptr<SusceptibilityModel> local_model;
  if (shared_model == nullptr) {
    local_model = std::make_unique<SusceptibilityModel>(SusceptibilityModel::build(
        sc.scheme, sc.drive, max_referenced_rabi_sum(sc) * (1.0 + 1e-9), sc.doppler));
    shared_model = local_model.get();
  }

  const double fs = sc.sample_rate;
  const auto n = static_cast<Eigen::Index>(std::llround(sc.duration * fs));
  if (n < 16) throw ConfigError("channel_apply: record too short");

  double max_if = 0.0;
  double max_bw = 0.0;
  double fastest_edge = 0.0;
  for (const UserLink& u : sc.users) {
    const double bw = u.stream.symbol_rate * (1.0 + u.stream.rolloff);
    max_if = std::max(max_if, u.stream.if_freq);
    max_bw = std::max(max_bw, bw);
    fastest_edge = std::max(fastest_edge, u.stream.if_freq + 0.5 * bw);
  }
  for (const InterfererSpec& i : sc.interferers) {
    max_if = std::max(max_if, i.center_if_hz);
    max_bw = std::max(max_bw, i.bandwidth_hz);
    fastest_edge = std::max(fastest_edge, i.center_if_hz + 0.5 * i.bandwidth_hz);
  }
  if (fs <= 4.0 * max_if + 2.0 * max_bw)
    throw AliasingRisk(
        "channel_apply: sample_rate must exceed 4x the highest intermediate frequency plus "
        "twice the widest signal bandwidth");

  const std::vector<BandContext> contexts = build_band_contexts(sc, *shared_model);

  ChannelOutput out;
  out.waveform.sample_rate = fs;
  out.waveform.samples = Eigen::VectorXd::Zero(n);
  out.quasi_static_warning = !quasi_static_ok(sc.scheme.gamma2, 2.0 * kPi * fastest_edge);

  // Normalization: the first user's amplitude if it sat on its band's pattern
  // peak. Everything downstream (noise density included) is relative to it.
  const UserLink& ref_user = sc.users.front();
  const BandContext& ref_ctx = context_for(contexts, ref_user.tone.band_index);
  const double c_ref = ref_ctx.dc_power * sc.geometry.probe_wavenumber *
                       ref_ctx.cfg->coupling_scale * ref_user.tone.rabi *
                       std::sqrt(ref_user.stream.tx_power_scale) * ref_ctx.peak_response;
  if (!(c_ref > 0.0))
    throw ConfigError("channel_apply: the first user must have a nonzero transmit amplitude");
  out.reference_amplitude = c_ref;

  for (const UserLink& user : sc.users) {
    const BandContext& ctx = context_for(contexts, user.tone.band_index);
    const std::complex<double> response =
        ctx.kernel->response(user.tone.direction_deg, ctx.carrier_wavenumber);
    const double amp = ctx.dc_power * sc.geometry.probe_wavenumber * ctx.cfg->coupling_scale *
                       user.tone.rabi * std::sqrt(user.stream.tx_power_scale) *
                       std::abs(response);
    const double phase0 = user.tone.phase + std::arg(response);

    if (user.stream.symbol_count() < 1)
      throw ConfigError("channel_apply: every user needs a non-empty payload");
    std::vector<std::complex<double>> envelope = qam_modulate(user.stream, fs);
    if (static_cast<Eigen::Index>(envelope.size()) > n)
      throw ConfigError("channel_apply: duration too short for a user payload");
    double power = 0.0;
    for (const auto& e : envelope) power += std::norm(e);
    power /= static_cast<double>(envelope.size());
    const double env_scale = power > 0.0 ? 1.0 / std::sqrt(power) : 0.0;

    Eigen::VectorXd component = Eigen::VectorXd::Zero(n);
    const double w_if = 2.0 * kPi * user.stream.if_freq;
    const double a = amp / c_ref;
    for (std::size_t m = 0; m < envelope.size(); ++m) {
      const double arg = w_if * static_cast<double>(m) / fs + phase0;
      const std::complex<double> carrier(std::cos(arg), std::sin(arg));
      component[static_cast<Eigen::Index>(m)] =
          -a * (envelope[m] * env_scale * carrier).real();
    }
    out.waveform.samples += component;
    out.user_components.push_back(std::move(component));
    const double rel = ctx.peak_response > 0.0 ? std::abs(response) / ctx.peak_response : 0.0;
    out.user_gains.push_back(rel * rel);
    out.user_if_phases.push_back(wrap_two_pi(phase0 + kPi));
  }

  out.interferer_component = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < sc.interferers.size(); ++i) {
    const InterfererSpec& spec = sc.interferers[i];
    const BandContext& ctx = context_for(contexts, spec.tone.band_index);
    const std::complex<double> response =
        ctx.kernel->response(spec.tone.direction_deg, ctx.carrier_wavenumber);
    const double amp = ctx.dc_power * sc.geometry.probe_wavenumber * ctx.cfg->coupling_scale *
                       spec.tone.rabi * std::abs(response);
    if (!(amp > 0.0)) continue;

    const auto envelope =
        bandlimited_noise(mix_seed(sc.seed, 2 + i), spec.bandwidth_hz, fs, n);
    const double phase0 = spec.tone.phase + std::arg(response);
    const double w_if = 2.0 * kPi * spec.center_if_hz;
    const double a = amp / c_ref;
    for (Eigen::Index m = 0; m < n; ++m) {
      const double arg = w_if * static_cast<double>(m) / fs + phase0;
      const std::complex<double> carrier(std::cos(arg), std::sin(arg));
      out.interferer_component[m] -= a * (envelope[static_cast<std::size_t>(m)] * carrier).real();
    }
  }
  out.waveform.samples += out.interferer_component;

  out.noise_component = Eigen::VectorXd::Zero(n);
  if (sc.noise_density > 0.0) {
    NormalSampler rng(mix_seed(sc.seed, 1));
    const double sigma = std::sqrt(sc.noise_density * fs / 2.0);
    for (Eigen::Index m = 0; m < n; ++m) out.noise_component[m] = sigma * rng();
    out.waveform.samples += out.noise_component;
  }

  return out;
}

// Shared metric harness: PSD of the requested component, effective SIR from
// the component decomposition, then demodulation of the summed waveform.
LinkMetrics link_metrics_for(const Scenario& sc, const ChannelOutput& out, int user,
                             bool psd_of_interferer, double f_lo, double f_hi) {
  LinkMetrics m;
  const Eigen::VectorXd& target =
      psd_of_interferer ? out.interferer_component
                        : out.user_components[static_cast<std::size_t>(user)];
  m.rx_psd_db =
      band_psd_db(welch_psd(target, psd_segment_for(target.size())), sc.sample_rate, f_lo, f_hi);

  const double p_signal = mean_square(out.user_components[static_cast<std::size_t>(user)]);
  double p_noise = mean_square(out.interferer_component);
  for (std::size_t v = 0; v < out.user_components.size(); ++v)
    if (v != static_cast<std::size_t>(user)) p_noise += mean_square(out.user_components[v]);
  m.sir_eff_db = p_noise > 0.0
                     ? 10.0 * std::log10(std::max(p_signal, 1e-300) / p_noise)
                     : std::numeric_limits<double>::infinity();

  const QamStream& stream = sc.users[static_cast<std::size_t>(user)].stream;
  const DemodResult demod = superhet_demodulate(out.waveform, stream);
  m.lock_failure = demod.lock_failure;
  const auto reference = gray_map(stream.payload, stream.order);
  if (demod.symbols.size() == reference.size() && reference.size() >= 100) {
    m.evm_pct = compute_evm(demod.symbols, reference);
  } else {
    m.evm_pct = 100.0;
    m.lock_failure = true;
  }
  m.ber = m.lock_failure ? 0.5 : compute_ber(demod.bits, stream.payload);
  return m;
}

// Seeded payloads (one independent stream per user) plus a record length that
// closes over the longest modulated envelope and the timing-search margin.
void assign_payloads_and_duration(Scenario& cell, std::size_t floor_bits) {
  double need_samples = 8192.0;
  for (std::size_t u = 0; u < cell.users.size(); ++u) {
    QamStream& stream = cell.users[u].stream;
    const auto bps = static_cast<std::size_t>(stream.bits_per_symbol());
    std::size_t want = std::max(floor_bits, stream.payload.size());
    want = (want + bps - 1) / bps * bps;
    stream.payload = seeded_bits(mix_seed(cell.seed, 100 + u), want);
    const int sps = resolve_sps(cell.sample_rate, stream.symbol_rate, "channel_apply");
    const double symbols = static_cast<double>(want / bps);
    need_samples = std::max(need_samples, (symbols + 11.0) * sps);
  }
  cell.duration = need_samples / cell.sample_rate;
}

} // namespace

void QamStream::validate() const {
  if (order != 4 && order != 16) throw ConfigError("QamStream: order must be 4 or 16");
  if (!(symbol_rate > 0.0)) throw ConfigError("QamStream: symbol_rate must be > 0");
  if (!(rolloff > 0.0 && rolloff <= 1.0))
    throw ConfigError("QamStream: rolloff must lie in (0, 1]");
  if (!(if_freq > 0.0)) throw ConfigError("QamStream: if_freq must be > 0");
  if (!(tx_power_scale > 0.0)) throw ConfigError("QamStream: tx_power_scale must be > 0");
  if (payload.size() % static_cast<std::size_t>(bits_per_symbol()) != 0)
    throw ConfigError("QamStream: payload length must be a multiple of the bits per symbol");
  for (std::uint8_t b : payload)
    if (b > 1) throw ConfigError("QamStream: payload bits must be 0 or 1");
}

std::vector<std::complex<double>> gray_map(const std::vector<std::uint8_t>& bits, int order) {
  if (order != 4 && order != 16) throw ConfigError("gray_map: order must be 4 or 16");
  const std::size_t bps = order == 4 ? 2 : 4;
  if (bits.size() % bps != 0)
    throw ConfigError("gray_map: bit count must be a multiple of the bits per symbol");
  for (std::uint8_t b : bits)
    if (b > 1) throw ConfigError("gray_map: bits must be 0 or 1");

  std::vector<std::complex<double>> symbols(bits.size() / bps);
  if (order == 4) {
    const double s = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 0; k < symbols.size(); ++k)
      symbols[k] = {s * (1.0 - 2.0 * bits[2 * k]), s * (1.0 - 2.0 * bits[2 * k + 1])};
  } else {
    const double s = 1.0 / std::sqrt(10.0);
    for (std::size_t k = 0; k < symbols.size(); ++k)
      symbols[k] = {s * axis_level(bits[4 * k], bits[4 * k + 1]),
                    s * axis_level(bits[4 * k + 2], bits[4 * k + 3])};
  }
  return symbols;
}

std::complex<double> nearest_constellation_point(std::complex<double> symbol, int order) {
  if (order != 4 && order != 16)
    throw ConfigError("nearest_constellation_point: order must be 4 or 16");
  if (order == 4) {
    const double s = 1.0 / std::sqrt(2.0);
    return {symbol.real() < 0.0 ? -s : s, symbol.imag() < 0.0 ? -s : s};
  }
  const double s = 1.0 / std::sqrt(10.0);
  auto slice_axis = [s](double v) {
    const int idx = std::clamp(static_cast<int>(std::lround((v / s + 3.0) / 2.0)), 0, 3);
    return s * (2.0 * idx - 3.0);
  };
  return {slice_axis(symbol.real()), slice_axis(symbol.imag())};
}

std::vector<std::uint8_t> gray_demap_nearest(const std::vector<std::complex<double>>& symbols,
                                             int order) {
  if (order != 4 && order != 16)
    throw ConfigError("gray_demap_nearest: order must be 4 or 16");
  std::vector<std::uint8_t> bits;
  bits.reserve(symbols.size() * (order == 4 ? 2 : 4));
  if (order == 4) {
    for (const auto& y : symbols) {
      bits.push_back(y.real() < 0.0 ? 1 : 0);
      bits.push_back(y.imag() < 0.0 ? 1 : 0);
    }
    return bits;
  }
  const double s = 1.0 / std::sqrt(10.0);
  for (const auto& y : symbols) {
    const std::complex<double> p = nearest_constellation_point(y, 16);
    std::uint8_t hi = 0, lo = 0;
    axis_bits(p.real() / s, hi, lo);
    bits.push_back(hi);
    bits.push_back(lo);
    axis_bits(p.imag() / s, hi, lo);
    bits.push_back(hi);
    bits.push_back(lo);
  }
  return bits;
}

Eigen::VectorXd srrc_taps(double rolloff, int samples_per_symbol, int span_symbols) {
  if (!(rolloff > 0.0 && rolloff <= 1.0))
    throw ConfigError("srrc_taps: rolloff must lie in (0, 1]");
  if (samples_per_symbol < 2) throw ConfigError("srrc_taps: need >= 2 samples per symbol");
  if (span_symbols < 1) throw ConfigError("srrc_taps: span must be >= 1 symbol");

  const int n = span_symbols * samples_per_symbol;
  Eigen::VectorXd taps(n + 1);
  for (int k = 0; k <= n; ++k)
    taps[k] = srrc_impulse((k - 0.5 * n) / samples_per_symbol, rolloff);
  taps /= taps.norm();
  return taps;
}

std::vector<std::complex<double>> qam_modulate(const QamStream& stream, double sample_rate,
                                               int span_symbols) {
  stream.validate();
  if (!(sample_rate > 0.0)) throw ConfigError("qam_modulate: sample_rate must be > 0");
  const int sps = resolve_sps(sample_rate, stream.symbol_rate, "qam_modulate");
  const auto symbols = gray_map(stream.payload, stream.order);
  const Eigen::VectorXd taps = srrc_taps(stream.rolloff, sps, span_symbols);

  std::vector<std::complex<double>> out(symbols.size() * sps + taps.size() - 1, {0.0, 0.0});
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const std::complex<double> s = symbols[k];
    double* base = reinterpret_cast<double*>(out.data() + k * sps);
    for (Eigen::Index j = 0; j < taps.size(); ++j) {
      base[2 * j] += s.real() * taps[j];
      base[2 * j + 1] += s.imag() * taps[j];
    }
  }
  return out;
}

void Scenario::validate() const {
  scheme.validate();
  drive.validate();
  geometry.validate();
  lo.validate();
  doppler.validate();

  if (bands.empty()) throw ConfigError("Scenario: at least one band is required");
  for (std::size_t i = 0; i < bands.size(); ++i) {
    bands[i].validate();
    for (std::size_t j = i + 1; j < bands.size(); ++j)
      if (bands[i].band_index == bands[j].band_index)
        throw ConfigError("Scenario: band indices must be distinct");
  }
  auto band_listed = [this](int idx) {
    for (const BandConfig& b : bands)
      if (b.band_index == idx) return true;
    return false;
  };
  for (const RfTone& t : lo.tones)
    if (!band_listed(t.band_index))
      throw ConfigError("Scenario: dressing tone references an unlisted band");

  if (users.empty()) throw ConfigError("Scenario: at least one user is required");
  for (const UserLink& u : users) {
    u.tone.validate(RfTone::Role::signal);
    u.stream.validate();
    if (!band_listed(u.tone.band_index))
      throw ConfigError("Scenario: user tone references an unlisted band");
    if (lo.band_tones(u.tone.band_index).empty())
      throw ConfigError("Scenario: user band has no dressing tone");
  }
  for (std::size_t i = 0; i < users.size(); ++i)
    for (std::size_t j = i + 1; j < users.size(); ++j)
      if (std::abs(users[i].stream.if_freq - users[j].stream.if_freq) < 1e-9)
        throw ConfigError("Scenario: user intermediate frequencies must be distinct");

  for (const InterfererSpec& spec : interferers) {
    spec.tone.validate(RfTone::Role::signal);
    if (!(spec.bandwidth_hz > 0.0))
      throw ConfigError("Scenario: interferer bandwidth must be > 0");
    if (!(spec.center_if_hz > 0.0))
      throw ConfigError("Scenario: interferer center frequency must be > 0");
    if (!band_listed(spec.tone.band_index))
      throw ConfigError("Scenario: interferer tone references an unlisted band");
    if (lo.band_tones(spec.tone.band_index).empty())
      throw ConfigError("Scenario: interferer band has no dressing tone");
  }

  if (!(noise_density >= 0.0)) throw ConfigError("Scenario: noise_density must be >= 0");
  if (!(duration > 0.0)) throw ConfigError("Scenario: duration must be > 0");
  if (!(sample_rate > 0.0)) throw ConfigError("Scenario: sample_rate must be > 0");
}

const BandConfig& Scenario::band(int index) const {
  for (const BandConfig& b : bands)
    if (b.band_index == index) return b;
  throw ConfigError("Scenario: unknown band index");
}

ChannelOutput channel_apply(const Scenario& scenario) { return apply_impl(scenario, nullptr); }

ChannelOutput channel_apply(const Scenario& scenario, const SusceptibilityModel& model) {
  return apply_impl(scenario, &model);
}

DemodResult superhet_demodulate(const Waveform& waveform, const QamStream& reference,
                                int span_symbols) {
  reference.validate();
  if (!(waveform.sample_rate > 0.0) || waveform.samples.size() == 0)
    throw ConfigError("superhet_demodulate: empty waveform");
  if (reference.symbol_count() < 1)
    throw ConfigError("superhet_demodulate: reference stream has no payload");
  const double fs = waveform.sample_rate;
  if (reference.if_freq >= 0.5 * fs)
    throw ConfigError("superhet_demodulate: intermediate frequency must lie below Nyquist");
  const int sps = resolve_sps(fs, reference.symbol_rate, "superhet_demodulate");
  const auto n = waveform.samples.size();

  std::vector<std::complex<double>> baseband(static_cast<std::size_t>(n));
  const double w_if = 2.0 * kPi * reference.if_freq / fs;
  for (Eigen::Index m = 0; m < n; ++m) {
    const double arg = -w_if * static_cast<double>(m);
    baseband[static_cast<std::size_t>(m)] =
        2.0 * waveform.samples[m] * std::complex<double>(std::cos(arg), std::sin(arg));
  }
  const Eigen::VectorXd taps = srrc_taps(reference.rolloff, sps, span_symbols);
  const auto filtered = convolve_full(baseband, taps);
  baseband.clear();
  baseband.shrink_to_fit();

  const int symbol_count = reference.symbol_count();
  const Eigen::Index grid_base = static_cast<Eigen::Index>(taps.size()) - 1;

  // Timing: max-energy grid search across one symbol period around the
  // nominal matched-filter delay.
  DemodResult result;
  double best_energy = -1.0;
  double energy_sum = 0.0;
  int energy_count = 0;
  int best_offset = 0;
  for (int d = -sps / 2; d < sps - sps / 2; ++d) {
    double acc = 0.0;
    int used = 0;
    for (int k = 0; k < symbol_count; ++k) {
      const Eigen::Index idx = grid_base + static_cast<Eigen::Index>(k) * sps + d;
      if (idx < 0 || idx >= static_cast<Eigen::Index>(filtered.size())) continue;
      acc += std::norm(filtered[static_cast<std::size_t>(idx)]);
      ++used;
    }
    if (used < (symbol_count + 1) / 2) continue;
    const double energy = acc / used;
    energy_sum += energy;
    ++energy_count;
    if (energy > best_energy) {
      best_energy = energy;
      best_offset = d;
    }
  }
  if (energy_count == 0 || !(energy_sum > 0.0)) {
    result.lock_failure = true;
    return result;
  }
  result.timing_metric = best_energy / (energy_sum / energy_count);
  if (result.timing_metric < kTimingLockThreshold) result.lock_failure = true;

  std::vector<std::complex<double>> symbols;
  symbols.reserve(static_cast<std::size_t>(symbol_count));
  for (int k = 0; k < symbol_count; ++k) {
    const Eigen::Index idx = grid_base + static_cast<Eigen::Index>(k) * sps + best_offset;
    if (idx < 0 || idx >= static_cast<Eigen::Index>(filtered.size())) break;
    symbols.push_back(filtered[static_cast<std::size_t>(idx)]);
  }
  if (symbols.empty()) {
    result.lock_failure = true;
    return result;
  }

  double power = 0.0;
  for (const auto& y : symbols) power += std::norm(y);
  power /= static_cast<double>(symbols.size());
  if (!(power > 0.0)) {
    result.lock_failure = true;
    result.symbols = std::move(symbols);
    result.bits = gray_demap_nearest(result.symbols, reference.order);
    return result;
  }
  std::complex<double> correction = 1.0 / std::sqrt(power);

  // Blind fourth-power phase seed: the squared-square of every square QAM
  // constellation concentrates at angle pi + 4*phi.
  std::complex<double> quad{0.0, 0.0};
  for (const auto& y : symbols) {
    const std::complex<double> v = y * correction;
    quad += v * v * v * v;
  }
  if (std::abs(quad) > 0.0)
    correction *= std::exp(-kJ * ((std::arg(quad) - kPi) / 4.0));

  // Decision-directed refinement of the complex gain.
  for (int round = 0; round < 3; ++round) {
    std::complex<double> num{0.0, 0.0};
    double den = 0.0;
    for (const auto& y : symbols) {
      const std::complex<double> v = y * correction;
      const std::complex<double> d = nearest_constellation_point(v, reference.order);
      num += v * std::conj(d);
      den += std::norm(d);
    }
    if (!(std::abs(num) > 0.0) || !(den > 0.0)) break;
    correction *= den / num;
  }

  // The fourth-power seed leaves a quadrant ambiguity; resolve it against the
  // stream's leading symbols and use the disagreement as the lock check.
  const auto reference_symbols = gray_map(reference.payload, reference.order);
  const std::size_t prefix = std::min<std::size_t>(64, symbols.size());
  double best_error = 2.0;
  std::complex<double> best_rotation{1.0, 0.0};
  for (int q = 0; q < 4; ++q) {
    const std::complex<double> rotation = std::exp(-kJ * (0.5 * kPi * q));
    int mismatches = 0;
    for (std::size_t k = 0; k < prefix; ++k) {
      const std::complex<double> sliced =
          nearest_constellation_point(symbols[k] * correction * rotation, reference.order);
      if (std::abs(sliced - reference_symbols[k]) > 1e-9) ++mismatches;
    }
    const double error = static_cast<double>(mismatches) / static_cast<double>(prefix);
    if (error < best_error) {
      best_error = error;
      best_rotation = rotation;
    }
  }
  correction *= best_rotation;
  if (best_error > kSyncErrorThreshold) result.lock_failure = true;

  result.phase_estimate = wrap_pi(-std::arg(correction));
  result.symbols = std::move(symbols);
  for (auto& y : result.symbols) y *= correction;
  result.bits = gray_demap_nearest(result.symbols, reference.order);
  return result;
}

double compute_evm(const std::vector<std::complex<double>>& rx,
                   const std::vector<std::complex<double>>& ref) {
  if (rx.size() != ref.size()) throw LengthMismatch("compute_evm: symbol counts differ");
  if (rx.size() < 100) throw ConfigError("compute_evm: need at least 100 symbols");

  std::complex<double> num{0.0, 0.0};
  double den = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    num += ref[k] * std::conj(rx[k]);
    den += std::norm(rx[k]);
  }
  const std::complex<double> gain = den > 0.0 ? num / den : std::complex<double>{0.0, 0.0};

  double error = 0.0;
  double signal = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    error += std::norm(gain * rx[k] - ref[k]);
    signal += std::norm(ref[k]);
  }
  if (!(signal > 0.0)) throw ConfigError("compute_evm: reference symbols are all zero");
  return 100.0 * std::sqrt(error / signal);
}

double compute_ber(const std::vector<std::uint8_t>& rx, const std::vector<std::uint8_t>& tx) {
  if (rx.size() != tx.size()) throw LengthMismatch("compute_ber: bit counts differ");
  if (rx.empty()) throw ConfigError("compute_ber: empty bit streams");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < rx.size(); ++i)
    if (rx[i] != tx[i]) ++errors;
  return static_cast<double>(errors) / static_cast<double>(rx.size());
}

Eigen::VectorXd welch_psd(const Eigen::VectorXd& x, int segment_size) {
  if (segment_size < 8 || (segment_size & (segment_size - 1)) != 0)
    throw ConfigError("welch_psd: segment_size must be a power of two >= 8");
  if (x.size() < segment_size)
    throw ConfigError("welch_psd: record shorter than one segment");

  Eigen::VectorXd window(segment_size);
  for (int i = 0; i < segment_size; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / segment_size);
  const double norm = window.squaredNorm();

  Eigen::VectorXd psd = Eigen::VectorXd::Zero(segment_size / 2 + 1);
  std::vector<std::complex<double>> buffer(static_cast<std::size_t>(segment_size));
  const int hop = segment_size / 2;
  int segments = 0;
  for (Eigen::Index start = 0; start + segment_size <= x.size(); start += hop) {
    for (int i = 0; i < segment_size; ++i)
      buffer[static_cast<std::size_t>(i)] = x[start + i] * window[i];
    fft_radix2(buffer);
    for (int k = 0; k <= segment_size / 2; ++k) {
      const double one_sided = (k == 0 || k == segment_size / 2) ? 1.0 : 2.0;
      psd[k] += one_sided * std::norm(buffer[static_cast<std::size_t>(k)]) / norm;
    }
    ++segments;
  }
  psd /= segments;
  return psd;
}

double band_psd_db(const Eigen::VectorXd& psd, double sample_rate, double f_lo, double f_hi) {
  if (!(sample_rate > 0.0)) throw ConfigError("band_psd_db: sample_rate must be > 0");
  if (!(f_lo < f_hi)) throw ConfigError("band_psd_db: need f_lo < f_hi");
  if (psd.size() < 2) throw ConfigError("band_psd_db: empty density");
  const int segment = 2 * (static_cast<int>(psd.size()) - 1);
  const double bin_width = sample_rate / segment;

  double acc = 0.0;
  int count = 0;
  for (Eigen::Index k = 0; k < psd.size(); ++k) {
    const double f = bin_width * static_cast<double>(k);
    if (f < f_lo || f > f_hi) continue;
    acc += psd[k];
    ++count;
  }
  if (count == 0) throw ConfigError("band_psd_db: no bins inside the requested band");
  return 10.0 * std::log10(std::max(acc / count / sample_rate, 1e-300));
}

std::vector<InterferenceRow> run_interference_sweep(const Scenario& base,
                                                    const std::vector<double>& lengths_m,
                                                    const std::vector<double>& sirs_db,
                                                    int threads) {
  base.validate();
  if (base.users.size() != 1 || base.interferers.size() != 1)
    throw ConfigError("run_interference_sweep: need exactly one user and one interferer");
  if (lengths_m.empty() || sirs_db.empty())
    throw ConfigError("run_interference_sweep: length and SIR grids must be non-empty");

  const SusceptibilityModel model = SusceptibilityModel::build(
      base.scheme, base.drive, max_referenced_rabi_sum(base) * (1.0 + 1e-9), base.doppler);

  const int cells = static_cast<int>(lengths_m.size() * sirs_db.size());
  std::vector<InterferenceRow> rows(static_cast<std::size_t>(cells));
  parallel_for(cells, threads, [&](int idx) {
    const std::size_t li = static_cast<std::size_t>(idx) / sirs_db.size();
    const std::size_t si = static_cast<std::size_t>(idx) % sirs_db.size();

    Scenario cell = base;
    cell.geometry.length = lengths_m[li];
    // One stream per length: SIR only rescales the interferer, so a silenced
    // interferer yields SIR-independent rows.
    cell.seed = mix_seed(base.seed, 1000 + li);
    assign_payloads_and_duration(cell, 100000);

    const UserLink& user = cell.users.front();
    InterfererSpec& interferer = cell.interferers.front();
    if (interferer.tone.rabi > 0.0)
      interferer.tone.rabi = user.tone.rabi * std::sqrt(user.stream.tx_power_scale) *
                             std::pow(10.0, -sirs_db[si] / 20.0);

    const ChannelOutput out = apply_impl(cell, &model);
    const double half_bw = 0.5 * interferer.bandwidth_hz;
    InterferenceRow row;
    row.cell_len_m = lengths_m[li];
    row.sir_db = sirs_db[si];
    row.metrics = link_metrics_for(cell, out, 0, true,
                                   std::max(interferer.center_if_hz - half_bw, 0.0),
                                   interferer.center_if_hz + half_bw);
    rows[static_cast<std::size_t>(idx)] = row;
  });
  return rows;
}

std::vector<MultiuserRow> run_multiuser(
    const Scenario& base, const std::vector<std::pair<double, double>>& lo_dbm_schedule,
    int threads) {
  base.validate();
  if (base.users.size() != 2)
    throw ConfigError("run_multiuser: need exactly two users");
  if (base.users[0].tone.band_index != base.users[1].tone.band_index)
    throw ConfigError("run_multiuser: both users must share one band");
  if (lo_dbm_schedule.empty()) throw ConfigError("run_multiuser: empty power schedule");
  const int band = base.users[0].tone.band_index;

  std::vector<std::size_t> tone_slots;
  for (std::size_t i = 0; i < base.lo.tones.size(); ++i)
    if (base.lo.tones[i].band_index == band) tone_slots.push_back(i);
  if (tone_slots.size() != 2)
    throw ConfigError("run_multiuser: the shared band must carry exactly two dressing tones");

  const double ref_dbm = 0.5 * (lo_dbm_schedule.front().first + lo_dbm_schedule.front().second);
  auto scales = [&](const std::pair<double, double>& step) {
    return std::pair<double, double>{std::pow(10.0, (step.first - ref_dbm) / 20.0),
                                     std::pow(10.0, (step.second - ref_dbm) / 20.0)};
  };
  double cap = max_referenced_rabi_sum(base);
  for (const auto& step : lo_dbm_schedule) {
    const auto [s1, s2] = scales(step);
    cap = std::max(cap, base.lo.tones[tone_slots[0]].rabi * s1 +
                            base.lo.tones[tone_slots[1]].rabi * s2);
  }
  const SusceptibilityModel model =
      SusceptibilityModel::build(base.scheme, base.drive, cap * (1.0 + 1e-9), base.doppler);

  const int steps = static_cast<int>(lo_dbm_schedule.size());
  std::vector<MultiuserRow> rows(static_cast<std::size_t>(steps) * 2);
  parallel_for(steps, threads, [&](int step) {
    const auto& dbm = lo_dbm_schedule[static_cast<std::size_t>(step)];
    Scenario cell = base;
    const auto [s1, s2] = scales(dbm);
    cell.lo.tones[tone_slots[0]].rabi = base.lo.tones[tone_slots[0]].rabi * s1;
    cell.lo.tones[tone_slots[1]].rabi = base.lo.tones[tone_slots[1]].rabi * s2;
    cell.seed = mix_seed(base.seed, 2000 + static_cast<std::uint64_t>(step));
    assign_payloads_and_duration(cell, 10000);

    const ChannelOutput out = apply_impl(cell, &model);
    for (int u = 0; u < 2; ++u) {
      const QamStream& stream = cell.users[static_cast<std::size_t>(u)].stream;
      const double half_bw = 0.5 * stream.symbol_rate * (1.0 + stream.rolloff);
      MultiuserRow row;
      row.lo1_dbm = dbm.first;
      row.lo2_dbm = dbm.second;
      row.user_index = u;
      row.metrics = link_metrics_for(cell, out, u, false, stream.if_freq - half_bw,
                                     stream.if_freq + half_bw);
      rows[static_cast<std::size_t>(step) * 2 + static_cast<std::size_t>(u)] = row;
    }
  });
  return rows;
}

std::vector<MultibandRow> run_multiband(
    const Scenario& base, const std::vector<std::pair<double, double>>& offsets_deg,
    int threads) {
  base.validate();
  if (base.bands.size() != 2) throw ConfigError("run_multiband: need exactly two bands");
  if (base.users.size() != 2 ||
      base.users[0].tone.band_index == base.users[1].tone.band_index)
    throw ConfigError("run_multiband: need one user on each band");
  if (offsets_deg.empty()) throw ConfigError("run_multiband: empty offset schedule");

  const SusceptibilityModel model = SusceptibilityModel::build(
      base.scheme, base.drive, max_referenced_rabi_sum(base) * (1.0 + 1e-9), base.doppler);

  const int steps = static_cast<int>(offsets_deg.size());
  std::vector<MultibandRow> rows(static_cast<std::size_t>(steps) * 2);
  parallel_for(steps, threads, [&](int step) {
    const auto& offset = offsets_deg[static_cast<std::size_t>(step)];
    Scenario cell = base;
    cell.users[0].tone.direction_deg += offset.first;
    cell.users[1].tone.direction_deg += offset.second;
    cell.seed = mix_seed(base.seed, 3000 + static_cast<std::uint64_t>(step));
    assign_payloads_and_duration(cell, 10000);

    const ChannelOutput out = apply_impl(cell, &model);
    for (int u = 0; u < 2; ++u) {
      const QamStream& stream = cell.users[static_cast<std::size_t>(u)].stream;
      const double half_bw = 0.5 * stream.symbol_rate * (1.0 + stream.rolloff);
      MultibandRow row;
      row.band_index = cell.users[static_cast<std::size_t>(u)].tone.band_index;
      row.offset_deg = u == 0 ? offset.first : offset.second;
      row.metrics = link_metrics_for(cell, out, u, false, stream.if_freq - half_bw,
                                     stream.if_freq + half_bw);
      rows[static_cast<std::size_t>(step) * 2 + static_cast<std::size_t>(u)] = row;
    }
  });
  return rows;
}

} // namespace qap
