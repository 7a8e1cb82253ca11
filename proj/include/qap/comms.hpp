// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <vector>

#include "qap/aperture.hpp"
#include "qap/errors.hpp"
#include "qap/level_scheme.hpp"
#include "qap/rf_field.hpp"
#include "qap/transmission.hpp"

namespace qap {

// Default relative noise density (one-sided PSD in units where the aligned
// reference user has unit carrier amplitude). Calibrated so an aligned user
// at the 8 cm / 15.59 GHz operating point demodulates at roughly 9.5% EVM.
inline constexpr double kDefaultNoiseDensity = 1.1e-6;

// Demodulator lock heuristics. An SRRC stream sampled on the symbol grid
// carries all of the pulse energy while the offset-averaged energy is about
// 0.91 of it, so the best/mean timing ratio of a live link approaches 1.10
// noise-free and decays toward 1 as in-band noise rises; 1.02 keeps weak but
// sliceable links while stationary noise (flat in timing) stays below it.
// The sync prefix then rejects anything that slices like noise: tolerated
// symbol disagreement over the known leading symbols.
inline constexpr double kTimingLockThreshold = 1.02;
inline constexpr double kSyncErrorThreshold = 0.45;

struct QamStream {
  int order = 4;               // 4 (QPSK) or 16
  double symbol_rate = 4000.0; // Sym/s
  double rolloff = 0.35;
  double if_freq = 5000.0;     // Hz, offset of the signal carrier from its band dressing tone
  std::vector<std::uint8_t> payload; // bits (0/1), length a multiple of bits_per_symbol
  double tx_power_scale = 1.0;

  int bits_per_symbol() const { return order == 4 ? 2 : 4; }
  int symbol_count() const { return static_cast<int>(payload.size()) / bits_per_symbol(); }
  void validate() const;
};

// Gray-mapped constellation points at unit average symbol energy.
std::vector<std::complex<double>> gray_map(const std::vector<std::uint8_t>& bits, int order);
std::vector<std::uint8_t> gray_demap_nearest(const std::vector<std::complex<double>>& symbols,
                                             int order);
std::complex<double> nearest_constellation_point(std::complex<double> symbol, int order);

// Square-root raised-cosine taps, unit energy, odd length
// span_symbols * samples_per_symbol + 1.
Eigen::VectorXd srrc_taps(double rolloff, int samples_per_symbol, int span_symbols = 10);

// Complex baseband at sample_rate: Gray mapping, zero-stuffed upsampling,
// SRRC shaping. Output carries the full convolution tail; the matched filter
// pair delay is span_symbols * samples_per_symbol samples.
std::vector<std::complex<double>> qam_modulate(const QamStream& stream, double sample_rate,
                                               int span_symbols = 10);

struct UserLink {
  RfTone tone;      // direction/amplitude/band of the signal carrier
  QamStream stream; // payload riding on it
};

struct InterfererSpec {
  RfTone tone;                  // direction/amplitude/band
  double bandwidth_hz = 8000.0; // band-limited noise width
  double center_if_hz = 0.0;    // offset of the noise band center from the band carrier
};

// A complete link experiment: receiver physics plus tones, payloads, noise,
// and seeding. A fixed seed reproduces every sample bit-for-bit.
struct Scenario {
  LevelScheme scheme{};
  DriveParams drive{};
  ApertureGeometry geometry{};
  LoConfiguration lo{};
  std::vector<BandConfig> bands{};
  std::vector<UserLink> users{};
  std::vector<InterfererSpec> interferers{};
  double noise_density = kDefaultNoiseDensity;
  double duration = 0.5;         // s
  double sample_rate = 144000.0; // Hz
  std::uint64_t seed = 1;
  DopplerSpec doppler{};

  void validate() const;
  const BandConfig& band(int index) const;
};

// Received waveform decomposed into its independently synthesized parts
// (linearized model), all normalized by the aligned-reference amplitude of
// the first user so the noise density is a geometry-free knob. PSD and
// effective-SIR metrics come from the parts, the demodulator sees the sum.
struct ChannelOutput {
  Waveform waveform;
  std::vector<Eigen::VectorXd> user_components;
  Eigen::VectorXd interferer_component;
  Eigen::VectorXd noise_component;
  std::vector<double> user_gains;         // pattern gain at each user direction
  std::vector<double> user_if_phases;     // rad, per user at t = 0
  double reference_amplitude = 0.0;       // W, the normalization divisor
  bool quasi_static_warning = false;      // some beat rate too fast for the adiabatic model
};

ChannelOutput channel_apply(const Scenario& scenario);
// Same channel with a caller-owned susceptibility surrogate; it must cover
// every dressing amplitude in the scenario. Sweeps and tests share one model
// across many cells instead of rebuilding it per call.
ChannelOutput channel_apply(const Scenario& scenario, const SusceptibilityModel& model);

struct DemodResult {
  std::vector<std::complex<double>> symbols; // timing/phase-aligned
  std::vector<std::uint8_t> bits;
  bool lock_failure = false;
  double timing_metric = 0.0;
  double phase_estimate = 0.0; // rad
};

// IF receiver: digital downconversion at the stream's offset frequency,
// SRRC matched filter, max-energy symbol timing over one symbol period,
// blind fourth-power carrier-phase seed refined decision-directed, and the
// residual quadrant ambiguity resolved against the stream's leading symbols.
// Loss of lock is reported, not thrown.
DemodResult superhet_demodulate(const Waveform& waveform, const QamStream& reference,
                                int span_symbols = 10);

// 100 * sqrt(mean |rx - ref|^2 / mean |ref|^2) after a least-squares complex
// gain alignment of rx onto ref. Requires >= 100 symbols.
double compute_evm(const std::vector<std::complex<double>>& rx,
                   const std::vector<std::complex<double>>& ref);

// Hamming distance over length; LengthMismatch on unequal sizes.
double compute_ber(const std::vector<std::uint8_t>& rx, const std::vector<std::uint8_t>& tx);

// Welch periodogram, Hann window, 50% overlap: one-sided density over
// [0, sample_rate/2], segment_size/2 + 1 bins, linear units^2/Hz.
Eigen::VectorXd welch_psd(const Eigen::VectorXd& x, int segment_size = 4096);
// Mean of the one-sided density over [f_lo, f_hi], in dB.
double band_psd_db(const Eigen::VectorXd& psd, double sample_rate, double f_lo, double f_hi);

struct LinkMetrics {
  double evm_pct = 0.0;
  double ber = 0.5;
  double rx_psd_db = 0.0;     // in-band PSD of the swept component
  double sir_eff_db = 0.0;    // user vs interferer power after pattern gains
  bool lock_failure = false;
};

struct InterferenceRow {
  double cell_len_m = 0.0;
  double sir_db = 0.0;
  LinkMetrics metrics{};
};

// One user, one interferer; per (length, SIR) cell the interferer amplitude
// is set against the user's transmit power, the link run, and metrics
// gathered. rx_psd_db tracks the interferer's in-band density. Cells run
// concurrently, each on its own derived seed.
std::vector<InterferenceRow> run_interference_sweep(const Scenario& base,
                                                    const std::vector<double>& lengths_m,
                                                    const std::vector<double>& sirs_db,
                                                    int threads = 0);

struct MultiuserRow {
  double lo1_dbm = 0.0;
  double lo2_dbm = 0.0;
  int user_index = 0;
  LinkMetrics metrics{};
};

// Two dressing tones, two users at the two peaks; the schedule rebalances the
// tone powers (dBm pairs mapped to relative amplitudes) while both links run.
// rx_psd_db tracks each user's own in-band density.
std::vector<MultiuserRow> run_multiuser(const Scenario& base,
                                        const std::vector<std::pair<double, double>>& lo_dbm_schedule,
                                        int threads = 0);

struct MultibandRow {
  int band_index = 0;
  double offset_deg = 0.0;
  LinkMetrics metrics{};
};

// One user per band; each schedule step adds the given signed angular offsets
// to the user directions. rx_psd_db tracks each user's own in-band density.
std::vector<MultibandRow> run_multiband(const Scenario& base,
                                        const std::vector<std::pair<double, double>>& offsets_deg,
                                        int threads = 0);

} // namespace qap
