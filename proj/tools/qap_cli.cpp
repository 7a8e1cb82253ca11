// SPDX-License-Identifier: Apache-2.0
//
// qap: beam patterns, absorption spectra, dressing-phase fits, and digital
// link campaigns for a single-cell RF-dressed vapor receiver.
//
// Exit codes: 0 success, 2 configuration problems (bad flags, malformed or
// inconsistent config files), 3 numerical failures.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qap/aperture.hpp"
#include "qap/comms.hpp"
#include "qap/config.hpp"
#include "qap/constants.hpp"
#include "qap/errors.hpp"
#include "qap/estimation.hpp"
#include "qap/manifest.hpp"
#include "qap/susceptibility.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using qap::AppConfig;

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  auto* config = cmd->add_option("--config", opts.config_path, "Config file (JSON)");
  auto* preset =
      cmd->add_option("--preset", opts.preset_name, "Built-in scenario name (see --list)");
  config->excludes(preset);
  preset->excludes(config);
  cmd->add_option("--out", opts.out_dir, "Output directory (default: $QAP_OUT_DIR or .)");
  cmd->add_option("--seed", opts.seed, "Master seed override")
      ->each([&opts](const std::string&) { opts.seed_given = true; });
  cmd->add_option("--threads", opts.threads, "Worker threads (0 = hardware)");
}

AppConfig resolve_config(const CommonOpts& opts) {
  AppConfig cfg;
  if (!opts.preset_name.empty())
    cfg = qap::preset(opts.preset_name);
  else if (!opts.config_path.empty())
    cfg = qap::load_config(opts.config_path);
  else
    throw qap::ConfigError("cli: pass --config FILE or --preset NAME");
  if (opts.seed_given) cfg.seed = opts.seed;
  return cfg;
}

std::filesystem::path resolve_out_dir(const CommonOpts& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (const char* env = std::getenv("QAP_OUT_DIR"); env != nullptr && env[0] != '\0') return env;
  return ".";
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Accumulates outputs and timing for the provenance sidecar all commands write.
struct RunContext {
  std::filesystem::path dir;
  qap::RunManifest manifest;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  RunContext(const CommonOpts& opts, const AppConfig& cfg, const std::string& command) {
    dir = resolve_out_dir(opts);
    manifest.version = kVersion;
    manifest.command = command;
    manifest.seed = cfg.seed;
    manifest.config_echo = qap::config_to_json(cfg);
  }

  void add_output(const std::string& name, const std::string& content) {
    qap::OutputRecord rec = qap::record_output((dir / name).string(), content);
    rec.path = name;
    manifest.outputs.push_back(rec);
  }

  void finish() {
    manifest.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    qap::write_manifest((dir / "run_manifest.json").string(), manifest);
    for (const std::string& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
  }
};

Eigen::VectorXd theta_grid(const qap::RunSection& run) {
  const int n =
      static_cast<int>(std::floor((run.theta_stop_deg - run.theta_start_deg) /
                                  run.theta_step_deg + 1e-9)) + 1;
  if (n < 3) throw qap::ConfigError("cli: angle sweep needs at least 3 grid points");
  Eigen::VectorXd grid(n);
  for (int i = 0; i < n; ++i) grid[i] = run.theta_start_deg + i * run.theta_step_deg;
  return grid;
}

nlohmann::json pattern_summary(const qap::BeamPattern& pattern,
                               std::vector<std::string>& warnings, const std::string& label) {
  nlohmann::json j;
  j["peak_angle_deg"] = pattern.peak_angle_deg();
  try {
    const qap::HpbwResult h = qap::measure_hpbw(pattern);
    if (h.censored) {
      warnings.push_back(label + ": beam wider than the sampled sector; width censored");
    } else {
      j["hpbw_deg"] = h.width_deg;
      if (h.wide_beam)
        warnings.push_back(label + ": beam wider than 60 degrees; width is indicative only");
    }
  } catch (const qap::NoCrossing& e) {
    warnings.push_back(label + ": " + e.what());
  }
  return j;
}

int cmd_pattern(const CommonOpts& opts) {
  const AppConfig cfg = resolve_config(opts);
  const std::string& mode = cfg.run.mode;
  if (mode != "single" && mode != "multipeak" && mode != "multiband")
    throw qap::ConfigError("pattern: run.mode must be single, multipeak, or multiband");

  RunContext ctx(opts, cfg, "pattern");
  const Eigen::VectorXd grid = theta_grid(cfg.run);

  if (mode == "single") {
    if (cfg.lo.tones.size() != 1)
      throw qap::ConfigError("pattern: single mode needs exactly one lo tone");
    const qap::BeamPattern p = qap::pattern_single_peak(cfg.geometry, cfg.lo.tones[0], grid);
    ctx.add_output("pattern.csv", qap::pattern_to_csv(p));
    ctx.manifest.extra = pattern_summary(p, ctx.manifest.warnings, "pattern");
    std::cout << "pattern: wrote pattern.csv (" << p.angles_deg.size() << " rows), peak "
              << fmt(p.peak_angle_deg()) << " deg\n";
  } else if (mode == "multipeak") {
    if (cfg.lo.tones.empty())
      throw qap::ConfigError("pattern: multipeak mode needs at least one lo tone");
    qap::MultipeakDiagnostics diag;
    const qap::BeamPattern p = qap::pattern_multipeak(cfg.geometry, cfg.lo, cfg.scheme, cfg.drive,
                                                      grid, cfg.run.doppler, &diag);
    ctx.add_output("pattern.csv", qap::pattern_to_csv(p));
    nlohmann::json extra = pattern_summary(p, ctx.manifest.warnings, "pattern");
    extra["spatial_samples"] = diag.spatial_samples;
    extra["null_samples"] = diag.null_samples;
    ctx.manifest.extra = extra;
    std::cout << "pattern: wrote pattern.csv (" << p.angles_deg.size() << " rows), peak "
              << fmt(p.peak_angle_deg()) << " deg\n";
  } else {
    std::vector<qap::BandChannel> channels;
    for (const qap::BandConfig& band : cfg.bands) {
      const qap::RfTone* match = nullptr;
      for (const qap::RfTone& t : cfg.lo.tones)
        if (t.band_index == band.band_index) {
          if (match != nullptr)
            throw qap::ConfigError("pattern: multiband mode needs one lo tone per band");
          match = &t;
        }
      if (match == nullptr)
        throw qap::ConfigError("pattern: multiband mode needs one lo tone per band");
      channels.push_back({band, *match});
    }
    if (channels.empty()) throw qap::ConfigError("pattern: multiband mode needs bands");
    const std::vector<qap::BeamPattern> patterns =
        qap::pattern_multiband(cfg.geometry, channels, grid);
    nlohmann::json extra = nlohmann::json::array();
    for (std::size_t i = 0; i < patterns.size(); ++i) {
      const std::string name = "pattern_band" + std::to_string(channels[i].band.band_index) + ".csv";
      ctx.add_output(name, qap::pattern_to_csv(patterns[i]));
      nlohmann::json s = pattern_summary(patterns[i], ctx.manifest.warnings, name);
      s["band"] = channels[i].band.band_index;
      extra.push_back(s);
      std::cout << "pattern: wrote " << name << ", peak " << fmt(patterns[i].peak_angle_deg())
                << " deg\n";
    }
    ctx.manifest.extra = extra;
  }

  ctx.finish();
  return 0;
}

int cmd_spectrum(const CommonOpts& opts) {
  const AppConfig cfg = resolve_config(opts);
  if (cfg.run.mode != "spectrum")
    throw qap::ConfigError("spectrum: run.mode must be spectrum");

  RunContext ctx(opts, cfg, "spectrum");
  const double span = 2.0 * qap::kPi * cfg.run.delta_c_span_hz;
  const int n = cfg.run.delta_c_points;
  Eigen::VectorXd grid(n);
  for (int i = 0; i < n; ++i) grid[i] = -span / 2.0 + span * i / (n - 1);

  const qap::SpectrumTrace trace =
      qap::eit_spectrum(cfg.scheme, cfg.drive, grid, cfg.run.doppler, opts.threads);

  std::ostringstream csv;
  csv << "delta_c_hz,im_chi\n";
  for (Eigen::Index i = 0; i < trace.detunings.size(); ++i)
    csv << fmt(trace.detunings[i] / (2.0 * qap::kPi)) << "," << fmt(trace.absorption[i]) << "\n";
  ctx.add_output("spectrum.csv", csv.str());
  std::cout << "spectrum: wrote spectrum.csv (" << n << " rows)\n";

  if (cfg.run.fit) {
    try {
      const qap::LorentzianPairFit fit = qap::lorentzian_pair_fit(trace);
      nlohmann::json f;
      f["separation_rad_s"] = fit.separation;
      f["separation_hz"] = fit.separation / (2.0 * qap::kPi);
      f["residual"] = fit.residual;
      f["converged"] = fit.converged;
      ctx.manifest.extra = nlohmann::json{{"fit", f}};
      std::cout << "spectrum: fitted peak separation " << fmt(fit.separation / (2.0 * qap::kPi))
                << " Hz\n";
    } catch (const qap::DegenerateFit& e) {
      ctx.manifest.warnings.push_back(std::string("spectrum fit skipped: ") + e.what());
    }
  }

  ctx.finish();
  return 0;
}

int cmd_fit(const CommonOpts& opts) {
  const AppConfig cfg = resolve_config(opts);
  if (cfg.run.mode != "fit") throw qap::ConfigError("fit: run.mode must be fit");
  if (cfg.run.measured_csv.empty())
    throw qap::ConfigError("fit: run.measured_csv must name the input pattern");
  if (cfg.lo.tones.empty()) throw qap::ConfigError("fit: lo tones must be configured");

  RunContext ctx(opts, cfg, "fit");

  std::ifstream in(cfg.run.measured_csv);
  if (!in) throw qap::ConfigError("fit: cannot open " + cfg.run.measured_csv);
  const qap::BeamPattern measured = qap::read_pattern_csv(in);

  double rabi_sum = 0.0;
  for (const qap::RfTone& t : cfg.lo.tones) rabi_sum += t.rabi;
  const qap::SusceptibilityModel model = qap::SusceptibilityModel::build(
      cfg.scheme, cfg.drive, rabi_sum * (1.0 + 1e-9), cfg.run.doppler);

  qap::PhaseFitOptions options;
  options.grid_points = 256;
  options.max_evaluations = 6000;
  options.doppler = cfg.run.doppler;
  options.model = &model;
  const qap::FitResult fit =
      qap::fit_lo_phases(measured, cfg.geometry, cfg.lo, cfg.scheme, cfg.drive, options);
  if (!fit.converged)
    ctx.manifest.warnings.push_back("fit: evaluation budget exhausted; best candidate reported");

  qap::LoConfiguration fitted = cfg.lo;
  for (std::size_t i = 0; i < fitted.tones.size(); ++i) fitted.tones[i].phase = fit.phases[i];
  const qap::ApertureKernel kernel(cfg.geometry, fitted.tones, model);
  const double k_sig = 2.0 * qap::kPi / cfg.bands.at(0).wavelength;
  Eigen::VectorXd gains(measured.angles_deg.size());
  for (Eigen::Index i = 0; i < measured.angles_deg.size(); ++i)
    gains[i] = std::norm(kernel.response(measured.angles_deg[i], k_sig));
  qap::normalize_gains(gains);

  std::ostringstream csv;
  csv << "theta_deg,gain_measured,gain_fit\n";
  for (Eigen::Index i = 0; i < measured.angles_deg.size(); ++i)
    csv << fmt(measured.angles_deg[i]) << "," << fmt(measured.gains[i]) << "," << fmt(gains[i])
        << "\n";
  ctx.add_output("fit_overlay.csv", csv.str());

  nlohmann::json result;
  result["phases_rad"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < fit.phases.size(); ++i) result["phases_rad"].push_back(fit.phases[i]);
  result["residual"] = fit.residual;
  result["converged"] = fit.converged;
  result["evaluations"] = fit.evaluations;
  ctx.add_output("fit_result.json", result.dump(2) + "\n");
  ctx.manifest.extra = result;

  std::cout << "fit: residual " << fmt(fit.residual) << " after " << fit.evaluations
            << " evaluations\n";
  ctx.finish();
  return 0;
}

qap::Scenario scenario_from(const AppConfig& cfg) {
  qap::Scenario sc;
  sc.scheme = cfg.scheme;
  sc.drive = cfg.drive;
  sc.geometry = cfg.geometry;
  sc.lo = cfg.lo;
  sc.bands = cfg.bands;
  sc.users = cfg.users;
  sc.noise_density = cfg.comms.noise_density;
  sc.sample_rate = cfg.comms.sample_rate_hz;
  sc.seed = cfg.seed;
  sc.doppler = cfg.run.doppler;
  for (qap::UserLink& u : sc.users)
    u.stream.payload.assign(static_cast<std::size_t>(cfg.comms.bits_per_cell), 0);
  return sc;
}

void append_metrics(std::ostringstream& csv, const qap::LinkMetrics& m) {
  csv << fmt(m.evm_pct) << "," << fmt(m.ber) << "," << fmt(m.rx_psd_db) << ","
      << fmt(m.sir_eff_db) << "\n";
}

int cmd_link(const CommonOpts& opts) {
  const AppConfig cfg = resolve_config(opts);
  const std::string& mode = cfg.run.mode;
  if (mode != "interference" && mode != "multiuser" && mode != "multiband_link")
    throw qap::ConfigError("link: run.mode must be interference, multiuser, or multiband_link");

  RunContext ctx(opts, cfg, "link");
  qap::Scenario sc = scenario_from(cfg);
  std::ostringstream csv;
  std::string name;
  int lock_failures = 0;

  if (mode == "interference") {
    if (sc.users.size() != 1)
      throw qap::ConfigError("link: interference mode needs exactly one signal");
    qap::InterfererSpec spec;
    spec.tone = sc.users[0].tone;
    spec.tone.direction_deg = cfg.comms.interferer_angle_deg;
    spec.tone.rabi = cfg.comms.has_interferer ? sc.users[0].tone.rabi : 0.0;
    spec.bandwidth_hz = cfg.comms.interferer_bandwidth_hz;
    spec.center_if_hz = sc.users[0].stream.if_freq;
    sc.interferers = {spec};

    const std::vector<qap::InterferenceRow> rows =
        qap::run_interference_sweep(sc, cfg.comms.lengths_m, cfg.comms.sirs_db, opts.threads);
    name = "link_interference.csv";
    csv << "cell_len_m,sir_db,evm_pct,ber,rx_psd_db,sir_eff_db\n";
    for (const qap::InterferenceRow& r : rows) {
      csv << fmt(r.cell_len_m) << "," << fmt(r.sir_db) << ",";
      append_metrics(csv, r.metrics);
      if (r.metrics.lock_failure) {
        ++lock_failures;
        ctx.manifest.warnings.push_back("link: lock failure at length " + fmt(r.cell_len_m) +
                                        " m, SIR " + fmt(r.sir_db) + " dB");
      }
    }
    std::cout << "link: wrote " << name << " (" << rows.size() << " cells)\n";
  } else if (mode == "multiuser") {
    const std::vector<qap::MultiuserRow> rows =
        qap::run_multiuser(sc, cfg.comms.lo_dbm_schedule, opts.threads);
    name = "link_multiuser.csv";
    csv << "lo1_dbm,lo2_dbm,user,evm_pct,ber,rx_psd_db,sir_eff_db\n";
    for (const qap::MultiuserRow& r : rows) {
      csv << fmt(r.lo1_dbm) << "," << fmt(r.lo2_dbm) << "," << r.user_index << ",";
      append_metrics(csv, r.metrics);
      if (r.metrics.lock_failure) {
        ++lock_failures;
        ctx.manifest.warnings.push_back("link: lock failure for user " +
                                        std::to_string(r.user_index) + " at schedule (" +
                                        fmt(r.lo1_dbm) + ", " + fmt(r.lo2_dbm) + ") dBm");
      }
    }
    std::cout << "link: wrote " << name << " (" << rows.size() << " rows)\n";
  } else {
    const std::vector<qap::MultibandRow> rows =
        qap::run_multiband(sc, cfg.comms.offsets_deg, opts.threads);
    name = "link_multiband.csv";
    csv << "band,offset_deg,evm_pct,ber,rx_psd_db,sir_eff_db\n";
    for (const qap::MultibandRow& r : rows) {
      csv << r.band_index << "," << fmt(r.offset_deg) << ",";
      append_metrics(csv, r.metrics);
      if (r.metrics.lock_failure) {
        ++lock_failures;
        ctx.manifest.warnings.push_back("link: lock failure on band " +
                                        std::to_string(r.band_index) + " at offset " +
                                        fmt(r.offset_deg) + " deg");
      }
    }
    std::cout << "link: wrote " << name << " (" << rows.size() << " rows)\n";
  }

  ctx.add_output(name, csv.str());
  ctx.manifest.extra = nlohmann::json{{"lock_failures", lock_failures}};
  ctx.finish();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"qap: RF-dressed vapor-cell receiver toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOpts opts;
  bool list_presets = false;

  CLI::App* pattern = app.add_subcommand("pattern", "Angular receive patterns");
  CLI::App* spectrum = app.add_subcommand("spectrum", "Absorption versus coupling detuning");
  CLI::App* fit = app.add_subcommand("fit", "Recover dressing-tone phases from a pattern");
  CLI::App* link = app.add_subcommand("link", "Digital link campaigns");
  for (CLI::App* cmd : {pattern, spectrum, fit, link}) {
    add_common(cmd, opts);
    cmd->add_flag("--list", list_presets, "List preset names and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (list_presets) {
    for (const std::string& n : qap::preset_names()) std::cout << n << "\n";
    return 0;
  }

  try {
    if (pattern->parsed()) return cmd_pattern(opts);
    if (spectrum->parsed()) return cmd_spectrum(opts);
    if (fit->parsed()) return cmd_fit(opts);
    return cmd_link(opts);
  } catch (const qap::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const qap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
