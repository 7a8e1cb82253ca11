// SPDX-License-Identifier: Apache-2.0
#include "qap/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "qap/constants.hpp"
#include "qap/errors.hpp"

namespace qap {

namespace {

using nlohmann::json;

// Tracks which keys of one JSON object were consumed so leftovers can be
// reported with their full path.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node.is_object()) throw ConfigError("config: " + path_ + " must be an object");
  }

  bool has(const char* key) const { return node_.contains(key); }

  const json* raw(const char* key) {
    used_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const char* key, double fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) throw type_error(key, "a number");
    return v->get<double>();
  }

  double require_number(const char* key) {
    const json* v = raw(key);
    if (v == nullptr)
      throw ConfigError("config: missing required key " + join(key));
    if (!v->is_number()) throw type_error(key, "a number");
    return v->get<double>();
  }

  int integer(const char* key, int fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer()) throw type_error(key, "an integer");
    return v->get<int>();
  }

  std::uint64_t unsigned64(const char* key, std::uint64_t fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_unsigned() && !v->is_number_integer()) throw type_error(key, "an integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const char* key, bool fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw type_error(key, "a boolean");
    return v->get<bool>();
  }

  std::string text(const char* key, const std::string& fallback) {
    const json* v = raw(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) throw type_error(key, "a string");
    return v->get<std::string>();
  }

  std::string require_text(const char* key) {
    const json* v = raw(key);
    if (v == nullptr)
      throw ConfigError("config: missing required key " + join(key));
    if (!v->is_string()) throw type_error(key, "a string");
    return v->get<std::string>();
  }

  const json* array(const char* key) {
    const json* v = raw(key);
    if (v == nullptr) return nullptr;
    if (!v->is_array()) throw type_error(key, "an array");
    return v;
  }

  std::string join(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (used_.find(it.key()) == used_.end())
        throw ConfigError("config: unknown key " + (path_.empty() ? it.key()
                                                                  : path_ + "." + it.key()));
  }

 private:
  ConfigError type_error(const char* key, const char* expected) const {
    return ConfigError("config: " + join(key) + " must be " + expected);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

double hz_to_angular(double hz) { return 2.0 * kPi * hz; }
double angular_to_hz(double angular) { return angular / (2.0 * kPi); }

std::vector<double> number_list(const json& node, const std::string& path) {
  if (!node.is_array()) throw ConfigError("config: " + path + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : node) {
    if (!v.is_number()) throw ConfigError("config: " + path + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::pair<double, double>> pair_list(const json& node, const std::string& path) {
  if (!node.is_array()) throw ConfigError("config: " + path + " must be an array of pairs");
  std::vector<std::pair<double, double>> out;
  for (const auto& v : node) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ConfigError("config: " + path + " entries must be [number, number] pairs");
    out.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  return out;
}

LevelScheme parse_atom(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  LevelScheme s;
  s.gamma2 = hz_to_angular(r.number("gamma2_hz", angular_to_hz(s.gamma2)));
  s.gamma3 = hz_to_angular(r.number("gamma3_hz", angular_to_hz(s.gamma3)));
  s.gamma4 = hz_to_angular(r.number("gamma4_hz", angular_to_hz(s.gamma4)));
  s.mu12 = r.number("mu12_coulomb_m", s.mu12);
  s.mu34 = r.number("mu34_coulomb_m", s.mu34);
  s.lambda_p = r.number("probe_wavelength_m", s.lambda_p);
  s.lambda_c = r.number("coupling_wavelength_m", s.lambda_c);
  s.n0 = r.number("density_per_m3", s.n0);
  s.mass = r.number("mass_kg", s.mass);
  s.t_env = r.number("temperature_k", s.t_env);
  r.finish();
  return s;
}

DriveParams parse_drive(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  DriveParams d;
  d.omega_p = hz_to_angular(r.number("probe_rabi_hz", angular_to_hz(d.omega_p)));
  d.omega_c = hz_to_angular(r.number("coupling_rabi_hz", angular_to_hz(d.omega_c)));
  d.delta_p = hz_to_angular(r.number("probe_detuning_hz", angular_to_hz(d.delta_p)));
  d.delta_c = hz_to_angular(r.number("coupling_detuning_hz", angular_to_hz(d.delta_c)));
  d.delta_l = hz_to_angular(r.number("rf_detuning_hz", angular_to_hz(d.delta_l)));
  const double rabi = hz_to_angular(r.number("rf_rabi_hz", angular_to_hz(std::abs(d.omega_rf))));
  const double phase = r.number("rf_phase_rad", std::arg(d.omega_rf));
  d.omega_rf = std::polar(rabi, rabi == 0.0 ? 0.0 : phase);
  r.finish();
  return d;
}

RfTone parse_tone(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  RfTone t;
  t.band_index = r.integer("band", 0);
  t.angular_frequency = hz_to_angular(r.require_number("freq_hz"));
  t.rabi = hz_to_angular(r.require_number("rabi_hz"));
  t.direction_deg = r.require_number("angle_deg");
  t.phase = r.number("phase_rad", 0.0);
  r.finish();
  return t;
}

json tone_to_json(const RfTone& t) {
  json j;
  j["band"] = t.band_index;
  j["freq_hz"] = angular_to_hz(t.angular_frequency);
  j["rabi_hz"] = angular_to_hz(t.rabi);
  j["angle_deg"] = t.direction_deg;
  j["phase_rad"] = t.phase;
  return j;
}

int modulation_order(const std::string& name) {
  if (name == "qpsk") return 4;
  if (name == "qam16") return 16;
  throw ConfigError("config: comms.modulation must be \"qpsk\" or \"qam16\"");
}

DopplerSpec parse_doppler(const json& node, const std::string& path) {
  ObjectReader r(node, path);
  DopplerSpec spec;
  spec.node_count = r.integer("node_count", spec.node_count);
  spec.truncation = r.number("truncation", spec.truncation);
  r.finish();
  return spec;
}

} // namespace

void AppConfig::validate() const {
  scheme.validate();
  drive.validate();
  geometry.validate();
  run.doppler.validate();

  static const std::set<std::string> kModes{"single",   "multipeak", "multiband",
                                            "spectrum", "fit",       "interference",
                                            "multiuser", "multiband_link"};
  if (kModes.find(run.mode) == kModes.end())
    throw ConfigError("config: run.mode must be one of single, multipeak, multiband, spectrum, "
                      "fit, interference, multiuser, multiband_link");
  if (!(run.theta_start_deg < run.theta_stop_deg))
    throw ConfigError("config: run.theta_start_deg must be below run.theta_stop_deg");
  if (!(run.theta_step_deg > 0.0))
    throw ConfigError("config: run.theta_step_deg must be > 0");
  if (!(run.delta_c_span_hz > 0.0))
    throw ConfigError("config: run.delta_c_span_hz must be > 0");
  if (run.delta_c_points < 5)
    throw ConfigError("config: run.delta_c_points must be >= 5");

  for (std::size_t i = 0; i < bands.size(); ++i) {
    bands[i].validate();
    for (std::size_t j = i + 1; j < bands.size(); ++j)
      if (bands[i].band_index == bands[j].band_index)
        throw ConfigError("config: bands must use distinct band indices");
  }
  auto band_listed = [this](int idx) {
    for (const BandConfig& b : bands)
      if (b.band_index == idx) return true;
    return false;
  };
  for (const RfTone& t : lo.tones)
    if (!band_listed(t.band_index))
      throw ConfigError("config: lo tone references a band missing from bands");
  for (const UserLink& u : users)
    if (!band_listed(u.tone.band_index))
      throw ConfigError("config: signal references a band missing from bands");

  modulation_order(comms.modulation);
  if (!(comms.symbol_rate_hz > 0.0))
    throw ConfigError("config: comms.symbol_rate_hz must be > 0");
  if (!(comms.rolloff > 0.0 && comms.rolloff <= 1.0))
    throw ConfigError("config: comms.rolloff must lie in (0, 1]");
  if (!(comms.noise_density >= 0.0))
    throw ConfigError("config: comms.noise_density must be >= 0");
  if (!(comms.sample_rate_hz > 0.0))
    throw ConfigError("config: comms.sample_rate_hz must be > 0");
  if (comms.bits_per_cell < 8)
    throw ConfigError("config: comms.bits_per_cell must be >= 8");
}

AppConfig config_from_json(const nlohmann::json& doc) {
  ObjectReader root(doc, "");
  AppConfig cfg;

  if (const json* atom = root.raw("atom")) cfg.scheme = parse_atom(*atom, "atom");
  if (const json* drive = root.raw("drive")) cfg.drive = parse_drive(*drive, "drive");

  {
    const json* node = root.raw("aperture");
    if (node == nullptr) throw ConfigError("config: missing required key aperture");
    ObjectReader r(*node, "aperture");
    cfg.geometry.length = r.require_number("length_m");
    cfg.geometry.spatial_samples = r.integer("spatial_samples", 0);
    cfg.geometry.probe_input_power = r.number("probe_power_w", cfg.geometry.probe_input_power);
    r.finish();
    cfg.geometry.probe_wavenumber = cfg.scheme.probe_wavenumber();
  }

  if (const json* node = root.raw("lo")) {
    if (!node->is_array()) throw ConfigError("config: lo must be an array");
    for (std::size_t i = 0; i < node->size(); ++i)
      cfg.lo.tones.push_back(parse_tone((*node)[i], "lo[" + std::to_string(i) + "]"));
  }

  if (const json* node = root.raw("bands")) {
    if (!node->is_array()) throw ConfigError("config: bands must be an array");
    for (std::size_t i = 0; i < node->size(); ++i) {
      ObjectReader r((*node)[i], "bands[" + std::to_string(i) + "]");
      BandConfig band;
      band.band_index = r.integer("band", static_cast<int>(i));
      band.wavelength = r.require_number("wavelength_m");
      band.coupling_scale = r.number("coupling_scale", 1.0);
      r.finish();
      cfg.bands.push_back(band);
    }
  }

  if (const json* node = root.raw("comms")) {
    ObjectReader r(*node, "comms");
    CommsSection& c = cfg.comms;
    c.modulation = r.text("modulation", c.modulation);
    c.symbol_rate_hz = r.number("symbol_rate_hz", c.symbol_rate_hz);
    c.rolloff = r.number("rolloff", c.rolloff);
    c.noise_density = r.number("noise_density", c.noise_density);
    c.sample_rate_hz = r.number("sample_rate_hz", c.sample_rate_hz);
    c.bits_per_cell = r.integer("bits_per_cell", c.bits_per_cell);
    if (const json* a = r.array("lengths_m")) c.lengths_m = number_list(*a, "comms.lengths_m");
    if (const json* a = r.array("sirs_db")) c.sirs_db = number_list(*a, "comms.sirs_db");
    if (const json* a = r.array("lo_dbm_schedule"))
      c.lo_dbm_schedule = pair_list(*a, "comms.lo_dbm_schedule");
    if (const json* a = r.array("offsets_deg"))
      c.offsets_deg = pair_list(*a, "comms.offsets_deg");
    c.has_interferer = r.boolean("has_interferer", c.has_interferer);
    c.interferer_angle_deg = r.number("interferer_angle_deg", c.interferer_angle_deg);
    c.interferer_bandwidth_hz = r.number("interferer_bandwidth_hz", c.interferer_bandwidth_hz);
    r.finish();
  }

  if (const json* node = root.raw("signals")) {
    if (!node->is_array()) throw ConfigError("config: signals must be an array");
    for (std::size_t i = 0; i < node->size(); ++i) {
      const std::string path = "signals[" + std::to_string(i) + "]";
      ObjectReader r((*node)[i], path);
      UserLink user;
      user.tone.band_index = r.integer("band", 0);
      user.tone.angular_frequency = hz_to_angular(r.require_number("freq_hz"));
      user.tone.rabi = hz_to_angular(r.require_number("rabi_hz"));
      user.tone.direction_deg = r.require_number("angle_deg");
      user.tone.phase = r.number("phase_rad", 0.0);
      user.stream.order = modulation_order(cfg.comms.modulation);
      user.stream.symbol_rate = cfg.comms.symbol_rate_hz;
      user.stream.rolloff = cfg.comms.rolloff;
      user.stream.if_freq = r.require_number("if_freq_hz");
      user.stream.tx_power_scale = r.number("tx_power_scale", 1.0);
      r.finish();
      cfg.users.push_back(user);
    }
  }

  {
    const json* node = root.raw("run");
    if (node == nullptr) throw ConfigError("config: missing required key run");
    ObjectReader r(*node, "run");
    cfg.run.mode = r.require_text("mode");
    cfg.run.theta_start_deg = r.number("theta_start_deg", cfg.run.theta_start_deg);
    cfg.run.theta_stop_deg = r.number("theta_stop_deg", cfg.run.theta_stop_deg);
    cfg.run.theta_step_deg = r.number("theta_step_deg", cfg.run.theta_step_deg);
    cfg.run.delta_c_span_hz = r.number("delta_c_span_hz", cfg.run.delta_c_span_hz);
    cfg.run.delta_c_points = r.integer("delta_c_points", cfg.run.delta_c_points);
    cfg.run.fit = r.boolean("fit", cfg.run.fit);
    cfg.run.measured_csv = r.text("measured_csv", cfg.run.measured_csv);
    if (const json* d = r.raw("doppler")) cfg.run.doppler = parse_doppler(*d, "run.doppler");
    r.finish();
  }

  cfg.seed = root.unsigned64("seed", cfg.seed);
  root.finish();
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

nlohmann::json config_to_json(const AppConfig& config) {
  json j;

  json atom;
  atom["gamma2_hz"] = angular_to_hz(config.scheme.gamma2);
  atom["gamma3_hz"] = angular_to_hz(config.scheme.gamma3);
  atom["gamma4_hz"] = angular_to_hz(config.scheme.gamma4);
  atom["mu12_coulomb_m"] = config.scheme.mu12;
  atom["mu34_coulomb_m"] = config.scheme.mu34;
  atom["probe_wavelength_m"] = config.scheme.lambda_p;
  atom["coupling_wavelength_m"] = config.scheme.lambda_c;
  atom["density_per_m3"] = config.scheme.n0;
  atom["mass_kg"] = config.scheme.mass;
  atom["temperature_k"] = config.scheme.t_env;
  j["atom"] = atom;

  json drive;
  drive["probe_rabi_hz"] = angular_to_hz(config.drive.omega_p);
  drive["coupling_rabi_hz"] = angular_to_hz(config.drive.omega_c);
  drive["probe_detuning_hz"] = angular_to_hz(config.drive.delta_p);
  drive["coupling_detuning_hz"] = angular_to_hz(config.drive.delta_c);
  drive["rf_detuning_hz"] = angular_to_hz(config.drive.delta_l);
  drive["rf_rabi_hz"] = angular_to_hz(std::abs(config.drive.omega_rf));
  drive["rf_phase_rad"] = std::abs(config.drive.omega_rf) == 0.0
                              ? 0.0
                              : std::arg(config.drive.omega_rf);
  j["drive"] = drive;

  json aperture;
  aperture["length_m"] = config.geometry.length;
  aperture["spatial_samples"] = config.geometry.spatial_samples;
  aperture["probe_power_w"] = config.geometry.probe_input_power;
  j["aperture"] = aperture;

  j["lo"] = json::array();
  for (const RfTone& t : config.lo.tones) j["lo"].push_back(tone_to_json(t));

  j["bands"] = json::array();
  for (const BandConfig& b : config.bands) {
    json band;
    band["band"] = b.band_index;
    band["wavelength_m"] = b.wavelength;
    band["coupling_scale"] = b.coupling_scale;
    j["bands"].push_back(band);
  }

  j["signals"] = json::array();
  for (const UserLink& u : config.users) {
    json s = tone_to_json(u.tone);
    s["if_freq_hz"] = u.stream.if_freq;
    s["tx_power_scale"] = u.stream.tx_power_scale;
    j["signals"].push_back(s);
  }

  json comms;
  comms["modulation"] = config.comms.modulation;
  comms["symbol_rate_hz"] = config.comms.symbol_rate_hz;
  comms["rolloff"] = config.comms.rolloff;
  comms["noise_density"] = config.comms.noise_density;
  comms["sample_rate_hz"] = config.comms.sample_rate_hz;
  comms["bits_per_cell"] = config.comms.bits_per_cell;
  comms["lengths_m"] = config.comms.lengths_m;
  comms["sirs_db"] = config.comms.sirs_db;
  comms["lo_dbm_schedule"] = json::array();
  for (const auto& p : config.comms.lo_dbm_schedule)
    comms["lo_dbm_schedule"].push_back(json::array({p.first, p.second}));
  comms["offsets_deg"] = json::array();
  for (const auto& p : config.comms.offsets_deg)
    comms["offsets_deg"].push_back(json::array({p.first, p.second}));
  comms["has_interferer"] = config.comms.has_interferer;
  comms["interferer_angle_deg"] = config.comms.interferer_angle_deg;
  comms["interferer_bandwidth_hz"] = config.comms.interferer_bandwidth_hz;
  j["comms"] = comms;

  json run;
  run["mode"] = config.run.mode;
  run["theta_start_deg"] = config.run.theta_start_deg;
  run["theta_stop_deg"] = config.run.theta_stop_deg;
  run["theta_step_deg"] = config.run.theta_step_deg;
  run["delta_c_span_hz"] = config.run.delta_c_span_hz;
  run["delta_c_points"] = config.run.delta_c_points;
  run["fit"] = config.run.fit;
  run["measured_csv"] = config.run.measured_csv;
  json doppler;
  doppler["node_count"] = config.run.doppler.node_count;
  doppler["truncation"] = config.run.doppler.truncation;
  run["doppler"] = doppler;
  j["run"] = run;

  j["seed"] = config.seed;
  return j;
}

namespace {

constexpr double kKuFreq = 15.59e9;
constexpr double kSFreq = 3.39e9;

RfTone dressing_tone(int band, double freq_hz, double rabi_hz, double angle_deg) {
  RfTone t;
  t.band_index = band;
  t.angular_frequency = hz_to_angular(freq_hz);
  t.rabi = hz_to_angular(rabi_hz);
  t.direction_deg = angle_deg;
  return t;
}

UserLink user_link(const AppConfig& cfg, int band, double freq_hz, double rabi_hz,
                   double angle_deg, double if_freq_hz) {
  UserLink u;
  u.tone.band_index = band;
  u.tone.angular_frequency = hz_to_angular(freq_hz);
  u.tone.rabi = hz_to_angular(rabi_hz);
  u.tone.direction_deg = angle_deg;
  u.stream.order = modulation_order(cfg.comms.modulation);
  u.stream.symbol_rate = cfg.comms.symbol_rate_hz;
  u.stream.rolloff = cfg.comms.rolloff;
  u.stream.if_freq = if_freq_hz;
  return u;
}

BandConfig band_config(int index, double freq_hz) {
  BandConfig b;
  b.band_index = index;
  b.wavelength = kSpeedOfLight / freq_hz;
  return b;
}

} // namespace

AppConfig preset(const std::string& name) {
  AppConfig cfg;

  if (name == "single_ku_270") {
    cfg.run.mode = "single";
    cfg.bands = {band_config(0, kKuFreq)};
    cfg.lo.tones = {dressing_tone(0, kKuFreq, 20.0e6, 270.0)};
    cfg.run.theta_step_deg = 2.0;
  } else if (name == "single_s_300") {
    cfg.run.mode = "single";
    cfg.bands = {band_config(0, kSFreq)};
    cfg.lo.tones = {dressing_tone(0, kSFreq, 20.0e6, 300.0)};
    cfg.run.theta_step_deg = 5.0;
  } else if (name == "multipeak_240_300") {
    cfg.run.mode = "multipeak";
    cfg.bands = {band_config(0, kKuFreq)};
    cfg.lo.tones = {dressing_tone(0, kKuFreq, 10.0e6, 240.0),
                    dressing_tone(0, kKuFreq, 10.0e6, 300.0)};
    cfg.run.theta_step_deg = 2.0;
  } else if (name == "multiband_s_ku") {
    cfg.run.mode = "multiband";
    cfg.bands = {band_config(0, kSFreq), band_config(1, kKuFreq)};
    cfg.lo.tones = {dressing_tone(0, kSFreq, 20.0e6, 270.0),
                    dressing_tone(1, kKuFreq, 20.0e6, 270.0)};
    cfg.run.theta_step_deg = 2.0;
  } else if (name == "spectrum_at20") {
    cfg.run.mode = "spectrum";
    cfg.drive.omega_rf = hz_to_angular(20.0e6);
    cfg.run.fit = true;
  } else if (name == "link_interference") {
    cfg.run.mode = "interference";
    cfg.bands = {band_config(0, kKuFreq)};
    cfg.lo.tones = {dressing_tone(0, kKuFreq, 20.0e6, 300.0)};
    cfg.users = {user_link(cfg, 0, kKuFreq, 0.2e6, 60.0, 24000.0)};
    cfg.comms.has_interferer = true;
    cfg.comms.interferer_angle_deg = 75.0;
  } else if (name == "link_multiuser") {
    cfg.comms.modulation = "qpsk";
    cfg.comms.bits_per_cell = 10000;
    cfg.run.mode = "multiuser";
    cfg.bands = {band_config(0, kKuFreq)};
    cfg.lo.tones = {dressing_tone(0, kKuFreq, 10.0e6, 240.0),
                    dressing_tone(0, kKuFreq, 10.0e6, 300.0)};
    cfg.users = {user_link(cfg, 0, kKuFreq, 0.2e6, 120.0, 24000.0),
                 user_link(cfg, 0, kKuFreq, 0.2e6, 60.0, 33000.0)};
  } else if (name == "link_multiband") {
    cfg.comms.modulation = "qpsk";
    cfg.comms.bits_per_cell = 10000;
    cfg.run.mode = "multiband_link";
    cfg.bands = {band_config(0, kSFreq), band_config(1, kKuFreq)};
    cfg.lo.tones = {dressing_tone(0, kSFreq, 20.0e6, 270.0),
                    dressing_tone(1, kKuFreq, 20.0e6, 270.0)};
    cfg.users = {user_link(cfg, 0, kSFreq, 0.2e6, 90.0, 24000.0),
                 user_link(cfg, 1, kKuFreq, 0.2e6, 90.0, 33000.0)};
    cfg.comms.offsets_deg = {{0.0, 0.0}, {10.0, 5.0}, {20.0, 10.0}, {30.0, 15.0}, {40.0, 20.0}};
  } else {
    throw ConfigError("config: unknown preset \"" + name + "\"");
  }

  cfg.validate();
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"single_ku_270", "single_s_300",     "multipeak_240_300", "multiband_s_ku",
          "spectrum_at20", "link_interference", "link_multiuser",    "link_multiband"};
}

} // namespace qap
