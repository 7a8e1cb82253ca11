// SPDX-License-Identifier: Apache-2.0
#include "qap/beam_pattern.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "qap/errors.hpp"

namespace qap {

namespace {

// Locale-independent float formatting via to_chars.
std::string format_fixed(double value, int decimals) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
  if (res.ec != std::errc())
    throw Error("beam_pattern: number formatting failed");
  return std::string(buf, res.ptr);
}

std::string format_general(double value, int precision) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, precision);
  if (res.ec != std::errc())
    throw Error("beam_pattern: number formatting failed");
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, int line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    std::ostringstream msg;
    msg << "pattern CSV line " << line_no << ": malformed number '" << text << "'";
    throw ConfigError(msg.str());
  }
  return value;
}

} // namespace

void BeamPattern::validate() const {
  if (angles_deg.size() != gains.size() || angles_deg.size() < 2)
    throw ConfigError("BeamPattern: need matching angle/gain arrays with >= 2 rows");
  for (Eigen::Index i = 1; i < angles_deg.size(); ++i)
    if (!(angles_deg[i] > angles_deg[i - 1]))
      throw ConfigError("BeamPattern: angles must be strictly increasing");
  for (Eigen::Index i = 0; i < gains.size(); ++i)
    if (!(gains[i] >= -1e-12 && gains[i] <= 1.0 + 1e-12))
      throw ConfigError("BeamPattern: gains must lie in [0, 1]");
  if (std::abs(gains.maxCoeff() - 1.0) > 1e-12)
    throw ConfigError("BeamPattern: maximum gain must be 1 (normalized pattern)");
}

void normalize_gains(Eigen::VectorXd& gains) {
  if (gains.size() == 0) return;
  const double peak = gains.maxCoeff();
  if (peak > 0.0) gains /= peak;
}

void write_pattern_csv(const BeamPattern& pattern, std::ostream& out) {
  out << "theta_deg,gain\n";
  for (Eigen::Index i = 0; i < pattern.angles_deg.size(); ++i)
    out << format_fixed(pattern.angles_deg[i], 4) << ',' << format_general(pattern.gains[i], 9)
        << '\n';
}

std::string pattern_to_csv(const BeamPattern& pattern) {
  std::ostringstream out;
  write_pattern_csv(pattern, out);
  return out.str();
}

BeamPattern read_pattern_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "theta_deg,gain")
    throw ConfigError("pattern CSV: missing 'theta_deg,gain' header");
  std::vector<double> angles, gains;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      std::ostringstream msg;
      msg << "pattern CSV line " << line_no << ": expected 'theta_deg,gain' row";
      throw ConfigError(msg.str());
    }
    angles.push_back(parse_double(line.substr(0, comma), line_no));
    gains.push_back(parse_double(line.substr(comma + 1), line_no));
  }
  BeamPattern pattern;
  pattern.angles_deg = Eigen::Map<Eigen::VectorXd>(angles.data(), angles.size());
  pattern.gains = Eigen::Map<Eigen::VectorXd>(gains.data(), gains.size());
  for (Eigen::Index i = 1; i < pattern.angles_deg.size(); ++i)
    if (!(pattern.angles_deg[i] > pattern.angles_deg[i - 1]))
      throw ConfigError("pattern CSV: angles must be strictly increasing");
  return pattern;
}

} // namespace qap
