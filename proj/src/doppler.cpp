// SPDX-License-Identifier: Apache-2.0
#include "qap/doppler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "qap/constants.hpp"
#include "qap/lindblad.hpp"
#include "qap/numerics.hpp"

namespace qap {

namespace {

struct NodeSample {
  double velocity;
  double weight; // quadrature weight times the Maxwell-Boltzmann density
  std::complex<double> coherence;
};

struct Panel {
  double lo;
  double hi;
  int depth;
  std::complex<double> integral; // coherence * maxwell over the panel
  std::vector<NodeSample> nodes;
};

class Integrand {
public:
  Integrand(const LevelScheme& scheme, const DriveParams& drive)
      : scheme_(scheme), drive_(drive), k_p_(scheme.probe_wavenumber()),
        k_c_(scheme.coupling_wavenumber()), u_(scheme.thermal_speed()) {}

  std::complex<double> coherence_at(double v) const {
    try {
      return steady_state(scheme_, drive_.doppler_shifted(v, k_p_, k_c_)).probe_coherence();
    } catch (const SingularSystem& e) {
      std::ostringstream msg;
      msg << e.what() << " [velocity class v=" << v << " m/s]";
      throw SingularSystem(msg.str());
    }
  }

  double maxwell(double v) const {
    const double t = v / u_;
    return std::exp(-t * t) / (std::sqrt(kPi) * u_);
  }

private:
  const LevelScheme& scheme_;
  const DriveParams& drive_;
  double k_p_, k_c_, u_;
};

Panel evaluate_panel(const Integrand& f, const GaussLegendreRule& rule, double lo, double hi,
                     int depth) {
  Panel p;
  p.lo = lo;
  p.hi = hi;
  p.depth = depth;
  p.integral = {0.0, 0.0};
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  const int n = static_cast<int>(rule.nodes.size());
  p.nodes.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double v = mid + half * rule.nodes[k];
    const double w = half * rule.weights[k] * f.maxwell(v);
    const std::complex<double> c = f.coherence_at(v);
    p.nodes.push_back({v, w, c});
    p.integral += w * c;
  }
  return p;
}

} // namespace

DopplerAverage doppler_averaged_coherence(const LevelScheme& scheme, const DriveParams& drive,
                                          const DopplerSpec& spec) {
  scheme.validate();
  drive.validate();
  spec.validate();

  const double u = scheme.thermal_speed();
  const double window = spec.truncation * u;
  const double k_p = scheme.probe_wavenumber();
  const double k_c = scheme.coupling_wavenumber();
  const Integrand f(scheme, drive);

  // Breakpoints where the velocity-space structure lives: the one-photon
  // resonance moves as delta_p - k_p v, the two- and three-photon resonances
  // as the detuning sums against (k_c - k_p) v; drive dressing displaces each
  // by up to half the corresponding Rabi rate over the local slope.
  std::vector<double> cuts{-window, window, 0.0};
  const double omega = std::abs(drive.omega_rf);
  auto add_center = [&](double center, double slope) {
    const double offsets[] = {0.0,
                              0.5 * drive.omega_c / slope,
                              -0.5 * drive.omega_c / slope,
                              0.5 * omega / slope,
                              -0.5 * omega / slope};
    for (double off : offsets) {
      const double c = center + off;
      for (double guard : {0.0, 1e-4 * u, -1e-4 * u, 1e-2 * u, -1e-2 * u})
        cuts.push_back(c + guard);
    }
  };
  add_center(drive.delta_p / k_p, k_p);
  add_center(-(drive.delta_p + drive.delta_c) / (k_c - k_p), k_c - k_p);
  add_center(-(drive.delta_p + drive.delta_c + drive.delta_l) / (k_c - k_p), k_c - k_p);

  for (double& c : cuts) c = std::clamp(c, -window, window);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [u](double a, double b) { return std::abs(a - b) < 1e-9 * u; }),
             cuts.end());

  const int order = std::clamp(spec.node_count / 4, 8, 32);
  const GaussLegendreRule rule = gauss_legendre(order);

  std::vector<Panel> stack;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    stack.push_back(evaluate_panel(f, rule, cuts[i], cuts[i + 1], 0));

  double scale = 0.0;
  for (const Panel& p : stack) scale += std::abs(p.integral);
  constexpr double kRelTol = 5e-11;
  constexpr double kAbsTol = 1e-30;
  constexpr int kMaxDepth = 30;
  constexpr std::size_t kMaxPanels = 16384;

  std::vector<Panel> accepted;
  std::size_t panel_budget = kMaxPanels;
  while (!stack.empty()) {
    Panel parent = std::move(stack.back());
    stack.pop_back();
    if (parent.depth >= kMaxDepth || accepted.size() + stack.size() >= panel_budget) {
      accepted.push_back(std::move(parent));
      continue;
    }
    const double mid = 0.5 * (parent.lo + parent.hi);
    Panel left = evaluate_panel(f, rule, parent.lo, mid, parent.depth + 1);
    Panel right = evaluate_panel(f, rule, mid, parent.hi, parent.depth + 1);
    const double err = std::abs(parent.integral - left.integral - right.integral);
    const double local_tol =
        kRelTol * scale * ((parent.hi - parent.lo) / (2.0 * window)) + kAbsTol;
    if (err <= local_tol) {
      accepted.push_back(std::move(left));
      accepted.push_back(std::move(right));
    } else {
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
  }

  std::vector<NodeSample> samples;
  for (Panel& p : accepted)
    samples.insert(samples.end(), p.nodes.begin(), p.nodes.end());
  std::sort(samples.begin(), samples.end(),
            [](const NodeSample& a, const NodeSample& b) { return a.velocity < b.velocity; });

  DopplerAverage result;
  const auto n = static_cast<Eigen::Index>(samples.size());
  result.velocities.resize(n);
  result.weights.resize(n);
  result.coherences.resize(n);
  double weight_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) weight_sum += samples[i].weight;
  std::complex<double> average{0.0, 0.0};
  for (Eigen::Index i = 0; i < n; ++i) {
    result.velocities[i] = samples[i].velocity;
    result.weights[i] = samples[i].weight / weight_sum;
    result.coherences[i] = samples[i].coherence;
    average += result.weights[i] * samples[i].coherence;
  }
  result.average = average;
  return result;
}

} // namespace qap
