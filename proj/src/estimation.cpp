// SPDX-License-Identifier: Apache-2.0
#include "qap/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <vector>

#include "qap/parallel.hpp"
#include "qap/susceptibility.hpp"

namespace qap {

namespace {

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// Linear interpolation of the angle where the gain crosses `level` between
// grid neighbors i and i+1.
double crossing_angle(const BeamPattern& pattern, Eigen::Index i, double level) {
  const double g0 = pattern.gains[i];
  const double g1 = pattern.gains[i + 1];
  const double t = (level - g0) / (g1 - g0);
  return pattern.angles_deg[i] + t * (pattern.angles_deg[i + 1] - pattern.angles_deg[i]);
}

// Sum of two Lorentzians plus a constant baseline in normalized coordinates.
// Widths enter squared, so their sign is immaterial and the fit stays
// unconstrained.
double two_lorentzian(const Eigen::VectorXd& p, double x) {
  const double d1 = x - p[2];
  const double d2 = x - p[5];
  const double w1 = p[3] * p[3];
  const double w2 = p[6] * p[6];
  return p[0] + p[1] * w1 / (d1 * d1 + w1) + p[4] * w2 / (d2 * d2 + w2);
}

Eigen::VectorXd fit_residuals(const Eigen::VectorXd& p, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y) {
  Eigen::VectorXd r(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) r[k] = two_lorentzian(p, x[k]) - y[k];
  return r;
}

struct Extremum {
  Eigen::Index index;
  double prominence;
};

} // namespace

void SpectrumTrace::validate() const {
  if (detunings.size() != absorption.size())
    throw ConfigError("SpectrumTrace: detuning and absorption lengths differ");
  if (detunings.size() < 2) throw ConfigError("SpectrumTrace: need at least 2 points");
  for (Eigen::Index i = 0; i + 1 < detunings.size(); ++i)
    if (!(detunings[i] < detunings[i + 1]))
      throw ConfigError("SpectrumTrace: detunings must be strictly increasing");
  for (Eigen::Index i = 0; i < absorption.size(); ++i) {
    if (!std::isfinite(absorption[i]))
      throw ConfigError("SpectrumTrace: absorption must be finite");
    if (absorption[i] < -1e-9)
      throw ConfigError("SpectrumTrace: absorption must stay above -1e-9");
  }
}

HpbwResult measure_hpbw(const BeamPattern& pattern) {
  if (pattern.angles_deg.size() != pattern.gains.size() || pattern.angles_deg.size() < 3)
    throw ConfigError("measure_hpbw: need at least 3 matching samples");
  for (Eigen::Index i = 0; i + 1 < pattern.angles_deg.size(); ++i)
    if (!(pattern.angles_deg[i] < pattern.angles_deg[i + 1]))
      throw ConfigError("measure_hpbw: angles must be strictly increasing");
  for (Eigen::Index i = 0; i < pattern.gains.size(); ++i)
    if (!std::isfinite(pattern.gains[i]) || pattern.gains[i] < 0.0)
      throw ConfigError("measure_hpbw: gains must be finite and nonnegative");

  Eigen::Index peak = 0;
  double peak_gain = pattern.gains[0];
  int ties = 1;
  for (Eigen::Index i = 1; i < pattern.gains.size(); ++i) {
    if (pattern.gains[i] > peak_gain) {
      peak_gain = pattern.gains[i];
      peak = i;
      ties = 1;
    } else if (pattern.gains[i] == peak_gain) {
      ++ties;
    }
  }
  if (ties > 1 || peak == 0 || peak == pattern.gains.size() - 1)
    throw NoCrossing("measure_hpbw: pattern lacks a unique interior maximum");
  if (!(peak_gain > 0.0)) throw NoCrossing("measure_hpbw: peak gain is zero");

  // Half power relative to the actual peak, so any positive renormalization
  // of the pattern leaves the measured width unchanged.
  const double level = 0.5 * peak_gain;
  HpbwResult result;

  double left = pattern.angles_deg[0];
  bool left_found = false;
  for (Eigen::Index i = peak; i-- > 0;) {
    if (pattern.gains[i] <= level) {
      left = crossing_angle(pattern, i, level);
      left_found = true;
      break;
    }
  }
  double right = pattern.angles_deg[pattern.angles_deg.size() - 1];
  bool right_found = false;
  for (Eigen::Index i = peak; i + 1 < pattern.gains.size(); ++i) {
    if (pattern.gains[i + 1] <= level) {
      right = crossing_angle(pattern, i, level);
      right_found = true;
      break;
    }
  }

  result.censored = !(left_found && right_found);
  result.width_deg = right - left;
  result.wide_beam = result.width_deg > 60.0;
  return result;
}

SpectrumTrace eit_spectrum(const LevelScheme& scheme, const DriveParams& drive_template,
                           const Eigen::VectorXd& delta_c_grid, const DopplerSpec& spec,
                           int threads) {
  scheme.validate();
  drive_template.validate();
  spec.validate();
  if (delta_c_grid.size() < 2) throw ConfigError("eit_spectrum: need at least 2 grid points");
  for (Eigen::Index i = 0; i + 1 < delta_c_grid.size(); ++i)
    if (!(delta_c_grid[i] < delta_c_grid[i + 1]))
      throw ConfigError("eit_spectrum: detuning grid must be strictly increasing");

  SpectrumTrace trace;
  trace.detunings = delta_c_grid;
  trace.absorption.resize(delta_c_grid.size());
  parallel_for(static_cast<int>(delta_c_grid.size()), threads, [&](int i) {
    DriveParams drive = drive_template;
    drive.delta_c = delta_c_grid[i];
    trace.absorption[i] = susceptibility(scheme, drive, spec).imag();
  });
  return trace;
}

LorentzianPairFit lorentzian_pair_fit(const SpectrumTrace& trace) {
  trace.validate();
  const Eigen::Index n = trace.detunings.size();
  if (n < 7) throw DegenerateFit("lorentzian_pair_fit: too few points for 7 parameters");

  // Normalized coordinates keep the problem conditioned regardless of the
  // physical scales of the trace.
  const double x0 = 0.5 * (trace.detunings[0] + trace.detunings[n - 1]);
  const double xs = 0.5 * (trace.detunings[n - 1] - trace.detunings[0]);
  const double y0 = trace.absorption.mean();
  double ys = (trace.absorption.array() - y0).abs().maxCoeff();
  if (!(ys > 0.0)) throw DegenerateFit("lorentzian_pair_fit: trace is constant");

  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = (trace.detunings[i] - x0) / xs;
    y[i] = (trace.absorption[i] - y0) / ys;
  }
  const double grid_step = (x[n - 1] - x[0]) / static_cast<double>(n - 1);

  // Initialization: the two interior extrema most prominent against the
  // edge-average baseline, in either direction.
  const double edge_baseline = 0.5 * (y[0] + y[n - 1]);
  std::vector<Extremum> extrema;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const double dl = y[i] - y[i - 1];
    const double dr = y[i + 1] - y[i];
    if ((dl > 0.0 && dr < 0.0) || (dl < 0.0 && dr > 0.0))
      extrema.push_back({i, std::abs(y[i] - edge_baseline)});
  }
  std::sort(extrema.begin(), extrema.end(),
            [](const Extremum& a, const Extremum& b) { return a.prominence > b.prominence; });
  if (extrema.size() < 2)
    throw DegenerateFit("lorentzian_pair_fit: fewer than two usable extrema");
  Eigen::Index i1 = extrema[0].index;
  Eigen::Index i2 = extrema[1].index;
  if (i1 > i2) std::swap(i1, i2);
  if (std::abs(x[i2] - x[i1]) < 2.0 * grid_step)
    throw DegenerateFit("lorentzian_pair_fit: initial peaks closer than two grid steps");

  Eigen::VectorXd p(7);
  const double w_init = std::max(0.25 * (x[i2] - x[i1]), grid_step);
  p << edge_baseline, y[i1] - edge_baseline, x[i1], w_init, y[i2] - edge_baseline, x[i2], w_init;

  // Levenberg-Marquardt with a forward-difference Jacobian.
  Eigen::VectorXd r = fit_residuals(p, x, y);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  const int max_iterations = 200;
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::MatrixXd jac(n, 7);
    for (int j = 0; j < 7; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(p[j]));
      Eigen::VectorXd pj = p;
      pj[j] += h;
      jac.col(j) = (fit_residuals(pj, x, y) - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;

    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd p_new = p + step;
      const Eigen::VectorXd r_new = fit_residuals(p_new, x, y);
      const double cost_new = r_new.squaredNorm();
      if (cost_new < cost) {
        const double drop = cost - cost_new;
        p = p_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (drop < 1e-14 * (1.0 + cost) || step.cwiseAbs().maxCoeff() < 1e-12) converged = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!stepped || converged) {
      converged = converged || !stepped;
      break;
    }
  }

  if (std::abs(p[5] - p[2]) < 2.0 * grid_step)
    throw DegenerateFit("lorentzian_pair_fit: fitted centers collapsed to one peak");

  LorentzianPairFit fit;
  fit.converged = converged;
  fit.residual = cost;
  fit.separation = std::abs(p[5] - p[2]) * xs;
  fit.parameters.resize(7);
  double c1 = x0 + xs * p[2];
  double w1 = xs * std::abs(p[3]);
  double a1 = ys * p[1];
  double c2 = x0 + xs * p[5];
  double w2 = xs * std::abs(p[6]);
  double a2 = ys * p[4];
  if (c1 > c2) {
    std::swap(c1, c2);
    std::swap(w1, w2);
    std::swap(a1, a2);
  }
  fit.parameters << y0 + ys * p[0], a1, c1, w1, a2, c2, w2;
  return fit;
}

BeamPattern eit_at_angular_response(const LevelScheme& scheme, const DriveParams& drive_template,
                                    const RfTone& sig, const Eigen::VectorXd& theta_s_deg,
                                    const Eigen::VectorXd& delta_c_grid, const DopplerSpec& spec,
                                    int threads) {
  sig.validate(RfTone::Role::signal);
  if (theta_s_deg.size() < 2)
    throw ConfigError("eit_at_angular_response: angle grid too small");

  // The incident plane wave fills the cell with a uniform amplitude, so the
  // arrival angle never enters the spectrum; the splitting estimate is
  // recomputed per angle all the same and the flat response emerges rather
  // than being assumed.
  Eigen::VectorXd separations(theta_s_deg.size());
  parallel_for(static_cast<int>(theta_s_deg.size()), threads, [&](int i) {
    DriveParams drive = drive_template;
    drive.omega_rf = std::polar(sig.rabi, sig.phase);
    const SpectrumTrace trace = eit_spectrum(scheme, drive, delta_c_grid, spec, 1);
    separations[i] = lorentzian_pair_fit(trace).separation;
  });

  const double top = separations.maxCoeff();
  if (!(top > 0.0))
    throw DegenerateFit("eit_at_angular_response: no splitting detected at any angle");

  BeamPattern pattern;
  pattern.angles_deg = theta_s_deg;
  pattern.gains = (separations / top).array().square();
  return pattern;
}

namespace {

// Forward model shared with pattern_multipeak through ApertureKernel: gains
// of the multi-tone profile on the measured grid for one candidate phase set.
class PhaseObjective {
 public:
  PhaseObjective(const BeamPattern& measured, const ApertureGeometry& geometry,
                 const LoConfiguration& lo, const SusceptibilityModel& model)
      : measured_(measured), geometry_(geometry), lo_(lo), model_(model) {
    const double k_band = lo.tones.front().wavenumber();
    const ApertureKernel seed(geometry, lo.tones, model);
    // Pin the refined node count: candidate rebuilds must share the seed's
    // grid so the cached angle phases stay aligned and the objective surface
    // has no level-switching seams.
    geometry_.spatial_samples = seed.spatial_samples();
    phase_matrix_.resize(measured.angles_deg.size(), seed.nodes().size());
    for (Eigen::Index a = 0; a < measured.angles_deg.size(); ++a) {
      const double kc = k_band * std::cos(deg_to_rad(measured.angles_deg[a]));
      for (Eigen::Index i = 0; i < seed.nodes().size(); ++i) {
        const double arg = kc * seed.nodes()[i];
        phase_matrix_(a, i) = std::complex<double>(std::cos(arg), std::sin(arg));
      }
    }
  }

  // Sum of squared gain errors for phases (first tone pinned upstream).
  double operator()(const Eigen::VectorXd& phases) {
    LoConfiguration candidate = lo_;
    for (Eigen::Index t = 0; t < phases.size(); ++t)
      candidate.tones[static_cast<std::size_t>(t)].phase = phases[t];
    const ApertureKernel kernel(geometry_, candidate.tones, model_);

    Eigen::VectorXcd weighted(kernel.nodes().size());
    for (Eigen::Index i = 0; i < weighted.size(); ++i)
      weighted[i] = kernel.weights()[i] * kernel.sensitivity()[i] *
                    std::polar(1.0, -kernel.lo_phase()[i]);
    Eigen::VectorXd gains = (phase_matrix_ * weighted).cwiseAbs2();
    const double top = gains.maxCoeff();
    if (top > 0.0) gains /= top;
    return (gains - measured_.gains).squaredNorm();
  }

 private:
  const BeamPattern& measured_;
  ApertureGeometry geometry_; // copy: spatial_samples pinned to the seed grid
  const LoConfiguration& lo_;
  const SusceptibilityModel& model_;
  Eigen::MatrixXcd phase_matrix_;
};

double wrap_phase(double phi) {
  const double two_pi = 2.0 * kPi;
  double w = std::fmod(phi, two_pi);
  if (w < 0.0) w += two_pi;
  return w;
}

} // namespace

FitResult fit_lo_phases(const BeamPattern& measured, const ApertureGeometry& geometry,
                        const LoConfiguration& lo, const LevelScheme& scheme,
                        const DriveParams& drive_template, const PhaseFitOptions& options) {
  geometry.validate();
  lo.validate();
  if (lo.band_indices().size() != 1)
    throw ConfigError("fit_lo_phases: all dressing tones must share one band");
  if (measured.angles_deg.size() != measured.gains.size() || measured.angles_deg.size() < 2)
    throw ConfigError("fit_lo_phases: measured pattern is malformed");
  if (options.grid_points < 2) throw ConfigError("fit_lo_phases: grid_points must be >= 2");
  if (options.max_evaluations < 1)
    throw ConfigError("fit_lo_phases: max_evaluations must be >= 1");

  const int n_tones = static_cast<int>(lo.tones.size());
  double rabi_sum = 0.0;
  for (const RfTone& tone : lo.tones) rabi_sum += tone.rabi;
  std::unique_ptr<SusceptibilityModel> local_model;
  const SusceptibilityModel* model = options.model;
  if (model == nullptr) {
    local_model = std::make_unique<SusceptibilityModel>(SusceptibilityModel::build(
        scheme, drive_template, rabi_sum * (1.0 + 1e-9), options.doppler));
    model = local_model.get();
  } else if (model->max_rabi() < rabi_sum) {
    throw ConfigError("fit_lo_phases: shared susceptibility model does not cover the Rabi range");
  }
  PhaseObjective objective(measured, geometry, lo, *model);

  FitResult result;
  result.phases = Eigen::VectorXd::Zero(n_tones);
  int evaluations = 0;
  bool budget_hit = false;
  // The pattern depends on phase differences only, so the first tone is
  // pinned to 0 and the remaining n-1 phases are searched.
  const int dim = n_tones - 1;
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n_tones);
  auto evaluate = [&](const Eigen::VectorXd& point) {
    ++evaluations;
    if (evaluations >= options.max_evaluations) budget_hit = true;
    full.tail(dim) = point;
    return objective(full);
  };

  if (dim == 0) {
    ++evaluations;
    result.residual = objective(full);
    result.converged = true;
    result.evaluations = evaluations;
    return result;
  }

  const double cell = 2.0 * kPi / options.grid_points;
  Eigen::VectorXd best = Eigen::VectorXd::Zero(dim);
  double best_cost = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& point, double cost) {
    if (cost < best_cost) {
      best_cost = cost;
      best = point;
    }
  };

  // Coarse grid over [0, 2 pi)^dim, odometer enumeration, retaining the
  // polish_starts lowest candidates.
  struct Candidate {
    double cost;
    Eigen::VectorXd point;
  };
  std::vector<Candidate> starts;
  const std::size_t keep = static_cast<std::size_t>(std::max(options.polish_starts, 1));
  std::vector<int> odo(static_cast<std::size_t>(dim), 0);
  while (!budget_hit) {
    Eigen::VectorXd candidate(dim);
    for (int d = 0; d < dim; ++d) candidate[d] = cell * odo[static_cast<std::size_t>(d)];
    const double cost = evaluate(candidate);
    consider(candidate, cost);
    if (starts.size() < keep || cost < starts.back().cost) {
      starts.push_back({cost, candidate});
      std::sort(starts.begin(), starts.end(),
                [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
      if (starts.size() > keep) starts.pop_back();
    }
    int d = 0;
    while (d < dim && ++odo[static_cast<std::size_t>(d)] == options.grid_points) {
      odo[static_cast<std::size_t>(d)] = 0;
      ++d;
    }
    if (d == dim) break;
  }

  // Nelder-Mead from one start, simplex seeded one coarse cell wide.
  auto polish = [&](const Candidate& start) {
    const int n_vertices = dim + 1;
    std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n_vertices));
    std::vector<double> value(static_cast<std::size_t>(n_vertices));
    simplex[0] = start.point;
    value[0] = start.cost;
    for (int d = 0; d < dim; ++d) {
      if (budget_hit) return false;
      simplex[static_cast<std::size_t>(d + 1)] = start.point;
      simplex[static_cast<std::size_t>(d + 1)][d] += cell;
      value[static_cast<std::size_t>(d + 1)] = evaluate(simplex[static_cast<std::size_t>(d + 1)]);
      consider(simplex[static_cast<std::size_t>(d + 1)], value[static_cast<std::size_t>(d + 1)]);
    }

    auto order = [&]() {
      for (int a = 0; a < n_vertices; ++a)
        for (int b = a + 1; b < n_vertices; ++b)
          if (value[static_cast<std::size_t>(b)] < value[static_cast<std::size_t>(a)]) {
            std::swap(value[static_cast<std::size_t>(a)], value[static_cast<std::size_t>(b)]);
            std::swap(simplex[static_cast<std::size_t>(a)], simplex[static_cast<std::size_t>(b)]);
          }
    };

    for (;;) {
      order();
      consider(simplex[0], value[0]);
      double spread = 0.0;
      for (int v = 1; v < n_vertices; ++v)
        spread = std::max(
            spread, (simplex[static_cast<std::size_t>(v)] - simplex[0]).cwiseAbs().maxCoeff());
      if (spread < 1e-9 ||
          value[static_cast<std::size_t>(dim)] - value[0] < 1e-15 * (1.0 + std::abs(value[0])))
        return true;
      if (budget_hit) return false;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
      for (int v = 0; v < dim; ++v) centroid += simplex[static_cast<std::size_t>(v)];
      centroid /= static_cast<double>(dim);
      const Eigen::VectorXd worst = simplex[static_cast<std::size_t>(dim)];
      const double f_worst = value[static_cast<std::size_t>(dim)];

      const Eigen::VectorXd reflected = centroid + (centroid - worst);
      const double f_reflected = evaluate(reflected);
      consider(reflected, f_reflected);
      if (f_reflected < value[0]) {
        if (budget_hit) return false;
        const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - worst);
        const double f_expanded = evaluate(expanded);
        consider(expanded, f_expanded);
        if (f_expanded < f_reflected) {
          simplex[static_cast<std::size_t>(dim)] = expanded;
          value[static_cast<std::size_t>(dim)] = f_expanded;
        } else {
          simplex[static_cast<std::size_t>(dim)] = reflected;
          value[static_cast<std::size_t>(dim)] = f_reflected;
        }
      } else if (f_reflected < value[static_cast<std::size_t>(dim - 1)]) {
        simplex[static_cast<std::size_t>(dim)] = reflected;
        value[static_cast<std::size_t>(dim)] = f_reflected;
      } else {
        if (budget_hit) return false;
        const Eigen::VectorXd contracted =
            centroid + 0.5 * ((f_reflected < f_worst ? reflected : worst) - centroid);
        const double f_contracted = evaluate(contracted);
        consider(contracted, f_contracted);
        if (f_contracted < std::min(f_reflected, f_worst)) {
          simplex[static_cast<std::size_t>(dim)] = contracted;
          value[static_cast<std::size_t>(dim)] = f_contracted;
        } else {
          for (int v = 1; v < n_vertices; ++v) {
            if (budget_hit) return false;
            simplex[static_cast<std::size_t>(v)] =
                simplex[0] + 0.5 * (simplex[static_cast<std::size_t>(v)] - simplex[0]);
            value[static_cast<std::size_t>(v)] = evaluate(simplex[static_cast<std::size_t>(v)]);
            consider(simplex[static_cast<std::size_t>(v)], value[static_cast<std::size_t>(v)]);
          }
        }
      }
    }
  };

  bool all_refined = !budget_hit && !starts.empty();
  for (const Candidate& start : starts) {
    if (budget_hit) {
      all_refined = false;
      break;
    }
    if (!polish(start)) all_refined = false;
  }

  result.phases[0] = 0.0;
  for (int d = 0; d < dim; ++d) result.phases[d + 1] = wrap_phase(best[d]);
  result.residual = best_cost;
  result.converged = all_refined && !budget_hit;
  result.evaluations = evaluations;
  return result;
}

} // namespace qap
