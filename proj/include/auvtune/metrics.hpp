#pragma once

// Step-response performance indices and the constrained composite fitness.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>

#include "auvtune/errors.hpp"
#include "auvtune/simloop.hpp"

namespace auvtune {

struct MetricsReport {
  double itae = 0.0;             ///< integral of t |e| [m s^2]
  double settling_time = 0.0;    ///< [s]
  double overshoot = 0.0;        ///< fraction of the step amplitude
  double energy = 0.0;           ///< integral of u^2 [u^2 s]
  double saturation_rate = 0.0;  ///< fraction of samples near the limit
  double itae_n = 0.0;
  double energy_n = 0.0;
  double ts_scaled = 0.0;
  double e_pen = 0.0;
};

struct FitnessWeights {
  double itae = 1.0;
  double energy = 0.10;
  double overshoot = 1.2;
  double settling = 0.6;
  double saturation = 3.0;
};

struct FitnessConfig {
  FitnessWeights weights;
  double overshoot_tolerance = 0.02;
  double energy_tolerance = 1.02;
  double penalty_scale = 1000.0;
  double settling_band = 0.02;
  double saturation_threshold = 0.99;
  double divergence_fitness = 1e6;
  std::optional<double> itae_base;
  std::optional<double> energy_base;

  [[nodiscard]] bool has_baselines() const noexcept { return itae_base && energy_base; }

  void validate() const {
    const double w[] = {weights.itae, weights.energy, weights.overshoot, weights.settling,
                        weights.saturation};
    for (double v : w) {
      if (!(v >= 0.0)) throw ConfigError("fitness weights must be >= 0");
    }
    if (!(overshoot_tolerance >= 0.0)) throw ConfigError("fitness.overshoot_tolerance must be >= 0");
    if (!(energy_tolerance >= 0.0)) throw ConfigError("fitness.energy_tolerance must be >= 0");
    if (!(penalty_scale >= 0.0)) throw ConfigError("fitness.penalty_scale must be >= 0");
    if (!(settling_band >= 0.0)) throw ConfigError("fitness.settling_band must be >= 0");
    if (!(saturation_threshold >= 0.0)) throw ConfigError("fitness.saturation_threshold must be >= 0");
    if (!(divergence_fitness > 0.0)) throw ConfigError("fitness.divergence_fitness must be > 0");
  }
};

namespace detail {

inline void require_nonempty(const SimTrace& trace) {
  if (trace.size() == 0) throw ConfigError("metrics need a nonempty trace");
}

inline double step_amplitude(const SimTrace& trace) {
  require_nonempty(trace);
  const double a = trace.r.back();
  if (a == 0.0) throw ConfigError("metric undefined for a zero step amplitude");
  return a;
}

template <class F>
double trapezoid(const std::vector<double>& t, F&& integrand) {
  double acc = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) {
    acc += 0.5 * (integrand(k - 1) + integrand(k)) * (t[k] - t[k - 1]);
  }
  return acc;
}

}  // namespace detail

/// Trapezoidal integral of t |e(t)|.
inline double itae(const SimTrace& trace) {
  detail::require_nonempty(trace);
  return detail::trapezoid(trace.t, [&](std::size_t k) { return trace.t[k] * std::abs(trace.e[k]); });
}

/// Trapezoidal integral of u(t)^2.
inline double control_energy(const SimTrace& trace) {
  detail::require_nonempty(trace);
  return detail::trapezoid(trace.t, [&](std::size_t k) { return trace.u[k] * trace.u[k]; });
}

/// Time of the first sample after the last excursion outside band * |amplitude|;
/// the final time when the last sample is still outside.
inline double settling_time(const SimTrace& trace, double band) {
  const double limit = band * std::abs(detail::step_amplitude(trace));
  std::optional<std::size_t> last_out;
  for (std::size_t k = trace.size(); k-- > 0;) {
    if (std::abs(trace.e[k]) > limit) {
      last_out = k;
      break;
    }
  }
  if (!last_out) return trace.t.front();
  if (*last_out + 1 >= trace.size()) return trace.t.back();
  return trace.t[*last_out + 1];
}

/// Peak excursion beyond the reference as a fraction of the reference.
inline double overshoot(const SimTrace& trace) {
  const double a = detail::step_amplitude(trace);
  double peak = -std::numeric_limits<double>::infinity();
  for (double z : trace.z) peak = std::max(peak, z / a);
  return std::max(0.0, peak - 1.0);
}

inline double saturation_rate(const SimTrace& trace, double u_max, double threshold_factor) {
  if (!(u_max > 0.0)) throw ConfigError("saturation_rate needs u_max > 0");
  if (trace.size() == 0) return 0.0;
  const double limit = threshold_factor * u_max;
  const auto hits = std::count_if(trace.u.begin(), trace.u.end(),
                                  [&](double u) { return std::abs(u) >= limit; });
  return static_cast<double>(hits) / static_cast<double>(trace.size());
}

/// Raw indices only; normalized fields stay zero.
inline MetricsReport measure(const SimTrace& trace, const FitnessConfig& cfg, double u_max) {
  MetricsReport m;
  m.itae = itae(trace);
  m.settling_time = settling_time(trace, cfg.settling_band);
  m.overshoot = overshoot(trace);
  m.energy = control_energy(trace);
  m.saturation_rate = saturation_rate(trace, u_max, cfg.saturation_threshold);
  return m;
}

/// Energy penalty: zero up to the tolerance ratio, linear beyond it.
inline double energy_penalty(double energy_n, const FitnessConfig& cfg) noexcept {
  return energy_n <= cfg.energy_tolerance ? 0.0 : cfg.penalty_scale * (energy_n - cfg.energy_tolerance);
}

/// Fills the normalized fields of a raw report and returns the composite fitness
///   w_itae itae_n + w_eu energy_n + w_os max(0, OS - tol) + w_ts Ts/T + w_sr Sr + E_pen.
inline double score(MetricsReport& m, double duration, const FitnessConfig& cfg) {
  if (!cfg.has_baselines()) throw UnsetBaselineError("fitness baselines (itae, energy) are not set");
  if (!(*cfg.itae_base > 0.0) || !(*cfg.energy_base > 0.0)) {
    throw UnsetBaselineError("fitness baselines must be > 0");
  }
  m.itae_n = m.itae / *cfg.itae_base;
  m.energy_n = m.energy / *cfg.energy_base;
  m.ts_scaled = duration > 0.0 ? m.settling_time / duration : 0.0;
  m.e_pen = energy_penalty(m.energy_n, cfg);
  const FitnessWeights& w = cfg.weights;
  return w.itae * m.itae_n + w.energy * m.energy_n +
         w.overshoot * std::max(0.0, m.overshoot - cfg.overshoot_tolerance) +
         w.settling * m.ts_scaled + w.saturation * m.saturation_rate + m.e_pen;
}

struct FitnessResult {
  double value = 0.0;
  MetricsReport report;
  bool diverged = false;
};

inline FitnessResult fitness(const SimTrace& trace, const FitnessConfig& cfg, double u_max) {
  if (!cfg.has_baselines()) throw UnsetBaselineError("fitness baselines (itae, energy) are not set");
  FitnessResult r;
  if (trace.diverged() || trace.size() < 2) {
    r.value = cfg.divergence_fitness;
    r.diverged = true;
    return r;
  }
  r.report = measure(trace, cfg, u_max);
  r.value = score(r.report, trace.t.back() - trace.t.front(), cfg);
  if (!std::isfinite(r.value)) {
    r.value = cfg.divergence_fitness;
    r.diverged = true;
  }
  return r;
}

inline nlohmann::json to_json(const MetricsReport& m) {
  return nlohmann::json{{"itae", m.itae},
                        {"settling_time", m.settling_time},
                        {"overshoot", m.overshoot},
                        {"energy", m.energy},
                        {"saturation_rate", m.saturation_rate},
                        {"itae_n", m.itae_n},
                        {"energy_n", m.energy_n},
                        {"ts_scaled", m.ts_scaled},
                        {"e_pen", m.e_pen}};
}

}  // namespace auvtune
