#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "auvtune/controller.hpp"
#include "auvtune/errors.hpp"
#include "auvtune/fuzzy.hpp"
#include "auvtune/plant.hpp"

namespace auvtune {

struct StepCommand {
  double amplitude = 1.0;  ///< [m]
  double onset = 0.0;      ///< [s]
};

struct SimConfig {
  double dt = 1e-3;
  double duration = 10.0;
  StepCommand reference;
  ControllerMode mode = ControllerMode::FuzzyPid;
  ControllerSettings controller;
  std::vector<double> initial_state;  ///< empty means zero
  double divergence_bound = 1e6;

  [[nodiscard]] std::size_t sample_count() const {
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt must be finite and > 0");
    if (!(duration >= dt) || !std::isfinite(duration)) throw ConfigError("sim.duration must be >= dt");
    if (!std::isfinite(reference.amplitude)) throw ConfigError("sim.amplitude must be finite");
    if (!std::isfinite(reference.onset)) throw ConfigError("sim.onset must be finite");
    if (!(divergence_bound > 0.0)) throw ConfigError("sim.divergence_bound must be > 0");
    controller.validate();
  }
};

/// Equal-length sample series. A diverged run is truncated before the offending
/// sample and records its index.
struct SimTrace {
  std::vector<double> t;
  std::vector<double> r;
  std::vector<double> z;
  std::vector<double> e;
  std::vector<double> u;
  std::optional<std::size_t> diverged_at;

  [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
  [[nodiscard]] bool diverged() const noexcept { return diverged_at.has_value(); }

  void reserve(std::size_t n) {
    t.reserve(n);
    r.reserve(n);
    z.reserve(n);
    e.reserve(n);
    u.reserve(n);
  }

  friend bool operator==(const SimTrace&, const SimTrace&) = default;
};

inline double step_reference(double t, const StepCommand& cmd) noexcept {
  return t < cmd.onset ? 0.0 : cmd.amplitude;
}

inline double step_reference(double t, const SimConfig& cfg) noexcept {
  return step_reference(t, cfg.reference);
}

/// Shared immutable engine built from the standard rule table.
inline const FuzzyEngine& default_fuzzy_engine() {
  static const FuzzyEngine engine{};
  return engine;
}

/// Fixed-step loop: sample z, form e = r - z, run the controller once, then
/// advance the plant one RK4 step holding the saturated command.
inline SimTrace run_closed_loop(const StateSpaceModel& plant, const FuzzyEngine& engine,
                                const TuningVector& theta, const SimConfig& cfg) {
  cfg.validate();
  const FuzzyPidController controller(engine, theta, cfg.controller, cfg.mode);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(plant.order());
  if (!cfg.initial_state.empty()) {
    if (static_cast<Eigen::Index>(cfg.initial_state.size()) != plant.order()) {
      throw DimensionMismatchError("initial state has " + std::to_string(cfg.initial_state.size()) +
                                   " entries, plant order is " + std::to_string(plant.order()));
    }
    for (Eigen::Index i = 0; i < plant.order(); ++i) x(i) = cfg.initial_state[static_cast<std::size_t>(i)];
  }

  Rk4Integrator integrator(plant);
  PidState state;
  const std::size_t n = cfg.sample_count();
  SimTrace trace;
  trace.reserve(n);

  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const double z = plant.output(x, 0.0);
    if (!std::isfinite(z) || std::abs(z) > cfg.divergence_bound) {
      trace.diverged_at = k;
      break;
    }
    const double r = step_reference(t, cfg);
    const double e = r - z;
    const PidStep step = controller.step(state, e, cfg.dt);
    state = step.state;

    trace.t.push_back(t);
    trace.r.push_back(r);
    trace.z.push_back(z);
    trace.e.push_back(e);
    trace.u.push_back(step.output.u_sat);

    if (k + 1 < n) integrator.step(x, step.output.u_sat, cfg.dt);
  }
  return trace;
}

inline SimTrace run_closed_loop(const StateSpaceModel& plant, const TuningVector& theta,
                                const SimConfig& cfg) {
  return run_closed_loop(plant, default_fuzzy_engine(), theta, cfg);
}

inline void throw_if_diverged(const SimTrace& trace) {
  if (trace.diverged_at) {
    const double last = trace.z.empty() ? 0.0 : trace.z.back();
    throw DivergenceError(*trace.diverged_at, std::abs(last));
  }
}

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// CSV with header t,r,z,e,u; one row per sample.
inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << "t,r,z,e,u\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    os << format_double(trace.t[k]) << ',' << format_double(trace.r[k]) << ','
       << format_double(trace.z[k]) << ',' << format_double(trace.e[k]) << ','
       << format_double(trace.u[k]) << '\n';
  }
}

}  // namespace auvtune
