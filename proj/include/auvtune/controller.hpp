#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "auvtune/errors.hpp"
#include "auvtune/fuzzy.hpp"

namespace auvtune {

/// The six tuned quantities: baseline PID gains, the two input quantization
/// factors and the shared output scaling factor.
struct TuningVector {
  double kp0 = 300.0;
  double ki0 = 0.5;
  double kd0 = 35.0;
  double ke = 1.0;
  double kec = 0.1;
  double ku = 1.0;

  static constexpr std::size_t kSize = 6;
  static constexpr std::array<std::string_view, kSize> kNames = {"Kp0", "Ki0", "Kd0",
                                                                 "Ke",  "Kec", "Ku"};

  [[nodiscard]] std::array<double, kSize> to_array() const { return {kp0, ki0, kd0, ke, kec, ku}; }

  static TuningVector from_array(const std::array<double, kSize>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }

  void validate() const {
    for (double v : to_array()) {
      if (!std::isfinite(v)) throw ConfigError("tuning vector contains a non-finite value");
    }
    if (!(ke > 0.0)) throw ConfigError("Ke must be > 0");
    if (!(kec > 0.0)) throw ConfigError("Kec must be > 0");
    if (ku < 0.0) throw ConfigError("Ku must be >= 0");
    if (kp0 < 0.0 || ki0 < 0.0 || kd0 < 0.0) throw ConfigError("baseline PID gains must be >= 0");
  }

  friend bool operator==(const TuningVector&, const TuningVector&) = default;
};

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;

  friend bool operator==(const PidGains&, const PidGains&) = default;
};

struct PidState {
  double integral = 0.0;    ///< [m s]
  double derivative = 0.0;  ///< filtered de/dt [m/s]
  double prev_error = 0.0;  ///< [m]
  bool saturated = false;

  friend bool operator==(const PidState&, const PidState&) = default;
};

struct ControllerOutput {
  double u = 0.0;      ///< commanded, before the limiter
  double u_sat = 0.0;  ///< applied
  PidGains gains;
};

struct PidStep {
  ControllerOutput output;
  PidState state;
};

enum class ControllerMode { Pid, FuzzyPid };

inline std::string_view to_string(ControllerMode m) noexcept {
  return m == ControllerMode::Pid ? "pid" : "fuzzy";
}

struct ControllerSettings {
  double u_max = 600.0;         ///< symmetric actuator limit
  double derivative_tau = 0.01; ///< derivative low-pass time constant [s]

  void validate() const {
    if (!(u_max > 0.0) || !std::isfinite(u_max)) throw ConfigError("u_max must be finite and > 0");
    if (!(derivative_tau >= 0.0)) throw ConfigError("derivative_tau must be >= 0");
  }
};

/// Fuzzy input domain half-width.
inline constexpr double kFuzzyDomain = 3.0;

struct ScaledInputs {
  double e = 0.0;
  double ec = 0.0;
};

inline ScaledInputs scale_inputs(double e, double ec, const TuningVector& theta) noexcept {
  return {std::clamp(theta.ke * e, -kFuzzyDomain, kFuzzyDomain),
          std::clamp(theta.kec * ec, -kFuzzyDomain, kFuzzyDomain)};
}

/// Baseline plus scaled correction, floored at zero.
inline PidGains update_gains(const TuningVector& theta, const FuzzyCorrection& corr) noexcept {
  return {std::max(0.0, theta.kp0 + theta.ku * corr.dKp),
          std::max(0.0, theta.ki0 + theta.ku * corr.dKi),
          std::max(0.0, theta.kd0 + theta.ku * corr.dKd)};
}

/// First-order low-pass of the backward difference: tau d' + d = de/dt, discretized
/// by backward Euler. With tau = 0 this is the plain backward difference.
inline double filtered_derivative(const PidState& state, double e, double dt, double tau) noexcept {
  return (tau * state.derivative + (e - state.prev_error)) / (tau + dt);
}

/// Positional PID with conditional integration: the integral is held whenever the
/// command is beyond the limit and the error pushes it further out.
inline PidStep pid_step(const PidState& state, double e, const PidGains& gains, double dt,
                        double u_max, double derivative_tau) {
  if (!std::isfinite(e) || !std::isfinite(gains.kp) || !std::isfinite(gains.ki) ||
      !std::isfinite(gains.kd)) {
    throw NonFiniteInputError("pid_step: non-finite error or gain");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw NonFiniteInputError("pid_step: dt must be finite and > 0");

  PidStep r;
  PidState& next = r.state;
  next.derivative = filtered_derivative(state, e, dt, derivative_tau);
  next.prev_error = e;
  next.integral = state.integral + e * dt;

  const double pd = gains.kp * e + gains.kd * next.derivative;
  double u = pd + gains.ki * next.integral;
  if (std::abs(u) > u_max && e * u > 0.0) {
    next.integral = state.integral;
    u = pd + gains.ki * next.integral;
  }
  next.saturated = std::abs(u) > u_max;

  r.output.u = u;
  r.output.u_sat = std::clamp(u, -u_max, u_max);
  r.output.gains = gains;
  return r;
}

/// Fuzzy-scheduled PID. In Pid mode the fuzzy stage is bypassed and the gains
/// are the baseline (Kp0, Ki0, Kd0).
class FuzzyPidController {
 public:
  FuzzyPidController(const FuzzyEngine& engine, const TuningVector& theta,
                     const ControllerSettings& settings, ControllerMode mode)
      : engine_(&engine), theta_(theta), settings_(settings), mode_(mode) {
    theta_.validate();
    settings_.validate();
  }

  [[nodiscard]] PidStep step(const PidState& state, double e, double dt) const {
    return pid_step(state, e, gains_for(state, e, dt), dt, settings_.u_max,
                    settings_.derivative_tau);
  }

  /// Gains the next step would use. The fuzzy error rate is the same filtered
  /// derivative the D term sees.
  [[nodiscard]] PidGains gains_for(const PidState& state, double e, double dt) const {
    FuzzyCorrection corr{};
    if (mode_ == ControllerMode::FuzzyPid) {
      const double ec = filtered_derivative(state, e, dt, settings_.derivative_tau);
      const ScaledInputs s = scale_inputs(e, ec, theta_);
      corr = engine_->evaluate(s.e, s.ec);
    }
    return update_gains(theta_, corr);
  }

  [[nodiscard]] const TuningVector& theta() const noexcept { return theta_; }
  [[nodiscard]] const ControllerSettings& settings() const noexcept { return settings_; }
  [[nodiscard]] ControllerMode mode() const noexcept { return mode_; }

 private:
  const FuzzyEngine* engine_;
  TuningVector theta_;
  ControllerSettings settings_;
  ControllerMode mode_;
};

}  // namespace auvtune
