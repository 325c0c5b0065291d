#pragma once

// Bound-constrained global-best particle swarm optimizer.
//
// Random numbers come from std::mt19937_64 (fully specified by the standard),
// mapped to [0, 1) as (bits >> 11) * 2^-53. Draw order is fixed:
//   init:  particles 1..N-1, dimensions 0..D-1, one draw each (particle 0 is the warm start)
//   step:  particles 0..N-1, dimensions 0..D-1, r1 then r2
// Fitness evaluation consumes no random numbers, so evaluating in parallel
// cannot change results.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>
#include <vector>

#include "auvtune/errors.hpp"
#include "auvtune/metrics.hpp"
#include "auvtune/simloop.hpp"

namespace auvtune {

template <std::size_t D>
using Point = std::array<double, D>;

template <std::size_t D>
struct PsoSettings {
  std::size_t swarm_size = 30;
  std::size_t max_iterations = 60;
  double inertia = 0.7298;
  double c1 = 1.49618;
  double c2 = 1.49618;
  Point<D> lower{};
  Point<D> upper{};
  double velocity_clamp = 0.2;  ///< fraction of each dimension's range
  std::uint64_t seed = 42;
  std::size_t threads = 1;      ///< 0 = hardware concurrency

  void validate() const {
    if (swarm_size < 2) throw ConfigError("pso.swarm_size must be >= 2");
    if (!(inertia > 0.0 && inertia < 1.0)) throw ConfigError("pso.inertia must lie in (0, 1)");
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("pso.c1 and pso.c2 must be > 0");
    if (!(velocity_clamp > 0.0)) throw ConfigError("pso.velocity_clamp must be > 0");
    for (std::size_t d = 0; d < D; ++d) {
      if (!(lower[d] < upper[d]) || !std::isfinite(lower[d]) || !std::isfinite(upper[d])) {
        throw ConfigError("pso bounds: lower < upper required in dimension " + std::to_string(d));
      }
    }
  }
};

/// Bounds for (Kp0, Ki0, Kd0, Ke, Kec, Ku).
using PsoConfig = PsoSettings<6>;

inline PsoConfig default_pso_config() {
  PsoConfig cfg;
  cfg.lower = {50.0, 0.0, 1.0, 0.1, 0.01, 0.01};
  cfg.upper = {600.0, 5.0, 100.0, 10.0, 5.0, 50.0};
  return cfg;
}

class SwarmRng {
 public:
  explicit SwarmRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  friend bool operator==(const SwarmRng&, const SwarmRng&) = default;

 private:
  std::mt19937_64 engine_;
};

template <std::size_t D>
struct Particle {
  Point<D> position{};
  Point<D> velocity{};
  Point<D> best_position{};
  double best_fitness = std::numeric_limits<double>::infinity();

  friend bool operator==(const Particle&, const Particle&) = default;
};

template <std::size_t D>
struct Swarm {
  std::vector<Particle<D>> particles;
  Point<D> best_position{};
  double best_fitness = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  SwarmRng rng{0};

  friend bool operator==(const Swarm&, const Swarm&) = default;
};

struct ConvergenceEntry {
  std::size_t iteration = 0;
  double best_fitness = 0.0;
  std::vector<double> best_position;

  friend bool operator==(const ConvergenceEntry&, const ConvergenceEntry&) = default;
};

struct ConvergenceLog {
  std::vector<ConvergenceEntry> entries;
  std::size_t evaluations = 0;

  friend bool operator==(const ConvergenceLog&, const ConvergenceLog&) = default;
};

inline void write_convergence_csv(std::ostream& os, const ConvergenceLog& log) {
  os << "iteration,best_fitness\n";
  for (const auto& e : log.entries) os << e.iteration << ',' << format_double(e.best_fitness) << '\n';
}

template <std::size_t D>
Swarm<D> init_swarm(const PsoSettings<D>& cfg, const Point<D>& baseline) {
  cfg.validate();
  for (std::size_t d = 0; d < D; ++d) {
    if (baseline[d] < cfg.lower[d] || baseline[d] > cfg.upper[d]) {
      throw ConfigError("warm-start point lies outside the pso bounds in dimension " +
                        std::to_string(d));
    }
  }
  Swarm<D> swarm;
  swarm.rng = SwarmRng(cfg.seed);
  swarm.particles.resize(cfg.swarm_size);
  swarm.particles[0].position = baseline;
  for (std::size_t i = 1; i < cfg.swarm_size; ++i) {
    auto& x = swarm.particles[i].position;
    for (std::size_t d = 0; d < D; ++d) {
      x[d] = cfg.lower[d] + swarm.rng.uniform() * (cfg.upper[d] - cfg.lower[d]);
    }
  }
  for (auto& p : swarm.particles) p.best_position = p.position;
  return swarm;
}

/// Evaluates every particle, then updates personal and global bests in particle
/// order. Only strict improvements replace an incumbent.
template <std::size_t D, class Objective>
void evaluate_swarm(Swarm<D>& swarm, Objective&& objective, std::size_t threads = 1) {
  const std::size_t n = swarm.particles.size();
  std::vector<double> values(n);

  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) values[i] = objective(swarm.particles[i].position);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < n; i = next++) {
            try {
              values[i] = objective(swarm.particles[i].position);
            } catch (...) {
              std::lock_guard lock(error_mutex);
              if (!error) error = std::current_exception();
            }
          }
        });
      }
    }
    if (error) std::rethrow_exception(error);
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& p = swarm.particles[i];
    const double f = values[i];
    if (f < p.best_fitness) {
      p.best_fitness = f;
      p.best_position = p.position;
    }
    if (f < swarm.best_fitness) {
      swarm.best_fitness = f;
      swarm.best_position = p.position;
    }
  }
  swarm.evaluations += n;
}

/// Mirrors x back inside [lo, hi] and negates the velocity component on a hit.
inline void reflect(double& x, double& v, double lo, double hi) noexcept {
  if (x > hi) {
    x = hi - (x - hi);
    v = -v;
  } else if (x < lo) {
    x = lo + (lo - x);
    v = -v;
  }
  // Only reachable if a velocity exceeds the full range.
  x = std::clamp(x, lo, hi);
}

template <std::size_t D>
void step_swarm(Swarm<D>& swarm, const PsoSettings<D>& cfg) {
  for (auto& p : swarm.particles) {
    for (std::size_t d = 0; d < D; ++d) {
      const double r1 = swarm.rng.uniform();
      const double r2 = swarm.rng.uniform();
      const double vmax = cfg.velocity_clamp * (cfg.upper[d] - cfg.lower[d]);
      double v = cfg.inertia * p.velocity[d] + cfg.c1 * r1 * (p.best_position[d] - p.position[d]) +
                 cfg.c2 * r2 * (swarm.best_position[d] - p.position[d]);
      v = std::clamp(v, -vmax, vmax);
      double x = p.position[d] + v;
      reflect(x, v, cfg.lower[d], cfg.upper[d]);
      p.position[d] = x;
      p.velocity[d] = v;
    }
  }
}

template <std::size_t D>
struct OptimizeResult {
  Point<D> best_position{};
  double best_fitness = std::numeric_limits<double>::infinity();
  ConvergenceLog log;
};

/// init, evaluate (iteration 0), then max_iterations rounds of step + evaluate.
template <std::size_t D, class Objective>
OptimizeResult<D> optimize(Objective&& objective, const PsoSettings<D>& cfg, const Point<D>& baseline) {
  Swarm<D> swarm = init_swarm(cfg, baseline);
  OptimizeResult<D> result;
  auto record = [&](std::size_t iteration) {
    result.log.entries.push_back(
        {iteration, swarm.best_fitness,
         std::vector<double>(swarm.best_position.begin(), swarm.best_position.end())});
  };
  evaluate_swarm(swarm, objective, cfg.threads);
  record(0);
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    step_swarm(swarm, cfg);
    evaluate_swarm(swarm, objective, cfg.threads);
    record(it);
  }
  result.best_position = swarm.best_position;
  result.best_fitness = swarm.best_fitness;
  result.log.evaluations = swarm.evaluations;
  return result;
}

// -- controller tuning ---------------------------------------------------------

/// Runs the closed loop with theta and scores it; a trace that diverges scores the
/// divergence constant.
inline FitnessResult evaluate_tuning(const StateSpaceModel& plant, const FuzzyEngine& engine,
                                     const TuningVector& theta, const SimConfig& sim,
                                     const FitnessConfig& fit) {
  return fitness(run_closed_loop(plant, engine, theta, sim), fit, sim.controller.u_max);
}

/// Fixes the normalization baselines from a reference run (the conventional
/// fuzzy PID). Throws DivergenceError if that run diverges.
inline FitnessConfig with_baselines(FitnessConfig fit, const StateSpaceModel& plant,
                                    const FuzzyEngine& engine, const TuningVector& reference,
                                    SimConfig sim) {
  sim.mode = ControllerMode::FuzzyPid;
  const SimTrace trace = run_closed_loop(plant, engine, reference, sim);
  throw_if_diverged(trace);
  fit.itae_base = itae(trace);
  fit.energy_base = control_energy(trace);
  if (!(*fit.itae_base > 0.0) || !(*fit.energy_base > 0.0)) {
    throw ConfigError("reference run has zero ITAE or energy; cannot normalize");
  }
  return fit;
}

struct TuningResult {
  TuningVector theta;
  double fitness = 0.0;
  ConvergenceLog log;
  double warm_start_fitness = 0.0;
  std::size_t energy_violations = 0;   ///< evaluated candidates above the energy tolerance
  std::size_t dominance_failures = 0;  ///< violators that scored at or below the warm start
};

/// Six-parameter fuzzy PID tuning; the swarm is warm-started at `warm_start`.
inline TuningResult optimize_tuning(const StateSpaceModel& plant, const FuzzyEngine& engine,
                                    const SimConfig& sim_cfg, const FitnessConfig& fit,
                                    const PsoConfig& pso, const TuningVector& warm_start) {
  if (!fit.has_baselines()) throw UnsetBaselineError("fitness baselines (itae, energy) are not set");
  SimConfig sim = sim_cfg;
  sim.mode = ControllerMode::FuzzyPid;

  TuningResult out;
  out.warm_start_fitness = evaluate_tuning(plant, engine, warm_start, sim, fit).value;

  std::mutex tally_mutex;
  std::vector<double> violator_scores;
  auto objective = [&](const Point<6>& x) {
    const FitnessResult r = evaluate_tuning(plant, engine, TuningVector::from_array(x), sim, fit);
    if (!r.diverged && r.report.energy_n > fit.energy_tolerance) {
      std::lock_guard lock(tally_mutex);
      violator_scores.push_back(r.value);
    }
    return r.value;
  };

  OptimizeResult<6> res = optimize(objective, pso, warm_start.to_array());
  out.theta = TuningVector::from_array(res.best_position);
  out.fitness = res.best_fitness;
  out.log = std::move(res.log);
  out.energy_violations = violator_scores.size();
  out.dominance_failures = static_cast<std::size_t>(
      std::count_if(violator_scores.begin(), violator_scores.end(),
                    [&](double v) { return v <= out.warm_start_fitness; }));
  return out;
}

inline nlohmann::json to_json(const TuningVector& theta) {
  nlohmann::json j = nlohmann::json::object();
  const auto values = theta.to_array();
  for (std::size_t i = 0; i < TuningVector::kSize; ++i) j[std::string(TuningVector::kNames[i])] = values[i];
  return j;
}

inline TuningVector tuning_from_json(const nlohmann::json& j) {
  std::array<double, TuningVector::kSize> values{};
  for (std::size_t i = 0; i < TuningVector::kSize; ++i) {
    const std::string key(TuningVector::kNames[i]);
    if (!j.contains(key) || !j[key].is_number()) throw ConfigError("theta JSON is missing numeric '" + key + "'");
    values[i] = j[key].get<double>();
  }
  TuningVector theta = TuningVector::from_array(values);
  theta.validate();
  return theta;
}

}  // namespace auvtune
