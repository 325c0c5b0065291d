#pragma once

// Command implementations behind the auvtune CLI. Each command returns the
// process exit code: 0 success, 2 configuration/precondition error, 3 the
// simulation diverged, 1 anything else (I/O). Files are staged and only
// renamed into place once every output of the command has been produced.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "auvtune/config.hpp"
#include "auvtune/controller.hpp"
#include "auvtune/errors.hpp"
#include "auvtune/metrics.hpp"
#include "auvtune/plant.hpp"
#include "auvtune/pso.hpp"
#include "auvtune/simloop.hpp"

namespace auvtune {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitDiverged = 3 };

/// Collects named file contents and writes them all-or-nothing.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

  [[nodiscard]] std::vector<std::filesystem::path> commit() const {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());

    std::vector<fs::path> staged;
    auto discard = [&] {
      for (const auto& p : staged) fs::remove(p, ec);
    };
    for (const auto& [name, content] : files_) {
      const fs::path tmp = dir_ / (name + ".partial");
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (os) {
        os << content;
        os.close();
      }
      staged.push_back(tmp);
      if (!os) {
        discard();
        throw ConfigError("cannot write '" + tmp.string() + "'");
      }
    }
    std::vector<fs::path> written;
    for (std::size_t i = 0; i < files_.size(); ++i) {
      const fs::path target = dir_ / files_[i].first;
      fs::rename(staged[i], target, ec);
      if (ec) {
        discard();
        for (const auto& p : written) fs::remove(p, ec);
        throw ConfigError("cannot move output into place: " + target.string());
      }
      written.push_back(target);
    }
    return written;
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

namespace detail {

template <class Body>
int run_guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

inline std::string csv(const SimTrace& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

struct Workbench {
  TransferFunction tf;
  StateSpaceModel plant;
  const FuzzyEngine* engine;
};

inline Workbench prepare(const RunSpec& spec) {
  spec.validate();
  Workbench w{spec.plant.transfer_function(), {}, &default_fuzzy_engine()};
  w.plant = tf_to_state_space(w.tf);
  return w;
}

inline SimTrace simulate_checked(const Workbench& w, const TuningVector& theta, SimConfig sim,
                                 ControllerMode mode) {
  sim.mode = mode;
  SimTrace trace = run_closed_loop(w.plant, *w.engine, theta, sim);
  throw_if_diverged(trace);
  return trace;
}

inline nlohmann::json theta_document(const TuningVector& theta, double fitness) {
  nlohmann::json j = to_json(theta);
  j["fitness"] = fitness;
  return j;
}

inline TuningResult tune(const RunSpec& spec, const Workbench& w, const FitnessConfig& fit) {
  return optimize_tuning(w.plant, *w.engine, spec.sim, fit, spec.pso, spec.controller);
}

inline void stage_tuning(OutputSet& out, const TuningResult& r) {
  out.add("theta_best.json", theta_document(r.theta, r.fitness).dump(2) + "\n");
  std::ostringstream conv;
  write_convergence_csv(conv, r.log);
  out.add("convergence.csv", conv.str());
}

inline void report_tuning(std::ostream& out, const TuningResult& r) {
  out << "best fitness " << format_double(r.fitness) << " (warm start "
      << format_double(r.warm_start_fitness) << ", " << r.log.evaluations << " evaluations)\n";
  const auto values = r.theta.to_array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << "  " << TuningVector::kNames[i] << " = " << format_double(values[i]) << '\n';
  }
  out << "energy-violating candidates: " << r.energy_violations
      << ", of which scored at or below the warm start: " << r.dominance_failures << '\n';
}

}  // namespace detail

inline nlohmann::json plant_json(const RunSpec& spec) {
  spec.validate();
  const TransferFunction tf = spec.plant.transfer_function();
  const StateSpaceModel ss = tf_to_state_space(tf);
  nlohmann::json j;
  j["source"] = spec.plant.hydro ? "hydro" : spec.plant.preset;
  j["numerator"] = tf.numerator;
  j["denominator"] = tf.denominator;
  if (spec.plant.hydro) {
    const DenominatorCoeffs c = denominator_coeffs(*spec.plant.hydro);
    j["A0"] = c.a0;
    j["A1"] = c.a1;
    j["A2"] = c.a2;
    j["A3"] = c.a3;
  }
  nlohmann::json A = nlohmann::json::array();
  for (Eigen::Index i = 0; i < ss.A.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < ss.A.cols(); ++k) row.push_back(ss.A(i, k));
    A.push_back(row);
  }
  j["state_space"] = {{"A", A},
                      {"B", std::vector<double>(ss.B.data(), ss.B.data() + ss.B.size())},
                      {"C", std::vector<double>(ss.C.data(), ss.C.data() + ss.C.size())},
                      {"D", ss.D}};
  return j;
}

inline int cmd_plant_show(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    out << plant_json(spec).dump(2) << '\n';
    return kExitOk;
  });
}

/// Writes trace_<mode>.csv and metrics_<mode>.json. Normalized metrics are
/// relative to the conventional fuzzy PID run with the configured gains.
inline int cmd_simulate(const RunSpec& spec, ControllerMode mode, const std::optional<TuningVector>& theta,
                        std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    const detail::Workbench w = detail::prepare(spec);
    if (theta) theta->validate();
    const SimTrace trace = detail::simulate_checked(w, theta.value_or(spec.controller), spec.sim, mode);
    MetricsReport report = measure(trace, spec.fitness, spec.sim.controller.u_max);
    const FitnessConfig fit = with_baselines(spec.fitness, w.plant, *w.engine, spec.controller, spec.sim);
    const double j = score(report, trace.t.back() - trace.t.front(), fit);

    const std::string name(to_string(mode));
    OutputSet files(spec.output_dir);
    files.add("trace_" + name + ".csv", detail::csv(trace));
    files.add("metrics_" + name + ".json", to_json(report).dump(2) + "\n");
    for (const auto& p : files.commit()) out << "wrote " << p.string() << '\n';
    out << "fitness " << format_double(j) << '\n';
    return kExitOk;
  });
}

/// Fixes the baselines from the conventional fuzzy PID, then runs the swarm.
inline int cmd_tune(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  return detail::run_guarded(err, [&] {
    const detail::Workbench w = detail::prepare(spec);
    const FitnessConfig fit = with_baselines(spec.fitness, w.plant, *w.engine, spec.controller, spec.sim);
    const TuningResult r = detail::tune(spec, w, fit);
    OutputSet files(spec.output_dir);
    detail::stage_tuning(files, r);
    detail::report_tuning(out, r);
    for (const auto& p : files.commit()) out << "wrote " << p.string() << '\n';
    return kExitOk;
  });
}

/// Traditional PID, conventional fuzzy PID and the tuned fuzzy PID under one
/// SimConfig. Without `theta` the tuning runs inline and its outputs are written too.
inline int cmd_compare(const RunSpec& spec, const std::optional<TuningVector>& theta, std::ostream& out,
                       std::ostream& err) {
  return detail::run_guarded(err, [&] {
    const detail::Workbench w = detail::prepare(spec);
    OutputSet files(spec.output_dir);

    const FitnessConfig fit = with_baselines(spec.fitness, w.plant, *w.engine, spec.controller, spec.sim);
    TuningVector tuned;
    if (theta) {
      theta->validate();
      tuned = *theta;
    } else {
      const TuningResult r = detail::tune(spec, w, fit);
      detail::report_tuning(out, r);
      detail::stage_tuning(files, r);
      tuned = r.theta;
    }

    struct Arm {
      std::string name;
      ControllerMode mode;
      TuningVector theta;
    };
    const Arm arms[] = {{"pid", ControllerMode::Pid, spec.controller},
                        {"fuzzy", ControllerMode::FuzzyPid, spec.controller},
                        {"optimized", ControllerMode::FuzzyPid, tuned}};

    std::ostringstream table;
    table << "arm,itae,ts,os,eu,sr\n";
    for (const Arm& arm : arms) {
      const SimTrace trace = detail::simulate_checked(w, arm.theta, spec.sim, arm.mode);
      const MetricsReport m = measure(trace, fit, spec.sim.controller.u_max);
      table << arm.name << ',' << format_double(m.itae) << ',' << format_double(m.settling_time) << ','
            << format_double(m.overshoot) << ',' << format_double(m.energy) << ','
            << format_double(m.saturation_rate) << '\n';
      files.add("trace_" + arm.name + ".csv", detail::csv(trace));
    }
    files.add("compare.csv", table.str());
    out << table.str();
    for (const auto& p : files.commit()) out << "wrote " << p.string() << '\n';
    return kExitOk;
  });
}

inline TuningVector load_theta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read theta file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("theta file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return tuning_from_json(j);
}

inline RunSpec load_run_spec(const std::filesystem::path& path, RunSpec base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_spec(text.str(), std::move(base));
}

}  // namespace auvtune
