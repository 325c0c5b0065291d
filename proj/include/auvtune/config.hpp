#pragma once

// Run configuration: a flat, sectioned key = value file.
//
//   # comment
//   [plant]
//   preset = "auv-eq4"          # or omit and give a [plant.hydro] block
//   [plant.hydro]
//   m = 2.0
//   ...
//   [sim]
//   dt = 0.001
//   initial_state = [0, 0, 0, 0]
//
// Values are numbers, "quoted strings", true/false, or flat [number, ...] arrays.
// Keys may also be written fully qualified ("plant.preset = ...") outside any
// section. Unknown keys are rejected. Precedence: built-in defaults, then the
// file, then command-line flags.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "auvtune/controller.hpp"
#include "auvtune/errors.hpp"
#include "auvtune/metrics.hpp"
#include "auvtune/plant.hpp"
#include "auvtune/pso.hpp"
#include "auvtune/simloop.hpp"

namespace auvtune {

struct ConfigValue {
  // Numbers keep their source text so integers (e.g. 64-bit seeds) parse exactly.
  struct Number {
    std::string text;
  };
  std::variant<Number, std::string, bool, std::vector<Number>> data;
  int line = 0;
};

using ConfigMap = std::map<std::string, ConfigValue, std::less<>>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] inline void config_fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

inline bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

inline std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline bool parse_double(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

inline ConfigValue::Number parse_number(std::string_view text, int line) {
  double tmp = 0.0;
  if (!parse_double(text, tmp)) config_fail(line, "invalid number '" + std::string(text) + "'");
  return {std::string(text)};
}

inline ConfigValue parse_value(std::string_view v, int line) {
  ConfigValue out;
  out.line = line;
  if (v.empty()) config_fail(line, "missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') config_fail(line, "unterminated string");
    std::string s;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) ++i;
      s.push_back(v[i]);
    }
    out.data = std::move(s);
  } else if (v == "true" || v == "false") {
    out.data = (v == "true");
  } else if (v.front() == '[') {
    if (v.back() != ']') config_fail(line, "unterminated array");
    std::vector<ConfigValue::Number> items;
    std::string_view body = trim(v.substr(1, v.size() - 2));
    while (!body.empty()) {
      const auto comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      if (item.empty()) config_fail(line, "empty array element");
      items.push_back(parse_number(item, line));
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
      if (body.empty()) config_fail(line, "trailing comma in array");
    }
    out.data = std::move(items);
  } else {
    out.data = parse_number(v, line);
  }
  return out;
}

}  // namespace detail

inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap map;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') detail::config_fail(line_no, "malformed section header");
      const std::string_view name = detail::trim(line.substr(1, line.size() - 2));
      if (name.empty() || !std::all_of(name.begin(), name.end(), detail::is_key_char)) {
        detail::config_fail(line_no, "invalid section name");
      }
      section = std::string(name);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::config_fail(line_no, "expected key = value");
    const std::string_view key = detail::trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), detail::is_key_char)) {
      detail::config_fail(line_no, "invalid key");
    }
    std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (map.contains(full)) detail::config_fail(line_no, "duplicate key '" + full + "'");
    map.emplace(std::move(full), detail::parse_value(detail::trim(line.substr(eq + 1)), line_no));
  }
  return map;
}

struct PlantSelection {
  std::string preset = "auv-eq4";
  std::optional<HydroParams> hydro;  ///< overrides the preset when present

  [[nodiscard]] TransferFunction transfer_function() const {
    if (hydro) return build_depth_tf(*hydro);
    if (preset == "auv-eq4") return default_auv_plant();
    throw ConfigError("unknown plant preset '" + preset + "'");
  }
};

/// Everything a CLI run needs, validated as a whole before any work starts.
struct RunSpec {
  PlantSelection plant;
  SimConfig sim;
  TuningVector controller;  ///< conventional fuzzy PID / traditional PID gains
  FitnessConfig fitness;
  PsoConfig pso = default_pso_config();
  std::string output_dir = "out";

  void validate() const {
    (void)plant.transfer_function();
    sim.validate();
    controller.validate();
    fitness.validate();
    pso.validate();
    if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
  }
};

namespace detail {

inline constexpr std::array<std::pair<std::string_view, double HydroParams::*>, 14> kHydroKeys = {{
    {"m", &HydroParams::m},
    {"Iy", &HydroParams::Iy},
    {"V", &HydroParams::V},
    {"g", &HydroParams::g},
    {"h", &HydroParams::h},
    {"Zw", &HydroParams::Zw},
    {"Zw_dot", &HydroParams::Zw_dot},
    {"Zq", &HydroParams::Zq},
    {"Zq_dot", &HydroParams::Zq_dot},
    {"Mw", &HydroParams::Mw},
    {"Mw_dot", &HydroParams::Mw_dot},
    {"Mq", &HydroParams::Mq},
    {"Mq_dot", &HydroParams::Mq_dot},
    {"Zde", &HydroParams::Zde},
}};

class ConfigReader {
 public:
  explicit ConfigReader(const ConfigMap& map) : map_(map) {}

  const ConfigValue* find(std::string_view key) {
    const auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    used_.emplace_back(key);
    return &it->second;
  }

  void number(std::string_view key, double& out) {
    if (const ConfigValue* v = find(key)) out = as_double(key, *v);
  }

  void integer(std::string_view key, std::size_t& out) {
    if (const ConfigValue* v = find(key)) out = static_cast<std::size_t>(as_u64(key, *v));
  }

  void u64(std::string_view key, std::uint64_t& out) {
    if (const ConfigValue* v = find(key)) out = as_u64(key, *v);
  }

  void string(std::string_view key, std::string& out) {
    if (const ConfigValue* v = find(key)) {
      const auto* s = std::get_if<std::string>(&v->data);
      if (!s) config_fail(v->line, std::string(key) + " must be a quoted string");
      out = *s;
    }
  }

  void array(std::string_view key, std::vector<double>& out) {
    if (const ConfigValue* v = find(key)) {
      const auto* items = std::get_if<std::vector<ConfigValue::Number>>(&v->data);
      if (!items) config_fail(v->line, std::string(key) + " must be an array of numbers");
      out.clear();
      for (const auto& n : *items) {
        double d = 0.0;
        parse_double(n.text, d);
        out.push_back(d);
      }
    }
  }

  template <std::size_t N>
  void array(std::string_view key, std::array<double, N>& out) {
    std::vector<double> tmp;
    const ConfigValue* v = map_.contains(key) ? &map_.find(key)->second : nullptr;
    array(key, tmp);
    if (!v) return;
    if (tmp.size() != N) {
      config_fail(v->line, std::string(key) + " needs exactly " + std::to_string(N) + " entries");
    }
    std::copy(tmp.begin(), tmp.end(), out.begin());
  }

  void reject_unknown() const {
    for (const auto& [key, value] : map_) {
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) {
        config_fail(value.line, "unknown key '" + key + "'");
      }
    }
  }

 private:
  static double as_double(std::string_view key, const ConfigValue& v) {
    const auto* n = std::get_if<ConfigValue::Number>(&v.data);
    if (!n) config_fail(v.line, std::string(key) + " must be a number");
    double d = 0.0;
    parse_double(n->text, d);
    return d;
  }

  static std::uint64_t as_u64(std::string_view key, const ConfigValue& v) {
    const auto* n = std::get_if<ConfigValue::Number>(&v.data);
    std::uint64_t out = 0;
    if (n) {
      const auto res = std::from_chars(n->text.data(), n->text.data() + n->text.size(), out);
      if (res.ec == std::errc{} && res.ptr == n->text.data() + n->text.size()) return out;
    }
    config_fail(v.line, std::string(key) + " must be a non-negative integer");
  }

  const ConfigMap& map_;
  std::vector<std::string> used_;
};

}  // namespace detail

/// Applies every key in `map` on top of `base`.
inline RunSpec apply_config(const ConfigMap& map, RunSpec spec = {}) {
  detail::ConfigReader in(map);

  in.string("plant.preset", spec.plant.preset);
  std::size_t hydro_keys = 0;
  HydroParams hydro = spec.plant.hydro.value_or(HydroParams{});
  for (const auto& [name, member] : detail::kHydroKeys) {
    const std::string key = "plant.hydro." + std::string(name);
    if (map.contains(key)) {
      in.number(key, hydro.*member);
      ++hydro_keys;
    }
  }
  if (hydro_keys > 0) {
    if (hydro_keys != detail::kHydroKeys.size() && !spec.plant.hydro) {
      throw ConfigError("[plant.hydro] must define all " + std::to_string(detail::kHydroKeys.size()) +
                        " parameters (m, Iy, V, g, h, Zw, Zw_dot, Zq, Zq_dot, Mw, Mw_dot, Mq, Mq_dot, Zde)");
    }
    if (map.contains("plant.preset")) throw ConfigError("give either plant.preset or [plant.hydro], not both");
    spec.plant.hydro = hydro;
  } else if (map.contains("plant.preset")) {
    spec.plant.hydro.reset();
  }

  SimConfig& sim = spec.sim;
  in.number("sim.dt", sim.dt);
  in.number("sim.duration", sim.duration);
  in.number("sim.amplitude", sim.reference.amplitude);
  in.number("sim.onset", sim.reference.onset);
  in.number("sim.divergence_bound", sim.divergence_bound);
  in.array("sim.initial_state", sim.initial_state);

  TuningVector& c = spec.controller;
  in.number("controller.Kp0", c.kp0);
  in.number("controller.Ki0", c.ki0);
  in.number("controller.Kd0", c.kd0);
  in.number("controller.Ke", c.ke);
  in.number("controller.Kec", c.kec);
  in.number("controller.Ku", c.ku);
  in.number("controller.u_max", sim.controller.u_max);
  in.number("controller.derivative_tau", sim.controller.derivative_tau);

  FitnessConfig& f = spec.fitness;
  in.number("fitness.w_itae", f.weights.itae);
  in.number("fitness.w_eu", f.weights.energy);
  in.number("fitness.w_os", f.weights.overshoot);
  in.number("fitness.w_ts", f.weights.settling);
  in.number("fitness.w_sr", f.weights.saturation);
  in.number("fitness.overshoot_tolerance", f.overshoot_tolerance);
  in.number("fitness.energy_tolerance", f.energy_tolerance);
  in.number("fitness.penalty_scale", f.penalty_scale);
  in.number("fitness.settling_band", f.settling_band);
  in.number("fitness.saturation_threshold", f.saturation_threshold);
  in.number("fitness.divergence_fitness", f.divergence_fitness);

  PsoConfig& p = spec.pso;
  in.integer("pso.swarm_size", p.swarm_size);
  in.integer("pso.max_iterations", p.max_iterations);
  in.number("pso.inertia", p.inertia);
  in.number("pso.c1", p.c1);
  in.number("pso.c2", p.c2);
  in.number("pso.velocity_clamp", p.velocity_clamp);
  in.u64("pso.seed", p.seed);
  in.integer("pso.threads", p.threads);
  in.array("pso.lower", p.lower);
  in.array("pso.upper", p.upper);

  in.string("output.dir", spec.output_dir);

  in.reject_unknown();
  return spec;
}

inline RunSpec parse_run_spec(std::string_view text, RunSpec base = {}) {
  return apply_config(parse_config_text(text), std::move(base));
}

/// Serializes every key, so the result re-parses to an equal RunSpec.
inline std::string dump_run_spec(const RunSpec& spec) {
  std::ostringstream os;
  const auto num = [](double v) { return format_double(v); };
  const auto arr = [&](auto const& values) {
    std::string s = "[";
    bool first = true;
    for (double v : values) {
      if (!first) s += ", ";
      s += num(v);
      first = false;
    }
    return s + "]";
  };
  const auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"' || ch == '\\') out.push_back('\\');
      out.push_back(ch);
    }
    return out + "\"";
  };

  if (spec.plant.hydro) {
    os << "[plant.hydro]\n";
    for (const auto& [name, member] : detail::kHydroKeys) {
      os << name << " = " << num((*spec.plant.hydro).*member) << '\n';
    }
  } else {
    os << "[plant]\npreset = " << quote(spec.plant.preset) << '\n';
  }

  const SimConfig& s = spec.sim;
  os << "\n[sim]\n"
     << "dt = " << num(s.dt) << '\n'
     << "duration = " << num(s.duration) << '\n'
     << "amplitude = " << num(s.reference.amplitude) << '\n'
     << "onset = " << num(s.reference.onset) << '\n'
     << "divergence_bound = " << num(s.divergence_bound) << '\n';
  if (!s.initial_state.empty()) os << "initial_state = " << arr(s.initial_state) << '\n';

  const TuningVector& c = spec.controller;
  os << "\n[controller]\n"
     << "Kp0 = " << num(c.kp0) << '\n'
     << "Ki0 = " << num(c.ki0) << '\n'
     << "Kd0 = " << num(c.kd0) << '\n'
     << "Ke = " << num(c.ke) << '\n'
     << "Kec = " << num(c.kec) << '\n'
     << "Ku = " << num(c.ku) << '\n'
     << "u_max = " << num(s.controller.u_max) << '\n'
     << "derivative_tau = " << num(s.controller.derivative_tau) << '\n';

  const FitnessConfig& f = spec.fitness;
  os << "\n[fitness]\n"
     << "w_itae = " << num(f.weights.itae) << '\n'
     << "w_eu = " << num(f.weights.energy) << '\n'
     << "w_os = " << num(f.weights.overshoot) << '\n'
     << "w_ts = " << num(f.weights.settling) << '\n'
     << "w_sr = " << num(f.weights.saturation) << '\n'
     << "overshoot_tolerance = " << num(f.overshoot_tolerance) << '\n'
     << "energy_tolerance = " << num(f.energy_tolerance) << '\n'
     << "penalty_scale = " << num(f.penalty_scale) << '\n'
     << "settling_band = " << num(f.settling_band) << '\n'
     << "saturation_threshold = " << num(f.saturation_threshold) << '\n'
     << "divergence_fitness = " << num(f.divergence_fitness) << '\n';

  const PsoConfig& p = spec.pso;
  os << "\n[pso]\n"
     << "swarm_size = " << p.swarm_size << '\n'
     << "max_iterations = " << p.max_iterations << '\n'
     << "inertia = " << num(p.inertia) << '\n'
     << "c1 = " << num(p.c1) << '\n'
     << "c2 = " << num(p.c2) << '\n'
     << "velocity_clamp = " << num(p.velocity_clamp) << '\n'
     << "seed = " << p.seed << '\n'
     << "threads = " << p.threads << '\n'
     << "lower = " << arr(p.lower) << '\n'
     << "upper = " << arr(p.upper) << '\n';

  os << "\n[output]\ndir = " << quote(spec.output_dir) << '\n';
  return os.str();
}

inline bool equivalent(const RunSpec& a, const RunSpec& b) {
  const auto same_fit = [](const FitnessConfig& x, const FitnessConfig& y) {
    return x.weights.itae == y.weights.itae && x.weights.energy == y.weights.energy &&
           x.weights.overshoot == y.weights.overshoot && x.weights.settling == y.weights.settling &&
           x.weights.saturation == y.weights.saturation &&
           x.overshoot_tolerance == y.overshoot_tolerance && x.energy_tolerance == y.energy_tolerance &&
           x.penalty_scale == y.penalty_scale && x.settling_band == y.settling_band &&
           x.saturation_threshold == y.saturation_threshold &&
           x.divergence_fitness == y.divergence_fitness && x.itae_base == y.itae_base &&
           x.energy_base == y.energy_base;
  };
  const auto same_sim = [](const SimConfig& x, const SimConfig& y) {
    return x.dt == y.dt && x.duration == y.duration && x.reference.amplitude == y.reference.amplitude &&
           x.reference.onset == y.reference.onset && x.mode == y.mode &&
           x.controller.u_max == y.controller.u_max &&
           x.controller.derivative_tau == y.controller.derivative_tau &&
           x.initial_state == y.initial_state && x.divergence_bound == y.divergence_bound;
  };
  const auto same_pso = [](const PsoConfig& x, const PsoConfig& y) {
    return x.swarm_size == y.swarm_size && x.max_iterations == y.max_iterations &&
           x.inertia == y.inertia && x.c1 == y.c1 && x.c2 == y.c2 && x.lower == y.lower &&
           x.upper == y.upper && x.velocity_clamp == y.velocity_clamp && x.seed == y.seed &&
           x.threads == y.threads;
  };
  const bool same_plant = (a.plant.hydro == b.plant.hydro) &&
                          (a.plant.hydro.has_value() || a.plant.preset == b.plant.preset);
  return same_plant && same_sim(a.sim, b.sim) && a.controller == b.controller &&
         same_fit(a.fitness, b.fitness) && same_pso(a.pso, b.pso) && a.output_dir == b.output_dir;
}

}  // namespace auvtune
