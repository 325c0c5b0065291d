#pragma once

// Two-input, three-output Mamdani inference for PID gain corrections.
//
// Inputs (e, ec) and outputs (dKp, dKi, dKd) share seven triangular labels on
// [-3, 3]. AND and implication are min, aggregation is max, and each output is
// defuzzified by the discrete centroid over a uniform grid.

#include <algorithm>
#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auvtune/errors.hpp"

namespace auvtune {

enum class Label : int { NB = 0, NM, NS, ZO, PS, PM, PB };

inline constexpr std::size_t kLabelCount = 7;
inline constexpr std::array<Label, kLabelCount> kLabels = {Label::NB, Label::NM, Label::NS, Label::ZO,
                                                           Label::PS, Label::PM, Label::PB};

constexpr std::size_t index(Label l) noexcept { return static_cast<std::size_t>(l); }

constexpr std::string_view to_string(Label l) noexcept {
  constexpr std::array<std::string_view, kLabelCount> names = {"NB", "NM", "NS", "ZO",
                                                               "PS", "PM", "PB"};
  return names[index(l)];
}

inline std::optional<Label> parse_label(std::string_view s) {
  for (Label l : kLabels) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

/// Membership degree per label, indexed by index(Label).
using Memberships = std::array<double, kLabelCount>;

/// Seven adjacent triangles; the two end labels are half-triangles and inputs
/// are clipped to [centers.front(), centers.back()], which makes the family a
/// partition of unity over its domain.
class MembershipFamily {
 public:
  MembershipFamily() = default;

  explicit MembershipFamily(const std::array<double, kLabelCount>& centers) : centers_(centers) {
    for (std::size_t i = 1; i < kLabelCount; ++i) {
      if (!(centers_[i] > centers_[i - 1])) {
        throw ConfigError("membership centers must be strictly increasing");
      }
    }
  }

  [[nodiscard]] const std::array<double, kLabelCount>& centers() const noexcept { return centers_; }
  [[nodiscard]] double lower() const noexcept { return centers_.front(); }
  [[nodiscard]] double upper() const noexcept { return centers_.back(); }
  [[nodiscard]] double clip(double x) const noexcept { return std::clamp(x, lower(), upper()); }

  /// At most two adjacent labels are nonzero; they sum to one.
  [[nodiscard]] Memberships fuzzify(double x) const noexcept {
    Memberships mu{};
    x = clip(x);
    std::size_t k = 0;
    while (k + 2 < kLabelCount && x > centers_[k + 1]) ++k;
    const double right = (x - centers_[k]) / (centers_[k + 1] - centers_[k]);
    mu[k] = 1.0 - right;
    mu[k + 1] = right;
    return mu;
  }

  /// Triangle of a single label evaluated at x (no clipping).
  [[nodiscard]] double membership(Label label, double x) const noexcept {
    const std::size_t i = index(label);
    const double c = centers_[i];
    if (x == c) return 1.0;
    if (x < c) {
      if (i == 0) return 1.0;
      const double left = centers_[i - 1];
      return x <= left ? 0.0 : (x - left) / (c - left);
    }
    if (i + 1 == kLabelCount) return 1.0;
    const double right = centers_[i + 1];
    return x >= right ? 0.0 : (right - x) / (right - c);
  }

 private:
  std::array<double, kLabelCount> centers_ = {-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0};
};

/// Consequents of one rule: the labels for dKp, dKi and dKd.
struct RuleConsequent {
  Label kp = Label::ZO;
  Label ki = Label::ZO;
  Label kd = Label::ZO;

  friend bool operator==(const RuleConsequent&, const RuleConsequent&) = default;
};

/// 7x7 table indexed by (e label, ec label).
class RuleBase {
 public:
  using Table = std::array<std::array<RuleConsequent, kLabelCount>, kLabelCount>;

  RuleBase() : table_(depth_rule_table()) {}
  explicit RuleBase(const Table& table) : table_(table) {}

  [[nodiscard]] const RuleConsequent& at(Label e, Label ec) const noexcept {
    return table_[index(e)][index(ec)];
  }
  [[nodiscard]] const Table& table() const noexcept { return table_; }

  friend bool operator==(const RuleBase&, const RuleBase&) = default;

  /// The depth-control rule table: rows e = NB..PB, columns ec = NB..PB.
  static Table depth_rule_table() {
    using enum Label;
    return {{
        {{{PB, NB, PS}, {PB, NB, NS}, {PM, NM, NB}, {PM, NM, NB}, {PS, NS, NB}, {ZO, ZO, NM}, {ZO, ZO, PS}}},
        {{{PB, NB, ZO}, {PB, NM, NS}, {PM, NS, NM}, {PS, NS, NM}, {PS, ZO, NS}, {ZO, PS, NS}, {NS, PS, ZO}}},
        {{{PM, NM, ZO}, {PM, NM, NS}, {PM, NS, NS}, {PS, ZO, NS}, {ZO, PS, NS}, {NS, PM, NS}, {NS, PM, ZO}}},
        {{{PM, NM, ZO}, {PM, NS, ZO}, {PS, ZO, ZO}, {ZO, PS, ZO}, {NS, PS, ZO}, {NM, PM, ZO}, {NM, PB, ZO}}},
        {{{PS, ZO, PB}, {PS, ZO, NS}, {ZO, PS, PS}, {NS, PS, PS}, {NS, PM, PS}, {NM, PB, PS}, {NM, PB, PB}}},
        {{{PS, ZO, PB}, {ZO, ZO, PM}, {NS, PS, PM}, {NM, PM, PM}, {NM, PM, PS}, {NM, PB, PS}, {NB, PB, PB}}},
        {{{ZO, NB, PS}, {ZO, NB, NS}, {NM, NM, NB}, {NM, NM, NB}, {NM, NS, NB}, {NB, ZO, NM}, {NB, ZO, PS}}},
    }};
  }

 private:
  Table table_;
};

/// Pre-scaling defuzzified corrections, each within the output domain.
struct FuzzyCorrection {
  double dKp = 0.0;
  double dKi = 0.0;
  double dKd = 0.0;

  friend bool operator==(const FuzzyCorrection&, const FuzzyCorrection&) = default;
};

struct FiredRule {
  Label e;
  Label ec;
  double strength;
};

/// Output of the inference stage: the fired rules and one aggregated fuzzy set
/// per output channel, sampled on the engine's grid.
struct InferenceResult {
  std::vector<FiredRule> fired;
  std::array<std::vector<double>, 3> aggregate;  ///< dKp, dKi, dKd
};

/// Discrete centroid sum(mu_i x_i) / sum(mu_i); zero total mass maps to 0.
inline double defuzz_centroid(std::span<const double> mu, std::span<const double> grid) {
  if (mu.size() != grid.size()) throw DimensionMismatchError("membership/grid size mismatch");
  if (grid.empty()) throw DimensionMismatchError("empty defuzzification grid");
  double mass = 0.0;
  double moment = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mass += mu[i];
    moment += mu[i] * grid[i];
  }
  return mass == 0.0 ? 0.0 : moment / mass;
}

class FuzzyEngine {
 public:
  static constexpr std::size_t kDefaultGridPoints = 601;

  explicit FuzzyEngine(RuleBase rules = {}, MembershipFamily family = {},
                       std::size_t grid_points = kDefaultGridPoints)
      : rules_(std::move(rules)), family_(family) {
    if (grid_points < 2) throw ConfigError("defuzzification grid needs at least 2 points");
    grid_.resize(grid_points);
    const double lo = family_.lower();
    const double hi = family_.upper();
    const double half = 0.5 * static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
      // Symmetric construction keeps mirrored grid points exact negatives on a symmetric domain.
      const double t = (static_cast<double>(i) - half) / half;
      grid_[i] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
    }
    for (Label l : kLabels) {
      auto& row = output_mu_[index(l)];
      row.resize(grid_points);
      for (std::size_t i = 0; i < grid_points; ++i) row[i] = family_.membership(l, grid_[i]);
    }
  }

  [[nodiscard]] const RuleBase& rules() const noexcept { return rules_; }
  [[nodiscard]] const MembershipFamily& family() const noexcept { return family_; }
  [[nodiscard]] std::span<const double> grid() const noexcept { return grid_; }

  [[nodiscard]] Memberships fuzzify(double x) const noexcept { return family_.fuzzify(x); }

  [[nodiscard]] InferenceResult infer(double e_s, double ec_s) const {
    InferenceResult out;
    std::array<Memberships, 3> strengths{};
    fire(e_s, ec_s, strengths, &out.fired);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      out.aggregate[ch].assign(grid_.size(), 0.0);
      aggregate(strengths[ch], out.aggregate[ch]);
    }
    return out;
  }

  [[nodiscard]] FuzzyCorrection evaluate(double e_s, double ec_s) const {
    std::array<Memberships, 3> strengths{};
    fire(e_s, ec_s, strengths, nullptr);
    std::array<double, 3> crisp{};
    for (std::size_t ch = 0; ch < 3; ++ch) crisp[ch] = centroid(strengths[ch]);
    return {crisp[0], crisp[1], crisp[2]};
  }

 private:
  // Per channel, the strongest firing strength that reaches each consequent label.
  void fire(double e_s, double ec_s, std::array<Memberships, 3>& strengths,
            std::vector<FiredRule>* fired) const {
    const Memberships mu_e = family_.fuzzify(e_s);
    const Memberships mu_ec = family_.fuzzify(ec_s);
    for (Label le : kLabels) {
      const double a = mu_e[index(le)];
      if (a == 0.0) continue;
      for (Label lec : kLabels) {
        const double b = mu_ec[index(lec)];
        if (b == 0.0) continue;
        const double w = std::min(a, b);
        if (fired) fired->push_back({le, lec, w});
        const RuleConsequent& c = rules_.at(le, lec);
        auto& kp = strengths[0][index(c.kp)];
        auto& ki = strengths[1][index(c.ki)];
        auto& kd = strengths[2][index(c.kd)];
        kp = std::max(kp, w);
        ki = std::max(ki, w);
        kd = std::max(kd, w);
      }
    }
  }

  void aggregate(const Memberships& strength, std::span<double> mu) const {
    for (Label l : kLabels) {
      const double s = strength[index(l)];
      if (s == 0.0) continue;
      const auto& tri = output_mu_[index(l)];
      for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = std::max(mu[i], std::min(s, tri[i]));
    }
  }

  // Same value as aggregate() followed by defuzz_centroid(), without the buffer.
  [[nodiscard]] double centroid(const Memberships& strength) const noexcept {
    std::array<std::size_t, kLabelCount> active{};
    std::size_t n_active = 0;
    for (std::size_t l = 0; l < kLabelCount; ++l) {
      if (strength[l] > 0.0) active[n_active++] = l;
    }
    double mass = 0.0;
    double moment = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      double mu = 0.0;
      for (std::size_t k = 0; k < n_active; ++k) {
        const std::size_t l = active[k];
        mu = std::max(mu, std::min(strength[l], output_mu_[l][i]));
      }
      mass += mu;
      moment += mu * grid_[i];
    }
    return mass == 0.0 ? 0.0 : moment / mass;
  }

  RuleBase rules_;
  MembershipFamily family_;
  std::vector<double> grid_;
  std::array<std::vector<double>, kLabelCount> output_mu_;
};

// Plain-text rule table:
//
//   # rows: e NB..PB, columns: ec NB..PB, cells: dKp/dKi/dKd
//   centers -3 -2 -1 0 1 2 3
//   NB PB/NB/PS PB/NB/NS ... ZO/ZO/PS
//   ...
//   PB ZO/NB/PS ... NB/ZO/PS
//
// Blank lines and lines starting with '#' are ignored.

inline void write_rule_table(std::ostream& os, const RuleBase& rules,
                             const MembershipFamily& family = {}) {
  os << "# rows: e NB..PB, columns: ec NB..PB, cells: dKp/dKi/dKd\n";
  os << "centers";
  for (double c : family.centers()) os << ' ' << c;
  os << '\n';
  for (Label e : kLabels) {
    os << to_string(e);
    for (Label ec : kLabels) {
      const RuleConsequent& c = rules.at(e, ec);
      os << ' ' << to_string(c.kp) << '/' << to_string(c.ki) << '/' << to_string(c.kd);
    }
    os << '\n';
  }
}

struct RuleTableFile {
  RuleBase rules;
  MembershipFamily family;
};

inline RuleTableFile read_rule_table(std::istream& is) {
  RuleBase::Table table{};
  std::array<bool, kLabelCount> seen{};
  std::optional<MembershipFamily> family;
  std::string line;
  auto label_or_throw = [](std::string_view tok) {
    auto l = parse_label(tok);
    if (!l) throw ConfigError("rule table: unknown label '" + std::string(tok) + "'");
    return *l;
  };
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head.empty()) continue;
    if (head == "centers") {
      std::array<double, kLabelCount> centers{};
      for (double& c : centers) {
        if (!(ls >> c)) throw ConfigError("rule table: expected 7 membership centers");
      }
      family = MembershipFamily(centers);
      continue;
    }
    const Label row = label_or_throw(head);
    if (seen[index(row)]) throw ConfigError("rule table: duplicate row " + head);
    seen[index(row)] = true;
    for (std::size_t col = 0; col < kLabelCount; ++col) {
      std::string cell;
      if (!(ls >> cell)) throw ConfigError("rule table: row " + head + " has fewer than 7 cells");
      const auto s1 = cell.find('/');
      const auto s2 = s1 == std::string::npos ? s1 : cell.find('/', s1 + 1);
      if (s2 == std::string::npos) throw ConfigError("rule table: malformed cell '" + cell + "'");
      const std::string_view v(cell);
      table[index(row)][col] = {label_or_throw(v.substr(0, s1)),
                                label_or_throw(v.substr(s1 + 1, s2 - s1 - 1)),
                                label_or_throw(v.substr(s2 + 1))};
    }
    std::string extra;
    if (ls >> extra) throw ConfigError("rule table: row " + head + " has more than 7 cells");
  }
  for (Label l : kLabels) {
    if (!seen[index(l)]) throw ConfigError("rule table: missing row " + std::string(to_string(l)));
  }
  return {RuleBase(table), family.value_or(MembershipFamily{})};
}

}  // namespace auvtune
