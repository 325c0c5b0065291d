#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "auvtune/metrics.hpp"

namespace auvtune {
namespace {

SimTrace uniform_trace(double duration, double dt, double r, double e, double u) {
  SimTrace tr;
  const auto n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    tr.t.push_back(static_cast<double>(k) * dt);
    tr.r.push_back(r);
    tr.z.push_back(r - e);
    tr.e.push_back(e);
    tr.u.push_back(u);
  }
  return tr;
}

FitnessConfig with_unit_baselines() {
  FitnessConfig cfg;
  cfg.itae_base = 1.0;
  cfg.energy_base = 1.0;
  return cfg;
}

TEST(Itae, ZeroError) { EXPECT_EQ(itae(uniform_trace(1.0, 0.01, 1.0, 0.0, 0.0)), 0.0); }

TEST(Itae, UnitErrorOnUnitInterval) {
  EXPECT_NEAR(itae(uniform_trace(1.0, 1e-3, 1.0, 1.0, 0.0)), 0.5, 1e-6);
}

TEST(ControlEnergy, ConstantCommand) {
  EXPECT_EQ(control_energy(uniform_trace(10.0, 0.01, 1.0, 0.0, 0.0)), 0.0);
  EXPECT_NEAR(control_energy(uniform_trace(10.0, 1e-3, 1.0, 0.0, 2.0)), 40.0, 1e-9);
}

TEST(SettlingTime, AlwaysInsideBand) {
  EXPECT_EQ(settling_time(uniform_trace(5.0, 0.1, 1.0, 0.01, 0.0), 0.02), 0.0);
}

TEST(SettlingTime, LastExitThenReentry) {
  SimTrace tr = uniform_trace(5.0, 0.1, 1.0, 0.0, 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t[k] > 1.55 && tr.t[k] < 2.25) tr.e[k] = 0.5;  // outside over 1.6 .. 2.2
  }
  EXPECT_NEAR(settling_time(tr, 0.02), 2.3, 1e-12);
}

TEST(SettlingTime, NeverSettled) {
  EXPECT_EQ(settling_time(uniform_trace(3.0, 0.1, 1.0, 0.5, 0.0), 0.02), uniform_trace(3.0, 0.1, 1.0, 0.5, 0.0).t.back());
}

TEST(SettlingTime, ZeroAmplitude) {
  EXPECT_THROW(settling_time(uniform_trace(1.0, 0.1, 0.0, 0.0, 0.0), 0.02), ConfigError);
  EXPECT_THROW(overshoot(uniform_trace(1.0, 0.1, 0.0, 0.0, 0.0)), ConfigError);
}

TEST(Overshoot, Examples) {
  SimTrace tr = uniform_trace(1.0, 0.1, 1.0, 0.0, 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) tr.z[k] = 1.0 - std::exp(-5.0 * tr.t[k]);
  EXPECT_EQ(overshoot(tr), 0.0);
  tr.z[4] = 1.15;
  EXPECT_NEAR(overshoot(tr), 0.15, 1e-12);
}

TEST(Overshoot, SecondOrderHalfDamping) {
  const double zeta = 0.5, wn = 2.0;
  const StateSpaceModel ss = tf_to_state_space({{wn * wn}, {1.0, 2.0 * zeta * wn, wn * wn}});
  Rk4Integrator rk(ss);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  SimTrace tr;
  const double dt = 1e-3;
  for (int k = 0; k <= 8000; ++k) {
    const double z = ss.output(x, 1.0);
    tr.t.push_back(k * dt);
    tr.r.push_back(1.0);
    tr.z.push_back(z);
    tr.e.push_back(1.0 - z);
    tr.u.push_back(1.0);
    rk.step(x, 1.0, dt);
  }
  const double analytic = std::exp(-std::numbers::pi * zeta / std::sqrt(1.0 - zeta * zeta));
  EXPECT_NEAR(analytic, 0.1630, 1e-4);
  EXPECT_NEAR(overshoot(tr), analytic, 2e-3);
}

TEST(SaturationRate, Counting) {
  SimTrace tr = uniform_trace(9.999, 1e-3, 1.0, 0.0, 0.0);
  ASSERT_EQ(tr.size(), 10000u);
  EXPECT_EQ(saturation_rate(tr, 600.0, 0.99), 0.0);
  for (std::size_t k = 0; k < 40; ++k) tr.u[100 + k] = (k % 2 ? 600.0 : -594.0);
  EXPECT_DOUBLE_EQ(saturation_rate(tr, 600.0, 0.99), 0.004);
  for (double& u : tr.u) u = 600.0;
  EXPECT_EQ(saturation_rate(tr, 600.0, 0.99), 1.0);
  EXPECT_THROW(saturation_rate(tr, 0.0, 0.99), ConfigError);
}

TEST(Score, AllZeroIsZero) {
  MetricsReport m;
  EXPECT_EQ(score(m, 10.0, with_unit_baselines()), 0.0);
}

TEST(Score, WeightedSum) {
  MetricsReport m;
  m.itae = 1.0;
  m.energy = 1.0;
  m.overshoot = 0.05;
  m.settling_time = 2.0;
  EXPECT_NEAR(score(m, 10.0, with_unit_baselines()), 1.256, 1e-12);
  EXPECT_EQ(m.e_pen, 0.0);
  EXPECT_DOUBLE_EQ(m.ts_scaled, 0.2);
}

TEST(Score, EnergyPenalty) {
  MetricsReport m;
  m.energy = 1.10;
  const double j = score(m, 10.0, with_unit_baselines());
  EXPECT_NEAR(m.e_pen, 80.0, 1e-9);
  EXPECT_NEAR(j, 0.10 * 1.10 + 80.0, 1e-9);
}

TEST(Score, PenaltyActivatesExactlyAboveTolerance) {
  const FitnessConfig cfg = with_unit_baselines();
  EXPECT_EQ(energy_penalty(1.02, cfg), 0.0);
  EXPECT_EQ(energy_penalty(std::nextafter(1.02, 0.0), cfg), 0.0);
  EXPECT_GT(energy_penalty(std::nextafter(1.02, 2.0), cfg), 0.0);
}

TEST(Score, OvershootHingeIsFlat) {
  const FitnessConfig cfg = with_unit_baselines();
  MetricsReport m;
  m.itae = 0.4;
  m.energy = 0.9;
  m.settling_time = 1.0;
  m.saturation_rate = 0.01;
  m.overshoot = 0.0;
  const double ref = score(m, 10.0, cfg);
  for (double os = 0.0; os <= 0.02; os += 0.001) {
    m.overshoot = os;
    EXPECT_EQ(score(m, 10.0, cfg), ref) << os;
  }
  m.overshoot = 0.03;
  EXPECT_GT(score(m, 10.0, cfg), ref);
}

TEST(Score, RequiresBaselines) {
  MetricsReport m;
  EXPECT_THROW(score(m, 10.0, FitnessConfig{}), UnsetBaselineError);
  FitnessConfig half;
  half.itae_base = 1.0;
  EXPECT_THROW(score(m, 10.0, half), UnsetBaselineError);
  EXPECT_THROW(fitness(uniform_trace(1.0, 0.1, 1.0, 0.0, 0.0), FitnessConfig{}, 600.0), UnsetBaselineError);
}

TEST(Fitness, DivergedTraceScoresConstant) {
  SimTrace tr = uniform_trace(1.0, 0.1, 1.0, 0.0, 0.0);
  tr.diverged_at = tr.size();
  const FitnessResult r = fitness(tr, with_unit_baselines(), 600.0);
  EXPECT_TRUE(r.diverged);
  EXPECT_EQ(r.value, 1e6);
}

TEST(Fitness, Monotonicity) {
  SimTrace tr = uniform_trace(2.0, 0.01, 1.0, 0.0, 0.0);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    tr.e[k] = std::exp(-tr.t[k]) * std::cos(5.0 * tr.t[k]);
    tr.u[k] = 700.0 * std::exp(-2.0 * tr.t[k]);
  }
  SimTrace big = tr;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    big.e[k] *= 1.0 + 0.3 * std::abs(std::sin(static_cast<double>(k)));
    big.u[k] *= 1.0 + 0.3 * std::abs(std::cos(static_cast<double>(k)));
  }
  EXPECT_GE(itae(big), itae(tr));
  EXPECT_GE(control_energy(big), control_energy(tr));
  EXPECT_GE(saturation_rate(big, 600.0, 0.99), saturation_rate(tr, 600.0, 0.99));
}

SimTrace damped_response(double dt) {
  SimTrace tr;
  const double wd = 2.0 * std::sqrt(0.75);
  const auto n = static_cast<std::size_t>(std::llround(10.0 / dt)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double env = std::exp(-t);
    const double z = 1.0 - env * (std::cos(wd * t) + std::sin(wd * t) / std::sqrt(3.0));
    tr.t.push_back(t);
    tr.r.push_back(1.0);
    tr.z.push_back(z);
    tr.e.push_back(1.0 - z);
    tr.u.push_back(300.0 * env * std::cos(wd * t) + 35.0);
  }
  return tr;
}

// The closed loop itself converges only at first order in dt, so refinement is
// checked on smooth sampled responses where only the quadrature differs.
TEST(Fitness, GridRefinementOnSmoothTrace) {
  const FitnessConfig cfg;
  const MetricsReport a = measure(damped_response(1e-3), cfg, 600.0);
  const MetricsReport b = measure(damped_response(5e-4), cfg, 600.0);
  EXPECT_LT(std::abs(a.itae - b.itae) / b.itae, 1e-3);
  EXPECT_LT(std::abs(a.energy - b.energy) / b.energy, 1e-3);
  EXPECT_NEAR(a.overshoot, b.overshoot, 1e-5);
}

TEST(MetricsJson, FieldNames) {
  MetricsReport m;
  m.itae = 0.25;
  const nlohmann::json j = to_json(m);
  EXPECT_EQ(j.size(), 9u);
  for (const char* k : {"itae", "settling_time", "overshoot", "energy", "saturation_rate", "itae_n",
                        "energy_n", "ts_scaled", "e_pen"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["itae"].get<double>(), 0.25);
}

TEST(FitnessConfig, Validation) {
  FitnessConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.weights.energy = -0.1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.divergence_fitness = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace auvtune
