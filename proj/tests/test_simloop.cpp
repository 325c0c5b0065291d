#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "auvtune/simloop.hpp"

namespace auvtune {
namespace {

const StateSpaceModel& preset_plant() {
  static const StateSpaceModel ss = tf_to_state_space(default_auv_plant());
  return ss;
}

TEST(StepReference, Edges) {
  const StepCommand cmd{1.5, 2.0};
  EXPECT_EQ(step_reference(1.999, cmd), 0.0);
  EXPECT_EQ(step_reference(2.0, cmd), 1.5);
  EXPECT_EQ(step_reference(5.0, StepCommand{1.0, 0.0}), 1.0);
}

TEST(RunClosedLoop, ZeroCommandStaysAtRest) {
  SimConfig cfg;
  cfg.reference.amplitude = 0.0;
  cfg.duration = 2.0;
  for (auto mode : {ControllerMode::Pid, ControllerMode::FuzzyPid}) {
    cfg.mode = mode;
    const SimTrace tr = run_closed_loop(preset_plant(), TuningVector{}, cfg);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      ASSERT_EQ(tr.z[k], 0.0);
      ASSERT_EQ(tr.u[k], 0.0);
    }
  }
}

TEST(RunClosedLoop, TraceShape) {
  SimConfig cfg;
  cfg.duration = 1.0;
  cfg.dt = 0.003;
  const SimTrace tr = run_closed_loop(preset_plant(), TuningVector{}, cfg);
  ASSERT_EQ(tr.size(), static_cast<std::size_t>(std::floor(1.0 / 0.003)) + 1);
  ASSERT_EQ(tr.r.size(), tr.size());
  ASSERT_EQ(tr.z.size(), tr.size());
  ASSERT_EQ(tr.e.size(), tr.size());
  ASSERT_EQ(tr.u.size(), tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_EQ(tr.e[k], tr.r[k] - tr.z[k]);
    if (k > 0) EXPECT_NEAR(tr.t[k] - tr.t[k - 1], cfg.dt, 1e-12);
  }
  EXPECT_FALSE(tr.diverged());
}

TEST(RunClosedLoop, BaselineTracksStep) {
  SimConfig cfg;
  const SimTrace tr = run_closed_loop(preset_plant(), TuningVector{}, cfg);
  EXPECT_LT(std::abs(tr.e.back()), 0.02);
  const std::size_t tail = tr.size() - tr.size() / 10;
  for (std::size_t k = tail; k < tr.size(); ++k) ASSERT_LT(std::abs(tr.e[k]), 1e-3) << "t=" << tr.t[k];
}

TEST(RunClosedLoop, StepSizeConvergence) {
  SimConfig cfg;
  const double z1 = run_closed_loop(preset_plant(), TuningVector{}, cfg).z.back();
  cfg.dt *= 0.5;
  const double z2 = run_closed_loop(preset_plant(), TuningVector{}, cfg).z.back();
  EXPECT_LT(std::abs(z1 - z2), 1e-4);
}

TEST(RunClosedLoop, Deterministic) {
  SimConfig cfg;
  cfg.duration = 3.0;
  TuningVector th;
  th.ku = 7.0;
  EXPECT_EQ(run_closed_loop(preset_plant(), th, cfg), run_closed_loop(preset_plant(), th, cfg));
}

TEST(RunClosedLoop, SaturationRespected) {
  SimConfig cfg;
  cfg.controller.u_max = 150.0;
  TuningVector th;
  th.ku = 30.0;
  const SimTrace tr = run_closed_loop(preset_plant(), th, cfg);
  double peak = 0.0;
  for (double u : tr.u) peak = std::max(peak, std::abs(u));
  EXPECT_LE(peak, 150.0);
  EXPECT_EQ(peak, 150.0);
}

TEST(RunClosedLoop, DivergenceGuardTruncatesAndFlags) {
  SimConfig cfg;
  cfg.divergence_bound = 0.5;
  const SimTrace tr = run_closed_loop(preset_plant(), TuningVector{}, cfg);
  ASSERT_TRUE(tr.diverged());
  EXPECT_EQ(tr.size(), *tr.diverged_at);
  for (double z : tr.z) EXPECT_LE(std::abs(z), 0.5);
  EXPECT_THROW(throw_if_diverged(tr), DivergenceError);
  try {
    throw_if_diverged(tr);
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), *tr.diverged_at);
    EXPECT_NE(std::string(e.what()).find(std::to_string(*tr.diverged_at)), std::string::npos);
  }
}

TEST(RunClosedLoop, InitialStateHonoured) {
  SimConfig cfg;
  cfg.reference.amplitude = 0.0;
  cfg.duration = 0.01;
  cfg.initial_state = {1.0, 0.0, 0.0, 0.0};
  const SimTrace tr = run_closed_loop(preset_plant(), TuningVector{}, cfg);
  EXPECT_DOUBLE_EQ(tr.z.front(), 35.2459);
  cfg.initial_state = {1.0};
  EXPECT_THROW(run_closed_loop(preset_plant(), TuningVector{}, cfg), DimensionMismatchError);
}

TEST(RunClosedLoop, ValidatesConfig) {
  SimConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(run_closed_loop(preset_plant(), TuningVector{}, cfg), ConfigError);
  cfg = {};
  cfg.duration = 1e-4;
  EXPECT_THROW(run_closed_loop(preset_plant(), TuningVector{}, cfg), ConfigError);
}

TEST(TraceCsv, HeaderAndExactValues) {
  SimConfig cfg;
  cfg.duration = 0.01;
  const SimTrace tr = run_closed_loop(preset_plant(), TuningVector{}, cfg);
  std::ostringstream os;
  write_trace_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,r,z,e,u");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v[2], tr.z[rows]);
    EXPECT_EQ(v[4], tr.u[rows]);
    ++rows;
  }
  EXPECT_EQ(rows, tr.size());
  EXPECT_EQ(os.str().find('\r'), std::string::npos);
}

}  // namespace
}  // namespace auvtune
