#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "qlshock/pipeline.hpp"

using namespace qlshock;
using namespace qlshock::pipeline;

namespace {

config::RunConfig parse(const std::string& text) { return config::parse_ini_string(text); }

const std::string kShock = R"(
[model]
g2 = 1.0
delta = 0.05
[seed]
profile = bump
strength = threshold
[grid]
points_per_pulse = 64
)";

const std::string kTrivial = R"(
[model]
g2 = 1.0
delta = 0.05
[seed]
profile = zero
[grid]
points_per_pulse = 64
[fan]
sample_dt = 0.01
)";

std::string verdict(const RunResult& r, const std::string& name) {
  const auto* k = r.find(name);
  return k ? k->verdict : "missing";
}

}  // namespace

TEST(Seed, ProfilesAndScaling) {
  ModelParams p;
  config::SeedSpec spec;
  spec.profile = "bump";
  spec.amplitude = 2.0;
  spec.phi2_scale = 0.5;
  const auto s = make_seed(spec, p, 64);
  const auto unit = data::SeedData::bump(1.0, 64);
  for (double x : {0.1, 0.5, 0.9}) {
    EXPECT_NEAR(s.phi1(x), 2.0 * unit.phi1(x), 1e-14);
    EXPECT_NEAR(s.phi2(x), 0.5 * s.phi1(x), 1e-14);
  }
  spec.amplitude.reset();
  EXPECT_THROW(make_seed(spec, p, 64), ConfigInvalid);
  spec.profile = "file";
  spec.file = "/nonexistent/seed.csv";
  EXPECT_THROW(make_seed(spec, p, 64), std::exception);
}

TEST(Pipeline, TrivialDataHasNoShockAndZeroResiduals) {
  auto c = parse(kTrivial);
  const auto r = run_pipeline(c);
  ASSERT_FALSE(r.error) << r.error->message;
  EXPECT_FALSE(r.shock);
  EXPECT_FALSE(r.no_shock_reason.empty());
  EXPECT_EQ(r.termination.reason, solver::TerminationReason::t_end_reached);
  EXPECT_EQ(r.expansions.res_Lpsi0, 0.0);
  EXPECT_EQ(r.expansions.res_Tpsi0, 0.0);
  EXPECT_EQ(r.expansions.res_psi0, 0.0);
  EXPECT_EQ(r.expansions.res_Lbmu, 0.0);
  EXPECT_EQ(r.expansions.res_mu_expansion, 0.0);
  EXPECT_EQ(r.radiation.ratio_lbar, 0.0);
  EXPECT_EQ(verdict(r, "shock_condition"), "info");
  EXPECT_EQ(verdict(r, "trapping"), "pass");
  EXPECT_EQ(verdict(r, "cross_method_mu"), "pass");
  EXPECT_EQ(verdict(r, "blowup_that_slope"), "skipped");
  EXPECT_EQ(verdict(r, "energy_E_band"), "skipped");
  EXPECT_EQ(r.find("shock_time"), nullptr);
  for (const auto& k : r.checks) EXPECT_NE(k.verdict, "fail") << k.name;
}

TEST(Pipeline, LinearRunMatchesOracle) {
  const auto c = parse(R"(
[model]
g2 = 0.0
delta = 0.05
[seed]
profile = bump
amplitude = 1.0
[grid]
points_per_pulse = 64
[solver]
t_end = -1.0
[fan]
sample_dt = 0.01
probe_times = -1.5
)");
  const auto r = run_pipeline(c);
  ASSERT_FALSE(r.error) << r.error->message;
  ASSERT_TRUE(r.linear.evaluated);
  EXPECT_GT(r.linear.points, 0u);
  EXPECT_LT(r.linear.max_abs_error, 1e-4 * r.linear.max_abs_phi);
  ASSERT_EQ(r.probes.size(), 1u);
  EXPECT_DOUBLE_EQ(r.probes[0].t, -1.5);
  for (double m : r.fan.mu_transport) EXPECT_EQ(m, 1.0);
  EXPECT_EQ(verdict(r, "energy_E_band"), "pass");
  EXPECT_EQ(verdict(r, "linear_oracle"), "info");
}

TEST(Pipeline, ShockRunPassesEveryCheckAndIsDeterministic) {
  const auto c = parse(kShock);
  const auto a = run_pipeline(c);
  ASSERT_FALSE(a.error) << a.error->message;
  ASSERT_TRUE(a.shock_run());
  EXPECT_EQ(a.termination.reason, solver::TerminationReason::stop_mu);
  EXPECT_GT(a.shock_constant(), 0.3);
  EXPECT_LT(a.shock_constant(), 0.45);
  ASSERT_TRUE(a.blowup);
  ASSERT_TRUE(a.tmu);
  for (const auto& k : a.checks) EXPECT_NE(k.verdict, "fail") << k.name << " " << k.residual;
  for (const char* name : {"shock_time", "mechanism_bound", "trapping", "cross_method_mu", "blowup_that_slope",
                           "blowup_alpha_band", "blowup_that_band", "tmu_exponent", "energy_E_band"})
    EXPECT_EQ(verdict(a, name), "pass") << name;
  EXPECT_GT(a.trapping.checked, 0u);

  const auto b = run_pipeline(c);
  EXPECT_EQ(a.fan.times, b.fan.times);
  EXPECT_EQ(a.fan.mu_transport, b.fan.mu_transport);
  EXPECT_EQ(a.fan.r, b.fan.r);
  EXPECT_EQ(a.shock->t_star, b.shock->t_star);
}

TEST(Pipeline, EulerianSchemeRuns) {
  const auto c = parse(kShock + R"(
[solver]
scheme = eulerian
window = comoving
t_end = -1.5
[fan]
n_chars = 33
sample_dt = 0.01
)");
  const auto r = run_pipeline(c);
  ASSERT_FALSE(r.error) << r.error->message;
  EXPECT_EQ(r.fan.n_tracks(), 33u);
  EXPECT_EQ(r.termination.reason, solver::TerminationReason::t_end_reached);
  EXPECT_EQ(verdict(r, "cross_method_mu"), "pass");
}

TEST(Pipeline, StageErrorIsRecorded) {
  auto c = parse(kShock);
  c.max_grad = 1.0;
  const auto r = run_pipeline(c);
  ASSERT_TRUE(r.error);
  EXPECT_EQ(r.error->stage, "evolve");
  EXPECT_EQ(r.error->kind, "BlowupDetected");
  EXPECT_EQ(verdict(r, "run_completed"), "fail");
}

TEST(Sweep, FailingDeltaIsIsolated) {
  auto c = parse(kTrivial + "[sweep]\ndeltas = 0.1, 0.05, 0.025, 6.0\njobs = 2\n");
  const auto s = run_sweep(c);
  ASSERT_EQ(s.runs.size(), 4u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_FALSE(s.runs[i].error) << i;
  ASSERT_TRUE(s.runs[3].error);
  EXPECT_EQ(s.runs[3].delta, 6.0);
  const auto* done = s.find("runs_completed");
  ASSERT_NE(done, nullptr);
  EXPECT_EQ(done->statistic, 3.0);
  EXPECT_EQ(done->verdict, "fail");
  EXPECT_FALSE(s.hard_failure());
  EXPECT_EQ(s.find("mu_expansion")->verdict, "floor");
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  auto c = parse(kTrivial + "[sweep]\ndeltas = 0.16, 0.08, 0.04\n");
  const auto one = run_sweep(c);
  c.jobs = 3;
  const auto three = run_sweep(c);
  ASSERT_EQ(one.rows.size(), three.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    EXPECT_EQ(one.rows[i].name, three.rows[i].name);
    EXPECT_EQ(one.rows[i].verdict, three.rows[i].verdict);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(one.runs[i].fan.r, three.runs[i].fan.r);
  EXPECT_TRUE(one.all_pass());
}
