#include <gtest/gtest.h>

#include <cmath>

#include "qlshock/characteristics.hpp"
#include "qlshock/data_builder.hpp"
#include "qlshock/linear_oracle.hpp"
#include "qlshock/optical_solver.hpp"

using namespace qlshock;
using namespace qlshock::solver;
using namespace qlshock::solver::optical;

namespace {

ModelParams params(double g2, double delta) {
  ModelParams p;
  p.g2 = g2;
  p.delta = delta;
  return p;
}

data::CauchyData make_data(const ModelParams& p, const data::SeedData& seed, const OpticalConfig& cfg,
                           std::size_t ppp) {
  return data::assemble(seed, data::build_phi0(seed, p, 1e-6), p, cfg.grid_spec(p, ppp, 1.0));
}

data::SeedData threshold_seed(std::size_t ppp) {
  return data::with_strength(data::SeedData::bump(1.0, ppp), 1.0, data::kShockThreshold);
}

struct Collapse {
  double t_star;
  OpticalRun run;
};

Collapse collapse(std::size_t ppp, double dissipation = 0.1, double delta = 0.05) {
  const auto p = params(1.0, delta);
  OpticalConfig cfg;
  cfg.dissipation = dissipation;
  const auto d = make_data(p, threshold_seed(ppp), cfg, ppp);
  auto run = evolve(initial_state(d, p), cfg, p, ppp / 32, characteristics::cadence(-2.0, -0.5, 0.002));
  const double ts = characteristics::detect_shock(run.fan, cfg.stop_mu).t_star;
  return {ts, std::move(run)};
}

}  // namespace

TEST(OpticalConfig, Validation) {
  OpticalConfig c;
  EXPECT_NO_THROW(c.validate());
  c.extent = 1.0;
  EXPECT_THROW(c.validate(), ConfigInvalid);
  c = OpticalConfig{};
  c.dissipation = -1.0;
  EXPECT_THROW(c.validate(), ConfigInvalid);
  c = OpticalConfig{};
  c.cfl = 1.5;
  EXPECT_THROW(c.validate(), ConfigInvalid);
}

TEST(Optical, InitialStateUsesExactLabels) {
  const auto p = params(1.0, 0.05);
  OpticalConfig cfg;
  const auto d = make_data(p, threshold_seed(64), cfg, 64);
  const auto s = initial_state(d, p);
  ASSERT_EQ(s.size(), d.size());
  EXPECT_DOUBLE_EQ(s.label(d.pulse_begin), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_DOUBLE_EQ(s.r[i], p.r0 + s.label(i));
    EXPECT_DOUBLE_EQ(s.mu[i], constitutive::speed(p, d.psi0[i]));
  }
}

TEST(Optical, ZeroStateStaysZero) {
  const auto p = params(1.0, 0.05);
  OpticalConfig cfg;
  cfg.t_end = -1.0;
  const auto d = make_data(p, data::SeedData::zero(64), cfg, 64);
  const auto run = evolve(initial_state(d, p), cfg, p, 1, characteristics::cadence(-2.0, -1.0, 0.1));
  EXPECT_EQ(run.termination.reason, TerminationReason::t_end_reached);
  const auto& s = run.final_state;
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s.phi[i], 0.0);
    EXPECT_EQ(s.psi0[i], 0.0);
    EXPECT_EQ(s.mu[i], 1.0);
    EXPECT_NEAR(s.r[i], s.label(i) - s.t, 1e-12);
  }
}

TEST(Optical, LinearMatchesDalembert) {
  // The data are only C^2 across the seam at ubar = delta, which caps the
  // order on the whole pulse; a quarter pulse away from it the stencil order
  // shows.
  const auto p = params(0.0, 0.05);
  OpticalConfig cfg;
  cfg.t_end = -1.0;
  std::vector<double> whole, smooth;
  for (std::size_t ppp : {64, 128, 256}) {
    const auto d = make_data(p, data::SeedData::bump(1.0, ppp), cfg, ppp);
    const DalembertOracle oracle(d);
    const auto run = evolve(initial_state(d, p), cfg, p, 1, {-1.0});
    const auto& s = run.final_state;
    double e = 0.0, es = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(s.mu[i], 1.0);
      if (s.label(i) > p.delta) continue;
      const double err = std::abs(s.phi[i] - oracle.phi(s.t, s.r[i]));
      e = std::max(e, err);
      if (s.label(i) >= 0.0 && s.label(i) <= 0.75 * p.delta) es = std::max(es, err);
    }
    whole.push_back(e);
    smooth.push_back(es);
  }
  EXPECT_LT(whole[1], 1e-7);
  EXPECT_GT(std::log2(whole[0] / whole[1]), 3.0);
  EXPECT_GT(std::log2(smooth[0] / smooth[1]), 3.5);
  EXPECT_GT(std::log2(smooth[1] / smooth[2]), 3.5);
}

TEST(Optical, HeldBoundaryNeedsDissipation) {
  // Without dissipation a mode next to the held inner edge grows to O(1e-2)
  // independently of resolution; the default strength removes it.
  const auto p = params(0.0, 0.05);
  OpticalConfig cfg;
  cfg.t_end = -1.9;
  const auto d = make_data(p, data::SeedData::bump(1.0, 64), cfg, 64);
  auto quiet_max = [&](double ko) {
    cfg.dissipation = ko;
    const auto s = evolve(initial_state(d, p), cfg, p, 1, {}).final_state;
    double v = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.label(i) < 0.0) v = std::max(v, std::abs(s.phi[i]));
    return v;
  };
  EXPECT_GT(quiet_max(0.0), 1e-3);
  EXPECT_LT(quiet_max(0.1), 1e-7);
}

TEST(Optical, ShockTimeConvergesJustAfterMinusOne) {
  const auto a = collapse(64);
  const auto b = collapse(128);
  EXPECT_EQ(b.run.termination.reason, TerminationReason::stop_mu);
  EXPECT_LT(std::abs(a.t_star - b.t_star), 2e-3);
  const double C = (b.t_star + 1.0) / 0.05;
  EXPECT_GT(C, 0.3);
  EXPECT_LT(C, 0.45);
}

TEST(Optical, DissipationDoesNotMoveShockTime) {
  const auto a = collapse(64, 0.05);
  const auto b = collapse(64, 0.2);
  EXPECT_LT(std::abs(a.t_star - b.t_star), 1e-3);
}

TEST(Optical, AgreesWithEulerianFanBeforeSteepening) {
  const auto p = params(1.0, 0.05);
  const std::vector<double> ts = characteristics::cadence(-2.0, -1.5, 0.05);

  OpticalConfig ocfg;
  ocfg.t_end = -1.5;
  const auto od = make_data(p, threshold_seed(128), ocfg, 128);
  const auto orun = evolve(initial_state(od, p), ocfg, p, 1, ts);

  SolverConfig ecfg;
  ecfg.window = WindowMode::comoving;
  ecfg.t_end = -1.5;
  const auto eseed = threshold_seed(256);
  const auto ed = data::assemble(eseed, data::build_phi0(eseed, p, 1e-6), p, grid_spec_for(ecfg, p, 256, 1.0));
  const auto erun = characteristics::run_with_fan(FieldState::from_data(ed), ecfg, p,
                                                  characteristics::uniform_labels(p.delta, 129), ts);
  ASSERT_EQ(orun.fan.n_tracks(), 129u);
  ASSERT_EQ(orun.fan.n_times(), erun.fan.n_times());
  double worst = 0.0;
  for (std::size_t k = 0; k < orun.fan.n_times(); ++k)
    worst = std::max(worst, std::abs(orun.fan.mu_m(k) - erun.fan.mu_m(k)));
  EXPECT_LT(worst, 1e-4);
}
