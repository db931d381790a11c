#include <gtest/gtest.h>

#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>

#include "qlshock/data_builder.hpp"
#include "qlshock/diagnostics.hpp"
#include "qlshock/optical_solver.hpp"

using namespace qlshock;
using namespace qlshock::data;

namespace {

ModelParams params(double g2, double delta) {
  ModelParams p;
  p.g2 = g2;
  p.delta = delta;
  return p;
}

double bump(double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : std::exp(4.0 - 1.0 / (s * (1.0 - s))); }
double dbump(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double q = s * (1.0 - s);
  return bump(s) * (1.0 - 2.0 * s) / (q * q);
}

/// phi0(1) from an adaptive Dormand-Prince integration of the data ODE,
/// written out independently of the library.
double phi0_at_one_oracle(double g2, double delta, double amplitude) {
  using State = std::array<double, 2>;
  auto rhs = [&](const State& y, State& dy, double s) {
    const double f = amplitude * bump(s), df = amplitude * dbump(s);
    const double c = 1.0 / std::sqrt(1.0 + 3.0 * g2 * delta * f * f);
    const double dr_c = -3.0 * c * c * c * g2 * f * df;
    const double r = 2.0 + delta * s;
    const double a = delta / r + delta / (2.0 * c) * dr_c - 1.5 * delta * g2 * c * c * f * df;
    dy[0] = y[1];
    dy[1] = -a * y[1] + df / c;
  };
  State y{0.0, 0.0};
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled(1e-12, 1e-12, ode::runge_kutta_dopri5<State>()), rhs, y, 0.0,
                          1.0, 1e-4);
  return y[0];
}

CauchyData assemble_for(const SeedData& seed, const ModelParams& p, double r_in = 0.25, double r_out = 4.0,
                        double taper = 1.0) {
  GridSpec spec{seed.n_intervals, r_in, r_out, taper};
  return assemble(seed, build_phi0(seed, p), p, spec);
}

}  // namespace

TEST(SeedData, RejectsNonSmoothMatchingAtOrigin) {
  SeedData s = SeedData::zero(64);
  s.phi1 = [](double x) { return x; };
  EXPECT_THROW(s.validate(), ConfigInvalid);
  s.phi1 = [](double) { return 1.0; };
  EXPECT_THROW(s.validate(), ConfigInvalid);
  EXPECT_NO_THROW(SeedData::bump(1.0, 64).validate());
  EXPECT_NO_THROW(SeedData::sine2(0.5, 64).validate());
}

TEST(SeedData, BoundaryBehaviourAtOne) {
  EXPECT_TRUE(SeedData::bump(1.0, 64).vanishes_at_one());
  SeedData s = SeedData::zero(64);
  s.phi1 = [](double x) { return x * x; };
  s.dphi1 = [](double x) { return 2.0 * x; };
  EXPECT_FALSE(s.vanishes_at_one());
  const auto d = assemble_for(s, params(1.0, 0.05));
  EXPECT_FALSE(d.seed_vanishes_at_one);
  // The taper brings the non-vanishing end to zero within one pulse width.
  EXPECT_EQ(d.psi0.back(), 0.0);
}

TEST(BuildPhi0, ZeroSeedGivesZero) {
  const auto prof = build_phi0(SeedData::zero(64), params(1.0, 0.05));
  for (double v : prof.phi0) EXPECT_EQ(v, 0.0);
  for (double v : prof.dphi0) EXPECT_EQ(v, 0.0);
}

TEST(BuildPhi0, MatchesAdaptiveOracle) {
  const auto p = params(1.0, 0.05);
  const auto prof = build_phi0(SeedData::bump(1.0, 128), p);
  EXPECT_EQ(prof.phi0.front(), 0.0);
  EXPECT_EQ(prof.dphi0.front(), 0.0);
  EXPECT_NEAR(prof.phi0.back(), phi0_at_one_oracle(1.0, 0.05, 1.0), 1e-9);
}

TEST(BuildPhi0, SuperpositionInPhi2) {
  const auto p = params(1.0, 0.05);
  SeedData a = SeedData::bump(0.8, 64);
  SeedData b = a, z = a;
  a.phi2 = [](double s) { return s * s * (1.0 - s); };
  b.phi2 = [](double s) { return 2.0 * s * s * (1.0 - s); };
  z.phi2 = [](double) { return 0.0; };
  const auto pa = build_phi0(a, p), pb = build_phi0(b, p), pz = build_phi0(z, p);
  for (std::size_t k = 0; k < pa.phi0.size(); ++k)
    EXPECT_NEAR(pb.phi0[k] - pa.phi0[k], pa.phi0[k] - pz.phi0[k], 1e-15);
}

TEST(BuildPhi0, SmallDeltaLimitIsIntegralOfPhi1) {
  // As delta -> 0, c -> 1 and phi0'' = phi1', so phi0(s) = integral of phi1.
  const auto seed = SeedData::bump(1.0, 256);
  std::vector<double> limit(257, 0.0);
  for (std::size_t k = 1; k < limit.size(); ++k) {
    const double a = seed.node(k - 1), b = seed.node(k), m = 0.5 * (a + b);
    limit[k] = limit[k - 1] + (b - a) / 6.0 * (bump(a) + 4.0 * bump(m) + bump(b));
  }
  std::vector<double> err;
  for (double d : {0.04, 0.02, 0.01}) {
    const auto prof = build_phi0(seed, params(1.0, d));
    double e = 0.0;
    for (std::size_t k = 0; k < limit.size(); ++k) e = std::max(e, std::abs(prof.phi0[k] - limit[k]));
    err.push_back(e);
  }
  EXPECT_NEAR(err[0] / err[1], 2.0, 0.2);
  EXPECT_NEAR(err[1] / err[2], 2.0, 0.2);
}

TEST(Assemble, ZeroSeedIsZero) {
  const auto d = assemble_for(SeedData::zero(64), params(1.0, 0.05));
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.phi[i], 0.0);
    EXPECT_EQ(d.psi0[i], 0.0);
  }
}

TEST(Assemble, InteriorExactlyZeroAndAmplitude) {
  const auto p = params(1.0, 0.05);
  const auto d = assemble_for(SeedData::bump(1.0, 64), p);
  double peak = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.r(i) <= 2.0) {
      EXPECT_EQ(d.phi[i], 0.0);
      EXPECT_EQ(d.psi0[i], 0.0);
    }
    peak = std::max(peak, std::abs(d.psi0[i]));
  }
  EXPECT_NEAR(peak, std::sqrt(0.05), 1e-12);  // 0.2236...
  EXPECT_EQ(d.points_per_pulse, 64u);
  EXPECT_NEAR(d.r(d.pulse_begin), 2.0, 1e-14);
}

TEST(Assemble, TaperIsSmoothAndCompact) {
  SeedData s = SeedData::zero(64);
  s.phi1 = [](double x) { return x * x; };
  s.dphi1 = [](double x) { return 2.0 * x; };
  const auto p = params(1.0, 0.05);
  const auto d = assemble_for(s, p);
  for (std::size_t i = 1; i + 1 < d.size(); ++i) {
    // second differences stay bounded by the profile's curvature scale
    const double dd = (d.dr_phi[i + 1] - 2.0 * d.dr_phi[i] + d.dr_phi[i - 1]) / (d.dr * d.dr);
    EXPECT_LT(std::abs(dd), 1e6);
    if (d.r(i) >= d.taper_window[1]) {
      EXPECT_EQ(d.phi[i], 0.0);
      EXPECT_EQ(d.psi0[i], 0.0);
    }
  }
}

TEST(Assemble, GridTooCoarse) {
  const auto seed = SeedData::bump(1.0, 16);
  const auto p = params(1.0, 0.05);
  EXPECT_THROW(assemble(seed, build_phi0(seed, p, 1e-3), p, GridSpec{16, 0.25, 4.0, 1.0}), GridTooCoarse);
}

TEST(Radiation, ZeroDataGivesZero) {
  const auto d = assemble_for(SeedData::zero(64), params(1.0, 0.05));
  const auto r = check_no_outgoing_radiation(d, params(1.0, 0.05));
  EXPECT_EQ(r.sup_lbar_phi, 0.0);
  EXPECT_EQ(r.sup_lbar2_phi, 0.0);
}

TEST(Radiation, LinearRatiosStableAcrossDelta) {
  std::vector<double> a, b;
  for (double delta : {0.1, 0.05, 0.025}) {
    const auto p = params(0.0, delta);
    const auto d = assemble_for(SeedData::bump(1.0, 128), p);
    const auto r = check_no_outgoing_radiation(d, p);
    a.push_back(r.ratio_lbar);
    b.push_back(r.ratio_lbar2);
  }
  EXPECT_LT(diagnostics::drift_ratio(a), 2.0);
  for (double v : b) EXPECT_LT(v, 1e-9);  // Lbar^2 phi vanishes identically when c = 1
}

TEST(Radiation, BumpThresholdGolden) {
  // Reference values for the threshold-scaled bump at delta = 0.05, 128 points per pulse.
  const auto p = params(1.0, 0.05);
  const auto seed = with_strength(SeedData::bump(1.0, 128), 1.0, kShockThreshold);
  const auto d = assemble(seed, build_phi0(seed, p), p,
                          solver::optical::OpticalConfig{}.grid_spec(p, 128, 1.0));
  const auto r = check_no_outgoing_radiation(d, p);
  EXPECT_NEAR(r.ratio_lbar, 0.0468225, 1e-6);
  EXPECT_NEAR(r.ratio_lbar2, 0.0313702, 1e-6);
}

TEST(ShockCondition, Threshold) {
  EXPECT_EQ(kShockThreshold, -1.0 / 6.0);
  SeedData s = SeedData::zero(64);
  // phi1 = s^2 (1 - s) scaled so that min phi1 phi1' = -0.2
  const auto unit = [](double x) { return x * x * (1.0 - x); };
  const auto dunit = [](double x) { return 2.0 * x - 3.0 * x * x; };
  s.phi1 = unit;
  s.dphi1 = dunit;
  const double m = product_minimum(s, 1.0, 4000).value;
  const double k = std::sqrt(-0.2 / m);
  const auto scaled = s.scaled(k);
  const auto met = check_shock_condition(scaled, params(1.0, 0.05));
  EXPECT_TRUE(met.met);
  EXPECT_NEAR(met.min_value, -0.2, 1e-9);

  SeedData up = SeedData::zero(64);
  up.phi1 = [](double x) { return x * x; };
  up.dphi1 = [](double x) { return 2.0 * x; };
  const auto no = check_shock_condition(up, params(1.0, 0.05));
  EXPECT_FALSE(no.met);
  EXPECT_GE(no.min_value, 0.0);
}

TEST(WithStrength, LandsOnTarget) {
  const auto seed = with_strength(SeedData::bump(1.0, 128), 1.0, kShockThreshold);
  const auto c = check_shock_condition(seed, params(1.0, 0.05));
  EXPECT_TRUE(c.met);
  EXPECT_NEAR(c.min_value, kShockThreshold, 1e-10);
  EXPECT_THROW(with_strength(SeedData::zero(64), 1.0, -0.2), ConfigInvalid);
}

TEST(Taper, WidthDoesNotReachThePulse) {
  // Two taper widths give the same fan on [0, delta] up to the reach of the
  // centered stencils.
  const auto p = params(1.0, 0.05);
  const auto seed = with_strength(SeedData::bump(1.0, 128), 1.0, kShockThreshold);
  solver::optical::OpticalConfig cfg;
  cfg.t_end = -1.5;
  std::vector<double> mm[2];
  int idx = 0;
  for (double w : {1.0, 1.5}) {
    const auto d = assemble(seed, build_phi0(seed, p), p, cfg.grid_spec(p, 128, w));
    auto run = solver::optical::evolve(solver::optical::initial_state(d, p), cfg, p, 1, {-1.9, -1.7, -1.5});
    for (std::size_t k = 0; k < run.fan.n_times(); ++k) mm[idx].push_back(run.fan.mu_m(k));
    ++idx;
  }
  ASSERT_EQ(mm[0].size(), mm[1].size());
  for (std::size_t k = 0; k < mm[0].size(); ++k) EXPECT_NEAR(mm[0][k], mm[1][k], 1e-8);
}
