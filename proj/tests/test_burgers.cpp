#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "qlshock/burgers.hpp"

using namespace qlshock;
using namespace qlshock::burgers;
using std::numbers::pi;

namespace {
BurgersProblem sine() {
  return BurgersProblem::sample([](double x) { return std::sin(x); }, 0.0, 2.0 * pi, 2001);
}
BurgersProblem ramp() {
  return BurgersProblem::sample([](double x) { return -x; }, -1.0, 1.0, 201);
}
}  // namespace

TEST(BurgersProblem, Validation) {
  EXPECT_THROW(BurgersProblem::sample([](double) { return 0.0; }, 0.0, 1.0, 2), ConfigInvalid);
  EXPECT_THROW(BurgersProblem::sample([](double) { return 0.0; }, 1.0, 1.0, 10), ConfigInvalid);
  EXPECT_THROW(BurgersProblem::sample([](double) { return NAN; }, 0.0, 1.0, 10), ConfigInvalid);
}

TEST(TraceCharacteristics, ConstantStateNeverCrosses) {
  const auto p = BurgersProblem::sample([](double) { return 0.5; }, 0.0, 1.0, 11);
  const auto lines = trace_characteristics(p, 3.0, 7);
  for (double s : lines.speed) EXPECT_NEAR(s, 0.5, 1e-15);
  EXPECT_FALSE(shock_time(p).has_shock);
}

TEST(TraceCharacteristics, RampFocusesAtOne) {
  const auto p = ramp();
  const auto lines = trace_characteristics(p, 1.0, 5);  // x0 = -1, -0.5, 0, 0.5, 1
  EXPECT_NEAR(lines.position(1, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(lines.position(3, 1.0), 0.0, 1e-15);
  EXPECT_THROW(trace_characteristics(p, 0.0, 3), ConfigInvalid);
}

TEST(MuTrack, RampIsOneMinusT) {
  const auto p = ramp();
  for (double x0 : {-0.7, 0.0, 0.4})
    for (double t : {0.0, 0.25, 1.0}) EXPECT_NEAR(mu_track(p, x0, t), 1.0 - t, 1e-12);
}

TEST(MuTrack, IncreasingProfileNeverCollapses) {
  const auto p = BurgersProblem::sample([](double x) { return x; }, -1.0, 1.0, 101);
  EXPECT_LT(mu_track(p, 0.2, 0.0), 0.0);
  EXPECT_LT(mu_track(p, 0.2, 5.0), 0.0);
}

TEST(MuTrack, DegenerateAtCrest) {
  const auto p = sine();
  EXPECT_THROW(mu_track(p, pi / 2.0, 0.0, 1e-6), DegenerateDensity);
}

TEST(MuTrack, SineAtPi) {
  // u0'(pi) = -1 up to the centered-difference error
  const auto p = sine();
  EXPECT_NEAR(mu_track(p, pi, 0.3), 0.7, 1e-5);
}

TEST(ShockTime, Ramp) {
  const auto s = shock_time(ramp());
  ASSERT_TRUE(s.has_shock);
  EXPECT_NEAR(s.t_star_analytic, 1.0, 1e-12);
  EXPECT_NEAR(s.t_star_numeric, 1.0, 1e-9);
}

TEST(ShockTime, SineCrossesNearPi) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = shock_time(sine());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_TRUE(s.has_shock);
  EXPECT_NEAR(s.t_star_numeric, 1.0, 0.01);
  EXPECT_NEAR(s.t_star_analytic, 1.0, 1e-5);
  EXPECT_NEAR(s.x_crossing, pi, 0.01);
  EXPECT_LT(secs, 1.0);
}

TEST(ShockTime, NumericConvergesWithFanDensity) {
  const auto p = sine();
  // exact t* = 1 for sin
  const double e1 = std::abs(shock_time(p, 1000).t_star_numeric - 1.0);
  const double e2 = std::abs(shock_time(p, 4000).t_star_numeric - 1.0);
  EXPECT_LT(e2, e1);
}

TEST(Analyze, MuTracksAffineWithSlopeMinusOne) {
  const auto rep = analyze(sine(), 2.0, 9, 21);
  std::size_t affine = 0;
  for (const auto& mu : rep.mu_tracks) {
    if (mu.empty()) continue;
    for (std::size_t k = 1; k < mu.size(); ++k) {
      const double slope = (mu[k] - mu[k - 1]) / (rep.times[k] - rep.times[k - 1]);
      EXPECT_NEAR(slope, -1.0, 1e-10);
    }
    ++affine;
  }
  EXPECT_GE(affine, 7u);
}

TEST(Analyze, SpeedConservedAlongLines) {
  const auto p = sine();
  const auto rep = analyze(p, 1.0, 9, 5);
  for (std::size_t j = 0; j < rep.lines.size(); ++j) {
    const double v0 = rep.lines.position(j, 0.5) - rep.lines.position(j, 0.0);
    const double v1 = rep.lines.position(j, 1.0) - rep.lines.position(j, 0.5);
    EXPECT_NEAR(v0, v1, 1e-15);
    EXPECT_NEAR(rep.lines.speed[j], p.value_at(rep.lines.x0[j]), 0.0);
  }
}
