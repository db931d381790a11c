#pragma once

// Short-pulse Cauchy data on the slice t = -r0.
//
// The seed pair (phi1, phi2) lives on s in [0, 1]. The profile phi0 is the
// solution of the linear ODE
//
//   phi0'' + (delta/r + delta/(2c) d_r c - 3 delta/2 g2 c^2 phi1 phi1') phi0'
//          - c^{-1} phi1' = delta^2 phi2,        phi0(0) = phi0'(0) = 0,
//
// with r = r0 + delta s, c = c(delta^{1/2} phi1) and d_r c = -3 c^3 g2 phi1 phi1'.
// The data are then phi = delta^{3/2} phi0((r - r0)/delta) and
// d_t phi = delta^{1/2} phi1((r - r0)/delta) on [r0, r0 + delta], zero inside
// r0, and tapered to zero outside r0 + delta.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/minima.hpp>

#include "qlshock/errors.hpp"
#include "qlshock/model.hpp"
#include "qlshock/numerics.hpp"

namespace qlshock::data {

/// Value of min G''(0) phi1 d_s phi1 at or below which shocks are guaranteed.
inline constexpr double kShockThreshold = -1.0 / 6.0;

struct SeedData {
  std::function<double(double)> phi1;
  std::function<double(double)> dphi1;
  std::function<double(double)> phi2;
  std::size_t n_intervals = 64;  ///< s-grid spacing is 1/n_intervals
  std::string name = "custom";

  double ds() const noexcept { return 1.0 / static_cast<double>(n_intervals); }
  double node(std::size_t k) const noexcept {
    return static_cast<double>(k) / static_cast<double>(n_intervals);
  }

  /// True when phi1 and phi2 vanish at s = 1, so the pulse ends without a jump
  /// in value that the outer taper must absorb.
  bool vanishes_at_one(double tol = 1e-12) const {
    return std::abs(phi1(1.0)) <= tol && std::abs(phi2(1.0)) <= tol;
  }

  /// Seeds must match the trivial interior data smoothly: |f(s)| <= K |f|_inf s^2
  /// on the first 5% of the grid.
  void validate(double max_quadratic_rate = 30.0) const {
    if (n_intervals < 4) throw ConfigInvalid("seed: s-grid needs at least 4 intervals");
    const auto n_check = std::max<std::size_t>(1, n_intervals / 20);
    double sup1 = 0.0, sup2 = 0.0;
    for (std::size_t k = 0; k <= n_intervals; ++k) {
      sup1 = std::max(sup1, std::abs(phi1(node(k))));
      sup2 = std::max(sup2, std::abs(phi2(node(k))));
    }
    for (std::size_t k = 0; k <= n_intervals; ++k) {
      const double s = node(k);
      const double a = phi1(s), b = dphi1(s), c = phi2(s);
      if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
        throw ConfigInvalid("seed: non-finite sample at s = " + std::to_string(s));
      if (k == 0 && (a != 0.0 || c != 0.0))
        throw ConfigInvalid("seed: profiles must vanish at s = 0");
      if (k >= 1 && k <= n_check) {
        const double bound = max_quadratic_rate * s * s;
        if (std::abs(a) > bound * sup1 || std::abs(c) > bound * sup2)
          throw ConfigInvalid("seed: profiles must vanish to second order at s = 0");
      }
    }
  }

  static SeedData zero(std::size_t n_intervals) {
    auto z = [](double) { return 0.0; };
    return SeedData{z, z, z, n_intervals, "zero"};
  }

  /// A exp(-1/(s(1-s))) normalised to peak A at s = 1/2.
  static SeedData bump(double amplitude, std::size_t n_intervals) {
    auto f = [amplitude](double s) {
      if (s <= 0.0 || s >= 1.0) return 0.0;
      return amplitude * std::exp(4.0 - 1.0 / (s * (1.0 - s)));
    };
    auto df = [f](double s) {
      if (s <= 0.0 || s >= 1.0) return 0.0;
      const double q = s * (1.0 - s);
      return f(s) * (1.0 - 2.0 * s) / (q * q);
    };
    return SeedData{f, df, [](double) { return 0.0; }, n_intervals, "bump"};
  }

  /// A sin^2(pi s).
  static SeedData sine2(double amplitude, std::size_t n_intervals) {
    using std::numbers::pi;
    auto f = [amplitude](double s) {
      if (s <= 0.0 || s >= 1.0) return 0.0;
      const double v = std::sin(pi * s);
      return amplitude * v * v;
    };
    auto df = [amplitude](double s) {
      if (s <= 0.0 || s >= 1.0) return 0.0;
      return amplitude * pi * std::sin(2.0 * pi * s);
    };
    return SeedData{f, df, [](double) { return 0.0; }, n_intervals, "sine2"};
  }

  /// Seed from uniformly spaced samples on [0, 1] (cubic B-spline interpolant).
  static SeedData from_samples(std::vector<double> phi1_samples, std::vector<double> phi2_samples,
                               std::size_t n_intervals) {
    if (phi1_samples.size() < 4 || phi1_samples.size() != phi2_samples.size())
      throw ConfigInvalid("seed: sample columns must have equal length >= 4");
    const double h = 1.0 / static_cast<double>(phi1_samples.size() - 1);
    using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
    auto s1 = std::make_shared<Spline>(phi1_samples.begin(), phi1_samples.end(), 0.0, h);
    auto s2 = std::make_shared<Spline>(phi2_samples.begin(), phi2_samples.end(), 0.0, h);
    auto clamp = [](double s) { return std::clamp(s, 0.0, 1.0); };
    return SeedData{[s1, clamp](double s) { return (*s1)(clamp(s)); },
                    [s1, clamp](double s) { return s1->prime(clamp(s)); },
                    [s2, clamp](double s) { return (*s2)(clamp(s)); }, n_intervals, "samples"};
  }

  /// Same profile shape with phi1 (and phi2) multiplied by a constant.
  SeedData scaled(double factor) const {
    SeedData out = *this;
    auto f = phi1, df = dphi1, g = phi2;
    out.phi1 = [f, factor](double s) { return factor * f(s); };
    out.dphi1 = [df, factor](double s) { return factor * df(s); };
    out.phi2 = [g, factor](double s) { return factor * g(s); };
    return out;
  }
};

/// Minimum of g2 phi1 d_s phi1: grid scan over n cells, then Brent refinement
/// inside the cells adjacent to the grid minimum.
struct ProductMinimum {
  double value = 0.0;
  double arg = 0.0;
};

inline ProductMinimum product_minimum(const SeedData& seed, double g2, std::size_t n) {
  auto f = [&](double s) { return g2 * seed.phi1(s) * seed.dphi1(s); };
  ProductMinimum best{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n);
    const double v = f(s);
    if (v < best.value) best = {v, s};
  }
  const double h = 1.0 / static_cast<double>(n);
  const double lo = std::max(0.0, best.arg - h), hi = std::min(1.0, best.arg + h);
  const auto [arg, value] = boost::math::tools::brent_find_minima(f, lo, hi, 52);
  if (value < best.value) best = {value, arg};
  return best;
}

/// Rescales a seed so that min g2 phi1 phi1' equals `strength` (< 0). The
/// amplitude is nudged up by a relative 1e-12 so rounding in the minimum
/// search never lands above `strength`.
inline SeedData with_strength(const SeedData& unit, double g2, double strength) {
  if (!(strength < 0.0)) throw ConfigInvalid("seed.strength must be negative");
  if (g2 == 0.0) throw ConfigInvalid("seed.strength requires g2 != 0");
  const double extreme = product_minimum(unit, g2, 4000).value;
  if (!(extreme < 0.0)) throw ConfigInvalid("seed: profile cannot reach a negative strength");
  const double factor = std::sqrt(strength / extreme) * (1.0 + 1e-12);
  auto out = unit.scaled(factor);
  out.name = unit.name;
  return out;
}

struct Phi0Profile {
  std::vector<double> s;
  std::vector<double> phi0;
  std::vector<double> dphi0;
  std::vector<double> ddphi0;
  double error_estimate = 0.0;  ///< Richardson estimate, max over the grid
};

namespace detail {

struct Phi0Ode {
  const SeedData& seed;
  const ModelParams& params;

  double speed(double s) const {
    return constitutive::speed(params, std::sqrt(params.delta) * seed.phi1(s));
  }

  /// Coefficient of phi0' in the ODE.
  double damping(double s) const {
    const double d = params.delta;
    const double c = speed(s);
    const double p1 = seed.phi1(s), dp1 = seed.dphi1(s);
    const double dr_c = -3.0 * c * c * c * params.g2 * p1 * dp1;
    const double r = params.r0 + d * s;
    return d / r + d / (2.0 * c) * dr_c - 1.5 * d * params.g2 * c * c * p1 * dp1;
  }

  double second_derivative(double s, double dphi0) const {
    const double d = params.delta;
    return seed.dphi1(s) / speed(s) + d * d * seed.phi2(s) - damping(s) * dphi0;
  }

  std::array<double, 2> rhs(double s, const std::array<double, 2>& y) const {
    return {y[1], second_derivative(s, y[1])};
  }
};

inline std::vector<std::array<double, 2>> integrate_rk4(const Phi0Ode& ode, std::size_t n_intervals,
                                                        std::size_t substeps) {
  std::vector<std::array<double, 2>> out(n_intervals + 1, {0.0, 0.0});
  std::array<double, 2> y{0.0, 0.0};
  const double h = 1.0 / static_cast<double>(n_intervals * substeps);
  for (std::size_t k = 0; k < n_intervals; ++k) {
    for (std::size_t j = 0; j < substeps; ++j) {
      const double s = h * static_cast<double>(k * substeps + j);
      const auto k1 = ode.rhs(s, y);
      const auto k2 = ode.rhs(s + 0.5 * h, {y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
      const auto k3 = ode.rhs(s + 0.5 * h, {y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
      const auto k4 = ode.rhs(s + h, {y[0] + h * k3[0], y[1] + h * k3[1]});
      for (int c = 0; c < 2; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out[k + 1] = y;
  }
  return out;
}

}  // namespace detail

/// Solves the phi0 ODE with classical RK4 at step ds/4 and estimates the error
/// by comparing against step ds/2 (Richardson, order 4).
inline Phi0Profile build_phi0(const SeedData& seed, const ModelParams& params,
                              double tolerance = 1e-8) {
  params.validate();
  const detail::Phi0Ode ode{seed, params};
  const auto fine = detail::integrate_rk4(ode, seed.n_intervals, 4);
  const auto coarse = detail::integrate_rk4(ode, seed.n_intervals, 2);

  Phi0Profile prof;
  const std::size_t n = seed.n_intervals + 1;
  prof.s.resize(n);
  prof.phi0.resize(n);
  prof.dphi0.resize(n);
  prof.ddphi0.resize(n);
  double scale = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    prof.s[k] = seed.node(k);
    prof.phi0[k] = fine[k][0];
    prof.dphi0[k] = fine[k][1];
    prof.ddphi0[k] = ode.second_derivative(prof.s[k], fine[k][1]);
    scale = std::max({scale, std::abs(fine[k][0]), std::abs(fine[k][1])});
    for (int c = 0; c < 2; ++c) {
      const double e = std::abs(fine[k][c] - coarse[k][c]) / 15.0;
      if (!std::isfinite(fine[k][c]))
        throw OdeDivergence("phi0 ODE produced a non-finite value at s = " +
                            std::to_string(prof.s[k]));
      prof.error_estimate = std::max(prof.error_estimate, e);
    }
  }
  if (prof.error_estimate > tolerance * scale)
    throw OdeDivergence("phi0 ODE error estimate " + std::to_string(prof.error_estimate) +
                        " exceeds tolerance");
  return prof;
}

struct GridSpec {
  std::size_t points_per_pulse = 64;  ///< grid intervals spanning [r0, r0 + delta]
  double r_in = 0.25;
  double r_out = 4.0;
  double taper_width = 1.0;  ///< in units of delta
};

/// Initial slice on a uniform radial grid r_i = r_lo + i dr with r0 a node.
struct CauchyData {
  double t = -2.0;
  double r_lo = 0.0;
  double dr = 0.0;
  std::vector<double> phi;
  std::vector<double> psi0;
  // Exact radial derivatives of the assembled profiles.
  std::vector<double> dr_phi;
  std::vector<double> drr_phi;
  std::vector<double> dr_psi0;
  std::size_t pulse_begin = 0;  ///< node index of r = r0
  std::size_t points_per_pulse = 0;
  std::array<double, 2> taper_window{0.0, 0.0};
  bool seed_vanishes_at_one = true;

  std::size_t size() const noexcept { return phi.size(); }
  double r(std::size_t i) const noexcept { return r_lo + dr * static_cast<double>(i); }
};

inline CauchyData assemble(const SeedData& seed, const Phi0Profile& prof, const ModelParams& params,
                           const GridSpec& spec) {
  params.validate();
  if (spec.points_per_pulse < 32)
    throw GridTooCoarse("fewer than 32 grid intervals span the pulse [r0, r0 + delta]");
  if (prof.phi0.size() != spec.points_per_pulse + 1 || seed.n_intervals != spec.points_per_pulse)
    throw ConfigInvalid("seed s-grid must match points_per_pulse");
  if (!(spec.r_in > 0.0) || !(spec.r_in < params.r0) || !(spec.r_out > params.r0 + params.delta))
    throw ConfigInvalid("grid must satisfy 0 < r_in < r0 < r0 + delta < r_out");
  if (!(spec.taper_width > 0.0)) throw ConfigInvalid("taper_width must be > 0");

  const double d = params.delta;
  const double sd = std::sqrt(d);
  const double d32 = d * sd;
  const double dr = d / static_cast<double>(spec.points_per_pulse);
  const auto below = static_cast<std::size_t>(std::floor((params.r0 - spec.r_in) / dr + 1e-9));
  const auto above = static_cast<std::size_t>(std::floor((spec.r_out - params.r0) / dr + 1e-9));

  CauchyData out;
  out.t = params.t_initial();
  out.dr = dr;
  out.r_lo = params.r0 - dr * static_cast<double>(below);
  out.pulse_begin = below;
  out.points_per_pulse = spec.points_per_pulse;
  const std::size_t n = below + above + 1;
  out.phi.assign(n, 0.0);
  out.psi0.assign(n, 0.0);
  out.dr_phi.assign(n, 0.0);
  out.drr_phi.assign(n, 0.0);
  out.dr_psi0.assign(n, 0.0);
  const double w = spec.taper_width * d;
  const double r_b = params.r0 + d;
  out.taper_window = {r_b, r_b + w};
  out.seed_vanishes_at_one = seed.vanishes_at_one();

  const std::size_t ppp = spec.points_per_pulse;
  for (std::size_t k = 0; k <= ppp && below + k < n; ++k) {
    const std::size_t i = below + k;
    const double s = seed.node(k);
    out.phi[i] = d32 * prof.phi0[k];
    out.dr_phi[i] = sd * prof.dphi0[k];
    out.drr_phi[i] = prof.ddphi0[k] / sd;
    out.psi0[i] = sd * seed.phi1(s);
    out.dr_psi0[i] = seed.dphi1(s) / sd;
  }

  // Quadratic continuation from s = 1 multiplied by a quintic C^2 cutoff.
  const double h1 = 1e-4;
  const double ddphi1_end =
      (3.0 * seed.dphi1(1.0) - 4.0 * seed.dphi1(1.0 - h1) + seed.dphi1(1.0 - 2.0 * h1)) / (2.0 * h1);
  const std::array<double, 3> phi_end{d32 * prof.phi0[ppp], sd * prof.dphi0[ppp],
                                      prof.ddphi0[ppp] / sd};
  const std::array<double, 3> psi_end{sd * seed.phi1(1.0), seed.dphi1(1.0) / sd,
                                      ddphi1_end / (d * sd)};
  auto taper = [w](const std::array<double, 3>& f, double y) {
    const auto S = numerics::smoothstep5(y / w);
    const double T = 1.0 - S.value, dT = -S.d1 / w, ddT = -S.d2 / (w * w);
    const double P = f[0] + f[1] * y + 0.5 * f[2] * y * y;
    const double dP = f[1] + f[2] * y;
    const double ddP = f[2];
    return std::array<double, 3>{P * T, dP * T + P * dT, ddP * T + 2.0 * dP * dT + P * ddT};
  };
  for (std::size_t i = below + ppp + 1; i < n; ++i) {
    const double y = out.r(i) - r_b;
    if (y >= w) break;
    const auto a = taper(phi_end, y);
    const auto b = taper(psi_end, y);
    out.phi[i] = a[0];
    out.dr_phi[i] = a[1];
    out.drr_phi[i] = a[2];
    out.psi0[i] = b[0];
    out.dr_psi0[i] = b[1];
  }
  for (std::size_t i = 0; i < n; ++i) (void)constitutive::speed(params, out.psi0[i]);
  return out;
}

struct RadiationResidual {
  double sup_lbar_phi = 0.0;   ///< sup |Lbar phi| over [r0, r0 + delta]
  double sup_lbar2_phi = 0.0;  ///< sup |Lbar^2 phi|
  double ratio_lbar = 0.0;     ///< sup |Lbar phi| / delta^{3/2}
  double ratio_lbar2 = 0.0;
};

/// Lbar phi = d_t phi - c d_r phi and Lbar^2 phi with d_t^2 phi replaced by
/// the radial main equation, evaluated from the exact profile derivatives.
inline RadiationResidual check_no_outgoing_radiation(const CauchyData& data,
                                                     const ModelParams& params) {
  RadiationResidual res;
  const double g2 = params.g2;
  for (std::size_t k = 0; k <= data.points_per_pulse; ++k) {
    const std::size_t i = data.pulse_begin + k;
    if (i >= data.size()) break;
    const double r = data.r(i);
    const double psi = data.psi0[i];
    const double c = constitutive::speed(params, psi);
    const double c2 = c * c, c3 = c2 * c;
    const double dphi = data.dr_phi[i], ddphi = data.drr_phi[i], dpsi = data.dr_psi0[i];
    const double dr_c = -3.0 * c3 * g2 * psi * dpsi;
    const double q = 3.0 * g2 * c3 * psi * dphi;
    const double lbar = psi - c * dphi;
    const double lbar2 = (2.0 - q) * (c2 * ddphi) + (1.0 - q) * (2.0 * c2 / r * dphi) +
                         c * dr_c * dphi - 2.0 * c * dpsi;
    res.sup_lbar_phi = std::max(res.sup_lbar_phi, std::abs(lbar));
    res.sup_lbar2_phi = std::max(res.sup_lbar2_phi, std::abs(lbar2));
  }
  const double d32 = std::pow(params.delta, 1.5);
  res.ratio_lbar = res.sup_lbar_phi / d32;
  res.ratio_lbar2 = res.sup_lbar2_phi / d32;
  return res;
}

struct ShockCondition {
  bool met = false;
  double min_value = 0.0;  ///< min over the s-grid of g2 phi1 d_s phi1
  double arg_min = 0.0;
  double threshold = kShockThreshold;
};

inline ShockCondition check_shock_condition(const SeedData& seed, const ModelParams& params) {
  ShockCondition out;
  const auto m = product_minimum(seed, params.g2, seed.n_intervals);
  out.min_value = m.value;
  out.arg_min = m.arg;
  out.met = out.min_value <= kShockThreshold;
  return out;
}

}  // namespace qlshock::data
