#pragma once

// Exact characteristic picture for the inviscid Burgers equation
// d_t u + u d_x u = 0. Characteristics are straight lines x0 + u0(x0) t, the
// inverse density mu = -1/d_x u decreases with unit slope along each line,
// and the first collision of two lines is the shock time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "qlshock/errors.hpp"
#include "qlshock/numerics.hpp"

namespace qlshock::burgers {

struct BurgersProblem {
  std::vector<double> u0;  ///< samples on the uniform grid over [x_min, x_max]
  double x_min = 0.0;
  double x_max = 1.0;

  static BurgersProblem sample(const std::function<double(double)>& f, double x_min, double x_max,
                               std::size_t n_samples) {
    BurgersProblem p{std::vector<double>(n_samples), x_min, x_max};
    for (std::size_t i = 0; i < n_samples; ++i) p.u0[i] = f(p.node(i));
    p.validate();
    return p;
  }

  std::size_t n_samples() const noexcept { return u0.size(); }
  double dx() const noexcept { return (x_max - x_min) / static_cast<double>(u0.size() - 1); }
  double node(std::size_t i) const noexcept {
    return x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(u0.size() - 1);
  }

  void validate() const {
    if (u0.size() < 3) throw ConfigInvalid("burgers: n_samples must be >= 3");
    if (!(x_max > x_min)) throw ConfigInvalid("burgers: x_max must exceed x_min");
    for (double v : u0)
      if (!std::isfinite(v)) throw ConfigInvalid("burgers: non-finite initial sample");
  }

  /// u0 between samples (cubic Lagrange, exact at the nodes).
  double value_at(double x) const { return numerics::cubic_lagrange(u0, x_min, dx(), x).value; }

  /// u0' from second-order centered differences (one-sided at the ends),
  /// linearly interpolated between nodes.
  std::vector<double> slope_samples() const { return numerics::derivative(u0, dx(), 2); }

  double slope_at(double x) const {
    const auto d = slope_samples();
    const double u = std::clamp((x - x_min) / dx(), 0.0, static_cast<double>(u0.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(u), u0.size() - 2);
    const double w = u - static_cast<double>(i);
    return (1.0 - w) * d[i] + w * d[i + 1];
  }
};

/// Family of characteristic lines x(t; x0) = x0 + u0(x0) t.
struct CharacteristicLines {
  std::vector<double> x0;
  std::vector<double> speed;  ///< u0(x0), conserved along the line
  double t_end = 0.0;

  std::size_t size() const noexcept { return x0.size(); }
  double position(std::size_t j, double t) const noexcept { return x0[j] + speed[j] * t; }
};

inline std::vector<double> uniform_labels(const BurgersProblem& p, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j)
    x[j] = n == 1 ? p.x_min
                  : p.x_min + (p.x_max - p.x_min) * static_cast<double>(j) /
                                  static_cast<double>(n - 1);
  return x;
}

inline CharacteristicLines trace_characteristics(const BurgersProblem& p, double t_end,
                                                 std::size_t n_chars) {
  if (!(t_end > 0.0)) throw ConfigInvalid("burgers: t_end must be > 0");
  CharacteristicLines lines;
  lines.t_end = t_end;
  lines.x0 = uniform_labels(p, n_chars);
  lines.speed.resize(n_chars);
  for (std::size_t j = 0; j < n_chars; ++j) lines.speed[j] = p.value_at(lines.x0[j]);
  return lines;
}

/// mu(t) = -1/u0'(x0) - t along the characteristic through x0.
inline double mu_track(const BurgersProblem& p, double x0, double t, double tol = 1e-12) {
  const double slope = p.slope_at(x0);
  if (std::abs(slope) <= tol)
    throw DegenerateDensity("burgers: u0'(x0) vanishes; no collapse on this track");
  return -1.0 / slope - t;
}

struct ShockTime {
  bool has_shock = false;
  double t_star_analytic = std::numeric_limits<double>::infinity();
  double t_star_numeric = std::numeric_limits<double>::infinity();
  std::pair<std::size_t, std::size_t> crossing_pair{0, 0};
  double x_crossing = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Index of the first adjacent pair whose order is violated at time t.
inline std::optional<std::size_t> first_crossed(const CharacteristicLines& fan, double t) {
  std::optional<std::size_t> hit;
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < fan.size(); ++j) {
    const double gap = fan.position(j + 1, t) - fan.position(j, t);
    if (gap <= 0.0 && (!hit || gap < worst)) {
      hit = j;
      worst = gap;
    }
  }
  return hit;
}

}  // namespace detail

/// Analytic t* = -1/min u0' and the first crossing time of a dense fan of
/// n_fan lines, found by an adjacent-pair sign scan per time step followed by
/// bisection.
inline ShockTime shock_time(const BurgersProblem& p, std::size_t n_fan = 10000,
                            std::size_t scan_steps = 400) {
  ShockTime out;
  const auto d = p.slope_samples();
  const double min_slope = *std::min_element(d.begin(), d.end());
  if (!(min_slope < 0.0)) return out;
  out.has_shock = true;
  out.t_star_analytic = -1.0 / min_slope;

  const auto fan = trace_characteristics(p, 2.0 * out.t_star_analytic, n_fan);
  const double dt = fan.t_end / static_cast<double>(scan_steps);
  double t_prev = 0.0;
  for (std::size_t k = 1; k <= scan_steps; ++k) {
    const double t = dt * static_cast<double>(k);
    if (!detail::first_crossed(fan, t)) {
      t_prev = t;
      continue;
    }
    double lo = t_prev, hi = t;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (detail::first_crossed(fan, mid) ? hi : lo) = mid;
    }
    // Earliest pair at the collision time: the one with the smallest crossing
    // time among pairs already crossed at hi.
    std::size_t best = *detail::first_crossed(fan, hi);
    double best_t = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < fan.size(); ++j) {
      const double du = fan.speed[j] - fan.speed[j + 1];
      if (du <= 0.0) continue;
      const double tc = (fan.x0[j + 1] - fan.x0[j]) / du;
      if (tc < best_t) {
        best_t = tc;
        best = j;
      }
    }
    out.t_star_numeric = hi;
    out.crossing_pair = {best, best + 1};
    out.x_crossing = fan.position(best, hi);
    return out;
  }
  return out;
}

struct BurgersReport {
  ShockTime shock;
  CharacteristicLines lines;
  std::vector<double> times;
  /// mu_tracks[j][k] = mu at times[k] along line j; empty when u0' vanishes there.
  std::vector<std::vector<double>> mu_tracks;
};

inline BurgersReport analyze(const BurgersProblem& p, double t_end, std::size_t n_chars,
                             std::size_t n_times, std::size_t n_fan = 10000) {
  BurgersReport rep;
  rep.shock = shock_time(p, n_fan);
  rep.lines = trace_characteristics(p, t_end, n_chars);
  rep.times.resize(n_times);
  for (std::size_t k = 0; k < n_times; ++k)
    rep.times[k] = n_times == 1 ? 0.0 : t_end * static_cast<double>(k) / static_cast<double>(n_times - 1);
  rep.mu_tracks.resize(n_chars);
  for (std::size_t j = 0; j < n_chars; ++j) {
    try {
      const double mu0 = mu_track(p, rep.lines.x0[j], 0.0);
      std::vector<double> mu(n_times);
      for (std::size_t k = 0; k < n_times; ++k) mu[k] = mu0 - rep.times[k];
      rep.mu_tracks[j] = std::move(mu);
    } catch (const DegenerateDensity&) {
      rep.mu_tracks[j].clear();
    }
  }
  return rep;
}

}  // namespace qlshock::burgers
