#pragma once

// Incoming characteristics dr/dt = -c labeled by ubar = r(-r0) - r0, and the
// inverse foliation density mu along them. mu is computed twice: from the
// flow map (mu = c kappa, kappa = dr/dubar at fixed t) and by integrating the
// transport equation Lbar mu = m + mu e along each track.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlshock/errors.hpp"
#include "qlshock/model.hpp"
#include "qlshock/numerics.hpp"
#include "qlshock/wave_solver.hpp"

namespace qlshock::characteristics {

/// Along-track samples, stored time-major: value(k, j) = field[k * n_tracks + j].
struct CharacteristicFan {
  std::vector<double> labels;
  std::vector<double> times;
  std::vector<double> r, c, psi0, dr_psi0, dt_psi0;
  std::vector<double> mu_transport, m, e;
  std::vector<double> mu_flow;  ///< filled by mu_from_flowmap

  std::size_t n_tracks() const noexcept { return labels.size(); }
  std::size_t n_times() const noexcept { return times.size(); }
  std::size_t at(std::size_t k, std::size_t j) const noexcept { return k * labels.size() + j; }

  double kappa(std::size_t k, std::size_t j) const { return mu_transport[at(k, j)] / c[at(k, j)]; }
  double lbar_mu(std::size_t k, std::size_t j) const {
    const auto i = at(k, j);
    return m[i] + mu_transport[i] * e[i];
  }
  double lbar_psi0(std::size_t k, std::size_t j) const {
    const auto i = at(k, j);
    return dt_psi0[i] - c[i] * dr_psi0[i];
  }
  /// T psi0 = kappa d_r psi0 with kappa taken from the transported mu.
  double t_psi0(std::size_t k, std::size_t j) const { return kappa(k, j) * dr_psi0[at(k, j)]; }
  /// L psi0 = c^-2 mu Lbar psi0 + 2 T psi0.
  double l_psi0(std::size_t k, std::size_t j) const {
    const auto i = at(k, j);
    return mu_transport[i] / (c[i] * c[i]) * lbar_psi0(k, j) + 2.0 * t_psi0(k, j);
  }

  /// min over labels of mu_transport, clamped at 1.
  double mu_m(std::size_t k) const {
    double v = 1.0;
    for (std::size_t j = 0; j < n_tracks(); ++j) v = std::min(v, mu_transport[at(k, j)]);
    return v;
  }

  void push_sample(double t) {
    times.push_back(t);
    const std::size_t n = n_tracks() * times.size();
    for (auto* f : {&r, &c, &psi0, &dr_psi0, &dt_psi0, &mu_transport, &m, &e}) f->resize(n, 0.0);
  }
};

inline std::vector<double> uniform_labels(double delta, std::size_t n_chars) {
  if (n_chars < 3) throw ConfigInvalid("fan.n_chars must be >= 3");
  std::vector<double> u(n_chars);
  for (std::size_t j = 0; j < n_chars; ++j)
    u[j] = delta * static_cast<double>(j) / static_cast<double>(n_chars - 1);
  return u;
}

struct TrackRates {
  double c, m, e;
  solver::PointSample s;
};

/// Right-hand side of (r, mu) along one track given the local field.
inline TrackRates track_rates(const ModelParams& params, const solver::PointSample& s, double mu) {
  const double c = constitutive::speed(params, s.psi0);
  if (params.g2 == 0.0) return {c, 0.0, 0.0, s};
  const double kappa = mu / c;
  const double T_rho = kappa * 2.0 * s.psi0 * s.dr_psi0;
  const double Lbar_rho = 2.0 * s.psi0 * (s.dt_psi0 - c * s.dr_psi0);
  return {c, constitutive::source_m(params, s.psi0, T_rho),
          constitutive::source_e(params, s.psi0, Lbar_rho), s};
}

/// Fan integrated inside the solver's Runge-Kutta stages.
/// State layout: y = [r_0 .. r_{n-1}, mu_0 .. mu_{n-1}].
class FanTracker {
 public:
  FanTracker(std::vector<double> labels, ModelParams params, double stop_mu)
      : params_(params), stop_mu_(stop_mu) {
    fan_.labels = std::move(labels);
  }

  std::size_t size() const { return 2 * fan_.n_tracks(); }
  const CharacteristicFan& fan() const noexcept { return fan_; }
  CharacteristicFan take_fan() { return std::move(fan_); }

  /// r_j = r0 + ubar_j and mu_j = c on the initial slice.
  std::vector<double> initial_state(const solver::FieldState& s) const {
    const std::size_t n = fan_.n_tracks();
    std::vector<double> y(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = params_.r0 + fan_.labels[j];
      const double psi = numerics::cubic_lagrange(s.psi0, s.r_lo, s.dr, y[j]).value;
      y[n + j] = constitutive::speed(params_, psi);
    }
    return y;
  }

  void rhs(const solver::StageView& v, std::span<const double> y, std::span<double> dy) const {
    const std::size_t n = fan_.n_tracks();
    for (std::size_t j = 0; j < n; ++j) {
      const auto rt = track_rates(params_, v.sample(y[j]), y[n + j]);
      dy[j] = -rt.c;
      dy[n + j] = rt.m + y[n + j] * rt.e;
    }
  }

  void record(const solver::StageView& v, std::span<const double> y) {
    const std::size_t n = fan_.n_tracks();
    fan_.push_sample(v.t);
    const std::size_t k = fan_.n_times() - 1;
    for (std::size_t j = 0; j < n; ++j) {
      const auto rt = track_rates(params_, v.sample(y[j]), y[n + j]);
      const auto i = fan_.at(k, j);
      fan_.r[i] = y[j];
      fan_.c[i] = rt.c;
      fan_.psi0[i] = rt.s.psi0;
      fan_.dr_psi0[i] = rt.s.dr_psi0;
      fan_.dt_psi0[i] = rt.s.dt_psi0;
      fan_.mu_transport[i] = y[n + j];
      fan_.m[i] = rt.m;
      fan_.e[i] = rt.e;
    }
  }

  std::optional<std::string> stop_reason(std::span<const double> y) const {
    const std::size_t n = fan_.n_tracks();
    double mu_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mu_min = std::min(mu_min, y[n + j]);
    if (mu_min <= stop_mu_) return "mu_m reached stop_mu = " + std::to_string(stop_mu_);
    for (std::size_t j = 0; j + 1 < n; ++j)
      if (!(y[j + 1] > y[j])) return "fan reordered between labels " + std::to_string(j);
    return std::nullopt;
  }

 private:
  CharacteristicFan fan_;
  ModelParams params_;
  double stop_mu_;
};

struct FanRun {
  CharacteristicFan fan;
  solver::EvolveResult evolution;
};

/// Evolves the data and the fan together, recording the fan at sample_times
/// (the initial time is always recorded).
inline FanRun run_with_fan(const solver::FieldState& initial, const solver::SolverConfig& cfg,
                           const ModelParams& params, std::vector<double> labels,
                           std::vector<double> sample_times, std::vector<double> probe_times = {}) {
  FanTracker tracker(std::move(labels), params, cfg.stop_mu);
  auto y = tracker.initial_state(initial);
  if (sample_times.empty() || sample_times.front() > initial.t) sample_times.insert(sample_times.begin(), initial.t);
  FanRun out;
  out.evolution = solver::evolve(initial, cfg, params,
                                 solver::EvolveOptions{std::move(probe_times), std::move(sample_times)},
                                 tracker, y);
  out.fan = tracker.take_fan();
  return out;
}

/// Sample times t0, t0 + dt, ... up to t_end inclusive.
inline std::vector<double> cadence(double t0, double t_end, double dt) {
  if (!(dt > 0.0)) throw ConfigInvalid("sample cadence must be > 0");
  std::vector<double> ts;
  const auto n = static_cast<std::size_t>(std::floor((t_end - t0) / dt + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) ts.push_back(t0 + dt * static_cast<double>(k));
  if (t_end - ts.back() > 1e-12) ts.push_back(t_end);
  return ts;
}

namespace detail {

/// Probe state with psi0_t evaluated from the equation, for offline sampling.
struct ProbeField {
  solver::FieldState state;
  std::vector<double> dt_psi0;

  ProbeField(const solver::FieldState& s, const ModelParams& params, int order) : state(s) {
    solver::SolverConfig cfg;
    cfg.stencil_order = order;
    cfg.r_in = s.r_lo;
    cfg.r_out = s.r_hi();
    solver::RadialWaveSolver probe(s, cfg, params);
    std::vector<double> dphi(s.size());
    dt_psi0.assign(s.size(), 0.0);
    probe.field_rhs(s.phi, s.psi0, dphi, dt_psi0);
  }

  solver::StageView view(int order) const {
    return {state.t, state.r_lo, state.dr, order, state.phi, state.psi0, dt_psi0};
  }
};

}  // namespace detail

/// Offline tracing from stored probe states: fields interpolated cubically in r
/// and linearly in t, tracks advanced by RK4 with `substeps` steps per probe
/// interval, mu integrated by the transport equation. Samples are recorded at
/// the probe times.
inline CharacteristicFan trace(std::span<const solver::FieldState> probes, std::vector<double> labels,
                               const ModelParams& params, std::size_t substeps = 8, int order = 4) {
  if (probes.size() < 2) throw ConfigInvalid("trace needs at least two probe states");
  FanTracker tracker(std::move(labels), params, 0.0);
  auto y = tracker.initial_state(probes.front());
  const std::size_t n = tracker.fan().n_tracks();
  std::vector<double> k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n), ys(2 * n);

  detail::ProbeField a(probes[0], params, order);
  tracker.record(a.view(order), y);
  for (std::size_t p = 1; p < probes.size(); ++p) {
    detail::ProbeField b(probes[p], params, order);
    const double ta = a.state.t, tb = b.state.t;
    auto eval = [&](double t, std::span<const double> yy, std::span<double> dy) {
      const double w = (t - ta) / (tb - ta);
      const auto va = a.view(order), vb = b.view(order);
      for (std::size_t j = 0; j < n; ++j) {
        const auto sa = va.sample(yy[j]);
        const auto sb = vb.sample(yy[j]);
        const solver::PointSample s{(1 - w) * sa.psi0 + w * sb.psi0,
                                    (1 - w) * sa.dr_psi0 + w * sb.dr_psi0,
                                    (1 - w) * sa.dt_psi0 + w * sb.dt_psi0};
        const auto rt = track_rates(params, s, yy[n + j]);
        dy[j] = -rt.c;
        dy[n + j] = rt.m + yy[n + j] * rt.e;
      }
    };
    const double h = (tb - ta) / static_cast<double>(substeps);
    for (std::size_t q = 0; q < substeps; ++q) {
      const double t = ta + h * static_cast<double>(q);
      eval(t, y, k1);
      for (std::size_t i = 0; i < 2 * n; ++i) ys[i] = y[i] + 0.5 * h * k1[i];
      eval(t + 0.5 * h, ys, k2);
      for (std::size_t i = 0; i < 2 * n; ++i) ys[i] = y[i] + 0.5 * h * k2[i];
      eval(t + 0.5 * h, ys, k3);
      for (std::size_t i = 0; i < 2 * n; ++i) ys[i] = y[i] + h * k3[i];
      eval(t + h, ys, k4);
      for (std::size_t i = 0; i < 2 * n; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    tracker.record(b.view(order), y);
    a = std::move(b);
  }
  return tracker.take_fan();
}

/// mu_flow = c kappa with kappa = dr/dubar by fourth-order differences across
/// labels (second order one-sided at the ends).
inline void mu_from_flowmap(CharacteristicFan& fan) {
  const std::size_t n = fan.n_tracks();
  if (n < 3) throw ConfigInvalid("mu_from_flowmap needs at least 3 tracks");
  const double h = fan.labels[1] - fan.labels[0];
  fan.mu_flow.assign(fan.r.size(), 0.0);
  for (std::size_t k = 0; k < fan.n_times(); ++k) {
    std::span<const double> rk(fan.r.data() + fan.at(k, 0), n);
    for (std::size_t j = 0; j + 1 < n; ++j)
      if (!(rk[j + 1] > rk[j])) throw FanReordered(fan.times[k], j);
    const auto kappa = numerics::derivative(rk, h, 4);
    for (std::size_t j = 0; j < n; ++j) fan.mu_flow[fan.at(k, j)] = fan.c[fan.at(k, j)] * kappa[j];
  }
}

/// Largest |mu_flow - mu_transport| and the relative version scaled by mu_m,
/// over samples with mu_m above `mu_floor`. Interior labels only (the ends use
/// lower-order differences).
struct CrossCheck {
  double max_abs = 0.0;
  double max_rel_to_mu_m = 0.0;
  std::size_t samples = 0;
};

inline CrossCheck cross_check(const CharacteristicFan& fan, double mu_floor) {
  CrossCheck out;
  const std::size_t n = fan.n_tracks();
  for (std::size_t k = 0; k < fan.n_times(); ++k) {
    const double mm = fan.mu_m(k);
    if (!(mm > mu_floor)) continue;
    for (std::size_t j = 2; j + 2 < n; ++j) {
      const double d = std::abs(fan.mu_flow[fan.at(k, j)] - fan.mu_transport[fan.at(k, j)]);
      out.max_abs = std::max(out.max_abs, d);
      out.max_rel_to_mu_m = std::max(out.max_rel_to_mu_m, d / mm);
      ++out.samples;
    }
  }
  return out;
}

struct ShockReport {
  bool shock = false;
  double t_star = std::numeric_limits<double>::quiet_NaN();
  bool extrapolated = false;
  double u_star = std::numeric_limits<double>::quiet_NaN();
  std::size_t u_star_index = 0;
  double fit_A = 0.0, fit_B = 0.0;
  std::size_t fit_samples = 0;
  std::vector<double> times;
  std::vector<double> mu_m_series;
};

namespace detail {

inline std::vector<std::size_t> last_fraction(std::vector<std::size_t> idx, double fraction,
                                              std::size_t min_count) {
  const auto keep = std::max<std::size_t>(
      min_count, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(idx.size()))));
  if (idx.size() > keep) idx.erase(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(keep));
  return idx;
}

}  // namespace detail

/// t* from a least-squares fit mu_m = A + B/t on the last 30% of samples with
/// mu_m in [stop_mu, 0.5]; when fewer than three such samples exist the window
/// widens to mu_m < 0.9.
inline ShockReport detect_shock(std::span<const double> times, std::span<const double> mu_m,
                                double stop_mu) {
  ShockReport rep;
  rep.times.assign(times.begin(), times.end());
  rep.mu_m_series.assign(mu_m.begin(), mu_m.end());
  const double lowest = mu_m.empty() ? 1.0 : *std::min_element(mu_m.begin(), mu_m.end());
  if (!(lowest <= 0.9)) throw NoShock("mu_m stays above 0.9 through the run");
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < mu_m.size(); ++k)
    if (mu_m[k] >= stop_mu && mu_m[k] <= 0.5) idx.push_back(k);
  if (idx.size() < 3) {
    idx.clear();
    for (std::size_t k = 0; k < mu_m.size(); ++k)
      if (mu_m[k] < 0.9) idx.push_back(k);
  }
  if (idx.size() < 3) throw NoShock("too few samples below mu_m = 0.9 to fit the collapse");
  idx = detail::last_fraction(std::move(idx), 0.3, 3);
  std::vector<double> x, y;
  for (auto k : idx) {
    x.push_back(1.0 / times[k]);
    y.push_back(mu_m[k]);
  }
  const auto fit = numerics::fit_line(x, y);
  rep.fit_A = fit.intercept;
  rep.fit_B = fit.slope;
  rep.fit_samples = fit.n;
  rep.t_star = -fit.slope / fit.intercept;
  rep.shock = std::isfinite(rep.t_star);
  rep.extrapolated = !(rep.t_star >= times.front() && rep.t_star <= times.back());
  return rep;
}

inline ShockReport detect_shock(const CharacteristicFan& fan, double stop_mu) {
  std::vector<double> mm(fan.n_times());
  for (std::size_t k = 0; k < fan.n_times(); ++k) mm[k] = fan.mu_m(k);
  auto rep = detect_shock(fan.times, mm, stop_mu);
  // Smallest label attaining the minimum at the last sample.
  const std::size_t k = fan.n_times() - 1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < fan.n_tracks(); ++j) {
    const double v = fan.mu_transport[fan.at(k, j)];
    if (v < best) {
      best = v;
      rep.u_star_index = j;
    }
  }
  rep.u_star = fan.labels[rep.u_star_index];
  return rep;
}

/// Per-sample geometric quantities, time-major like the fan.
struct GeometryDiagnostics {
  std::vector<double> tr_chibar_prime;  ///< -2c/r + 2/(ubar - t)
  std::vector<double> tr_alpha_bar;     ///< mu^-1 m trchibar
  std::vector<double> that_psi0;        ///< c mu^-1 T psi0 = d_r psi0
  std::vector<double> mu_that_psi0;
  std::vector<double> mu_tr_alpha_bar;
};

/// Radially the regular part of alphabar vanishes, leaving
/// tr alphabar = -mu^-1 (dc^2/drho)(T rho) trchibar / 2 = mu^-1 m trchibar.
inline GeometryDiagnostics geometry_diagnostics(const CharacteristicFan& fan) {
  GeometryDiagnostics g;
  const std::size_t total = fan.r.size();
  for (auto* v : {&g.tr_chibar_prime, &g.tr_alpha_bar, &g.that_psi0, &g.mu_that_psi0, &g.mu_tr_alpha_bar})
    v->assign(total, 0.0);
  for (std::size_t k = 0; k < fan.n_times(); ++k) {
    const double t = fan.times[k];
    for (std::size_t j = 0; j < fan.n_tracks(); ++j) {
      const auto i = fan.at(k, j);
      const double mu = fan.mu_transport[i];
      const double trchi = -2.0 * fan.c[i] / fan.r[i];
      g.tr_chibar_prime[i] = trchi + 2.0 / (fan.labels[j] - t);
      g.mu_tr_alpha_bar[i] = fan.m[i] * trchi;
      g.tr_alpha_bar[i] = g.mu_tr_alpha_bar[i] / mu;
      g.that_psi0[i] = fan.c[i] / mu * fan.t_psi0(k, j);
      g.mu_that_psi0[i] = mu * g.that_psi0[i];
    }
  }
  return g;
}

}  // namespace qlshock::characteristics
