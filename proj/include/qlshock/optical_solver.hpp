#pragma once

// The radial equation in optical coordinates (t, ubar). Grid nodes ride the
// incoming characteristics, so they bunch up exactly where the foliation
// collapses and the solution stays smooth in ubar up to mu = 0. With
// chi = d_r phi, psi = psi0, kappa = d r / d ubar and Lbar = d_t at fixed ubar:
//
//   Lbar r   = -c
//   Lbar phi = psi - c chi
//   Lbar chi = (psi_u - c chi_u) / kappa
//   Lbar psi = c (c chi_u - psi_u) / kappa + 2 c^2 chi / r
//
// The inverse density is carried along as an extra unknown through
// Lbar mu = m + mu e, with T rho = rho_u and Lbar rho read off the evolution.
// kappa itself is always the label derivative of r (the flow map).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlshock/characteristics.hpp"
#include "qlshock/data_builder.hpp"
#include "qlshock/errors.hpp"
#include "qlshock/model.hpp"
#include "qlshock/numerics.hpp"
#include "qlshock/wave_solver.hpp"

namespace qlshock::solver::optical {

struct OpticalConfig {
  double cfl = 0.8;  ///< fraction of h kappa / (2c), the outgoing transit time of one cell
  int stencil_order = 4;
  double lead = 0.5;    ///< labels start at -lead * delta (quiescent region ahead of the front)
  double extent = 3.0;  ///< labels end at extent * delta
  double t_end = -0.5;
  double stop_mu = 0.02;
  double max_grad = 1e6;  ///< guard on |d_r psi0|
  /// Kreiss-Oliger strength, weighted by the local outgoing speed 2c/kappa.
  double dissipation = 0.1;

  void validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigInvalid("optical.cfl must lie in (0, 1]");
    if (!(dissipation >= 0.0)) throw ConfigInvalid("optical.dissipation must be >= 0");
    if (stencil_order != 2 && stencil_order != 4)
      throw ConfigInvalid("optical.stencil_order must be 2 or 4");
    if (!(lead > 0.0)) throw ConfigInvalid("optical.lead must be > 0");
    if (!(extent > 1.0)) throw ConfigInvalid("optical.extent must exceed 1");
    if (!(stop_mu >= 0.0 && stop_mu < 1.0)) throw ConfigInvalid("solver.stop_mu must lie in [0, 1)");
    if (!(max_grad > 0.0)) throw ConfigInvalid("solver.max_grad must be > 0");
  }

  /// Radial span of Cauchy data needed to seed the label grid.
  data::GridSpec grid_spec(const ModelParams& p, std::size_t points_per_pulse,
                           double taper_width) const {
    data::GridSpec spec;
    spec.points_per_pulse = points_per_pulse;
    spec.taper_width = taper_width;
    spec.r_in = p.r0 - lead * p.delta;
    spec.r_out = p.r0 + extent * p.delta;
    return spec;
  }
};

/// Solution on the label grid ubar_i = u_lo + i h.
struct OpticalState {
  double t = 0.0;
  double u_lo = 0.0;
  double h = 0.0;
  std::vector<double> r, phi, chi, psi0, mu;

  std::size_t size() const noexcept { return r.size(); }
  double label(std::size_t i) const noexcept { return u_lo + h * static_cast<double>(i); }
};

inline OpticalState initial_state(const data::CauchyData& d, const ModelParams& params) {
  OpticalState s;
  s.t = d.t;
  s.h = d.dr;
  // Node i of the data sits at r = r0 + (i - pulse_begin) dr, so ubar is exact.
  s.u_lo = -d.dr * static_cast<double>(d.pulse_begin);
  const std::size_t n = d.size();
  s.r.resize(n);
  s.mu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.r[i] = params.r0 + s.label(i);
    s.mu[i] = constitutive::speed(params, d.psi0[i]);
  }
  s.phi = d.phi;
  s.chi = d.dr_phi;
  s.psi0 = d.psi0;
  return s;
}

/// Derived quantities at one instant, all on the label grid.
struct OpticalFields {
  std::vector<double> kappa, c, psi_u, chi_u, lbar_psi, m, e;
};

class OpticalSolver {
 public:
  OpticalSolver(OpticalState initial, OpticalConfig cfg, ModelParams params)
      : s_(std::move(initial)), cfg_(cfg), params_(params) {
    cfg_.validate();
    params_.validate();
    if (s_.size() < 8) throw GridTooCoarse("optical solver needs at least 8 labels");
    const std::size_t n = s_.size();
    for (auto* v : {&f_.kappa, &f_.c, &f_.psi_u, &f_.chi_u, &f_.lbar_psi, &f_.m, &f_.e}) v->assign(n, 0.0);
    for (auto* v : {&y0_, &ys_, &k_, &acc_}) v->assign(kVars * n, 0.0);
    pack(s_, y0_);
    evaluate(y0_, k_);  // validates the initial slice
  }

  static constexpr std::size_t kVars = 5;  // r, phi, chi, psi0, mu

  const OpticalState& state() const noexcept { return s_; }
  const OpticalConfig& config() const noexcept { return cfg_; }
  const ModelParams& params() const noexcept { return params_; }
  double t() const noexcept { return s_.t; }

  /// Field derivatives of the committed state (refreshed by every step).
  const OpticalFields& fields() const noexcept { return f_; }

  double stable_dt() const {
    const auto& f = f_;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s_.size(); ++i) best = std::min(best, f.kappa[i] / (2.0 * f.c[i]));
    return cfg_.cfl * s_.h * best;
  }

  double min_mu() const {
    double v = std::numeric_limits<double>::infinity();
    for (double m : s_.mu) v = std::min(v, m);
    return v;
  }

  /// One RK4 step; the state is left untouched if any stage fails.
  void step(double dt) {
    const std::size_t N = y0_.size();
    pack(s_, y0_);
    std::copy(y0_.begin(), y0_.end(), ys_.begin());
    std::fill(acc_.begin(), acc_.end(), 0.0);
    static constexpr double kNext[3] = {0.5, 0.5, 1.0};
    static constexpr double kWeight[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    for (int stage = 0; stage < 4; ++stage) {
      evaluate(ys_, k_);
      for (std::size_t i = 0; i < N; ++i) acc_[i] += kWeight[stage] * k_[i];
      if (stage < 3) {
        const double a = kNext[stage] * dt;
        for (std::size_t i = 0; i < N; ++i) ys_[i] = y0_[i] + a * k_[i];
      }
    }
    for (std::size_t i = 0; i < N; ++i) ys_[i] = y0_[i] + dt * acc_[i];
    evaluate(ys_, k_);  // guards on the candidate state
    unpack(ys_, s_);
    s_.t += dt;
  }

 private:
  void pack(const OpticalState& s, std::vector<double>& y) const {
    const std::size_t n = s.size();
    std::copy(s.r.begin(), s.r.end(), y.begin());
    std::copy(s.phi.begin(), s.phi.end(), y.begin() + n);
    std::copy(s.chi.begin(), s.chi.end(), y.begin() + 2 * n);
    std::copy(s.psi0.begin(), s.psi0.end(), y.begin() + 3 * n);
    std::copy(s.mu.begin(), s.mu.end(), y.begin() + 4 * n);
  }

  void unpack(const std::vector<double>& y, OpticalState& s) const {
    const std::size_t n = s.size();
    std::copy(y.begin(), y.begin() + n, s.r.begin());
    std::copy(y.begin() + n, y.begin() + 2 * n, s.phi.begin());
    std::copy(y.begin() + 2 * n, y.begin() + 3 * n, s.chi.begin());
    std::copy(y.begin() + 3 * n, y.begin() + 4 * n, s.psi0.begin());
    std::copy(y.begin() + 4 * n, y.begin() + 5 * n, s.mu.begin());
  }

  // Right-hand side; also refreshes f_ and applies the guards.
  void evaluate(std::span<const double> y, std::span<double> dy) {
    const std::size_t n = s_.size();
    const auto r = y.subspan(0, n), chi = y.subspan(2 * n, n), psi = y.subspan(3 * n, n),
               mu = y.subspan(4 * n, n);
    const int order = cfg_.stencil_order;
    numerics::derivative_into(r, s_.h, order, f_.kappa);
    numerics::derivative_into(psi, s_.h, order, f_.psi_u);
    numerics::derivative_into(chi, s_.h, order, f_.chi_u);
    double grad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(f_.kappa[i] > 0.0)) throw FanReordered(s_.t, i == 0 ? 0 : i - 1);
      f_.c[i] = constitutive::speed(params_, psi[i]);
      grad = std::max(grad, std::abs(f_.psi_u[i] / f_.kappa[i]));
    }
    if (!(grad <= cfg_.max_grad)) throw BlowupDetected(s_.t, grad);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = f_.c[i], kap = f_.kappa[i];
      dy[i] = -c;
      const bool held = i == 0 || i + 1 == n;
      const double q = (f_.psi_u[i] - c * f_.chi_u[i]) / kap;
      dy[n + i] = held ? 0.0 : psi[i] - c * chi[i];
      dy[2 * n + i] = held ? 0.0 : q;
      dy[3 * n + i] = held ? 0.0 : -c * q + 2.0 * c * c * chi[i] / r[i];
      f_.lbar_psi[i] = dy[3 * n + i];
      if (params_.g2 == 0.0) {
        f_.m[i] = f_.e[i] = 0.0;
      } else {
        f_.m[i] = constitutive::source_m(params_, psi[i], 2.0 * psi[i] * f_.psi_u[i]);
        f_.e[i] = constitutive::source_e(params_, psi[i], 2.0 * psi[i] * f_.lbar_psi[i]);
      }
      dy[4 * n + i] = f_.m[i] + mu[i] * f_.e[i];
    }
    if (cfg_.dissipation > 0.0) {
      const auto phi = y.subspan(n, n);
      const double k = cfg_.dissipation / (64.0 * s_.h);
      auto d6 = [](std::span<const double> f, std::size_t i) {
        return f[i - 3] - 6.0 * f[i - 2] + 15.0 * f[i - 1] - 20.0 * f[i] + 15.0 * f[i + 1] -
               6.0 * f[i + 2] + f[i + 3];
      };
      for (std::size_t i = 3; i + 3 < n; ++i) {
        const double w = k * 2.0 * f_.c[i] / f_.kappa[i];
        dy[n + i] += w * d6(phi, i);
        dy[2 * n + i] += w * d6(chi, i);
        dy[3 * n + i] += w * d6(psi, i);
      }
    }
  }

  OpticalState s_;
  OpticalConfig cfg_;
  ModelParams params_;
  OpticalFields f_;
  std::vector<double> y0_, ys_, k_, acc_;
};

/// Records every `stride`-th label in [0, delta] as a characteristic track.
class OpticalFanRecorder {
 public:
  OpticalFanRecorder(const OpticalState& s, double delta, std::size_t stride) : stride_(stride) {
    if (stride == 0) throw ConfigInvalid("fan stride must be >= 1");
    first_ = static_cast<std::size_t>(std::llround(-s.u_lo / s.h));
    const auto cells = static_cast<std::size_t>(std::llround(delta / s.h));
    if (cells % stride != 0) throw ConfigInvalid("fan stride must divide the points per pulse");
    for (std::size_t i = first_; i <= first_ + cells; i += stride) fan_.labels.push_back(s.label(i));
    if (first_ + cells >= s.size()) throw ConfigInvalid("label grid does not cover the pulse");
  }

  void record(OpticalSolver& solver) {
    const auto& f = solver.fields();
    const auto& s = solver.state();
    fan_.push_sample(s.t);
    const std::size_t k = fan_.n_times() - 1;
    for (std::size_t j = 0; j < fan_.n_tracks(); ++j) {
      const std::size_t i = first_ + j * stride_;
      const auto a = fan_.at(k, j);
      const double dr_psi = f.psi_u[i] / f.kappa[i];
      fan_.r[a] = s.r[i];
      fan_.c[a] = f.c[i];
      fan_.psi0[a] = s.psi0[i];
      fan_.dr_psi0[a] = dr_psi;
      fan_.dt_psi0[a] = f.lbar_psi[i] + f.c[i] * dr_psi;
      fan_.mu_transport[a] = s.mu[i];
      fan_.m[a] = f.m[i];
      fan_.e[a] = f.e[i];
    }
  }

  characteristics::CharacteristicFan take_fan() { return std::move(fan_); }

 private:
  characteristics::CharacteristicFan fan_;
  std::size_t first_ = 0;
  std::size_t stride_ = 1;
};

struct OpticalRun {
  characteristics::CharacteristicFan fan;
  Termination termination;
  OpticalState final_state;
  std::vector<OpticalState> probes;  ///< states at the probe times actually reached
};

/// Evolves until t_end, a guard, or min mu <= stop_mu, landing exactly on the
/// sample times where the fan is recorded (the initial slice always is).
inline OpticalRun evolve(const OpticalState& initial, const OpticalConfig& cfg,
                         const ModelParams& params, std::size_t fan_stride,
                         std::vector<double> sample_times, std::vector<double> probe_times = {}) {
  OpticalSolver solver(initial, cfg, params);
  OpticalFanRecorder rec(initial, params.delta, fan_stride);
  std::vector<double> events;
  for (const auto* list : {&sample_times, &probe_times})
    for (double t : *list)
      if (t > initial.t + 1e-13 && t <= cfg.t_end + 1e-13) events.push_back(t);
  events.push_back(cfg.t_end);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-13; }),
               events.end());
  auto listed = [](const std::vector<double>& ts, double t) {
    return std::any_of(ts.begin(), ts.end(), [&](double s) { return std::abs(s - t) <= 1e-12; });
  };

  OpticalRun out;
  rec.record(solver);
  if (listed(probe_times, initial.t)) out.probes.push_back(solver.state());
  try {
    std::size_t ev = 0;
    while (ev < events.size()) {
      if (solver.min_mu() <= cfg.stop_mu) {
        out.termination.reason = TerminationReason::stop_mu;
        out.termination.detail = "mu_m reached stop_mu = " + std::to_string(cfg.stop_mu);
        break;
      }
      const double target = events[ev];
      double dt = solver.stable_dt();
      bool lands = false;
      if (solver.t() + dt >= target - 1e-13) {
        dt = target - solver.t();
        lands = true;
      }
      solver.step(dt);
      ++out.termination.steps;
      if (lands) {
        if (listed(sample_times, target)) rec.record(solver);
        if (listed(probe_times, target)) out.probes.push_back(solver.state());
        ++ev;
      }
    }
    if (ev == events.size()) out.termination.reason = TerminationReason::t_end_reached;
  } catch (const BlowupDetected& e) {
    out.termination.reason = TerminationReason::blowup_detected;
    out.termination.detail = e.what();
  } catch (const HyperbolicityLoss& e) {
    out.termination.reason = TerminationReason::hyperbolicity_loss;
    out.termination.detail = e.what();
  } catch (const FanReordered& e) {
    out.termination.reason = TerminationReason::blowup_detected;
    out.termination.detail = e.what();
  }
  out.termination.t_last = solver.t();
  out.final_state = solver.state();
  out.fan = rec.take_fan();
  return out;
}

}  // namespace qlshock::solver::optical
