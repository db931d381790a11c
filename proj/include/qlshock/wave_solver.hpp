#pragma once

// Radial evolution of d_t^2 phi = c^2(psi0) (d_r^2 phi + 2/r d_r phi) as the
// first-order system phi_t = psi0, psi0_t = c^2 (phi_rr + 2 phi_r / r) with
// centered finite differences in r and classical RK4 in t. The wave speed is
// evaluated pointwise once per stage.
//
// Extra ODEs that are driven by the field (characteristics, transported
// quantities) can ride along in the same Runge-Kutta stages through the
// Passenger interface.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qlshock/data_builder.hpp"
#include "qlshock/errors.hpp"
#include "qlshock/model.hpp"
#include "qlshock/numerics.hpp"

namespace qlshock::solver {

enum class WindowMode { fixed, comoving };

struct SolverConfig {
  double cfl = 0.4;
  int stencil_order = 4;
  double r_in = 0.25;
  double r_out = 4.0;
  double t_end = -0.5;
  double stop_mu = 0.02;  ///< handed to the characteristic fan
  double max_grad = 1e6;  ///< guard on |d_r psi0|
  double dissipation = 0.0;  ///< Kreiss-Oliger strength, 0 disables
  WindowMode window = WindowMode::fixed;
  // Comoving window: the grid covers [front - lead, front - lead + length] with
  // front = -t the position of the innermost incoming characteristic.
  double window_lead = 0.05;
  double window_length = 0.5;

  void validate() const {
    if (!(cfl > 0.0 && cfl < 1.0)) throw ConfigInvalid("solver.cfl must lie in (0, 1)");
    if (stencil_order != 2 && stencil_order != 4)
      throw ConfigInvalid("solver.stencil_order must be 2 or 4");
    if (!(r_in > 0.0)) throw ConfigInvalid("solver.r_in must be > 0");
    if (!(r_out > r_in)) throw ConfigInvalid("solver.r_out must exceed solver.r_in");
    if (!(stop_mu >= 0.0 && stop_mu < 1.0)) throw ConfigInvalid("solver.stop_mu must lie in [0, 1)");
    if (!(max_grad > 0.0)) throw ConfigInvalid("solver.max_grad must be > 0");
    if (!(dissipation >= 0.0)) throw ConfigInvalid("solver.dissipation must be >= 0");
    if (window == WindowMode::comoving && !(window_lead > 0.0 && window_length > window_lead))
      throw ConfigInvalid("solver window must satisfy 0 < window_lead < window_length");
  }
};

/// Radial solution slice at time t on the uniform grid r_i = r_lo + i dr.
struct FieldState {
  double t = 0.0;
  double r_lo = 0.0;
  double dr = 0.0;
  std::vector<double> phi;
  std::vector<double> psi0;
  std::vector<double> dr_phi;  ///< derived; refreshed by refresh_derived()

  std::size_t size() const noexcept { return phi.size(); }
  double r(std::size_t i) const noexcept { return r_lo + dr * static_cast<double>(i); }
  double r_hi() const noexcept { return r(size() - 1); }

  void refresh_derived(int order) { dr_phi = numerics::derivative(phi, dr, order); }

  static FieldState from_data(const data::CauchyData& d, int order = 4) {
    FieldState s{d.t, d.r_lo, d.dr, d.phi, d.psi0, {}};
    s.refresh_derived(order);
    return s;
  }
};

/// Field values interpolated at an arbitrary radius inside a stage.
struct PointSample {
  double psi0 = 0.0;
  double dr_psi0 = 0.0;
  double dt_psi0 = 0.0;
};

/// Read-only view of one Runge-Kutta stage handed to passengers.
struct StageView {
  double t = 0.0;
  double r_lo = 0.0;
  double dr = 0.0;
  int order = 4;
  std::span<const double> phi;
  std::span<const double> psi0;
  std::span<const double> dt_psi0;

  double r_hi() const noexcept { return r_lo + dr * static_cast<double>(psi0.size() - 1); }

  PointSample sample(double r) const {
    const std::size_t n = psi0.size();
    const double u = (r - r_lo) / dr;
    if (!(u >= 2.0 && u <= static_cast<double>(n) - 3.0))
      throw LeftDomain("sample point r = " + std::to_string(r) + " left the grid [" +
                       std::to_string(r_lo) + ", " + std::to_string(r_hi()) + "]");
    const auto base = std::min(static_cast<std::size_t>(u) - 1, n - 4);
    const double inv_h = 1.0 / dr;
    double dpsi[4];
    for (std::size_t k = 0; k < 4; ++k)
      dpsi[k] = numerics::d1_at(psi0, base + k, inv_h, order);
    const double x0 = r_lo + dr * static_cast<double>(base);
    const auto v = numerics::cubic_lagrange(psi0.subspan(base, 4), x0, dr, r);
    const auto g = numerics::cubic_lagrange(std::span<const double>(dpsi, 4), x0, dr, r);
    const auto a = numerics::cubic_lagrange(dt_psi0.subspan(base, 4), x0, dr, r);
    return {v.value, g.value, a.value};
  }
};

/// ODEs integrated in lockstep with the field.
template <class P>
concept Passenger = requires(P& p, const P& cp, const StageView& v, std::span<const double> y,
                             std::span<double> dy) {
  { cp.size() } -> std::convertible_to<std::size_t>;
  cp.rhs(v, y, dy);
  p.record(v, y);
  { cp.stop_reason(y) } -> std::convertible_to<std::optional<std::string>>;
};

struct NoPassenger {
  std::size_t size() const { return 0; }
  void rhs(const StageView&, std::span<const double>, std::span<double>) const {}
  void record(const StageView&, std::span<const double>) {}
  std::optional<std::string> stop_reason(std::span<const double>) const { return std::nullopt; }
};

class RadialWaveSolver {
 public:
  RadialWaveSolver(FieldState initial, SolverConfig config, ModelParams params)
      : state_(std::move(initial)), cfg_(config), params_(params) {
    cfg_.validate();
    params_.validate();
    if (state_.size() < 8) throw GridTooCoarse("solver needs at least 8 grid points");
    const std::size_t n = state_.size();
    for (auto* v : {&phi_s_, &psi_s_, &kphi_, &kpsi_, &accphi_, &accpsi_}) v->assign(n, 0.0);
    max_speed_ = max_speed(state_.psi0);
  }

  const FieldState& state() const noexcept { return state_; }
  const SolverConfig& config() const noexcept { return cfg_; }
  const ModelParams& params() const noexcept { return params_; }
  double t() const noexcept { return state_.t; }

  /// dt = cfl dr / max c.
  double stable_dt() const noexcept { return cfg_.cfl * state_.dr / max_speed_; }

  /// One RK4 step of size dt. The state is replaced only when every stage
  /// succeeds; on HyperbolicityLoss, LeftDomain or BlowupDetected it is left
  /// at the previous time.
  template <Passenger P>
  void step(double dt, P& passenger, std::vector<double>& y) {
    const std::size_t n = state_.size();
    const std::size_t m = passenger.size();
    y.resize(m);
    y_s_.assign(y.begin(), y.end());
    ky_.assign(m, 0.0);
    accy_.assign(m, 0.0);
    std::copy(state_.phi.begin(), state_.phi.end(), phi_s_.begin());
    std::copy(state_.psi0.begin(), state_.psi0.end(), psi_s_.begin());
    std::fill(accphi_.begin(), accphi_.end(), 0.0);
    std::fill(accpsi_.begin(), accpsi_.end(), 0.0);

    static constexpr double kStageTime[4] = {0.0, 0.5, 0.5, 1.0};
    static constexpr double kNext[4] = {0.5, 0.5, 1.0, 0.0};
    static constexpr double kWeight[4] = {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
    for (int stage = 0; stage < 4; ++stage) {
      const double ts = state_.t + kStageTime[stage] * dt;
      field_rhs(phi_s_, psi_s_, kphi_, kpsi_);
      if (m > 0) {
        const StageView view{ts, state_.r_lo, state_.dr, cfg_.stencil_order, phi_s_, psi_s_, kpsi_};
        passenger.rhs(view, y_s_, ky_);
      }
      const double w = kWeight[stage];
      for (std::size_t i = 0; i < n; ++i) {
        accphi_[i] += w * kphi_[i];
        accpsi_[i] += w * kpsi_[i];
      }
      for (std::size_t i = 0; i < m; ++i) accy_[i] += w * ky_[i];
      if (stage < 3) {
        const double a = kNext[stage] * dt;
        for (std::size_t i = 0; i < n; ++i) {
          phi_s_[i] = state_.phi[i] + a * kphi_[i];
          psi_s_[i] = state_.psi0[i] + a * kpsi_[i];
        }
        for (std::size_t i = 0; i < m; ++i) y_s_[i] = y[i] + a * ky_[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      phi_s_[i] = state_.phi[i] + dt * accphi_[i];
      psi_s_[i] = state_.psi0[i] + dt * accpsi_[i];
    }
    const double grad = max_abs_gradient(psi_s_);
    if (!(grad <= cfg_.max_grad)) throw BlowupDetected(state_.t, grad);
    const double new_max_speed = max_speed(psi_s_);  // throws on hyperbolicity loss
    std::swap(state_.phi, phi_s_);
    std::swap(state_.psi0, psi_s_);
    for (std::size_t i = 0; i < m; ++i) y[i] += dt * accy_[i];
    state_.t += dt;
    max_speed_ = new_max_speed;
    if (cfg_.window == WindowMode::comoving) follow_front();
  }

  void step(double dt) {
    NoPassenger none;
    std::vector<double> y;
    step(dt, none, y);
  }

  /// View of the committed state (dt_psi0 evaluated afresh) for recording.
  template <Passenger P>
  void record(P& passenger, std::span<const double> y) {
    field_rhs(state_.phi, state_.psi0, kphi_, kpsi_);
    const StageView view{state_.t, state_.r_lo, state_.dr, cfg_.stencil_order,
                         state_.phi, state_.psi0, kpsi_};
    passenger.record(view, y);
  }

  FieldState snapshot() const {
    FieldState s = state_;
    s.refresh_derived(cfg_.stencil_order);
    return s;
  }

  /// Right-hand side of the semi-discrete system. Boundary nodes are held.
  void field_rhs(std::span<const double> phi, std::span<const double> psi, std::span<double> dphi,
                 std::span<double> dpsi) const {
    const std::size_t n = phi.size();
    const double inv_h = 1.0 / state_.dr;
    const double inv_h2 = inv_h * inv_h;
    const int order = cfg_.stencil_order;
    dphi[0] = dpsi[0] = dphi[n - 1] = dpsi[n - 1] = 0.0;
    const bool linear = params_.g2 == 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double r = state_.r_lo + state_.dr * static_cast<double>(i);
      const double lap = numerics::d2_at(phi, i, inv_h2, order) +
                         2.0 / r * numerics::d1_at(phi, i, inv_h, order);
      double c2 = 1.0;
      if (!linear) {
        const double q = constitutive::checked_radicand(params_, psi[i] * psi[i]);
        c2 = 1.0 / q;
      }
      dphi[i] = psi[i];
      dpsi[i] = c2 * lap;
    }
    if (cfg_.dissipation > 0.0) add_dissipation(phi, psi, dphi, dpsi);
  }

 private:
  // Sixth-difference Kreiss-Oliger term, applied where the full stencil fits.
  void add_dissipation(std::span<const double> phi, std::span<const double> psi,
                       std::span<double> dphi, std::span<double> dpsi) const {
    const std::size_t n = phi.size();
    const double k = cfg_.dissipation / (64.0 * state_.dr);
    auto d6 = [](std::span<const double> f, std::size_t i) {
      return f[i - 3] - 6.0 * f[i - 2] + 15.0 * f[i - 1] - 20.0 * f[i] + 15.0 * f[i + 1] -
             6.0 * f[i + 2] + f[i + 3];
    };
    for (std::size_t i = 3; i + 3 < n; ++i) {
      dphi[i] += k * d6(phi, i);
      dpsi[i] += k * d6(psi, i);
    }
  }

  double max_speed(std::span<const double> psi) const {
    if (params_.g2 == 0.0) return 1.0;
    double best = 0.0;
    for (double v : psi) best = std::max(best, constitutive::speed(params_, v));
    return best;
  }

  double max_abs_gradient(std::span<const double> psi) const {
    double best = 0.0;
    const double inv = 0.5 / state_.dr;
    for (std::size_t i = 1; i + 1 < psi.size(); ++i)
      best = std::max(best, std::abs(psi[i + 1] - psi[i - 1]) * inv);
    if (!std::isfinite(best)) return std::numeric_limits<double>::infinity();
    return best;
  }

  // Shift the grid inward by whole cells so that the innermost node stays
  // window_lead ahead of the front r = -t. The node that enters ahead of the
  // front is zero; the outermost node is dropped.
  void follow_front() {
    const double target = -state_.t - cfg_.window_lead;
    while (state_.r_lo - target >= state_.dr) {
      state_.phi.pop_back();
      state_.psi0.pop_back();
      state_.phi.insert(state_.phi.begin(), 0.0);
      state_.psi0.insert(state_.psi0.begin(), 0.0);
      state_.r_lo -= state_.dr;
    }
    if (state_.r_lo <= 0.0) throw LeftDomain("comoving window reached the origin");
  }

  FieldState state_;
  SolverConfig cfg_;
  ModelParams params_;
  double max_speed_ = 1.0;
  std::vector<double> phi_s_, psi_s_, kphi_, kpsi_, accphi_, accpsi_;
  std::vector<double> y_s_, ky_, accy_;
};

/// Single explicit step at the CFL-limited dt.
inline FieldState step(const FieldState& state, const SolverConfig& config,
                       const ModelParams& params) {
  RadialWaveSolver solver(state, config, params);
  solver.step(solver.stable_dt());
  return solver.snapshot();
}

enum class TerminationReason { t_end_reached, blowup_detected, stop_mu, hyperbolicity_loss, left_domain };

inline const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::t_end_reached: return "t_end_reached";
    case TerminationReason::blowup_detected: return "blowup_detected";
    case TerminationReason::stop_mu: return "stop_mu";
    case TerminationReason::hyperbolicity_loss: return "hyperbolicity_loss";
    case TerminationReason::left_domain: return "left_domain";
  }
  return "unknown";
}

struct Termination {
  TerminationReason reason = TerminationReason::t_end_reached;
  double t_last = 0.0;  ///< last time with a valid state
  std::string detail;
  std::size_t steps = 0;
};

struct EvolveResult {
  std::vector<FieldState> probes;  ///< states at the probe times actually reached
  Termination termination;
};

struct EvolveOptions {
  std::vector<double> probe_times;   ///< field snapshots
  std::vector<double> sample_times;  ///< passenger records
};

/// Initial window of the grid for the given config.
inline data::GridSpec grid_spec_for(const SolverConfig& cfg, const ModelParams& params,
                                    std::size_t points_per_pulse, double taper_width) {
  data::GridSpec spec;
  spec.points_per_pulse = points_per_pulse;
  spec.taper_width = taper_width;
  if (cfg.window == WindowMode::comoving) {
    spec.r_in = params.r0 - cfg.window_lead;
    spec.r_out = spec.r_in + cfg.window_length;
  } else {
    spec.r_in = cfg.r_in;
    spec.r_out = cfg.r_out;
  }
  return spec;
}

/// Evolves from `initial` until t_end, a solver guard, or the passenger's stop
/// condition. Steps are shortened to land exactly on probe and sample times.
template <Passenger P>
EvolveResult evolve(FieldState initial, const SolverConfig& config, const ModelParams& params,
                    const EvolveOptions& options, P& passenger, std::vector<double>& y) {
  for (std::size_t i = 1; i < options.probe_times.size(); ++i)
    if (!(options.probe_times[i] > options.probe_times[i - 1]))
      throw ConfigInvalid("probe times must be strictly increasing");
  std::vector<double> events;
  for (double t : options.probe_times)
    if (t >= initial.t && t <= config.t_end) events.push_back(t);
  for (double t : options.sample_times)
    if (t >= initial.t && t <= config.t_end) events.push_back(t);
  events.push_back(config.t_end);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-13; }),
               events.end());

  RadialWaveSolver solver(std::move(initial), config, params);
  EvolveResult out;
  std::size_t next_probe = 0, next_sample = 0;
  auto is_at = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  auto handle_events = [&] {
    const double t = solver.t();
    while (next_probe < options.probe_times.size() && options.probe_times[next_probe] < t - 1e-12)
      ++next_probe;
    while (next_sample < options.sample_times.size() &&
           options.sample_times[next_sample] < t - 1e-12)
      ++next_sample;
    if (next_probe < options.probe_times.size() && is_at(options.probe_times[next_probe], t)) {
      out.probes.push_back(solver.snapshot());
      out.probes.back().t = options.probe_times[next_probe++];
    }
    if (next_sample < options.sample_times.size() && is_at(options.sample_times[next_sample], t)) {
      solver.record(passenger, y);
      ++next_sample;
    }
  };

  handle_events();
  std::size_t ev = 0;
  while (ev < events.size() && events[ev] <= solver.t() + 1e-12) ++ev;
  out.termination.t_last = solver.t();
  try {
    if (auto why = passenger.stop_reason(y)) {
      out.termination = {TerminationReason::stop_mu, solver.t(), *why, 0};
      return out;
    }
    while (ev < events.size()) {
      const double target = events[ev];
      double dt = solver.stable_dt();
      bool lands = false;
      if (solver.t() + dt >= target - 1e-13) {
        dt = target - solver.t();
        lands = true;
      }
      solver.step(dt, passenger, y);
      ++out.termination.steps;
      if (lands) {
        handle_events();
        ++ev;
      }
      out.termination.t_last = solver.t();
      if (auto why = passenger.stop_reason(y)) {
        out.termination.reason = TerminationReason::stop_mu;
        out.termination.detail = *why;
        return out;
      }
    }
    out.termination.reason = TerminationReason::t_end_reached;
  } catch (const BlowupDetected& e) {
    out.termination.reason = TerminationReason::blowup_detected;
    out.termination.detail = e.what();
  } catch (const HyperbolicityLoss& e) {
    out.termination.reason = TerminationReason::hyperbolicity_loss;
    out.termination.detail = e.what();
  } catch (const LeftDomain& e) {
    out.termination.reason = TerminationReason::left_domain;
    out.termination.detail = e.what();
  }
  out.termination.t_last = solver.t();
  return out;
}

inline EvolveResult evolve(FieldState initial, const SolverConfig& config, const ModelParams& params,
                           const std::vector<double>& probe_times) {
  NoPassenger none;
  std::vector<double> y;
  return evolve(std::move(initial), config, params, EvolveOptions{probe_times, {}}, none, y);
}

}  // namespace qlshock::solver
