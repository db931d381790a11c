#pragma once

// Quantitative checks evaluated on a recorded characteristic fan: the
// expansions of L psi0, T psi0, psi0, Lbar mu and mu in |t|, the collapse
// bound, trapping, blowup rates, the (mu^-1 T mu)_+ growth law and the
// energy/flux integrals. Every routine is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qlshock/characteristics.hpp"
#include "qlshock/errors.hpp"
#include "qlshock/model.hpp"
#include "qlshock/numerics.hpp"

namespace qlshock::diagnostics {

using characteristics::CharacteristicFan;
using characteristics::GeometryDiagnostics;

/// 1 - (r0^2/2)(1/|t| - 1/r0); for r0 = 2 this is 1 - 2(1/|t| - 1/2).
inline double mechanism_bound(double t, double r0) {
  return 1.0 - 0.5 * r0 * r0 * (1.0 / std::abs(t) - 1.0 / r0);
}

struct ExpansionResiduals {
  double res_Lpsi0 = 0.0;
  double res_Tpsi0 = 0.0;
  double res_psi0 = 0.0;
  double res_Lbmu = 0.0;
  double res_mu_expansion = 0.0;
  double res_mech_bound = 0.0;  ///< max over samples of (mu_m - mechanism_bound)_+
  std::size_t samples = 0;

  /// Expected power of delta for each residual.
  static std::map<std::string, double> powers() {
    return {{"res_Lpsi0", 0.5}, {"res_Tpsi0", 0.5},       {"res_psi0", 1.5},
            {"res_Lbmu", 1.0},  {"res_mu_expansion", 1.0}, {"res_mech_bound", 1.0}};
  }
  std::map<std::string, double> values() const {
    return {{"res_Lpsi0", res_Lpsi0}, {"res_Tpsi0", res_Tpsi0},
            {"res_psi0", res_psi0},   {"res_Lbmu", res_Lbmu},
            {"res_mu_expansion", res_mu_expansion}, {"res_mech_bound", res_mech_bound}};
  }
};

/// Residuals against the initial slice (sample 0, which must sit at t = -r0).
inline ExpansionResiduals expansion_suite(const CharacteristicFan& fan, const ModelParams& p) {
  ExpansionResiduals out;
  if (fan.n_times() == 0) return out;
  if (std::abs(fan.times.front() + p.r0) > 1e-12)
    throw ConfigInvalid("expansion_suite: first fan sample must be the initial slice");
  const double r0 = p.r0;
  const std::size_t n = fan.n_tracks();
  for (std::size_t k = 0; k < fan.n_times(); ++k) {
    const double t = fan.times[k], at = std::abs(t);
    for (std::size_t j = 0; j < n; ++j) {
      const auto i = fan.at(k, j), i0 = fan.at(0, j);
      out.res_Lpsi0 = std::max(out.res_Lpsi0, std::abs(at * fan.l_psi0(k, j) - r0 * fan.l_psi0(0, j)));
      out.res_Tpsi0 = std::max(out.res_Tpsi0, std::abs(at * fan.t_psi0(k, j) - r0 * fan.t_psi0(0, j)));
      out.res_psi0 = std::max(out.res_psi0, std::abs(at * fan.psi0[i] - r0 * fan.psi0[i0]));
      const double lbmu0 = fan.lbar_mu(0, j);
      out.res_Lbmu = std::max(out.res_Lbmu, std::abs(t * t * fan.lbar_mu(k, j) - r0 * r0 * lbmu0));
      out.res_mu_expansion = std::max(
          out.res_mu_expansion,
          std::abs(fan.mu_transport[i] - 1.0 + r0 * r0 * (1.0 / t + 1.0 / r0) * lbmu0));
      ++out.samples;
    }
    out.res_mech_bound = std::max(out.res_mech_bound, fan.mu_m(k) - mechanism_bound(t, r0));
  }
  return out;
}

/// Samples whose mu_m lies within one decade of the smallest mu_m reached.
inline std::vector<std::size_t> last_decade(const CharacteristicFan& fan) {
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < fan.n_times(); ++k) lowest = std::min(lowest, fan.mu_m(k));
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < fan.n_times(); ++k)
    if (fan.mu_m(k) <= 10.0 * lowest) idx.push_back(k);
  return idx;
}

/// Label attaining the smallest mu at the last sample (smallest label on ties).
inline std::size_t critical_track(const CharacteristicFan& fan) {
  const std::size_t k = fan.n_times() - 1;
  std::size_t best = 0;
  for (std::size_t j = 1; j < fan.n_tracks(); ++j)
    if (fan.mu_transport[fan.at(k, j)] < fan.mu_transport[fan.at(k, best)]) best = j;
  return best;
}

struct BlowupResult {
  std::size_t track = 0;
  std::size_t samples = 0;
  double mu_lo = 0.0, mu_hi = 0.0;        ///< mu range of the window on the track
  double that_band_lo = 0.0, that_band_hi = 0.0;  ///< mu |That psi0|
  double alpha_band_lo = 0.0, alpha_band_hi = 0.0;  ///< mu |tr alphabar|
  double slope = std::numeric_limits<double>::quiet_NaN();  ///< d log|That psi0| / d log mu

  double that_ratio() const { return that_band_hi / that_band_lo; }
  double alpha_ratio() const { return alpha_band_hi / alpha_band_lo; }
};

/// Rates along the critical track over the last decade of mu_m.
inline BlowupResult blowup_suite(const CharacteristicFan& fan, const GeometryDiagnostics& g,
                                 double collapse_level = 0.2) {
  double lowest = 1.0;
  for (std::size_t k = 0; k < fan.n_times(); ++k) lowest = std::min(lowest, fan.mu_m(k));
  if (!(lowest < collapse_level))
    throw InsufficientCollapse("mu_m never dropped below " + std::to_string(collapse_level));
  BlowupResult out;
  out.track = critical_track(fan);
  const auto idx = last_decade(fan);
  std::vector<double> lx, ly;
  out.that_band_lo = out.alpha_band_lo = out.mu_lo = std::numeric_limits<double>::infinity();
  for (auto k : idx) {
    const auto i = fan.at(k, out.track);
    const double mu = fan.mu_transport[i];
    const double a = std::abs(g.mu_that_psi0[i]);
    const double b = std::abs(g.mu_tr_alpha_bar[i]);
    out.mu_lo = std::min(out.mu_lo, mu);
    out.mu_hi = std::max(out.mu_hi, mu);
    out.that_band_lo = std::min(out.that_band_lo, a);
    out.that_band_hi = std::max(out.that_band_hi, a);
    out.alpha_band_lo = std::min(out.alpha_band_lo, b);
    out.alpha_band_hi = std::max(out.alpha_band_hi, b);
    if (mu > 0.0 && std::abs(g.that_psi0[i]) > 0.0) {
      lx.push_back(std::log(mu));
      ly.push_back(std::log(std::abs(g.that_psi0[i])));
    }
  }
  out.samples = lx.size();
  if (lx.size() >= 2) out.slope = numerics::fit_line(lx, ly).slope;
  return out;
}

struct TmuBound {
  bool vacuous = true;       ///< (mu^-1 T mu)_+ vanished on every window sample
  double exponent = std::numeric_limits<double>::quiet_NaN();  ///< fitted power of |t - t*|
  double amplitude = 0.0;    ///< max of delta (mu^-1 T mu)_+ |t - t*|^{1/2}
  std::size_t samples = 0;
  bool passes(double min_exponent = -0.7) const { return vacuous || exponent >= min_exponent; }
};

/// max over labels of (mu^-1 T mu)_+ with T mu = d mu / d ubar at fixed t,
/// one value per sample time.
inline std::vector<double> tmu_positive_part(const CharacteristicFan& fan) {
  const std::size_t n = fan.n_tracks();
  const double h = fan.labels[1] - fan.labels[0];
  std::vector<double> out(fan.n_times(), 0.0);
  for (std::size_t k = 0; k < fan.n_times(); ++k) {
    std::span<const double> mu(fan.mu_transport.data() + fan.at(k, 0), n);
    const auto d = numerics::derivative(mu, h, 4);
    for (std::size_t j = 0; j < n; ++j) out[k] = std::max(out[k], d[j] / mu[j]);
  }
  return out;
}

/// Retrospective check of (mu^-1 T mu)_+ <~ delta^-1 |t - t*|^{-1/2} over the
/// last decade of mu_m.
inline TmuBound tmu_bound_check(const CharacteristicFan& fan, double t_star, double delta) {
  TmuBound out;
  const auto pos = tmu_positive_part(fan);
  std::vector<double> lx, ly;
  for (auto k : last_decade(fan)) {
    const double gap = std::abs(t_star - fan.times[k]);
    if (!(gap > 0.0)) continue;
    if (pos[k] > 0.0) {
      out.vacuous = false;
      lx.push_back(std::log(gap));
      ly.push_back(std::log(pos[k]));
      out.amplitude = std::max(out.amplitude, delta * pos[k] * std::sqrt(gap));
    }
  }
  out.samples = lx.size();
  if (lx.size() >= 2) out.exponent = numerics::fit_line(lx, ly).slope;
  else if (!out.vacuous) out.exponent = 0.0;
  return out;
}

struct TrappingResult {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();  ///< max of Lbar mu + (1-tol)/(4t^2)
};

/// At every sample with mu < mu_shock: Lbar mu <= -(1 - tol) / (4 t^2).
inline TrappingResult trapping_check(const CharacteristicFan& fan, double mu_shock = 0.1,
                                     double tol = 0.2) {
  TrappingResult out;
  for (std::size_t k = 0; k < fan.n_times(); ++k) {
    const double t = fan.times[k];
    const double limit = -(1.0 - tol) / (4.0 * t * t);
    for (std::size_t j = 0; j < fan.n_tracks(); ++j) {
      if (!(fan.mu_transport[fan.at(k, j)] < mu_shock)) continue;
      ++out.checked;
      const double margin = fan.lbar_mu(k, j) - limit;
      out.worst_margin = std::max(out.worst_margin, margin);
      if (margin > 0.0) ++out.violations;
    }
  }
  return out;
}

/// max |tr chibar'| over the fan.
inline double chibar_prime_sup(const GeometryDiagnostics& g) {
  double v = 0.0;
  for (double x : g.tr_chibar_prime) v = std::max(v, std::abs(x));
  return v;
}

/// Energies with the coordinate measure of the optical slices: E and Ebar are
/// integrals over ubar in [0, delta] at fixed t, Fbar the flux through the
/// outermost incoming hypersurface up to t. Angular terms vanish radially, so
/// F = K = 0.
struct EnergyRecord {
  std::vector<double> times, E, Ebar, Fbar, K;

  double e_ratio(std::size_t k) const { return E[k] / E.front(); }
};

inline EnergyRecord energy_suite(const CharacteristicFan& fan) {
  EnergyRecord rec;
  const std::size_t n = fan.n_tracks(), nt = fan.n_times();
  rec.times = fan.times;
  rec.E.assign(nt, 0.0);
  rec.Ebar.assign(nt, 0.0);
  rec.Fbar.assign(nt, 0.0);
  rec.K.assign(nt, 0.0);
  const double four_pi = 4.0 * std::acos(-1.0);
  std::vector<double> fe(n), fb(n), flux(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto i = fan.at(k, j);
      const double r2 = fan.r[i] * fan.r[i];
      const double L = fan.l_psi0(k, j), Lb = fan.lbar_psi0(k, j);
      fe[j] = L * L * r2;
      fb[j] = fan.mu_transport[i] * Lb * Lb * r2;
    }
    rec.E[k] = four_pi * numerics::trapezoid(fan.labels, fe);
    rec.Ebar[k] = four_pi * numerics::trapezoid(fan.labels, fb);
    const auto i = fan.at(k, n - 1);
    const double Lb = fan.lbar_psi0(k, n - 1);
    flux[k] = Lb * Lb * fan.r[i] * fan.r[i];
    if (k > 0)
      rec.Fbar[k] = rec.Fbar[k - 1] +
                    four_pi * 0.5 * (flux[k] + flux[k - 1]) * (fan.times[k] - fan.times[k - 1]);
  }
  return rec;
}

/// Extremes of E(t)/E(t0) over samples with mu_m above `mu_floor`.
struct EnergyBand {
  double lo = 1.0, hi = 1.0;
  std::size_t samples = 0;
};

inline EnergyBand energy_band(const EnergyRecord& rec, const CharacteristicFan& fan,
                              double mu_floor) {
  EnergyBand b;
  if (rec.E.empty() || !(rec.E.front() > 0.0)) return b;
  for (std::size_t k = 0; k < rec.E.size(); ++k) {
    if (!(fan.mu_m(k) > mu_floor)) continue;
    b.lo = std::min(b.lo, rec.e_ratio(k));
    b.hi = std::max(b.hi, rec.e_ratio(k));
    ++b.samples;
  }
  return b;
}

/// Log-log slope of values against delta; "floor" when every value is below
/// `floor` (no delta dependence to measure).
struct SweepSlope {
  double slope = std::numeric_limits<double>::quiet_NaN();
  bool floor = false;
};

inline SweepSlope sweep_slope(const std::vector<double>& deltas, const std::vector<double>& values,
                              double floor = 1e-13) {
  SweepSlope s;
  s.floor = std::all_of(values.begin(), values.end(), [&](double v) { return std::abs(v) <= floor; });
  if (!s.floor) s.slope = numerics::loglog_slope(deltas, values);
  return s;
}

/// max/min of positive values; 1 when every value is non-positive.
inline double drift_ratio(const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi > 0.0 ? hi / lo : 1.0;
}

}  // namespace qlshock::diagnostics
