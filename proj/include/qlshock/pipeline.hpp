#pragma once

// Full run: seed -> Cauchy data -> evolution with the characteristic fan ->
// flow-map mu -> shock detection -> diagnostics -> verdicts. A sweep repeats
// the run over a list of pulse widths and fits the delta dependence.

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qlshock/characteristics.hpp"
#include "qlshock/config.hpp"
#include "qlshock/data_builder.hpp"
#include "qlshock/diagnostics.hpp"
#include "qlshock/errors.hpp"
#include "qlshock/linear_oracle.hpp"
#include "qlshock/model.hpp"
#include "qlshock/optical_solver.hpp"
#include "qlshock/wave_solver.hpp"

namespace qlshock::pipeline {

using characteristics::CharacteristicFan;

/// Name of the most derived qlshock error type (or "std::exception").
inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const HyperbolicityLoss*>(&e)) return "HyperbolicityLoss";
  if (dynamic_cast<const OdeDivergence*>(&e)) return "OdeDivergence";
  if (dynamic_cast<const GridTooCoarse*>(&e)) return "GridTooCoarse";
  if (dynamic_cast<const DegenerateDensity*>(&e)) return "DegenerateDensity";
  if (dynamic_cast<const BlowupDetected*>(&e)) return "BlowupDetected";
  if (dynamic_cast<const LeftDomain*>(&e)) return "LeftDomain";
  if (dynamic_cast<const FanReordered*>(&e)) return "FanReordered";
  if (dynamic_cast<const NoShock*>(&e)) return "NoShock";
  if (dynamic_cast<const InsufficientCollapse*>(&e)) return "InsufficientCollapse";
  if (dynamic_cast<const ConfigInvalid*>(&e)) return "ConfigInvalid";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "std::exception";
}

/// Reads a seed CSV with a header row and columns s, phi1, phi2 on a uniform
/// grid from s = 0 to s = 1.
inline data::SeedData read_seed_file(const std::string& path, std::size_t n_intervals) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("seed.file: cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<double> s, a, b;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(config::detail::parse_double("seed.file", cell));
    if (row.size() != 3) throw ConfigInvalid("seed.file: expected 3 columns (s, phi1, phi2)");
    s.push_back(row[0]);
    a.push_back(row[1]);
    b.push_back(row[2]);
  }
  if (s.size() < 4) throw ConfigInvalid("seed.file: need at least 4 rows");
  const double h = 1.0 / static_cast<double>(s.size() - 1);
  for (std::size_t k = 0; k < s.size(); ++k)
    if (std::abs(s[k] - h * static_cast<double>(k)) > 1e-9)
      throw ConfigInvalid("seed.file: s must be uniformly spaced on [0, 1]");
  auto seed = data::SeedData::from_samples(std::move(a), std::move(b), n_intervals);
  seed.name = "file";
  return seed;
}

/// Builds the seed on the s-grid matching the pulse resolution.
inline data::SeedData make_seed(const config::SeedSpec& spec, const ModelParams& p,
                                std::size_t n_intervals) {
  data::SeedData unit;
  if (spec.profile == "bump") unit = data::SeedData::bump(1.0, n_intervals);
  else if (spec.profile == "sine2") unit = data::SeedData::sine2(1.0, n_intervals);
  else if (spec.profile == "zero") unit = data::SeedData::zero(n_intervals);
  else if (spec.profile == "file") unit = read_seed_file(spec.file, n_intervals);
  else throw ConfigInvalid("seed.profile: unknown profile '" + spec.profile + "'");

  if (spec.profile != "zero" && spec.profile != "file" && !spec.amplitude && !spec.strength)
    throw ConfigInvalid("seed.amplitude or seed.strength is required for profile " + spec.profile);
  if (spec.phi2_scale != 0.0) {
    auto f = unit.phi1;
    const double k = spec.phi2_scale;
    unit.phi2 = [f, k](double s) { return k * f(s); };
  }
  data::SeedData seed = unit;
  if (spec.strength) seed = data::with_strength(unit, p.g2, *spec.strength);
  else if (spec.amplitude) seed = unit.scaled(*spec.amplitude);
  seed.name = unit.name;
  seed.validate();
  return seed;
}

/// Cauchy data for the configured scheme.
struct BuiltData {
  data::SeedData seed;
  data::Phi0Profile profile;
  data::CauchyData data;
  data::RadiationResidual radiation;
  data::ShockCondition shock_condition;
};

inline solver::SolverConfig eulerian_config(const config::RunConfig& c) {
  solver::SolverConfig s;
  s.cfl = c.cfl;
  s.stencil_order = c.stencil_order;
  s.r_in = c.r_in;
  s.r_out = c.r_out;
  s.t_end = c.t_end;
  s.stop_mu = c.stop_mu;
  s.max_grad = c.max_grad;
  s.dissipation = c.dissipation;
  s.window = c.comoving ? solver::WindowMode::comoving : solver::WindowMode::fixed;
  s.window_lead = c.window_lead;
  s.window_length = c.window_length;
  s.validate();
  return s;
}

inline solver::optical::OpticalConfig optical_config(const config::RunConfig& c) {
  solver::optical::OpticalConfig o;
  o.cfl = c.optical_cfl;
  o.stencil_order = c.stencil_order;
  o.lead = c.optical_lead;
  o.extent = c.optical_extent;
  o.t_end = c.t_end;
  o.stop_mu = c.stop_mu;
  o.max_grad = c.max_grad;
  o.dissipation = c.optical_dissipation;
  o.validate();
  return o;
}

inline BuiltData build_data(const config::RunConfig& c) {
  c.validate_physics();
  BuiltData b;
  b.seed = make_seed(c.seed, c.model, c.points_per_pulse);
  b.shock_condition = data::check_shock_condition(b.seed, c.model);
  b.profile = data::build_phi0(b.seed, c.model);
  const auto spec = c.scheme == config::Scheme::optical
                        ? optical_config(c).grid_spec(c.model, c.points_per_pulse, c.taper_width)
                        : solver::grid_spec_for(eulerian_config(c), c.model, c.points_per_pulse,
                                                c.taper_width);
  b.data = data::assemble(b.seed, b.profile, c.model, spec);
  b.radiation = data::check_no_outgoing_radiation(b.data, c.model);
  return b;
}

struct StageError {
  std::string stage;
  std::string kind;
  std::string message;
};

/// Field slice on its native grid: labels are empty for the Eulerian scheme.
struct ProbeSnapshot {
  double t = 0.0;
  std::vector<double> ubar, r, phi, psi0;
};

struct LinearOracleRecord {
  bool evaluated = false;
  double max_abs_error = 0.0;
  double max_abs_phi = 0.0;
  std::size_t points = 0;
};

struct Check {
  std::string name;
  std::string basis;  ///< the statement being tested
  double residual = 0.0;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::string verdict;  ///< pass | fail | info | skipped
  bool hard = false;
};

struct RunResult {
  double delta = 0.0;
  std::optional<StageError> error;
  bool seed_vanishes_at_one = true;
  data::ShockCondition shock_condition;
  data::RadiationResidual radiation;
  solver::Termination termination;
  CharacteristicFan fan;
  std::string flowmap_note;
  characteristics::CrossCheck cross;
  bool cross_ok = false;
  std::optional<characteristics::ShockReport> shock;
  std::string no_shock_reason;
  diagnostics::ExpansionResiduals expansions;
  characteristics::GeometryDiagnostics geometry;
  double chibar_sup = 0.0;
  diagnostics::TrappingResult trapping;
  std::optional<diagnostics::BlowupResult> blowup;
  std::string blowup_note;
  std::optional<diagnostics::TmuBound> tmu;
  diagnostics::EnergyRecord energy;
  diagnostics::EnergyBand energy_band;
  LinearOracleRecord linear;
  std::vector<ProbeSnapshot> probes;
  std::vector<Check> checks;

  /// Shock condition met and a collapse time extracted.
  bool shock_run() const { return shock_condition.met && shock && shock->shock; }
  double shock_constant() const {
    return shock ? (shock->t_star + 1.0) / delta : std::numeric_limits<double>::quiet_NaN();
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

namespace detail {

inline ProbeSnapshot snapshot(const solver::FieldState& s) {
  ProbeSnapshot p;
  p.t = s.t;
  p.phi = s.phi;
  p.psi0 = s.psi0;
  p.r.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) p.r[i] = s.r(i);
  return p;
}

inline ProbeSnapshot snapshot(const solver::optical::OpticalState& s) {
  ProbeSnapshot p;
  p.t = s.t;
  p.r = s.r;
  p.phi = s.phi;
  p.psi0 = s.psi0;
  p.ubar.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) p.ubar[i] = s.label(i);
  return p;
}

/// Compares on ubar = r + t <= delta. Further out the exact solution carries
/// the constant wake of r phi, which the held outer boundary does not follow;
/// that region lies downstream of the pulse and never feeds back into it.
inline void oracle_compare(const solver::DalembertOracle& oracle, const ProbeSnapshot& s,
                           double delta, LinearOracleRecord& rec) {
  for (std::size_t i = 0; i < s.r.size(); ++i) {
    if (!(s.r[i] > 0.0) || s.r[i] + s.t > delta + 1e-12) continue;
    const double exact = oracle.phi(s.t, s.r[i]);
    rec.max_abs_error = std::max(rec.max_abs_error, std::abs(s.phi[i] - exact));
    rec.max_abs_phi = std::max(rec.max_abs_phi, std::abs(exact));
    ++rec.points;
  }
  rec.evaluated = true;
}

inline Check info(std::string name, std::string basis, double residual) {
  return Check{std::move(name), std::move(basis), residual,
               std::numeric_limits<double>::quiet_NaN(), "info", false};
}

inline Check bounded(std::string name, std::string basis, double residual, double threshold,
                     bool hard = false) {
  return Check{std::move(name), std::move(basis), residual, threshold,
               residual <= threshold ? "pass" : "fail", hard};
}

inline Check skipped(std::string name, std::string basis, bool hard = false) {
  return Check{std::move(name), std::move(basis), std::numeric_limits<double>::quiet_NaN(),
               std::numeric_limits<double>::quiet_NaN(), "skipped", hard};
}

}  // namespace detail

/// Per-run verdicts. Quantities whose content is a delta rate are recorded as
/// info here and judged by the sweep.
inline std::vector<Check> run_checks(const RunResult& r, const config::RunConfig& c) {
  using detail::bounded;
  using detail::info;
  using detail::skipped;
  const auto& tol = c.tol;
  std::vector<Check> out;
  if (r.error)
    out.push_back(Check{"run_completed", "every stage finished", 1.0, 0.0, "fail", false});
  out.push_back(info("radiation_lbar_phi", "sup|Lbar phi| / delta^(3/2) on the initial pulse",
                     r.radiation.ratio_lbar));
  out.push_back(info("radiation_lbar2_phi", "sup|Lbar^2 phi| / delta^(3/2) on the initial pulse",
                     r.radiation.ratio_lbar2));
  {
    Check k{"shock_condition", "min g2 phi1 d_s phi1 <= -1/6", r.shock_condition.min_value,
            data::kShockThreshold, r.shock_condition.met ? "pass" : "info", false};
    out.push_back(k);
  }
  if (r.shock_condition.met) {
    if (r.shock_run())
      out.push_back(Check{"shock_time", "(t* + 1) / delta, t* from the fit mu_m = A + B/t",
                          r.shock_constant(), std::numeric_limits<double>::quiet_NaN(), "pass",
                          false});
    else
      out.push_back(Check{"shock_time", "shock condition met but no collapse extracted",
                          std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(), "fail", false});
    out.push_back(bounded("mechanism_bound", "max over samples of mu_m - (1 - (r0^2/2)(1/|t| - 1/r0))",
                          r.expansions.res_mech_bound, tol.mech_constant * r.delta));
  } else {
    out.push_back(info("mechanism_bound", "max over samples of mu_m - (1 - (r0^2/2)(1/|t| - 1/r0))",
                       r.expansions.res_mech_bound));
  }
  out.push_back(info("mu_expansion", "sup|mu - 1 + r0^2 (1/t + 1/r0) Lbar mu(-r0)|",
                     r.expansions.res_mu_expansion));
  out.push_back(info("lbar_mu_rigidity", "sup| t^2 Lbar mu(t) - r0^2 Lbar mu(-r0) |",
                     r.expansions.res_Lbmu));
  out.push_back(info("l_psi0_expansion", "sup| |t| L psi0(t) - r0 L psi0(-r0) |", r.expansions.res_Lpsi0));
  out.push_back(info("t_psi0_expansion", "sup| |t| T psi0(t) - r0 T psi0(-r0) |", r.expansions.res_Tpsi0));
  out.push_back(info("psi0_expansion", "sup| |t| psi0(t) - r0 psi0(-r0) |", r.expansions.res_psi0));

  out.push_back(bounded("trapping", "violations of Lbar mu <= -(1 - tol)/(4 t^2) where mu < mu_shock",
                        static_cast<double>(r.trapping.violations), 0.0, true));
  if (r.cross_ok && r.cross.samples > 0)
    out.push_back(bounded("cross_method_mu", "max |mu_transport - mu_flowmap| / mu_m where mu_m > floor",
                          r.cross.max_rel_to_mu_m, tol.cross_rel_max, true));
  else if (!r.cross_ok && !r.fan.labels.empty())
    out.push_back(Check{"cross_method_mu", "flow-map mu unavailable: " + r.flowmap_note,
                        std::numeric_limits<double>::quiet_NaN(), tol.cross_rel_max, "fail", true});
  else
    out.push_back(skipped("cross_method_mu", "no samples above the mu floor", true));

  if (r.blowup) {
    out.push_back(bounded("blowup_that_slope", "|slope of log|That psi0| vs log mu + 1| over the last decade",
                          std::abs(r.blowup->slope + 1.0), tol.blowup_slope_tol));
    out.push_back(bounded("blowup_alpha_band", "hi/lo of mu |tr alphabar| over the last decade",
                          r.blowup->alpha_ratio(), tol.band_ratio_max));
    out.push_back(bounded("blowup_that_band", "hi/lo of mu |That psi0| over the last decade",
                          r.blowup->that_ratio(), tol.band_ratio_max));
  } else {
    out.push_back(skipped("blowup_that_slope", r.blowup_note));
    out.push_back(skipped("blowup_alpha_band", r.blowup_note));
    out.push_back(skipped("blowup_that_band", r.blowup_note));
  }
  if (r.tmu && r.blowup) {
    Check k{"tmu_exponent", "fitted power of |t - t*| in (mu^-1 T mu)_+ is >= the threshold",
            r.tmu->vacuous ? 0.0 : r.tmu->exponent, tol.tmu_exponent_min,
            r.tmu->passes(tol.tmu_exponent_min) ? "pass" : "fail", false};
    out.push_back(k);
  } else {
    out.push_back(skipped("tmu_exponent", r.tmu ? "run stopped before mu_m reached the collapse level"
                                                : "no collapse time"));
  }

  const auto& band = r.energy_band;
  if (r.energy.E.empty() || !(r.energy.E.front() > 0.0)) {
    out.push_back(skipped("energy_E_band", "E(-r0) = 0"));
  } else if (c.model.g2 == 0.0) {
    out.push_back(bounded("energy_E_band", "max |E(t)/E(-r0) - 1| over the run",
                          std::max(std::abs(band.hi - 1.0), std::abs(band.lo - 1.0)),
                          tol.energy_linear_band));
  } else if (r.shock_run()) {
    const double worst = std::max(band.hi / tol.energy_shock_hi, tol.energy_shock_lo / band.lo);
    out.push_back(bounded("energy_E_band", "max(hi/upper, lower/lo) of E(t)/E(-r0) while mu_m > floor",
                          worst, 1.0));
  } else {
    out.push_back(info("energy_E_band", "hi/lo of E(t)/E(-r0)", band.hi / band.lo));
  }
  double kmax = 0.0;
  for (double v : r.energy.K) kmax = std::max(kmax, std::abs(v));
  out.push_back(bounded("energy_K", "shock-region angular integral, zero in spherical symmetry", kmax, 0.0));
  out.push_back(info("chibar_prime_sup", "sup |tr chibar'| / delta", r.chibar_sup / r.delta));
  if (r.linear.evaluated)
    out.push_back(info("linear_oracle", "max |phi - phi_dalembert| on ubar <= delta over probes and final slice",
                       r.linear.max_abs_error));
  return out;
}

/// One run at the configured delta. Stage failures are recorded, never thrown,
/// except ConfigInvalid raised before any compute.
inline RunResult run_pipeline(const config::RunConfig& c) {
  c.validate_physics();
  RunResult out;
  out.delta = c.model.delta;
  const ModelParams& p = c.model;
  std::string stage = "build-data";
  try {
    const auto built = build_data(c);
    out.seed_vanishes_at_one = built.seed.vanishes_at_one();
    out.shock_condition = built.shock_condition;
    out.radiation = built.radiation;

    stage = "evolve";
    const auto samples = characteristics::cadence(p.t_initial(), c.t_end, c.sample_dt);
    std::optional<solver::DalembertOracle> oracle;
    if (p.g2 == 0.0) oracle.emplace(built.data);
    if (c.scheme == config::Scheme::optical) {
      const auto ocfg = optical_config(c);
      const std::size_t stride = c.n_chars == 0 ? 1 : c.points_per_pulse / (c.n_chars - 1);
      auto run = solver::optical::evolve(solver::optical::initial_state(built.data, p), ocfg, p,
                                         stride, samples, c.probe_times);
      out.termination = run.termination;
      out.fan = std::move(run.fan);
      for (const auto& s : run.probes) out.probes.push_back(detail::snapshot(s));
      if (oracle) {
        for (const auto& s : out.probes) detail::oracle_compare(*oracle, s, p.delta, out.linear);
        detail::oracle_compare(*oracle, detail::snapshot(run.final_state), p.delta, out.linear);
      }
    } else {
      const auto scfg = eulerian_config(c);
      auto probe_times = c.probe_times;
      if (oracle && (probe_times.empty() || probe_times.back() < c.t_end)) probe_times.push_back(c.t_end);
      const std::size_t n = c.n_chars == 0 ? c.points_per_pulse + 1 : c.n_chars;
      auto run = characteristics::run_with_fan(
          solver::FieldState::from_data(built.data, c.stencil_order), scfg, p,
          characteristics::uniform_labels(p.delta, n), samples, probe_times);
      out.termination = run.evolution.termination;
      out.fan = std::move(run.fan);
      for (const auto& s : run.evolution.probes) {
        auto snap = detail::snapshot(s);
        if (oracle) detail::oracle_compare(*oracle, snap, p.delta, out.linear);
        const bool requested =
            std::any_of(c.probe_times.begin(), c.probe_times.end(),
                        [&](double t) { return std::abs(t - s.t) <= 1e-12; });
        if (requested) out.probes.push_back(std::move(snap));
      }
    }

    stage = "trace";
    try {
      characteristics::mu_from_flowmap(out.fan);
      out.cross = characteristics::cross_check(out.fan, c.tol.cross_mu_floor);
      out.cross_ok = true;
    } catch (const FanReordered& e) {
      out.flowmap_note = e.what();
    }
    try {
      out.shock = characteristics::detect_shock(out.fan, c.stop_mu);
    } catch (const NoShock& e) {
      out.no_shock_reason = e.what();
    }
    out.geometry = characteristics::geometry_diagnostics(out.fan);

    stage = "diagnostics";
    out.expansions = diagnostics::expansion_suite(out.fan, p);
    out.chibar_sup = diagnostics::chibar_prime_sup(out.geometry);
    out.trapping = diagnostics::trapping_check(out.fan, c.tol.mu_shock, c.tol.trapping_tol);
    try {
      out.blowup = diagnostics::blowup_suite(out.fan, out.geometry, c.tol.collapse_level);
    } catch (const InsufficientCollapse& e) {
      out.blowup_note = e.what();
    }
    if (out.shock && out.shock->shock)
      out.tmu = diagnostics::tmu_bound_check(out.fan, out.shock->t_star, p.delta);
    out.energy = diagnostics::energy_suite(out.fan);
    out.energy_band =
        diagnostics::energy_band(out.energy, out.fan, p.g2 == 0.0 ? 0.0 : c.tol.energy_mu_floor);
  } catch (const std::exception& e) {
    out.error = StageError{stage, error_kind(e), e.what()};
  }
  out.checks = run_checks(out, c);
  return out;
}

struct SweepRow {
  std::string name;
  std::string basis;
  std::string kind;  ///< slope | stability | aggregate
  std::vector<double> values;  ///< one per delta (NaN where unavailable)
  double statistic = std::numeric_limits<double>::quiet_NaN();  ///< slope, drift or aggregate
  double expected = std::numeric_limits<double>::quiet_NaN();
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::string verdict;  ///< pass | fail | floor | info | skipped
  bool hard = false;
};

struct SweepResult {
  std::vector<double> deltas;
  std::vector<RunResult> runs;
  std::vector<SweepRow> rows;

  bool hard_failure() const {
    for (const auto& r : rows)
      if (r.hard && r.verdict == "fail") return true;
    return false;
  }
  bool all_pass() const {
    for (const auto& r : rows)
      if (r.verdict == "fail") return false;
    return true;
  }
  const SweepRow* find(const std::string& name) const {
    for (const auto& r : rows)
      if (r.name == name) return &r;
    return nullptr;
  }
};

namespace detail {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Slope row over the runs where the value is available.
inline SweepRow slope_row(std::string name, std::string basis, const SweepResult& s,
                          const std::vector<double>& values, double expected, double min_slope,
                          double max_slope) {
  SweepRow row{std::move(name), std::move(basis), "slope", values, kNaN, expected, min_slope, "", false};
  std::vector<double> d, v;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::isfinite(values[i])) {
      d.push_back(s.deltas[i]);
      v.push_back(values[i]);
    }
  if (d.size() < 2) {
    row.verdict = "skipped";
    return row;
  }
  const auto fit = diagnostics::sweep_slope(d, v);
  if (fit.floor) {
    row.verdict = "floor";
    return row;
  }
  row.statistic = fit.slope;
  if (std::isnan(min_slope)) row.verdict = "info";
  else row.verdict = (fit.slope >= min_slope && fit.slope <= max_slope) ? "pass" : "fail";
  return row;
}

inline SweepRow stability_row(std::string name, std::string basis, const std::vector<double>& values,
                              double max_drift, bool judged = true) {
  SweepRow row{std::move(name), std::move(basis), "stability", values, kNaN, kNaN, max_drift, "", false};
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  if (v.size() < 2) {
    row.verdict = "skipped";
    return row;
  }
  row.statistic = diagnostics::drift_ratio(v);
  row.verdict = !judged ? "info" : row.statistic < max_drift ? "pass" : "fail";
  return row;
}

}  // namespace detail

/// Sweep verdicts from finished runs.
inline std::vector<SweepRow> sweep_rows(const SweepResult& s, const config::RunConfig& c) {
  using detail::kNaN;
  const auto& tol = c.tol;
  const std::size_t n = s.runs.size();
  auto collect = [&](auto&& f) {
    std::vector<double> v(n, kNaN);
    for (std::size_t i = 0; i < n; ++i)
      if (!s.runs[i].error) v[i] = f(s.runs[i]);
    return v;
  };
  std::vector<SweepRow> rows;
  rows.push_back(detail::stability_row("radiation_lbar_phi", "sup|Lbar phi| / delta^(3/2) is delta-stable",
                                       collect([](const RunResult& r) { return r.radiation.ratio_lbar; }),
                                       tol.ratio_stability));
  rows.push_back(detail::stability_row("radiation_lbar2_phi", "sup|Lbar^2 phi| / delta^(3/2) is delta-stable",
                                       collect([](const RunResult& r) { return r.radiation.ratio_lbar2; }),
                                       tol.ratio_stability));
  {
    auto cs = collect([](const RunResult& r) { return r.shock_run() ? r.shock_constant() : kNaN; });
    auto row = detail::stability_row("shock_time_constant", "C = (t* + 1)/delta is delta-stable",
                                     cs, tol.ratio_stability);
    // A non-positive C everywhere means t* <= -1 outright.
    bool any = false, positive = false;
    for (double v : cs)
      if (std::isfinite(v)) {
        any = true;
        positive = positive || v > 0.0;
      }
    if (any && !positive) {
      row.verdict = "pass";
      row.statistic = 1.0;
    }
    rows.push_back(row);
  }
  auto expansion = [&](double diagnostics::ExpansionResiduals::*field) {
    return collect([field](const RunResult& r) { return r.expansions.*field; });
  };
  using ER = diagnostics::ExpansionResiduals;
  rows.push_back(detail::slope_row("mu_expansion", "delta slope of sup|mu - 1 + r0^2 (1/t + 1/r0) Lbar mu(-r0)|",
                                   s, expansion(&ER::res_mu_expansion), 1.0, tol.slope_mu_min, INFINITY));
  rows.push_back(detail::slope_row("lbar_mu_rigidity", "delta slope of sup| t^2 Lbar mu(t) - r0^2 Lbar mu(-r0) |",
                                   s, expansion(&ER::res_Lbmu), 1.0, tol.slope_lbmu_min, INFINITY));
  rows.push_back(detail::slope_row("l_psi0_expansion", "delta slope of sup| |t| L psi0 - r0 L psi0(-r0) |",
                                   s, expansion(&ER::res_Lpsi0), 0.5, tol.slope_lpsi_min, INFINITY));
  rows.push_back(detail::slope_row("t_psi0_expansion", "delta slope of sup| |t| T psi0 - r0 T psi0(-r0) |",
                                   s, expansion(&ER::res_Tpsi0), 0.5, kNaN, kNaN));
  rows.push_back(detail::slope_row("psi0_expansion", "delta slope of sup| |t| psi0 - r0 psi0(-r0) |",
                                   s, expansion(&ER::res_psi0), 1.5, kNaN, kNaN));
  rows.push_back(detail::slope_row("mechanism_bound", "delta slope of max (mu_m - mechanism bound)_+",
                                   s, expansion(&ER::res_mech_bound), 1.0, kNaN, kNaN));
  rows.push_back(detail::slope_row(
      "ebar_initial", "delta slope of Ebar(-r0)", s,
      collect([](const RunResult& r) { return r.energy.Ebar.empty() ? kNaN : r.energy.Ebar.front(); }),
      tol.ebar_slope, tol.ebar_slope - tol.ebar_slope_tol, tol.ebar_slope + tol.ebar_slope_tol));
  rows.push_back(detail::stability_row(
      "tmu_amplitude", "max delta (mu^-1 T mu)_+ |t - t*|^(1/2) is delta-stable",
      collect([](const RunResult& r) { return r.tmu && !r.tmu->vacuous ? r.tmu->amplitude : kNaN; }),
      tol.ratio_stability));
  rows.push_back(detail::stability_row("chibar_prime", "sup |tr chibar'| / delta is delta-stable",
                                       collect([](const RunResult& r) { return r.chibar_sup / r.delta; }),
                                       tol.ratio_stability, false));

  // Hard invariants over every run.
  {
    SweepRow row{"trapping", "total trapping violations over all runs", "aggregate", {}, 0.0, kNaN, 0.0, "pass", true};
    for (const auto& r : s.runs) {
      row.values.push_back(static_cast<double>(r.trapping.violations));
      row.statistic += static_cast<double>(r.trapping.violations);
    }
    if (row.statistic > 0.0) row.verdict = "fail";
    rows.push_back(row);
  }
  {
    SweepRow row{"cross_method_mu", "max |mu_transport - mu_flowmap| / mu_m over all runs", "aggregate",
                 {}, 0.0, kNaN, tol.cross_rel_max, "pass", true};
    for (const auto& r : s.runs) {
      const auto* k = r.find("cross_method_mu");
      const double v = k ? k->residual : kNaN;
      row.values.push_back(v);
      if (k && k->verdict == "fail") row.verdict = "fail";
      if (std::isfinite(v)) row.statistic = std::max(row.statistic, v);
    }
    rows.push_back(row);
  }
  {
    SweepRow row{"runs_completed", "runs finishing every stage", "aggregate", {}, 0.0, kNaN,
                 static_cast<double>(n), "pass", false};
    for (const auto& r : s.runs) {
      row.values.push_back(r.error ? 0.0 : 1.0);
      row.statistic += r.error ? 0.0 : 1.0;
    }
    if (row.statistic < static_cast<double>(n)) row.verdict = "fail";
    rows.push_back(row);
  }
  return rows;
}

/// Runs every delta independently (on up to `jobs` threads) and fits the
/// convergence table. A failing run is recorded, never fatal.
inline SweepResult run_sweep(const config::RunConfig& c) {
  c.validate_physics();
  c.validate_sweep();
  SweepResult s;
  s.deltas = c.deltas;
  s.runs.resize(c.deltas.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < c.deltas.size(); i = next++) {
      auto ci = c;
      ci.model.delta = c.deltas[i];
      try {
        s.runs[i] = run_pipeline(ci);
      } catch (const std::exception& e) {
        s.runs[i].delta = c.deltas[i];
        s.runs[i].error = StageError{"config", error_kind(e), e.what()};
        s.runs[i].checks = run_checks(s.runs[i], ci);
      }
    }
  };
  const std::size_t jobs = std::min(c.jobs, c.deltas.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  s.rows = sweep_rows(s, c);
  return s;
}

}  // namespace qlshock::pipeline
