#pragma once

// Serialization of run artifacts: CSV tables at 17 significant digits and
// schema-versioned JSON reports that embed the resolved config and a SHA-256
// hash of every input.

#include <fmt/format.h>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "qlshock/burgers.hpp"
#include "qlshock/config.hpp"
#include "qlshock/diagnostics.hpp"
#include "qlshock/pipeline.hpp"

namespace qlshock::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "qlshock.report/1";
inline constexpr const char* kRadialNote =
    "spherical symmetry: angular derivatives vanish, so F = K = 0 and the energy suite "
    "checks E, Ebar and Fbar only";

inline std::string num(double x) { return fmt::format("{:.17g}", x); }

/// Column-major table; every column must have the same length.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << num(columns[j][i]);
    out << '\n';
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigInvalid("cannot read '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline json config_json(const config::RunConfig& c) {
  json j;
  j["model"] = {{"g2", c.model.g2},
                {"delta", c.model.delta},
                {"r0", c.model.r0},
                {"hyperbolicity_floor", c.model.hyperbolicity_floor}};
  json seed = {{"profile", c.seed.profile}};
  seed["amplitude"] = c.seed.amplitude ? json(*c.seed.amplitude) : json(nullptr);
  seed["strength"] = c.seed.strength ? json(*c.seed.strength) : json(nullptr);
  seed["phi2_scale"] = c.seed.phi2_scale;
  seed["file"] = c.seed.file;
  j["seed"] = seed;
  j["grid"] = {{"points_per_pulse", c.points_per_pulse}, {"taper_width", c.taper_width}};
  j["solver"] = {{"scheme", c.scheme == config::Scheme::optical ? "optical" : "eulerian"},
                 {"cfl", c.cfl},
                 {"stencil_order", c.stencil_order},
                 {"r_in", c.r_in},
                 {"r_out", c.r_out},
                 {"window", c.comoving ? "comoving" : "fixed"},
                 {"window_lead", c.window_lead},
                 {"window_length", c.window_length},
                 {"dissipation", c.dissipation},
                 {"t_end", c.t_end},
                 {"stop_mu", c.stop_mu},
                 {"max_grad", c.max_grad}};
  j["optical"] = {{"cfl", c.optical_cfl},
                  {"dissipation", c.optical_dissipation},
                  {"lead", c.optical_lead},
                  {"extent", c.optical_extent}};
  j["fan"] = {{"n_chars", c.n_chars}, {"sample_dt", c.sample_dt}, {"probe_times", c.probe_times}};
  j["sweep"] = {{"deltas", c.deltas}, {"jobs", c.jobs}};
  j["output"] = {{"dir", c.out_dir}, {"write_probes", c.write_probes}};
  const auto& t = c.tol;
  j["tolerances"] = {{"mu_shock", t.mu_shock},
                     {"trapping_tol", t.trapping_tol},
                     {"collapse_level", t.collapse_level},
                     {"slope_mu_min", t.slope_mu_min},
                     {"slope_lbmu_min", t.slope_lbmu_min},
                     {"slope_lpsi_min", t.slope_lpsi_min},
                     {"blowup_slope_tol", t.blowup_slope_tol},
                     {"band_ratio_max", t.band_ratio_max},
                     {"ratio_stability", t.ratio_stability},
                     {"tmu_exponent_min", t.tmu_exponent_min},
                     {"energy_linear_band", t.energy_linear_band},
                     {"energy_shock_lo", t.energy_shock_lo},
                     {"energy_shock_hi", t.energy_shock_hi},
                     {"energy_mu_floor", t.energy_mu_floor},
                     {"ebar_slope", t.ebar_slope},
                     {"ebar_slope_tol", t.ebar_slope_tol},
                     {"cross_rel_max", t.cross_rel_max},
                     {"cross_mu_floor", t.cross_mu_floor},
                     {"mech_constant", t.mech_constant}};
  if (c.burgers) {
    const auto& b = *c.burgers;
    j["burgers"] = {{"profile", b.profile}, {"value", b.value},     {"x_min", b.x_min},
                    {"x_max", b.x_max},     {"n_samples", b.n_samples}, {"t_end", b.t_end},
                    {"n_chars", b.n_chars}, {"n_times", b.n_times}, {"n_fan", b.n_fan}};
  }
  return j;
}

/// Hash of the resolved config plus the bytes of any seed file it names.
inline std::string content_hash(const config::RunConfig& c) {
  std::string bytes = config_json(c).dump();
  if (c.seed.profile == "file" && !c.seed.file.empty()) bytes += read_file(c.seed.file);
  return sha256_hex(bytes);
}

inline json header(const std::string& command, const config::RunConfig& c) {
  json j;
  j["schema"] = kSchema;
  j["command"] = command;
  j["input_sha256"] = content_hash(c);
  j["config"] = config_json(c);
  return j;
}

inline json check_json(const pipeline::Check& k) {
  return {{"name", k.name},         {"basis", k.basis}, {"residual", k.residual},
          {"threshold", k.threshold}, {"verdict", k.verdict}, {"hard", k.hard}};
}

inline json run_json(const pipeline::RunResult& r) {
  json j;
  j["delta"] = r.delta;
  if (r.error)
    j["error"] = {{"stage", r.error->stage}, {"kind", r.error->kind}, {"message", r.error->message}};
  else
    j["error"] = nullptr;
  j["termination"] = {{"reason", solver::to_string(r.termination.reason)},
                      {"t_last", r.termination.t_last},
                      {"steps", r.termination.steps},
                      {"detail", r.termination.detail}};
  j["seed_vanishes_at_one"] = r.seed_vanishes_at_one;
  j["shock_condition"] = {{"met", r.shock_condition.met},
                          {"min_value", r.shock_condition.min_value},
                          {"arg_min", r.shock_condition.arg_min},
                          {"threshold", r.shock_condition.threshold}};
  j["radiation"] = {{"sup_lbar_phi", r.radiation.sup_lbar_phi},
                    {"sup_lbar2_phi", r.radiation.sup_lbar2_phi},
                    {"ratio_lbar", r.radiation.ratio_lbar},
                    {"ratio_lbar2", r.radiation.ratio_lbar2}};
  if (r.shock) {
    const auto& s = *r.shock;
    j["shock"] = {{"detected", s.shock},          {"t_star", s.t_star},
                  {"extrapolated", s.extrapolated}, {"u_star", s.u_star},
                  {"fit_A", s.fit_A},             {"fit_B", s.fit_B},
                  {"fit_samples", s.fit_samples}};
  } else {
    j["shock"] = {{"detected", false}, {"reason", r.no_shock_reason}};
  }
  json ex;
  for (const auto& [name, value] : r.expansions.values())
    ex[name] = {{"value", value}, {"delta_power", diagnostics::ExpansionResiduals::powers().at(name)}};
  j["expansions"] = ex;
  j["trapping"] = {{"checked", r.trapping.checked},
                   {"violations", r.trapping.violations},
                   {"worst_margin", r.trapping.checked ? json(r.trapping.worst_margin) : json(nullptr)}};
  j["cross_method"] = {{"available", r.cross_ok},
                       {"max_abs", r.cross.max_abs},
                       {"max_rel_to_mu_m", r.cross.max_rel_to_mu_m},
                       {"samples", r.cross.samples}};
  if (r.blowup) {
    const auto& b = *r.blowup;
    j["blowup"] = {{"track", b.track},          {"samples", b.samples},
                   {"mu_lo", b.mu_lo},          {"mu_hi", b.mu_hi},
                   {"that_band", {b.that_band_lo, b.that_band_hi}},
                   {"alpha_band", {b.alpha_band_lo, b.alpha_band_hi}},
                   {"slope", b.slope}};
  } else {
    j["blowup"] = {{"note", r.blowup_note}};
  }
  if (r.tmu)
    j["tmu"] = {{"vacuous", r.tmu->vacuous},
                {"exponent", r.tmu->exponent},
                {"amplitude", r.tmu->amplitude},
                {"samples", r.tmu->samples}};
  j["energy"] = {{"E_initial", r.energy.E.empty() ? 0.0 : r.energy.E.front()},
                 {"Ebar_initial", r.energy.Ebar.empty() ? 0.0 : r.energy.Ebar.front()},
                 {"E_ratio_band", {r.energy_band.lo, r.energy_band.hi}},
                 {"band_samples", r.energy_band.samples},
                 {"note", kRadialNote}};
  if (r.linear.evaluated)
    j["linear_oracle"] = {{"max_abs_error", r.linear.max_abs_error},
                          {"max_abs_phi", r.linear.max_abs_phi},
                          {"points", r.linear.points}};
  json checks = json::array();
  for (const auto& k : r.checks) checks.push_back(check_json(k));
  j["checks"] = checks;
  return j;
}

inline json sweep_rows_json(const pipeline::SweepResult& s) {
  json rows = json::array();
  for (const auto& row : s.rows)
    rows.push_back({{"name", row.name},
                    {"basis", row.basis},
                    {"kind", row.kind},
                    {"values", row.values},
                    {"statistic", row.statistic},
                    {"expected", row.expected},
                    {"threshold", row.threshold},
                    {"verdict", row.verdict},
                    {"hard", row.hard}});
  return rows;
}

/// Per-run CSV series plus probe slices.
inline void write_run_tables(const std::filesystem::path& dir, const pipeline::RunResult& r,
                             double r0, bool probes) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto& fan = r.fan;
  const std::size_t nt = fan.n_times(), n = fan.n_tracks();
  {
    std::vector<std::vector<double>> cols(8);
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t j = 0; j < n; ++j) {
        const auto i = fan.at(k, j);
        cols[0].push_back(fan.times[k]);
        cols[1].push_back(fan.labels[j]);
        cols[2].push_back(fan.r[i]);
        cols[3].push_back(fan.mu_transport[i]);
        cols[4].push_back(fan.mu_flow.empty() ? std::nan("") : fan.mu_flow[i]);
        cols[5].push_back(fan.psi0[i]);
        cols[6].push_back(fan.dr_psi0[i]);
        cols[7].push_back(fan.lbar_mu(k, j));
      }
    write_csv(dir / "fan.csv",
              {"t [time]", "ubar [length]", "r [length]", "mu_transport [1]", "mu_flowmap [1]",
               "psi0 [amplitude/time]", "dr_psi0 [amplitude/time/length]", "lbar_mu [1/time]"},
              cols);
  }
  {
    std::vector<std::vector<double>> cols(3);
    for (std::size_t k = 0; k < nt; ++k) {
      cols[0].push_back(fan.times[k]);
      cols[1].push_back(fan.mu_m(k));
      cols[2].push_back(diagnostics::mechanism_bound(fan.times[k], r0));
    }
    write_csv(dir / "mu_min.csv", {"t [time]", "mu_m [1]", "mechanism_bound [1]"}, cols);
  }
  {
    const auto& e = r.energy;
    write_csv(dir / "energy.csv",
              {"t [time]", "E [energy]", "Ebar [energy]", "Fbar [energy]", "K [energy]"},
              {e.times, e.E, e.Ebar, e.Fbar, e.K});
  }
  if (r.blowup) {
    std::vector<std::vector<double>> cols(4);
    const std::size_t j = r.blowup->track;
    for (std::size_t k = 0; k < nt; ++k) {
      const auto i = fan.at(k, j);
      cols[0].push_back(fan.times[k]);
      cols[1].push_back(fan.mu_transport[i]);
      cols[2].push_back(r.geometry.that_psi0[i]);
      cols[3].push_back(r.geometry.tr_alpha_bar[i]);
    }
    write_csv(dir / "blowup_track.csv",
              {"t [time]", "mu [1]", "that_psi0 [amplitude/time/length]", "tr_alphabar [1/length^2]"},
              cols);
  }
  {
    std::vector<std::string> names;
    std::vector<double> values, powers;
    for (const auto& [name, value] : r.expansions.values()) {
      names.push_back(name);
      values.push_back(value);
      powers.push_back(diagnostics::ExpansionResiduals::powers().at(name));
    }
    std::ofstream out(dir / "residuals.csv", std::ios::binary);
    out << "check,delta [length],residual [1],expected_delta_power [1]\n";
    for (std::size_t i = 0; i < names.size(); ++i)
      out << names[i] << ',' << num(r.delta) << ',' << num(values[i]) << ',' << num(powers[i]) << '\n';
  }
  if (probes)
    for (std::size_t p = 0; p < r.probes.size(); ++p) {
      const auto& s = r.probes[p];
      const auto name = fmt::format("probe_{:02d}.csv", p);
      if (s.ubar.empty())
        write_csv(dir / name, {"r [length]", "phi [amplitude]", "psi0 [amplitude/time]"},
                  {s.r, s.phi, s.psi0});
      else
        write_csv(dir / name,
                  {"ubar [length]", "r [length]", "phi [amplitude]", "psi0 [amplitude/time]"},
                  {s.ubar, s.r, s.phi, s.psi0});
    }
}

}  // namespace qlshock::io
