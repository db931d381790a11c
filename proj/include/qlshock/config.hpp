#pragma once

// Run configuration: an INI file with sections [model], [seed], [grid],
// [solver], [optical], [fan], [sweep], [output], [tolerances] and [burgers].
// Unknown sections or keys are errors. g2, delta and the seed profile have no
// defaults; numerical knobs do.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "qlshock/errors.hpp"
#include "qlshock/model.hpp"

namespace qlshock::config {

enum class Scheme { optical, eulerian };

struct SeedSpec {
  std::string profile;          ///< bump | sine2 | zero | file
  std::optional<double> amplitude;
  std::optional<double> strength;  ///< target min of g2 phi1 phi1'; -1/6 for "threshold"
  double phi2_scale = 0.0;      ///< phi2 = phi2_scale * (profile shape)
  std::string file;             ///< CSV with columns s, phi1, phi2 when profile = file
};

struct Tolerances {
  double mu_shock = 0.1;
  double trapping_tol = 0.2;
  double collapse_level = 0.2;
  double slope_mu_min = 0.8;
  double slope_lbmu_min = 0.8;
  double slope_lpsi_min = 0.4;
  double blowup_slope_tol = 0.2;
  double band_ratio_max = 10.0;
  double ratio_stability = 2.0;
  double tmu_exponent_min = -0.7;
  double energy_linear_band = 0.1;
  double energy_shock_lo = 0.5;
  double energy_shock_hi = 2.0;
  double energy_mu_floor = 0.05;
  double ebar_slope = 2.0;
  double ebar_slope_tol = 0.3;
  double cross_rel_max = 0.02;
  double cross_mu_floor = 0.1;
  double mech_constant = 1.0;  ///< C' in mu_m <= bound + C' delta
};

struct BurgersSpec {
  std::string profile;  ///< sin | linear | constant
  double value = 0.5;   ///< level of the constant profile
  double x_min = 0.0;
  double x_max = 2.0 * 3.14159265358979323846;
  std::size_t n_samples = 2001;
  double t_end = 2.0;
  std::size_t n_chars = 9;
  std::size_t n_times = 21;
  std::size_t n_fan = 10000;
};

struct RunConfig {
  ModelParams model;
  bool has_model = false;
  SeedSpec seed;
  std::size_t points_per_pulse = 128;
  double taper_width = 1.0;  ///< in units of delta

  Scheme scheme = Scheme::optical;
  // Eulerian grid.
  double cfl = 0.4;
  int stencil_order = 4;
  double r_in = 0.25;
  double r_out = 4.0;
  bool comoving = false;
  double window_lead = 0.05;   ///< comoving window starts this far inside the front
  double window_length = 0.5;
  double dissipation = 0.0;
  // Shared.
  double t_end = -0.5;
  double stop_mu = 0.02;
  double max_grad = 1e6;
  // Optical grid.
  double optical_cfl = 0.8;
  double optical_dissipation = 0.1;
  double optical_lead = 0.5;
  double optical_extent = 3.0;

  std::size_t n_chars = 0;  ///< 0: one track per label of the pulse grid
  double sample_dt = 0.002;
  std::vector<double> probe_times;

  std::vector<double> deltas;
  std::size_t jobs = 1;

  std::string out_dir = "out";
  bool write_probes = true;

  Tolerances tol;
  std::optional<BurgersSpec> burgers;

  /// Checks that need the physics sections (run, sweep, build-data).
  void validate_physics() const {
    if (!has_model) throw ConfigInvalid("[model] section is required");
    model.validate();
    if (seed.profile.empty()) throw ConfigInvalid("seed.profile is required");
    static const std::set<std::string> profiles{"bump", "sine2", "zero", "file"};
    if (!profiles.count(seed.profile))
      throw ConfigInvalid("seed.profile must be one of bump, sine2, zero, file (got '" +
                          seed.profile + "')");
    if (seed.profile == "file" && seed.file.empty())
      throw ConfigInvalid("seed.file is required when seed.profile = file");
    if (seed.amplitude && seed.strength)
      throw ConfigInvalid("seed.amplitude and seed.strength are mutually exclusive");
    if ((seed.profile == "bump" || seed.profile == "sine2") && !seed.amplitude && !seed.strength)
      throw ConfigInvalid("seed.amplitude or seed.strength is required for profile " + seed.profile);
    if (seed.strength && !(*seed.strength < 0.0))
      throw ConfigInvalid("seed.strength must be negative");
    if (seed.strength && model.g2 == 0.0)
      throw ConfigInvalid("seed.strength needs model.g2 != 0");
    if (points_per_pulse < 32) throw ConfigInvalid("grid.points_per_pulse must be >= 32");
    if (!(taper_width > 0.0)) throw ConfigInvalid("grid.taper_width must be > 0");
    if (!(t_end > -model.r0)) throw ConfigInvalid("solver.t_end must exceed the initial time -r0");
    if (!(sample_dt > 0.0)) throw ConfigInvalid("fan.sample_dt must be > 0");
    if (n_chars == 1 || n_chars == 2) throw ConfigInvalid("fan.n_chars must be 0 or >= 3");
    if (scheme == Scheme::optical && n_chars != 0 && points_per_pulse % (n_chars - 1) != 0)
      throw ConfigInvalid("fan.n_chars - 1 must divide grid.points_per_pulse for the optical scheme");
    for (std::size_t i = 1; i < probe_times.size(); ++i)
      if (!(probe_times[i] > probe_times[i - 1]))
        throw ConfigInvalid("fan.probe_times must be strictly increasing");
    if (jobs == 0) throw ConfigInvalid("sweep.jobs must be >= 1");
  }

  void validate_sweep() const {
    if (deltas.size() < 3) throw ConfigInvalid("sweep.deltas needs at least 3 values");
    for (double d : deltas)
      if (!(d > 0.0)) throw ConfigInvalid("sweep.deltas must be positive");
  }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  double v = 0.0;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || b == e || !std::isfinite(v))
    throw ConfigInvalid(key + ": expected a finite number, got '" + text + "'");
  return v;
}

inline std::size_t parse_count(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e12)
    throw ConfigInvalid(key + ": expected a non-negative integer, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigInvalid(key + ": expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses a property tree read from an INI file.
inline RunConfig from_ptree(const boost::property_tree::ptree& pt) {
  using detail::parse_bool;
  using detail::parse_count;
  using detail::parse_double;
  using detail::parse_list;
  static const std::map<std::string, std::set<std::string>> schema{
      {"model", {"g2", "delta", "r0", "hyperbolicity_floor"}},
      {"seed", {"profile", "amplitude", "strength", "phi2_scale", "file"}},
      {"grid", {"points_per_pulse", "taper_width"}},
      {"solver",
       {"scheme", "cfl", "stencil_order", "r_in", "r_out", "window", "window_lead",
        "window_length", "dissipation", "t_end", "stop_mu", "max_grad"}},
      {"optical", {"cfl", "dissipation", "lead", "extent"}},
      {"fan", {"n_chars", "sample_dt", "probe_times"}},
      {"sweep", {"deltas", "jobs"}},
      {"output", {"dir", "write_probes"}},
      {"tolerances",
       {"mu_shock", "trapping_tol", "collapse_level", "slope_mu_min", "slope_lbmu_min",
        "slope_lpsi_min", "blowup_slope_tol", "band_ratio_max", "ratio_stability",
        "tmu_exponent_min", "energy_linear_band", "energy_shock_lo", "energy_shock_hi",
        "energy_mu_floor", "ebar_slope", "ebar_slope_tol", "cross_rel_max", "cross_mu_floor",
        "mech_constant"}},
      {"burgers",
       {"profile", "value", "x_min", "x_max", "n_samples", "t_end", "n_chars", "n_times", "n_fan"}},
  };
  for (const auto& [section, body] : pt) {
    auto it = schema.find(section);
    if (it == schema.end()) {
      if (body.empty()) throw ConfigInvalid("top-level key '" + section + "' outside any section");
      throw ConfigInvalid("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigInvalid("unknown key " + section + "." + key);
  }

  RunConfig c;
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = pt.get_optional<std::string>(boost::property_tree::ptree::path_type(path, '.')))
      return detail::trim(*v);
    return std::nullopt;
  };
  auto num = [&](const std::string& path, double& dst) {
    if (auto v = get(path)) dst = parse_double(path, *v);
  };
  auto count = [&](const std::string& path, std::size_t& dst) {
    if (auto v = get(path)) dst = parse_count(path, *v);
  };

  if (pt.get_child_optional("model")) {
    c.has_model = true;
    auto g2 = get("model.g2");
    auto delta = get("model.delta");
    if (!g2) throw ConfigInvalid("model.g2 is required");
    if (!delta) throw ConfigInvalid("model.delta is required");
    c.model.g2 = parse_double("model.g2", *g2);
    c.model.delta = parse_double("model.delta", *delta);
    num("model.r0", c.model.r0);
    num("model.hyperbolicity_floor", c.model.hyperbolicity_floor);
  }
  if (pt.get_child_optional("seed")) {
    if (auto v = get("seed.profile")) c.seed.profile = *v;
    if (auto v = get("seed.amplitude")) c.seed.amplitude = parse_double("seed.amplitude", *v);
    if (auto v = get("seed.strength"))
      c.seed.strength = *v == "threshold" ? -1.0 / 6.0 : parse_double("seed.strength", *v);
    num("seed.phi2_scale", c.seed.phi2_scale);
    if (auto v = get("seed.file")) c.seed.file = *v;
  }
  count("grid.points_per_pulse", c.points_per_pulse);
  num("grid.taper_width", c.taper_width);

  if (auto v = get("solver.scheme")) {
    if (*v == "optical") c.scheme = Scheme::optical;
    else if (*v == "eulerian") c.scheme = Scheme::eulerian;
    else throw ConfigInvalid("solver.scheme must be optical or eulerian (got '" + *v + "')");
  }
  num("solver.cfl", c.cfl);
  if (auto v = get("solver.stencil_order")) c.stencil_order = static_cast<int>(parse_count("solver.stencil_order", *v));
  num("solver.r_in", c.r_in);
  num("solver.r_out", c.r_out);
  if (auto v = get("solver.window")) {
    if (*v == "comoving") c.comoving = true;
    else if (*v == "fixed") c.comoving = false;
    else throw ConfigInvalid("solver.window must be fixed or comoving (got '" + *v + "')");
  }
  num("solver.window_lead", c.window_lead);
  num("solver.window_length", c.window_length);
  num("solver.dissipation", c.dissipation);
  num("solver.t_end", c.t_end);
  num("solver.stop_mu", c.stop_mu);
  num("solver.max_grad", c.max_grad);
  num("optical.cfl", c.optical_cfl);
  num("optical.dissipation", c.optical_dissipation);
  num("optical.lead", c.optical_lead);
  num("optical.extent", c.optical_extent);

  count("fan.n_chars", c.n_chars);
  num("fan.sample_dt", c.sample_dt);
  if (auto v = get("fan.probe_times")) c.probe_times = parse_list("fan.probe_times", *v);
  if (auto v = get("sweep.deltas")) c.deltas = parse_list("sweep.deltas", *v);
  count("sweep.jobs", c.jobs);
  if (auto v = get("output.dir")) c.out_dir = *v;
  if (auto v = get("output.write_probes")) c.write_probes = parse_bool("output.write_probes", *v);

  auto& t = c.tol;
  for (auto& [key, dst] : std::map<std::string, double*>{
           {"mu_shock", &t.mu_shock}, {"trapping_tol", &t.trapping_tol},
           {"collapse_level", &t.collapse_level}, {"slope_mu_min", &t.slope_mu_min},
           {"slope_lbmu_min", &t.slope_lbmu_min}, {"slope_lpsi_min", &t.slope_lpsi_min},
           {"blowup_slope_tol", &t.blowup_slope_tol}, {"band_ratio_max", &t.band_ratio_max},
           {"ratio_stability", &t.ratio_stability}, {"tmu_exponent_min", &t.tmu_exponent_min},
           {"energy_linear_band", &t.energy_linear_band}, {"energy_shock_lo", &t.energy_shock_lo},
           {"energy_shock_hi", &t.energy_shock_hi}, {"energy_mu_floor", &t.energy_mu_floor},
           {"ebar_slope", &t.ebar_slope}, {"ebar_slope_tol", &t.ebar_slope_tol},
           {"cross_rel_max", &t.cross_rel_max}, {"cross_mu_floor", &t.cross_mu_floor},
           {"mech_constant", &t.mech_constant}})
    num("tolerances." + key, *dst);

  if (pt.get_child_optional("burgers")) {
    BurgersSpec b;
    auto profile = get("burgers.profile");
    if (!profile) throw ConfigInvalid("burgers.profile is required");
    b.profile = *profile;
    if (b.profile != "sin" && b.profile != "linear" && b.profile != "constant")
      throw ConfigInvalid("burgers.profile must be sin, linear or constant (got '" + b.profile + "')");
    num("burgers.value", b.value);
    num("burgers.x_min", b.x_min);
    num("burgers.x_max", b.x_max);
    count("burgers.n_samples", b.n_samples);
    num("burgers.t_end", b.t_end);
    count("burgers.n_chars", b.n_chars);
    count("burgers.n_times", b.n_times);
    count("burgers.n_fan", b.n_fan);
    if (b.n_samples < 3) throw ConfigInvalid("burgers.n_samples must be >= 3");
    if (!(b.x_max > b.x_min)) throw ConfigInvalid("burgers.x_max must exceed burgers.x_min");
    if (!(b.t_end > 0.0)) throw ConfigInvalid("burgers.t_end must be > 0");
    if (b.n_chars < 1 || b.n_times < 1 || b.n_fan < 2)
      throw ConfigInvalid("burgers.n_chars, n_times must be >= 1 and n_fan >= 2");
    c.burgers = b;
  }
  return c;
}

inline RunConfig parse_ini(std::istream& in) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigInvalid(std::string("config syntax: ") + e.what());
  }
  return from_ptree(pt);
}

inline RunConfig parse_ini_string(const std::string& text) {
  std::istringstream in(text);
  return parse_ini(in);
}

}  // namespace qlshock::config
