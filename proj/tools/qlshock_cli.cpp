// qlshock: config-driven driver for the radial shock-formation pipeline.
//
//   qlshock burgers    --config PATH   characteristic tracks of a Burgers problem
//   qlshock build-data --config PATH   Cauchy data on the initial slice
//   qlshock run        --config PATH   one run with every diagnostic
//   qlshock sweep      --config PATH   runs over sweep.deltas and fits delta rates
//   qlshock report     --config PATH   prints the verdicts already written to --out
//
// Exit status: 0 on completion, 1 when a run stage fails (run) or a hard
// invariant fails (sweep), 2 on invalid configuration.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include "qlshock/burgers.hpp"
#include "qlshock/config.hpp"
#include "qlshock/pipeline.hpp"
#include "report_io.hpp"

namespace fs = std::filesystem;
using namespace qlshock;
using io::json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::string> seed_profile;
  std::optional<double> delta;
  std::optional<std::size_t> jobs;
};

config::RunConfig load(const Overrides& o) {
  std::ifstream in(o.config_path);
  if (!in) throw ConfigInvalid("cannot open config '" + o.config_path + "'");
  auto c = config::parse_ini(in);
  if (o.out) c.out_dir = *o.out;
  if (o.seed_profile) c.seed.profile = *o.seed_profile;
  if (o.delta) {
    if (!c.has_model) throw ConfigInvalid("--delta needs a [model] section");
    c.model.delta = *o.delta;
  }
  if (o.jobs) c.jobs = *o.jobs;
  return c;
}

std::string verdict_line(const std::string& name, double value, double threshold,
                         const std::string& verdict) {
  return fmt::format("  {:<22} {:>14.6g} {:>12.6g}  {}", name, value, threshold, verdict);
}

int cmd_burgers(const config::RunConfig& c) {
  if (!c.burgers) throw ConfigInvalid("[burgers] section is required");
  const auto& b = *c.burgers;
  std::function<double(double)> u0;
  if (b.profile == "sin") u0 = [](double x) { return std::sin(x); };
  else if (b.profile == "linear") u0 = [](double x) { return -x; };
  else u0 = [v = b.value](double) { return v; };
  const auto problem = burgers::BurgersProblem::sample(u0, b.x_min, b.x_max, b.n_samples);
  const auto rep = burgers::analyze(problem, b.t_end, b.n_chars, b.n_times, b.n_fan);

  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  std::vector<std::string> header{"t [time]"};
  std::vector<std::vector<double>> cols{rep.times};
  for (std::size_t j = 0; j < rep.lines.size(); ++j) {
    header.push_back(fmt::format("x_char_{} [length]", j));
    std::vector<double> x;
    for (double t : rep.times) x.push_back(rep.lines.position(j, t));
    cols.push_back(std::move(x));
  }
  for (std::size_t j = 0; j < rep.mu_tracks.size(); ++j) {
    header.push_back(fmt::format("mu_{} [time]", j));
    cols.push_back(rep.mu_tracks[j].empty() ? std::vector<double>(rep.times.size(), std::nan(""))
                                            : rep.mu_tracks[j]);
  }
  io::write_csv(dir / "tracks.csv", header, cols);

  auto j = io::header("burgers", c);
  auto finite_or_null = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  j["shock"] = {{"has_shock", rep.shock.has_shock},
                {"t_star_analytic", finite_or_null(rep.shock.t_star_analytic)},
                {"t_star_numeric", finite_or_null(rep.shock.t_star_numeric)},
                {"crossing_pair", {rep.shock.crossing_pair.first, rep.shock.crossing_pair.second}},
                {"x_crossing", finite_or_null(rep.shock.x_crossing)}};
  io::write_json(dir / "burgers.json", j);
  if (rep.shock.has_shock)
    fmt::print("t* = {:.10g} (analytic {:.10g})\n", rep.shock.t_star_numeric, rep.shock.t_star_analytic);
  else
    fmt::print("no crossing: u0 is nowhere decreasing\n");
  return 0;
}

int cmd_build_data(const config::RunConfig& c) {
  const auto built = pipeline::build_data(c);
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  const auto& d = built.data;
  std::vector<double> r(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) r[i] = d.r(i);
  io::write_csv(dir / "data.csv",
                {"r [length]", "phi [amplitude]", "psi0 [amplitude/time]",
                 "dr_phi [amplitude/length]", "dr_psi0 [amplitude/time/length]"},
                {r, d.phi, d.psi0, d.dr_phi, d.dr_psi0});

  std::string samples;
  for (std::size_t k = 0; k <= built.seed.n_intervals; ++k) {
    const double s = built.seed.node(k);
    samples += io::num(built.seed.phi1(s)) + "," + io::num(built.seed.phi2(s)) + "\n";
  }
  auto j = io::header("build-data", c);
  j["seed_sha256"] = io::sha256_hex(samples);
  j["grid"] = {{"t", d.t},
               {"r_lo", d.r_lo},
               {"dr", d.dr},
               {"nodes", d.size()},
               {"pulse_begin", d.pulse_begin},
               {"taper_window", {d.taper_window[0], d.taper_window[1]}}};
  j["seed_vanishes_at_one"] = d.seed_vanishes_at_one;
  j["shock_condition"] = {{"met", built.shock_condition.met},
                          {"min_value", built.shock_condition.min_value},
                          {"arg_min", built.shock_condition.arg_min},
                          {"threshold", built.shock_condition.threshold}};
  j["radiation"] = {{"sup_lbar_phi", built.radiation.sup_lbar_phi},
                    {"sup_lbar2_phi", built.radiation.sup_lbar2_phi},
                    {"ratio_lbar", built.radiation.ratio_lbar},
                    {"ratio_lbar2", built.radiation.ratio_lbar2}};
  j["phi0_error_estimate"] = built.profile.error_estimate;
  io::write_json(dir / "data.json", j);
  fmt::print("data: {} nodes, shock condition {} (min {:.6g}), |Lbar phi|/delta^1.5 = {:.6g}\n",
             d.size(), built.shock_condition.met ? "met" : "not met", built.shock_condition.min_value,
             built.radiation.ratio_lbar);
  return 0;
}

void print_checks(const std::vector<pipeline::Check>& checks) {
  for (const auto& k : checks) std::cout << verdict_line(k.name, k.residual, k.threshold, k.verdict) << '\n';
}

int cmd_run(const config::RunConfig& c) {
  const auto r = pipeline::run_pipeline(c);
  const fs::path dir(c.out_dir);
  io::write_run_tables(dir, r, c.model.r0, c.write_probes);
  auto j = io::header("run", c);
  j["run"] = io::run_json(r);
  io::write_json(dir / "report.json", j);

  fmt::print("termination: {} at t = {:.6g}\n", solver::to_string(r.termination.reason), r.termination.t_last);
  if (r.shock) fmt::print("t* = {:.10g}  (C = (t* + 1)/delta = {:.4g})\n", r.shock->t_star, r.shock_constant());
  else fmt::print("no shock: {}\n", r.no_shock_reason);
  print_checks(r.checks);
  if (r.error) {
    fmt::print(stderr, "stage '{}' failed ({}): {}\n", r.error->stage, r.error->kind, r.error->message);
    return 1;
  }
  return 0;
}

int cmd_sweep(const config::RunConfig& c) {
  const auto s = pipeline::run_sweep(c);
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  auto j = io::header("sweep", c);
  json runs = json::array();
  for (std::size_t i = 0; i < s.runs.size(); ++i) {
    io::write_run_tables(dir / fmt::format("delta_{}", i), s.runs[i], c.model.r0, c.write_probes);
    runs.push_back(io::run_json(s.runs[i]));
  }
  j["deltas"] = s.deltas;
  j["runs"] = runs;
  j["sweep"] = io::sweep_rows_json(s);
  j["hard_failure"] = s.hard_failure();
  io::write_json(dir / "sweep.json", j);

  {
    std::ofstream out(dir / "sweep_table.csv", std::ios::binary);
    out << "check,kind,statistic [1],expected [1],threshold [1],verdict";
    for (double d : s.deltas) out << ",value_delta_" << io::num(d) << " [1]";
    out << '\n';
    for (const auto& row : s.rows) {
      out << row.name << ',' << row.kind << ',' << io::num(row.statistic) << ',' << io::num(row.expected)
          << ',' << io::num(row.threshold) << ',' << row.verdict;
      for (double v : row.values) out << ',' << io::num(v);
      out << '\n';
    }
  }

  for (const auto& r : s.runs)
    if (r.error)
      fmt::print(stderr, "delta = {}: stage '{}' failed ({}): {}\n", r.delta, r.error->stage, r.error->kind,
                 r.error->message);
  fmt::print("  {:<22} {:>14} {:>12}  verdict\n", "check", "statistic", "threshold");
  for (const auto& row : s.rows) std::cout << verdict_line(row.name, row.statistic, row.threshold, row.verdict) << '\n';
  return s.hard_failure() ? 1 : 0;
}

double number_or_nan(const json& v) { return v.is_number() ? v.get<double>() : std::nan(""); }

int cmd_report(const config::RunConfig& c) {
  const fs::path dir(c.out_dir);
  bool found = false;
  for (const char* name : {"report.json", "sweep.json"}) {
    const auto path = dir / name;
    if (!fs::exists(path)) continue;
    found = true;
    std::ifstream in(path);
    const auto j = json::parse(in);
    fmt::print("{} ({}, input {})\n", path.string(), j.value("schema", "?"),
               j.value("input_sha256", "?").substr(0, 12));
    if (j.contains("run"))
      for (const auto& k : j["run"]["checks"])
        std::cout << verdict_line(k["name"], number_or_nan(k["residual"]), number_or_nan(k["threshold"]),
                                  k["verdict"])
                  << '\n';
    if (j.contains("sweep"))
      for (const auto& row : j["sweep"])
        std::cout << verdict_line(row["name"], number_or_nan(row["statistic"]),
                                  number_or_nan(row["threshold"]), row["verdict"])
                  << '\n';
  }
  if (!found) {
    fmt::print(stderr, "no report.json or sweep.json in {}\n", dir.string());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shock formation for short-pulse data of a quasilinear wave equation"};
  app.require_subcommand(1);
  Overrides o;
  std::string command;
  auto add = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "INI config file")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--seed-profile", o.seed_profile, "seed profile (overrides seed.profile)");
    sub->add_option("--delta", o.delta, "pulse width (overrides model.delta)");
    sub->add_option("--jobs", o.jobs, "parallel sweep runs (overrides sweep.jobs)");
    sub->callback([&command, name] { command = name; });
  };
  add("burgers", "characteristics and shock time of an inviscid Burgers problem");
  add("build-data", "assemble the Cauchy data and check the data conditions");
  add("run", "evolve one configuration and run every diagnostic");
  add("sweep", "repeat the run over sweep.deltas and fit delta rates");
  add("report", "print the verdicts stored in the output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto c = load(o);
    if (command == "burgers") return cmd_burgers(c);
    if (command == "build-data") return cmd_build_data(c);
    if (command == "run") return cmd_run(c);
    if (command == "sweep") return cmd_sweep(c);
    return cmd_report(c);
  } catch (const ConfigInvalid& e) {
    fmt::print(stderr, "invalid configuration: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "{} failed: {}\n", command, e.what());
    return 1;
  }
}
