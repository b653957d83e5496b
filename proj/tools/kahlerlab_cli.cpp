// Command-line front end. Exit status: 0 all checks pass, 1 a check failed,
// 2 usage, configuration or I/O error.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kahlerlab/io.hpp"
#include "kahlerlab/reports.hpp"
#include "kahlerlab/suite.hpp"

namespace {

using namespace kahlerlab;

struct RunConfig {
  std::string command;
  int m = 2;
  std::optional<double> curvature;
  std::optional<double> r_min;
  std::optional<double> r_max;
  std::optional<std::size_t> r_steps;
  std::optional<double> tol;
  std::uint64_t seed = 42;
  std::optional<nlohmann::json> profile;  // string "kind:params" or JSON object
  std::string format = "csv";
  std::string out;
  std::size_t points = 10;
  std::size_t mc_samples = 1'000'000;
};

/// Keys mirror the long flag names with '-' replaced by '_'.
void apply_json(RunConfig& cfg, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, val] : doc.items()) {
      if (key == "m") {
        cfg.m = val.get<int>();
      } else if (key == "curvature") {
        cfg.curvature = val.get<double>();
      } else if (key == "r_min") {
        cfg.r_min = val.get<double>();
      } else if (key == "r_max") {
        cfg.r_max = val.get<double>();
      } else if (key == "r_steps") {
        cfg.r_steps = val.get<std::size_t>();
      } else if (key == "tol") {
        cfg.tol = val.get<double>();
      } else if (key == "seed") {
        cfg.seed = val.get<std::uint64_t>();
      } else if (key == "profile") {
        if (!val.is_string() && !val.is_object()) throw ConfigError("config: profile must be a string or an object");
        cfg.profile = val;
      } else if (key == "format") {
        cfg.format = val.get<std::string>();
      } else if (key == "out") {
        cfg.out = val.get<std::string>();
      } else if (key == "points") {
        cfg.points = val.get<std::size_t>();
      } else if (key == "mc_samples") {
        cfg.mc_samples = val.get<std::size_t>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io::IoError("cannot read config file '" + path + "'");
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

riccati::RicciProfile resolve_profile(const RunConfig& cfg, const std::string& fallback) {
  if (!cfg.profile) return riccati::parse_profile(fallback, cfg.m);
  if (cfg.profile->is_string()) return riccati::parse_profile(cfg.profile->get<std::string>(), cfg.m);
  return riccati::profile_from_json(*cfg.profile);
}

int sign_of_curvature(const RunConfig& cfg) {
  const double k = cfg.curvature.value_or(-1.0);
  if (k != -1.0 && k != 1.0) throw ConfigError("--curvature must be -1 or 1 for this subcommand");
  return static_cast<int>(k);
}

riccati::IntegrationConfig integration_config(const RunConfig& cfg) {
  riccati::IntegrationConfig ic;
  const double lo = cfg.r_min.value_or(0.01);
  const double hi = cfg.r_max.value_or(5.0);
  ic.grid = geometric_grid(lo, hi, cfg.r_steps.value_or(200));
  ic.r0 = std::min(ic.r0, lo);
  ic.r_max = hi;
  return ic;
}

std::string num(double x) { return io::format_double(x); }

reports::Report dispatch(const RunConfig& cfg) {
  if (cfg.m < 2) throw ConfigError("--m must be at least 2");
  const std::string& c = cfg.command;
  if (c == "model") {
    const double k = cfg.curvature.value_or(-1.0);
    const auto grid = linear_grid(cfg.r_min.value_or(0.1), cfg.r_max.value_or(3.0), cfg.r_steps.value_or(30));
    return reports::model_report(cfg.m, k, grid);
  }
  if (c == "bochner-check") {
    reports::BochnerStudyConfig b;
    b.m = cfg.m;
    b.seed = cfg.seed;
    b.points = cfg.points;
    return reports::bochner_report(b, cfg.tol.value_or(1e-5));
  }
  if (c == "riccati") {
    const int k = sign_of_curvature(cfg);
    const auto profile = resolve_profile(cfg, "model:" + num(k));
    return reports::riccati_report(cfg.m, k, profile, integration_config(cfg), cfg.tol.value_or(1e-6));
  }
  if (c == "average") {
    const auto profile = resolve_profile(cfg, "constant:" + num(-(cfg.m + 1.0)));
    return reports::average_report(cfg.m, profile, integration_config(cfg), cfg.tol.value_or(1e-6));
  }
  if (c == "examples") return reports::examples_report(cfg.mc_samples, cfg.seed);
  if (c == "gradient") return reports::gradient_report();
  if (c == "suite") {
    suite::SuiteConfig s;
    s.m = cfg.m;
    s.seed = cfg.seed;
    s.mc_samples = cfg.mc_samples;
    reports::Report rep;
    rep.verdicts = suite::run_suite(s);
    rep.table = io::verdict_table(rep.verdicts);
    return rep;
  }
  throw ConfigError("unknown subcommand '" + c + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for Kähler comparison geometry"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::string profile_text;
  int m = 2;
  double curvature = 0, r_min = 0, r_max = 0, tol = 0;
  std::size_t r_steps = 0, points = 0, mc_samples = 0;
  std::uint64_t seed = 0;
  std::string format, out;

  auto* o_m = app.add_option("--m", m, "complex dimension (default 2)");
  auto* o_curv = app.add_option("--curvature", curvature, "curvature c, or the sign k = -1/1 for comparisons");
  auto* o_rmin = app.add_option("--r-min", r_min, "first radius of the output grid");
  auto* o_rmax = app.add_option("--r-max", r_max, "last radius of the output grid");
  auto* o_rsteps = app.add_option("--r-steps", r_steps, "number of grid radii");
  auto* o_tol = app.add_option("--tol", tol, "check tolerance");
  auto* o_seed = app.add_option("--seed", seed, "seed for all pseudo-random choices (default 42)");
  auto* o_profile = app.add_option("--profile", profile_text, "Ricci profile constant:V | model:c | bumps:base,a,w,p,...");
  auto* o_format = app.add_option("--format", format, "csv or json (default csv)");
  auto* o_out = app.add_option("--out", out, "output file (default stdout)");
  auto* o_points = app.add_option("--points", points, "points per metric and field for bochner-check (default 10)");
  auto* o_mc = app.add_option("--mc-samples", mc_samples, "Monte Carlo directions for examples and suite");
  app.add_option("--config", config_path, "JSON file with the same keys; flags take precedence");

  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"model", "tabulate space-form quantities"},
           {"bochner-check", "residual sweep of the Bochner-type identity and its decomposition"},
           {"riccati", "integrate the radial system and compare with the model"},
           {"average", "sphere-averaged comparison envelope"},
           {"examples", "product-space examples report"},
           {"gradient", "gradient-estimate quantities on harmonic samples"},
           {"suite", "all acceptance checks"}}) {
    app.add_subcommand(name, help)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    RunConfig cfg;
    cfg.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty()) apply_json(cfg, read_json_file(config_path));
    if (o_m->count()) cfg.m = m;
    if (o_curv->count()) cfg.curvature = curvature;
    if (o_rmin->count()) cfg.r_min = r_min;
    if (o_rmax->count()) cfg.r_max = r_max;
    if (o_rsteps->count()) cfg.r_steps = r_steps;
    if (o_tol->count()) cfg.tol = tol;
    if (o_seed->count()) cfg.seed = seed;
    if (o_profile->count()) cfg.profile = profile_text;
    if (o_format->count()) cfg.format = format;
    if (o_out->count()) cfg.out = out;
    if (o_points->count()) cfg.points = points;
    if (o_mc->count()) cfg.mc_samples = mc_samples;

    const io::Format fmt = io::parse_format(cfg.format);
    const auto rep = dispatch(cfg);
    io::emit(rep.table, fmt, cfg.out);
    for (const auto& v : rep.verdicts) {
      std::cerr << (v.pass() ? "PASS " : "FAIL ") << v.name << " worst_margin=" << num(v.worst_margin)
                << (v.note.empty() ? "" : "  (" + v.note + ")") << "\n";
    }
    return rep.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
