// qcm: two-emitter correlation trilateration toolkit.
//
// Subcommands: forward, fit, trials, sweep, map.  All lengths are in units
// of the PSF standard deviation sigma.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcm/io.hpp"

namespace {

struct CliArgs {
  std::string scene_spec;
  std::string layout_spec = "default";
  std::string measurement_spec;
  std::string measurement_file;
  std::string eta_list;
  std::string config_file;
};

void add_common_flags(CLI::App* cmd, qcm::io::RunConfig& cfg, CliArgs& args) {
  cmd->add_option("--seed", cfg.seed, "master RNG seed");
  cmd->add_option("--sigma", cfg.sigma, "PSF standard deviation");
  cmd->add_option("--layout", args.layout_spec,
                  "three x,y pairs or 'default'");
  cmd->add_option("--out", cfg.out, "output path ('-' = stdout)");
  cmd->add_option("--workers", cfg.workers,
                  "worker threads (0 = all cores)");
  cmd->add_option("--config", args.config_file,
                  "JSON config file; overrides all flags");
}

std::vector<double> parse_eta_list(const std::string& spec) {
  std::vector<double> etas;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) etas.push_back(std::stod(token));
  return etas;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-emitter correlation trilateration"};
  app.require_subcommand(1);

  qcm::io::RunConfig cfg;
  CliArgs args;

  CLI::App* forward = app.add_subcommand(
      "forward", "exact g1/g2 sextuple for a scene");
  forward->add_option("--scene", args.scene_spec, "x1,y1,x2,y2,alpha");
  add_common_flags(forward, cfg, args);

  CLI::App* fit = app.add_subcommand(
      "fit", "recover scene parameters from six measurements");
  fit->add_option("--measurements", args.measurement_spec,
                  "six values: g1 x3 then g2 x3");
  fit->add_option("--in", args.measurement_file,
                  "JSON file with g1/g2 arrays (e.g. forward output)");
  fit->add_option("--starts", cfg.fit.n_starts, "number of simplex starts");
  add_common_flags(fit, cfg, args);

  CLI::App* trials = app.add_subcommand(
      "trials", "noisy-trial ensemble for one scene");
  trials->add_option("--scene", args.scene_spec, "x1,y1,x2,y2,alpha");
  trials->add_option("--eta", cfg.eta, "relative noise level");
  trials->add_option("--trials", cfg.trials, "number of trials");
  trials->add_option("--starts", cfg.fit.n_starts, "number of simplex starts");
  add_common_flags(trials, cfg, args);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "precision sweep over random scenes and noise levels");
  sweep->add_option("--etas", args.eta_list, "comma-separated noise levels");
  sweep->add_option("--scenes", cfg.scenes, "number of random scenes");
  sweep->add_option("--trials", cfg.trials, "trials per (scene, eta)");
  sweep->add_option("--alpha-min", cfg.alpha_min, "lower bound for sampled alpha");
  sweep->add_option("--starts", cfg.fit.n_starts, "number of simplex starts");
  sweep->add_option("--bins", cfg.bins, "log-spaced precision histogram bins");
  add_common_flags(sweep, cfg, args);

  CLI::App* map_cmd = app.add_subcommand(
      "map", "normalized confocal intensity map of a scene");
  map_cmd->add_option("--scene", args.scene_spec, "x1,y1,x2,y2,alpha");
  map_cmd->add_option("--pitch", cfg.grid.pitch, "grid pitch (sigma units)");
  add_common_flags(map_cmd, cfg, args);

  CLI11_PARSE(app, argc, argv);

  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (!args.config_file.empty()) {
      std::ifstream in(args.config_file);
      if (!in) {
        std::cerr << "error: cannot read config file: " << args.config_file
                  << "\n";
        return qcm::io::kExitIo;
      }
      nlohmann::json j = nlohmann::json::parse(in);
      qcm::io::RunConfig from_file = qcm::io::config_from_json(j);
      if (from_file.subcommand.empty()) from_file.subcommand = cfg.subcommand;
      return qcm::io::run_command(from_file);
    }

    cfg.layout = qcm::io::parse_layout_spec(args.layout_spec);
    if (!args.scene_spec.empty()) {
      cfg.scene = qcm::io::parse_scene_spec(args.scene_spec);
    }
    if (!args.measurement_spec.empty()) {
      cfg.measurements = qcm::io::parse_measurement_spec(args.measurement_spec);
    } else if (!args.measurement_file.empty()) {
      std::ifstream in(args.measurement_file);
      if (!in) {
        std::cerr << "error: cannot read file: " << args.measurement_file
                  << "\n";
        return qcm::io::kExitIo;
      }
      nlohmann::json j = nlohmann::json::parse(in);
      qcm::io::RunConfig probe;
      probe.measurements.emplace();
      for (std::size_t i = 0; i < 3; ++i) {
        probe.measurements->g1[i] = j.at("g1").at(i);
        probe.measurements->g2[i] = j.at("g2").at(i);
      }
      cfg.measurements = probe.measurements;
    }
    if (!args.eta_list.empty()) cfg.etas = parse_eta_list(args.eta_list);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qcm::io::kExitUsage;
  }

  return qcm::io::run_command(cfg);
}
