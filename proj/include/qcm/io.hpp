#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcm/ensemble.hpp"
#include "qcm/estimator.hpp"
#include "qcm/optics.hpp"
#include "qcm/synth.hpp"

namespace qcm::io {

// Exit codes shared by the CLI and run_command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitUnlocalized = 3;
inline constexpr int kExitIo = 4;

// Everything a run needs; a run is reproducible from its serialized
// RunConfig alone.  Serialized as a one-to-one JSON mirror and embedded in
// every output file header.
struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = 1;
  double sigma = 1.0;
  double eta = 0.01;
  std::vector<double> etas = {0.01, 0.02, 0.05, 0.1, 0.15, 0.2};
  DetectorLayout layout = default_layout();
  std::optional<TrialParams> scene;          // forward/trials/map
  std::optional<MeasurementSet> measurements;  // fit
  int trials = 101;
  int scenes = 30;
  double alpha_min = 0.05;
  FitConfig fit;
  GridSpec grid;
  int bins = 50;
  std::string out = "-";
  int workers = 0;  // 0 = all available cores
};

// Shortest exact decimal representation (17 significant digits).
std::string fmt17(double v);

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

// Parses "x1,y1,x2,y2,alpha"; a 4-value spec fails naming the missing field.
TrialParams parse_scene_spec(const std::string& spec);
// "default" or "x1,y1,x2,y2,x3,y3".
DetectorLayout parse_layout_spec(const std::string& spec);
// Six comma-separated values, g1[0..2] then g2[0..2].
MeasurementSet parse_measurement_spec(const std::string& spec);

// Executes one subcommand end to end (forward, fit, trials, sweep, map),
// writing its output files; returns a process exit code.  Diagnostics go to
// stderr.
int run_command(const RunConfig& config);

}  // namespace qcm::io
