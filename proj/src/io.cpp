#include "qcm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qcm::io {

namespace {

using nlohmann::json;

// Thrown for malformed specs/configs; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_csv_numbers(const std::string& spec) {
  std::vector<double> values;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(token, &pos);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + token + "'");
    }
    if (pos != token.size()) throw UsageError("not a number: '" + token + "'");
    values.push_back(v);
  }
  return values;
}

json scene_to_json(const TrialParams& s) {
  return {{"x1", s.x1}, {"y1", s.y1}, {"x2", s.x2}, {"y2", s.y2},
          {"alpha", s.alpha}};
}

TrialParams scene_from_json(const json& j) {
  TrialParams s;
  for (const char* field : {"x1", "y1", "x2", "y2", "alpha"}) {
    if (!j.contains(field)) {
      throw UsageError(std::string("scene: missing field '") + field + "'");
    }
  }
  s.x1 = j.at("x1");
  s.y1 = j.at("y1");
  s.x2 = j.at("x2");
  s.y2 = j.at("y2");
  s.alpha = j.at("alpha");
  return s;
}

Scene make_scene(const TrialParams& p) {
  Scene scene;
  scene.emitter1 = Emitter{p.x1, p.y1, 1.0};
  scene.emitter2 = Emitter{p.x2, p.y2, p.alpha};
  scene.alpha = p.alpha;
  return scene;
}

json measurements_to_json(const MeasurementSet& m) {
  return {{"g1", m.g1}, {"g2", m.g2}, {"noisy", m.noisy}};
}

MeasurementSet measurements_from_json(const json& j) {
  MeasurementSet m;
  for (const char* field : {"g1", "g2"}) {
    if (!j.contains(field) || !j.at(field).is_array() ||
        j.at(field).size() != 3) {
      throw UsageError(std::string("measurements: field '") + field +
                       "' must be an array of 3 numbers");
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    m.g1[i] = j.at("g1").at(i);
    m.g2[i] = j.at("g2").at(i);
  }
  m.noisy = j.value("noisy", false);
  return m;
}

json fit_config_to_json(const FitConfig& f) {
  return {{"n_starts", f.n_starts},
          {"start_box_radius", f.start_box_radius},
          {"param_tolerance", f.param_tolerance},
          {"chi2_tolerance", f.chi2_tolerance},
          {"max_iterations", f.max_iterations}};
}

FitConfig fit_config_from_json(const json& j) {
  FitConfig f;
  f.n_starts = j.value("n_starts", f.n_starts);
  f.start_box_radius = j.value("start_box_radius", f.start_box_radius);
  f.param_tolerance = j.value("param_tolerance", f.param_tolerance);
  f.chi2_tolerance = j.value("chi2_tolerance", f.chi2_tolerance);
  f.max_iterations = j.value("max_iterations", f.max_iterations);
  return f;
}

json grid_to_json(const GridSpec& g) {
  return {{"x0", g.x0}, {"y0", g.y0}, {"pitch", g.pitch},
          {"nx", g.nx}, {"ny", g.ny}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.x0 = j.value("x0", g.x0);
  g.y0 = j.value("y0", g.y0);
  g.pitch = j.value("pitch", g.pitch);
  g.nx = j.value("nx", g.nx);
  g.ny = j.value("ny", g.ny);
  return g;
}

// Output sink: file path or "-" for stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) : path_(path) {
    if (path == "-") return;
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) {
      throw std::ios_base::failure("cannot open output file: " + path);
    }
  }
  std::ostream& stream() { return path_ == "-" ? std::cout : file_; }
  void close() {
    if (path_ == "-") {
      std::cout.flush();
      return;
    }
    file_.close();
    if (!file_) {
      throw std::ios_base::failure("error writing output file: " + path_);
    }
  }

 private:
  std::string path_;
  std::ofstream file_;
};

void write_config_header(std::ostream& os, const RunConfig& config) {
  os << "#config: " << config_to_json(config).dump() << "\n";
}

int cmd_forward(const RunConfig& config) {
  if (!config.scene) throw UsageError("forward: a scene spec is required");
  const Scene scene = make_scene(*config.scene);
  const PsfModel psf{config.sigma};
  const MeasurementSet m = forward_model(scene, config.layout, psf);
  std::array<double, 3> p1;
  std::array<double, 3> p2;
  for (std::size_t j = 0; j < 3; ++j) {
    p1[j] = detection_probability(scene.emitter1, config.layout.positions[j], psf);
    p2[j] = detection_probability(scene.emitter2, config.layout.positions[j], psf);
  }
  json record = {{"config", config_to_json(config)},
                 {"g1", m.g1},
                 {"g2", m.g2},
                 {"p1", p1},
                 {"p2", p2}};
  Sink sink(config.out);
  sink.stream() << record.dump(2) << "\n";
  sink.close();
  return kExitOk;
}

int cmd_fit(const RunConfig& config) {
  if (!config.measurements) {
    throw UsageError("fit: six measurement values are required");
  }
  for (std::size_t j = 0; j < 3; ++j) {
    if (!std::isfinite(config.measurements->g1[j]) ||
        !std::isfinite(config.measurements->g2[j])) {
      throw UsageError("fit: measurement values must be finite");
    }
  }
  const PsfModel psf{config.sigma};
  RngStream rng(config.seed, 0);
  const FitResult result =
      fit_scene(*config.measurements, config.layout, psf, config.fit, rng);
  json record = {{"config", config_to_json(config)},
                 {"params", scene_to_json(result.params)},
                 {"chi2", result.chi2},
                 {"iterations", result.iterations},
                 {"converged", result.converged},
                 {"starts_used", result.starts_used}};
  Sink sink(config.out);
  sink.stream() << record.dump(2) << "\n";
  sink.close();
  return result.converged ? kExitOk : kExitUnlocalized;
}

int cmd_trials(const RunConfig& config) {
  if (!config.scene) throw UsageError("trials: a scene spec is required");
  const Scene scene = make_scene(*config.scene);
  const PsfModel psf{config.sigma};
  const TrialEnsemble ensemble =
      run_trials(scene, config.eta, config.trials, config.layout, psf,
                 config.fit, config.seed);
  const auto summary = precision_90(ensemble);

  Sink sink(config.out);
  std::ostream& os = sink.stream();
  write_config_header(os, config);
  if (summary) {
    json s = {{"mean1", {summary->mean1.x, summary->mean1.y}},
              {"mean2", {summary->mean2.x, summary->mean2.y}},
              {"radius1", summary->radius1},
              {"radius2", summary->radius2},
              {"summed_precision", summary->summed_precision},
              {"n_used", summary->n_used},
              {"label_refined", summary->label_refined}};
    os << "#summary: " << s.dump() << "\n";
  } else {
    os << "#summary: null\n";
  }
  os << "trial,converged,chi2,x1,y1,x2,y2,alpha\n";
  for (std::size_t t = 0; t < ensemble.fits.size(); ++t) {
    const FitResult& fit = ensemble.fits[t];
    os << t << ',' << (fit.converged ? 1 : 0) << ',' << fmt17(fit.chi2) << ','
       << fmt17(fit.params.x1) << ',' << fmt17(fit.params.y1) << ','
       << fmt17(fit.params.x2) << ',' << fmt17(fit.params.y2) << ','
       << fmt17(fit.params.alpha) << "\n";
  }
  sink.close();
  return summary ? kExitOk : kExitUnlocalized;
}

void write_histogram(const std::string& path, const RunConfig& config,
                     const std::vector<SweepRecord>& records) {
  std::vector<double> finite;
  for (const SweepRecord& r : records) {
    if (r.ok && r.summed_precision > 0.0) finite.push_back(r.summed_precision);
  }
  Sink sink(path);
  std::ostream& os = sink.stream();
  write_config_header(os, config);
  os << "eta,bin_lo,bin_hi,count,proportion\n";
  if (!finite.empty()) {
    double lo = *std::min_element(finite.begin(), finite.end());
    double hi = *std::max_element(finite.begin(), finite.end());
    if (lo == hi) {
      lo /= 1.5;
      hi *= 1.5;
    }
    const int nbins = config.bins;
    const double llo = std::log(lo);
    const double step = (std::log(hi) - llo) / nbins;
    for (double eta : config.etas) {
      int n_ok = 0;
      for (const SweepRecord& r : records) {
        n_ok += (r.eta == eta && r.ok && r.summed_precision > 0.0);
      }
      for (int b = 0; b < nbins; ++b) {
        const double blo = std::exp(llo + b * step);
        const double bhi = std::exp(llo + (b + 1) * step);
        int count = 0;
        for (const SweepRecord& r : records) {
          if (r.eta != eta || !r.ok || !(r.summed_precision > 0.0)) continue;
          const bool in_bin = b + 1 == nbins
                                  ? (r.summed_precision >= blo &&
                                     r.summed_precision <= hi)
                                  : (r.summed_precision >= blo &&
                                     r.summed_precision < bhi);
          count += in_bin;
        }
        const double prop = n_ok ? static_cast<double>(count) / n_ok : 0.0;
        os << fmt17(eta) << ',' << fmt17(blo) << ',' << fmt17(bhi) << ','
           << count << ',' << fmt17(prop) << "\n";
      }
    }
  }
  sink.close();
}

int cmd_sweep(const RunConfig& config) {
  if (config.out == "-") {
    throw UsageError("sweep: --out must be a file path");
  }
  const PsfModel psf{config.sigma};
  const std::vector<SweepRecord> records =
      sweep(config.scenes, config.etas, config.trials, config.alpha_min,
            config.layout, psf, config.fit, config.seed);

  Sink sink(config.out);
  std::ostream& os = sink.stream();
  write_config_header(os, config);
  os << "scene_id,alpha,eta,radius1,radius2,summed_precision,"
        "convergence_fraction,ok\n";
  for (const SweepRecord& r : records) {
    os << r.scene_id << ',' << fmt17(r.alpha) << ',' << fmt17(r.eta) << ','
       << fmt17(r.radius1) << ',' << fmt17(r.radius2) << ','
       << fmt17(r.summed_precision) << ',' << fmt17(r.convergence_fraction)
       << ',' << (r.ok ? 1 : 0) << "\n";
  }
  sink.close();
  write_histogram(config.out + ".hist.csv", config, records);
  return kExitOk;
}

int cmd_map(const RunConfig& config) {
  if (!config.scene) throw UsageError("map: a scene spec is required");
  const Scene scene = make_scene(*config.scene);
  const PsfModel psf{config.sigma};
  const IntensityGrid grid = confocal_map(scene, psf, config.grid);

  Sink sink(config.out);
  std::ostream& os = sink.stream();
  write_config_header(os, config);
  os << "x,y,value\n";
  for (std::size_t iy = 0; iy < grid.spec.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.spec.nx; ++ix) {
      os << fmt17(grid.spec.x0 + grid.spec.pitch * static_cast<double>(ix))
         << ',' << fmt17(grid.spec.y0 + grid.spec.pitch * static_cast<double>(iy))
         << ',' << fmt17(grid.at(ix, iy)) << "\n";
    }
  }
  sink.close();
  return kExitOk;
}

}  // namespace

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json config_to_json(const RunConfig& c) {
  json layout = json::array();
  for (const Vec2& p : c.layout.positions) layout.push_back({p.x, p.y});
  json j = {{"subcommand", c.subcommand},
            {"seed", c.seed},
            {"sigma", c.sigma},
            {"eta", c.eta},
            {"etas", c.etas},
            {"layout", layout},
            {"trials", c.trials},
            {"scenes", c.scenes},
            {"alpha_min", c.alpha_min},
            {"fit", fit_config_to_json(c.fit)},
            {"grid", grid_to_json(c.grid)},
            {"bins", c.bins},
            {"out", c.out},
            {"workers", c.workers}};
  if (c.scene) j["scene"] = scene_to_json(*c.scene);
  if (c.measurements) j["measurements"] = measurements_to_json(*c.measurements);
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.subcommand = j.value("subcommand", c.subcommand);
    c.seed = j.value("seed", c.seed);
    c.sigma = j.value("sigma", c.sigma);
    c.eta = j.value("eta", c.eta);
    if (j.contains("etas")) c.etas = j.at("etas").get<std::vector<double>>();
    if (j.contains("layout")) {
      const auto& lay = j.at("layout");
      if (!lay.is_array() || lay.size() != 3) {
        throw UsageError("layout: expected 3 [x,y] pairs");
      }
      for (std::size_t i = 0; i < 3; ++i) {
        c.layout.positions[i] = {lay.at(i).at(0), lay.at(i).at(1)};
      }
    }
    if (j.contains("scene")) c.scene = scene_from_json(j.at("scene"));
    if (j.contains("measurements")) {
      c.measurements = measurements_from_json(j.at("measurements"));
    }
    c.trials = j.value("trials", c.trials);
    c.scenes = j.value("scenes", c.scenes);
    c.alpha_min = j.value("alpha_min", c.alpha_min);
    if (j.contains("fit")) c.fit = fit_config_from_json(j.at("fit"));
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
    c.bins = j.value("bins", c.bins);
    c.out = j.value("out", c.out);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return c;
}

TrialParams parse_scene_spec(const std::string& spec) {
  const std::vector<double> v = parse_csv_numbers(spec);
  const char* fields[] = {"x1", "y1", "x2", "y2", "alpha"};
  if (v.size() < 5) {
    throw UsageError(std::string("scene: missing field '") + fields[v.size()] +
                     "' (expected x1,y1,x2,y2,alpha)");
  }
  if (v.size() > 5) throw UsageError("scene: expected exactly 5 values");
  return {v[0], v[1], v[2], v[3], v[4]};
}

DetectorLayout parse_layout_spec(const std::string& spec) {
  if (spec == "default") return default_layout();
  const std::vector<double> v = parse_csv_numbers(spec);
  if (v.size() != 6) {
    throw UsageError("layout: expected 'default' or x1,y1,x2,y2,x3,y3");
  }
  DetectorLayout layout{{Vec2{v[0], v[1]}, Vec2{v[2], v[3]}, Vec2{v[4], v[5]}}};
  if (!layout_valid(layout)) {
    throw UsageError("layout: detector positions are collinear");
  }
  return layout;
}

MeasurementSet parse_measurement_spec(const std::string& spec) {
  const std::vector<double> v = parse_csv_numbers(spec);
  if (v.size() != 6) {
    throw UsageError("measurements: expected 6 values (g1 x3 then g2 x3)");
  }
  MeasurementSet m;
  for (std::size_t i = 0; i < 3; ++i) {
    m.g1[i] = v[i];
    m.g2[i] = v[3 + i];
  }
  m.noisy = true;
  return m;
}

int run_command(const RunConfig& config) {
  try {
    if (!layout_valid(config.layout)) {
      throw UsageError("layout: detector positions are collinear");
    }
    if (!(config.sigma > 0.0)) throw UsageError("sigma must be positive");
#ifdef _OPENMP
    if (config.workers > 0) omp_set_num_threads(config.workers);
#endif
    if (config.subcommand == "forward") return cmd_forward(config);
    if (config.subcommand == "fit") return cmd_fit(config);
    if (config.subcommand == "trials") return cmd_trials(config);
    if (config.subcommand == "sweep") return cmd_sweep(config);
    if (config.subcommand == "map") return cmd_map(config);
    throw UsageError("unknown subcommand: '" + config.subcommand + "'");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace qcm::io
