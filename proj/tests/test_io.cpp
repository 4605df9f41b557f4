#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>

#include "qcm/io.hpp"

using namespace qcm;
using qcm::io::RunConfig;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Non-comment lines only; the '#' header carries the config echo.
std::string data_section(const std::string& content) {
  std::stringstream in(content);
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line;
    out += '\n';
  }
  return out;
}

std::string extract_config_line(const std::string& content) {
  std::stringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("#config: ", 0) == 0) return line.substr(9);
  }
  return {};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("qcm_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

const char* kFig2Spec = "-0.6300,-0.1276,0.5146,-0.5573,0.3617";

}  // namespace

TEST_CASE("fmt17 round-trips doubles exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, -0.29304845185887923}) {
    CHECK(std::stod(qcm::io::fmt17(v)) == v);
  }
}

TEST_CASE("RunConfig JSON round-trip") {
  RunConfig c;
  c.subcommand = "sweep";
  c.seed = 987654321;
  c.eta = 0.03;
  c.etas = {0.01, 0.07};
  c.scene = qcm::io::parse_scene_spec(kFig2Spec);
  c.trials = 55;
  c.fit.n_starts = 12;
  c.grid.pitch = 0.1;
  const RunConfig back = qcm::io::config_from_json(qcm::io::config_to_json(c));
  CHECK(qcm::io::config_to_json(back) == qcm::io::config_to_json(c));
  CHECK(back.scene->alpha == 0.3617);
  CHECK(back.fit.n_starts == 12);
}

TEST_CASE("scene spec parsing names the missing field") {
  const auto s = qcm::io::parse_scene_spec(kFig2Spec);
  CHECK(s.x1 == -0.6300);
  CHECK(s.alpha == 0.3617);
  try {
    qcm::io::parse_scene_spec("1,2,3,4");
    FAIL("expected a usage error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
  CHECK_THROWS_AS(qcm::io::parse_scene_spec("1,2,x,4,5"), std::runtime_error);
}

TEST_CASE("layout spec parsing") {
  const DetectorLayout def = qcm::io::parse_layout_spec("default");
  CHECK(def.positions[0].y == 1.0);
  const DetectorLayout custom =
      qcm::io::parse_layout_spec("0,0,1,0,0,1");
  CHECK(custom.positions[2].y == 1.0);
  CHECK_THROWS_AS(qcm::io::parse_layout_spec("0,0,1,1,2,2"),
                  std::runtime_error);
}

TEST_CASE("cmd_forward writes the frozen sextuple") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "forward";
  c.scene = qcm::io::parse_scene_spec(kFig2Spec);
  c.out = tmp.file("forward.json");
  CHECK(qcm::io::run_command(c) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(c.out));
  CHECK(j.at("g1").at(0).get<double>() ==
        doctest::Approx(0.21082625811244174).epsilon(1e-15));
  CHECK(j.at("g2").at(1).get<double>() ==
        doctest::Approx(0.43803847089111392).epsilon(1e-15));
  CHECK(j.at("p1").size() == 3);
  CHECK(j.at("config").at("subcommand") == "forward");
}

TEST_CASE("cmd_forward co-located equal emitters give g2 = 0.5 everywhere") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "forward";
  c.scene = qcm::io::parse_scene_spec("0.2,0.3,0.2,0.3,1.0");
  c.out = tmp.file("f.json");
  CHECK(qcm::io::run_command(c) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(c.out));
  for (int k = 0; k < 3; ++k) {
    CHECK(j.at("g2").at(k).get<double>() == doctest::Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("usage errors exit with code 2") {
  RunConfig missing_scene;
  missing_scene.subcommand = "forward";
  CHECK(qcm::io::run_command(missing_scene) == 2);

  RunConfig bad_sub;
  bad_sub.subcommand = "wat";
  CHECK(qcm::io::run_command(bad_sub) == 2);

  RunConfig bad_sigma;
  bad_sigma.subcommand = "forward";
  bad_sigma.sigma = -1.0;
  CHECK(qcm::io::run_command(bad_sigma) == 2);
}

TEST_CASE("unwritable output path exits with code 4") {
  RunConfig c;
  c.subcommand = "forward";
  c.scene = qcm::io::parse_scene_spec(kFig2Spec);
  c.out = "/nonexistent_dir_qcm/out.json";
  CHECK(qcm::io::run_command(c) == 4);
}

TEST_CASE("cmd_fit recovers the fig2 parameters from its exact sextuple") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "fit";
  c.measurements = qcm::io::parse_measurement_spec(
      "0.21082625811244174,0.14218440767450252,0.29610841704598934,"
      "0.29304845185887923,0.43803847089111392,0.13998085020988377");
  c.out = tmp.file("fit.json");
  CHECK(qcm::io::run_command(c) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(c.out));
  CHECK(j.at("converged") == true);
  CHECK(j.at("params").at("x1").get<double>() ==
        doctest::Approx(-0.6300).epsilon(1e-3));
  CHECK(j.at("params").at("alpha").get<double>() ==
        doctest::Approx(0.3617).epsilon(1e-3));
}

TEST_CASE("cmd_fit tolerates unphysical g2 values without crashing") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "fit";
  c.measurements =
      qcm::io::parse_measurement_spec("0.9,1.4,2.0,0.9,0.7,0.8");
  c.fit.n_starts = 8;
  c.out = tmp.file("fit.json");
  const int code = qcm::io::run_command(c);
  CHECK((code == 0 || code == 3));
  const nlohmann::json j = nlohmann::json::parse(slurp(c.out));
  CHECK(j.contains("chi2"));
}

TEST_CASE("cmd_fit repeated runs are byte-identical") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "fit";
  c.seed = 99;
  c.measurements = qcm::io::parse_measurement_spec(
      "0.21,0.14,0.29,0.29,0.43,0.14");
  c.fit.n_starts = 8;
  c.out = tmp.file("a.json");
  CHECK(qcm::io::run_command(c) == 0);
  const std::string a = slurp(c.out);
  CHECK(qcm::io::run_command(c) == 0);
  const std::string b = slurp(c.out);
  CHECK(a == b);
}

TEST_CASE("cmd_trials writes one row per trial plus a summary") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "trials";
  c.scene = qcm::io::parse_scene_spec(kFig2Spec);
  c.eta = 0.01;
  c.trials = 12;
  c.fit.n_starts = 8;
  c.out = tmp.file("trials.csv");
  CHECK(qcm::io::run_command(c) == 0);
  const std::string content = slurp(c.out);
  CHECK(content.find("#summary: ") != std::string::npos);
  std::stringstream in(data_section(content));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 13);  // header + 12 trials
}

TEST_CASE("cmd_map bounds and row count") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "map";
  c.scene = qcm::io::parse_scene_spec(kFig2Spec);
  c.out = tmp.file("map.csv");
  CHECK(qcm::io::run_command(c) == 0);
  std::stringstream in(data_section(slurp(c.out)));
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,value");
  int rows = 0;
  double max_v = 0.0;
  while (std::getline(in, line)) {
    const auto last = line.rfind(',');
    max_v = std::max(max_v, std::stod(line.substr(last + 1)));
    ++rows;
  }
  CHECK(rows == 81 * 81);
  CHECK(max_v <= 1.3617);
  CHECK(max_v > 1.0);
}

TEST_CASE("cmd_sweep round-trips through its embedded config") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "sweep";
  c.seed = 4242;
  c.scenes = 2;
  c.trials = 12;
  c.etas = {0.01, 0.05};
  c.fit.n_starts = 8;
  c.out = tmp.file("sweep.csv");
  CHECK(qcm::io::run_command(c) == 0);
  const std::string first = slurp(c.out);

  const std::string embedded = extract_config_line(first);
  REQUIRE_FALSE(embedded.empty());
  RunConfig replay =
      qcm::io::config_from_json(nlohmann::json::parse(embedded));
  replay.out = tmp.file("sweep2.csv");
  CHECK(qcm::io::run_command(replay) == 0);
  const std::string second = slurp(replay.out);
  CHECK(data_section(first) == data_section(second));
  CHECK(std::filesystem::exists(tmp.file("sweep.csv.hist.csv")));
}

TEST_CASE("cmd_sweep at eta 0 reports near-zero precision") {
  TempDir tmp;
  RunConfig c;
  c.subcommand = "sweep";
  c.seed = 9;
  c.scenes = 2;
  c.trials = 12;
  c.etas = {0.0};
  c.fit.n_starts = 8;
  c.out = tmp.file("sweep0.csv");
  CHECK(qcm::io::run_command(c) == 0);
  std::stringstream in(data_section(slurp(c.out)));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 8);
    CHECK(std::stod(fields[5]) < 1e-3);  // summed_precision
  }
}
