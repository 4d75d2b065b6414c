#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "cli/app.hpp"
#include "cli/io.hpp"
#include "doctest.h"
#include "psbell/angles.hpp"
#include "psbell/coincidence.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using psbell::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Fresh scratch directory with a config pinning the calibrated crystal phase.
struct Scratch {
  fs::path dir;
  std::string config;

  explicit Scratch(const std::string& name) {
    dir = fs::temp_directory_path() / ("psbell_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    config = (dir / "config.json").string();
    std::ofstream(config) << R"({"alpha0_deg": -90})";
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& leaf) const { return (dir / leaf).string(); }
};

const std::vector<std::string> ideal_detector = {"--dark-rate", "0", "--dead-time-ns", "0",
                                                 "--window-ns", "0.1"};

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Keep a user's own config out of the defaults.
const bool isolated = [] {
  ::setenv("PSBELL_CONFIG", (fs::temp_directory_path() / "psbell_cli_no_config.json").c_str(), 1);
  return true;
}();

}  // namespace

TEST_CASE("sha256 of a known message") {
  Scratch s("sha");
  std::ofstream(s.path("abc.txt"), std::ios::binary) << "abc";
  CHECK(psbell::cli::sha256_hex(s.path("abc.txt")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("degree round trip") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> deg(-720.0, 720.0);
  for (int k = 0; k < 10000; ++k) {
    const double d = deg(rng);
    CHECK(std::abs(psbell::rad_to_deg(psbell::deg_to_rad(d)) - d) < 1e-12);
  }
  const auto g = psbell::cli::parse_degree_grid("0:180:9", "--grid-deg");
  CHECK(g.size() == 21);
  CHECK(g.radians().size() == 21);
  CHECK(g.points()[5] == 45.0);
  CHECK_THROWS_AS(psbell::cli::parse_degree_grid("0:180", "--grid-deg"), psbell::cli::UsageError);
  CHECK_THROWS_AS(psbell::cli::parse_degree_grid("0:180:0", "--grid-deg"), psbell::cli::UsageError);
}

TEST_CASE("landscape CSV for psi+ with manifest") {
  Scratch s("landscape");
  const auto r = call({"landscape", "--bell", "psi+", "--normalize", "global-max", "-o", s.path("psi.csv")});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(s.path("psi.csv")));
  REQUIRE(rows.size() == 442);
  CHECK(rows[0] == std::vector<std::string>{"theta1_deg", "theta2_deg", "value"});
  bool found = false;
  for (const auto& row : rows)
    if (row[0] == "45" && row[1] == "45") {
      CHECK(row[2] == "1.000000000");
      found = true;
    }
  CHECK(found);

  const auto manifest = json::parse(slurp(s.path("psi.csv.manifest.json")));
  CHECK(manifest["command"].get<std::string>().find("landscape") != std::string::npos);
  CHECK(manifest["config"]["grid1"]["step"]["deg"] == 9.0);
  CHECK(manifest["timestamp"].get<std::string>().size() == 20);
  REQUIRE(manifest["outputs"].size() == 1);
  CHECK(manifest["outputs"][0]["sha256"] == psbell::cli::sha256_hex(s.path("psi.csv")));
}

TEST_CASE("landscape of the QWP at 45 degrees") {
  Scratch s("classical");
  const auto r = call({"landscape", "--qwp-deg", "45", "--beta-deg", "0", "--config", s.config,
                       "--format", "json", "-o", s.path("s45.json")});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(slurp(s.path("s45.json")));
  const auto t1 = doc["theta1_deg"].get<std::vector<double>>();
  const auto t2 = doc["theta2_deg"].get<std::vector<double>>();
  double worst = 0.0;
  for (std::size_t i = 0; i < t1.size(); ++i)
    for (std::size_t j = 0; j < t2.size(); ++j) {
      const double a = psbell::deg_to_rad(t1[i]), b = psbell::deg_to_rad(t2[j]);
      worst = std::max(worst, std::abs(doc["values"][i][j].get<double>() -
                                       (1 - std::sin(2 * a) * std::cos(2 * b)) / 4));
    }
  CHECK(worst < 1e-12);
  CHECK(doc["normalized"] == false);
  CHECK(doc["state"]["alpha0_source"] == "config");
}

TEST_CASE("configuration precedence") {
  Scratch s("precedence");
  std::ofstream(s.config) << R"({"alpha0_deg": 0})";
  const auto from_config = call({"chsh", "--qwp-deg", "0", "--optimize", "--config", s.config});
  const auto from_flag =
      call({"chsh", "--qwp-deg", "0", "--alpha0-deg", "-90", "--optimize", "--config", s.config});
  REQUIRE(from_config.code == 0);
  REQUIRE(from_flag.code == 0);
  CHECK(json::parse(from_config.out)["state"]["alpha0"]["deg"] == 0.0);
  CHECK(json::parse(from_flag.out)["state"]["alpha0"]["deg"] == -90.0);
  CHECK(json::parse(from_flag.out)["state"]["alpha0_source"] == "flag");
  CHECK(call({"chsh", "--bell", "psi+", "--optimize", "--config", s.path("missing.json")}).code == 1);
}

TEST_CASE("chsh examples") {
  const double tsirelson = 2.0 * std::numbers::sqrt2;
  const auto psi = call({"chsh", "--bell", "psi-", "--optimize"});
  REQUIRE(psi.code == 0);
  const auto doc = json::parse(psi.out);
  CHECK(doc["abs_S"].get<double>() == doctest::Approx(tsirelson).epsilon(1e-6));
  CHECK(doc["violates"] == true);
  CHECK(doc["search"]["grid_points_per_axis"] == 36);

  Scratch s("chsh");
  const auto classical = json::parse(call({"chsh", "--qwp-deg", "45", "--optimize", "--config", s.config}).out);
  CHECK(classical["abs_S"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(classical["violates"] == false);

  // Under S = E(t1,t2) - E(t1',t2) + E(t1,t2') + E(t1',t2') these are the psi+
  // optimum; for phi+ (E = cos 2(a - b)) the four terms cancel.
  const auto at = [&](const char* bell) {
    return json::parse(call({"chsh", "--bell", bell, "--angles", "0,45,22.5,-22.5"}).out)["S"].get<double>();
  };
  CHECK(at("psi+") == doctest::Approx(-tsirelson).epsilon(1e-12));
  CHECK(std::abs(at("phi+")) < 1e-12);
  const auto phi = json::parse(call({"chsh", "--bell", "phi+", "--optimize"}).out);
  CHECK(phi["S"].get<double>() == doctest::Approx(tsirelson).epsilon(1e-6));

  CHECK(call({"chsh", "--bell", "psi+"}).code == 2);
  CHECK(call({"chsh", "--bell", "psi+", "--angles", "0,1,2"}).code == 2);
  CHECK(call({"chsh", "--bell", "psi+", "--optimize", "--format", "csv"}).code == 2);
}

TEST_CASE("simulate is byte-identical under a fixed seed") {
  Scratch s("simulate");
  const std::vector<std::string> base = {"simulate", "--bell", "psi+", "--theta1-deg", "45",
                                         "--theta2-deg", "135", "--duration", "0.2", "--seed", "5"};
  REQUIRE(call(base + std::vector<std::string>{"-o", s.path("a.csv")}).code == 0);
  REQUIRE(call(base + std::vector<std::string>{"-o", s.path("b.csv")}).code == 0);
  CHECK(slurp(s.path("a.csv")) == slurp(s.path("b.csv")));
  CHECK(slurp(s.path("a.csv.stats.json")) == slurp(s.path("b.csv.stats.json")));

  const auto rows = csv_rows(slurp(s.path("a.csv")));
  CHECK(rows.size() == 21);
  CHECK(rows[0] == std::vector<std::string>{"setting", "run", "theta1_deg", "theta2_deg", "singles1",
                                            "singles2", "coincidences"});
  // sin^2(180 deg) = 0: only accidentals remain (about 2 w r1 r2 = 4.5/s).
  const auto stats = json::parse(slurp(s.path("a.csv.stats.json")));
  CHECK(stats["settings"][0]["coincidences"]["mean"].get<double>() < 5.0);
  CHECK(stats["settings"][0]["singles1"]["mean"].get<double>() > 2000.0);

  const auto manifest = json::parse(slurp(s.path("a.csv.manifest.json")));
  REQUIRE(manifest["outputs"].size() == 2);
  for (const auto& o : manifest["outputs"])
    CHECK(o["sha256"] == psbell::cli::sha256_hex(o["path"].get<std::string>()));
  CHECK(manifest["config"]["detector"]["dead_time_ns"] == 20.0);
}

TEST_CASE("simulate open arms and CHSH mode") {
  const auto open = call({"simulate", "--bell", "psi+", "--n", "3", "--duration", "0.2", "--format", "json"});
  REQUIRE(open.code == 0);
  const auto doc = json::parse(open.out);
  CHECK(doc["settings"][0]["theta1_deg"] == "open");
  const double singles = doc["settings"][0]["singles1"]["mean"].get<double>() / 0.2;
  CHECK(singles > 27000.0);
  CHECK(singles < 33000.0);

  const auto chsh = call(std::vector<std::string>{"simulate", "--bell", "psi+", "--chsh-optimal", "--n", "20",
                                                  "--duration", "0.2", "--seed", "7", "--format", "json"} +
                         ideal_detector);
  REQUIRE(chsh.code == 0);
  const auto s = json::parse(chsh.out)["S"];
  CHECK(s["n_runs"] == 20);
  CHECK(std::abs(s["mean"].get<double>() + 2.0 * std::numbers::sqrt2) <= 3.0 * s["ci95_halfwidth"].get<double>());

  CHECK(call({"simulate", "--bell", "psi+", "--runs", "1"}).code == 2);
  CHECK(call({"simulate", "--bell", "psi+", "--efficiency", "2"}).code == 2);
  CHECK(call({"simulate", "--bell", "psi+", "--grid-deg", "0:90:45", "--theta1-deg", "3"}).code == 2);
}

TEST_CASE("simulate grid mode") {
  const auto r = call({"simulate", "--bell", "phi+", "--grid-deg", "0:90:45", "--n", "2", "--duration", "0.05"});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  CHECK(rows.size() == 1 + 9 * 2);
  CHECK(rows[1][2] == "0");
  CHECK(rows.back()[2] == "90");
}

TEST_CASE("calibrate writes the config and is idempotent") {
  Scratch s("calibrate");
  std::ofstream(s.config) << R"({"alpha0_deg": 12, "note": "kept"})";
  const auto first = call({"calibrate", "--config", s.config});
  REQUIRE(first.code == 0);
  CHECK(first.out.find("alpha0_deg=-90\n") != std::string::npos);
  const auto cfg = json::parse(slurp(s.config));
  CHECK(cfg["alpha0_deg"] == -90.0);
  CHECK(cfg["note"] == "kept");

  const auto again = call({"calibrate", "--config", s.config, "--format", "json"});
  const auto doc = json::parse(again.out);
  CHECK(doc["alpha0_rad"].get<double>() == cfg["alpha0_rad"].get<double>());
  CHECK(doc["residual"].get<double>() < 1e-9);
}

TEST_CASE("static sweep") {
  Scratch s("sweep");
  const auto r = call({"sweep", "--qwp-deg", "0:180:45", "--config", s.config});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"theta_qwp_deg", "max_abs_S"});
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double s_max = std::stod(rows[k][1]);
    if (rows[k][0] == "45" || rows[k][0] == "135") CHECK(s_max <= 2.0 + 1e-9);
    else CHECK(s_max == doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-6));
  }
  CHECK(csv_rows(call({"sweep", "--qwp-deg", "0,22.5", "--config", s.config}).out).size() == 3);
}

TEST_CASE("dynamic sweep follows a static psi+ scan") {
  Scratch s("schedule");
  {
    std::ofstream f(s.path("const0.csv"));
    f << "time_s,theta_qwp_deg\n";
    for (int k = 0; k < 21; ++k) f << 0.1 * k << ",0\n";
  }
  const auto r = call(std::vector<std::string>{"sweep", "--schedule", s.path("const0.csv"), "--theta2-deg", "0",
                                               "--dwell", "0.2", "--config", s.config} +
                      ideal_detector);
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 22);
  CHECK(rows[0] == std::vector<std::string>{"t_s", "theta_qwp_deg", "theta1_deg", "coincidence_rate"});
  const double pair_detection = 1.288e6 * 0.0233 * 0.0233;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double t1 = psbell::deg_to_rad(std::stod(rows[k][2]));
    const double expected = pair_detection * 0.2 * std::pow(std::sin(t1), 2) / 2.0;
    const double observed = std::stod(rows[k][3]) * 0.2;
    CHECK(std::abs(observed - expected) <= 5.0 * std::sqrt(std::max(expected, 1.0)));
  }

  std::ofstream(s.path("bad.csv")) << "time_s,theta_qwp_deg\n1,0\n0.5,0\n";
  CHECK(call({"sweep", "--schedule", s.path("bad.csv"), "--config", s.config}).code == 1);
  std::ofstream(s.path("header.csv")) << "t,q\n";
  CHECK(call({"sweep", "--schedule", s.path("header.csv"), "--config", s.config}).code == 1);
  CHECK(call({"sweep", "--schedule", s.path("missing.csv"), "--config", s.config}).code == 1);
  CHECK(call({"sweep", "--config", s.config}).code == 2);
}

TEST_CASE("exit codes and usage messages") {
  const auto unknown = call({"landscape", "--bell", "chi+"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("--bell") != std::string::npos);

  const auto grid = call({"landscape", "--bell", "psi+", "--grid-deg", "0:x:1"});
  CHECK(grid.code == 2);
  CHECK(grid.err.find("--grid-deg") != std::string::npos);

  const auto both = call({"landscape", "--bell", "psi+", "--alpha-deg", "10"});
  CHECK(both.code == 2);
  CHECK(both.err.find("--alpha-deg") != std::string::npos);

  CHECK(call({"landscape", "--bell", "psi+", "--normalize", "max"}).code == 2);
  CHECK(call({"landscape", "--alpha-deg", "10", "--beta-deg", "3"}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"--help"}).code == 0);

  Scratch s("io");
  std::ofstream(s.path("file")) << "x";
  CHECK(call({"landscape", "--bell", "psi+", "-o", s.path("file") + "/out.csv"}).code == 1);
}

TEST_CASE("output directory override") {
  Scratch s("outdir");
  ::setenv("PSBELL_OUTPUT_DIR", s.dir.c_str(), 1);
  const auto r = call({"landscape", "--bell", "psi-", "-o", "rel.csv"});
  ::unsetenv("PSBELL_OUTPUT_DIR");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(s.dir / "rel.csv"));
  CHECK(fs::exists(s.dir / "rel.csv.manifest.json"));
}
