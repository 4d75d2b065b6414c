#include "cli/app.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "cli/io.hpp"
#include "psbell/angles.hpp"
#include "psbell/chsh.hpp"
#include "psbell/error.hpp"
#include "psbell/montecarlo.hpp"

#ifndef PSBELL_VERSION
#define PSBELL_VERSION "0.0.0"
#endif

namespace psbell::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kFormats =
    "Data formats:\n"
    "  landscape  CSV theta1_deg,theta2_deg,value (one row per cell, theta1 outer)\n"
    "             JSON {theta1_deg, theta2_deg, values[row][col], normalized, ...}\n"
    "  chsh       JSON {angles_deg, angles_rad, E[4], S, abs_S, violates, search?}\n"
    "  simulate   CSV setting,run,theta1_deg,theta2_deg,singles1,singles2,coincidences\n"
    "             JSON stats {settings[{coincidences{mean,std,n_runs,ci95_halfwidth},..}], S?}\n"
    "  sweep      CSV theta_qwp_deg,max_abs_S  or  t_s,theta_qwp_deg,theta1_deg,coincidence_rate\n"
    "Every file written with --out gets <out>.manifest.json with SHA-256 digests.\n"
    "Exit codes: 0 ok, 1 runtime or I/O error, 2 usage error.";

struct Common {
  std::uint64_t seed = 1;
  std::string out;
  std::string format;
  std::string config;
  unsigned threads = 1;
  CLI::Option* format_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c, std::string default_format) {
  c.format = std::move(default_format);
  cmd->add_option("--seed", c.seed, "Master RNG seed")->capture_default_str();
  cmd->add_option("-o,--out", c.out,
                  "Output file; stdout when omitted. Relative paths go under $PSBELL_OUTPUT_DIR");
  c.format_opt = cmd->add_option("--format", c.format, "csv or json")
                     ->check(CLI::IsMember({"csv", "json"}))
                     ->capture_default_str();
  cmd->add_option("--config", c.config,
                  "Config JSON (default $PSBELL_CONFIG, else ~/.config/psbell/config.json)");
  cmd->add_option("--threads", c.threads, "Worker threads")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
}

struct StateFlags {
  std::string bell;
  double alpha_deg = 0.0;
  double qwp_deg = 0.0;
  double beta_deg = 0.0;
  std::optional<double> alpha0_deg;
  CLI::Option* bell_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* qwp_opt = nullptr;
};

void add_state(CLI::App* cmd, StateFlags& s) {
  s.bell_opt = cmd->add_option("--bell", s.bell, "Ideal Bell state: psi+, psi-, phi+, phi-");
  s.alpha_opt =
      cmd->add_option("--alpha-deg", s.alpha_deg, "Phase-shifted state (|HV> + e^{i alpha}|VH>)/sqrt2");
  s.qwp_opt = cmd->add_option("--qwp-deg", s.qwp_deg, "Waveplate preparation: QWP angle");
  cmd->add_option("--beta-deg", s.beta_deg, "Waveplate preparation: HWP angle (default 0)")
      ->needs(s.qwp_opt);
  cmd->add_option("--alpha0-deg", s.alpha0_deg, "Crystal phase, overrides the config")
      ->needs(s.qwp_opt);
  s.bell_opt->excludes(s.alpha_opt)->excludes(s.qwp_opt);
  s.alpha_opt->excludes(s.qwp_opt);
}

struct ModelFlags {
  std::optional<double> pair_rate, transmission, efficiency, dark_rate, dead_time_ns, window_ns,
      jitter_ns;
};

void add_model(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--pair-rate", m.pair_rate, "Pair rate, 1/s (1.288e6)");
  cmd->add_option("--transmission", m.transmission, "Per-arm transmission (0.0233)");
  cmd->add_option("--efficiency", m.efficiency, "Detector efficiency (1.0)");
  cmd->add_option("--dark-rate", m.dark_rate, "Dark counts, 1/s (100)");
  cmd->add_option("--dead-time-ns", m.dead_time_ns, "Dead time, ns (20)");
  cmd->add_option("--window-ns", m.window_ns, "Coincidence window, ns (10)");
  cmd->add_option("--jitter-ns", m.jitter_ns, "Timing jitter sigma, ns (0)");
}

struct Config {
  fs::path path;
  json data = json::object();
  std::optional<double> alpha0;
  SourceModel source;
  DetectorModel detector;
};

Config load_config(const std::string& flag_path) {
  Config cfg;
  cfg.path = flag_path.empty() ? default_config_path() : fs::path(flag_path);
  if (!fs::exists(cfg.path)) {
    if (!flag_path.empty()) throw IoError("config file '" + flag_path + "' not found");
    return cfg;
  }
  try {
    cfg.data = json::parse(read_text(cfg.path));
    if (!cfg.data.is_object()) throw IoError("config '" + cfg.path.string() + "' is not a JSON object");
    if (cfg.data.contains("alpha0_rad")) cfg.alpha0 = cfg.data["alpha0_rad"].get<double>();
    else if (cfg.data.contains("alpha0_deg")) cfg.alpha0 = deg_to_rad(cfg.data["alpha0_deg"].get<double>());
    if (auto s = cfg.data.find("source"); s != cfg.data.end()) {
      cfg.source.pair_rate = s->value("pair_rate", cfg.source.pair_rate);
      cfg.source.arm_transmission = s->value("arm_transmission", cfg.source.arm_transmission);
    }
    if (auto d = cfg.data.find("detector"); d != cfg.data.end()) {
      auto& det = cfg.detector;
      det.efficiency = d->value("efficiency", det.efficiency);
      det.dark_rate = d->value("dark_rate", det.dark_rate);
      det.dead_time = d->value("dead_time_ns", det.dead_time);
      det.coincidence_window = d->value("coincidence_window_ns", det.coincidence_window);
      det.timing_jitter = d->value("timing_jitter_ns", det.timing_jitter);
    }
  } catch (const json::exception& e) {
    throw IoError("config '" + cfg.path.string() + "': " + e.what());
  }
  return cfg;
}

std::pair<SourceModel, DetectorModel> resolve_model(const ModelFlags& m, const Config& cfg) {
  SourceModel s = cfg.source;
  DetectorModel d = cfg.detector;
  if (m.pair_rate) s.pair_rate = *m.pair_rate;
  if (m.transmission) s.arm_transmission = *m.transmission;
  if (m.efficiency) d.efficiency = *m.efficiency;
  if (m.dark_rate) d.dark_rate = *m.dark_rate;
  if (m.dead_time_ns) d.dead_time = *m.dead_time_ns;
  if (m.window_ns) d.coincidence_window = *m.window_ns;
  if (m.jitter_ns) d.timing_jitter = *m.jitter_ns;
  try {
    s.validate();
    d.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("source/detector flags: ") + e.what());
  }
  return {s, d};
}

json model_json(const SourceModel& s, const DetectorModel& d) {
  return {{"source", {{"pair_rate", s.pair_rate}, {"arm_transmission", s.arm_transmission}}},
          {"detector",
           {{"efficiency", d.efficiency},
            {"dark_rate", d.dark_rate},
            {"dead_time_ns", d.dead_time},
            {"coincidence_window_ns", d.coincidence_window},
            {"timing_jitter_ns", d.timing_jitter}}}};
}

json angle_json(double rad) { return {{"deg", rad_to_deg(rad)}, {"rad", rad}}; }

std::pair<double, std::string> crystal_phase(const std::optional<double>& flag_deg, const Config& cfg) {
  if (flag_deg) return {deg_to_rad(*flag_deg), "flag"};
  if (cfg.alpha0) return {*cfg.alpha0, "config"};
  return {calibrate_crystal_phase().alpha0, "calibration"};
}

struct StateChoice {
  TwoPhotonState state;
  json description;
};

StateChoice resolve_state(const StateFlags& f, const Config& cfg) {
  if (f.bell_opt->count()) {
    const auto kind = parse_bell_kind(f.bell);
    if (!kind) throw UsageError("--bell: unknown state '" + f.bell + "' (expected psi+, psi-, phi+, phi-)");
    return {bell_state(*kind), {{"bell", std::string(to_string(*kind))}}};
  }
  if (f.alpha_opt->count()) {
    const double a = deg_to_rad(f.alpha_deg);
    return {phase_shifted_state(a), {{"alpha", angle_json(a)}}};
  }
  if (f.qwp_opt->count()) {
    const auto [alpha0, source] = crystal_phase(f.alpha0_deg, cfg);
    const PreparationConfig p{deg_to_rad(f.qwp_deg), deg_to_rad(f.beta_deg), alpha0};
    return {prepare(p),
            {{"theta_qwp", angle_json(p.theta_qwp)},
             {"beta", angle_json(p.beta)},
             {"alpha0", angle_json(alpha0)},
             {"alpha0_source", source}}};
  }
  throw UsageError("one of --bell, --alpha-deg or --qwp-deg is required");
}

json grid_json(const DegreeGrid& g) {
  return {{"start", angle_json(deg_to_rad(g.start))},
          {"stop", angle_json(deg_to_rad(g.stop))},
          {"step", angle_json(deg_to_rad(g.step))},
          {"points", g.size()}};
}

ChshAngles parse_chsh_angles(const std::string& text, const std::string& flag) {
  const auto v = parse_degree_list(text, flag);
  if (v.size() != 4) throw UsageError(flag + ": expected four angles theta1,theta1',theta2,theta2'");
  return {deg_to_rad(v[0]), deg_to_rad(v[1]), deg_to_rad(v[2]), deg_to_rad(v[3])};
}

json chsh_angles_json(const ChshAngles& a) {
  const auto side = [&](auto conv) {
    return json{{"theta1", conv(a.theta1)},
                {"theta1_prime", conv(a.theta1_prime)},
                {"theta2", conv(a.theta2)},
                {"theta2_prime", conv(a.theta2_prime)}};
  };
  return {{"deg", side([](double r) { return rad_to_deg(r); })}, {"rad", side([](double r) { return r; })}};
}

json stats_json(const RunStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"n_runs", s.n_runs}, {"ci95_halfwidth", s.ci95_halfwidth}};
}

// Writes the primary output (or prints it) plus any side files, then the
// manifest covering everything written.
class Emitter {
 public:
  Emitter(const Common& common, std::string command_line, std::ostream& out)
      : common_(common), command_line_(std::move(command_line)), out_(out) {
    if (!common.out.empty()) primary_ = resolve_output(common.out);
  }

  bool to_file() const { return primary_.has_value(); }
  const fs::path& primary_path() const { return *primary_; }

  void primary(const std::string& text) {
    if (!primary_) {
      out_ << text;
      return;
    }
    write(*primary_, text);
  }

  void side(const std::string& suffix, const std::string& text) {
    if (primary_) write(fs::path(primary_->string() + suffix), text);
  }

  void finish(const json& config) {
    if (!primary_) return;
    json outputs = json::array();
    for (const auto& p : written_) outputs.push_back({{"path", p.string()}, {"sha256", sha256_hex(p)}});
    const json manifest{{"tool_version", PSBELL_VERSION},
                        {"command", command_line_},
                        {"config", config},
                        {"seed", common_.seed},
                        {"timestamp", iso8601_now()},
                        {"outputs", outputs}};
    write_text(fs::path(primary_->string() + ".manifest.json"), manifest.dump(2) + "\n");
  }

 private:
  void write(const fs::path& p, const std::string& text) {
    write_text(p, text);
    written_.push_back(p);
  }

  const Common& common_;
  std::string command_line_;
  std::ostream& out_;
  std::optional<fs::path> primary_;
  std::vector<fs::path> written_;
};

json base_config(const Common& c, const std::string& command) {
  return {{"command", command}, {"format", c.format}, {"threads", c.threads}, {"seed", c.seed}};
}

// ---------------------------------------------------------------- landscape

struct LandscapeArgs {
  Common common;
  StateFlags state;
  std::string grid = "0:180:9";
  std::string grid2;
  std::string normalize = "none";
};

void cmd_landscape(const LandscapeArgs& a, const std::string& line, std::ostream& out) {
  const auto g1 = parse_degree_grid(a.grid, "--grid-deg");
  const auto g2 = a.grid2.empty() ? g1 : parse_degree_grid(a.grid2, "--grid2-deg");
  std::optional<NormalizeMode> mode;
  if (a.normalize != "none") {
    mode = parse_normalize_mode(a.normalize);
    if (!mode)
      throw UsageError("--normalize: unknown mode '" + a.normalize +
                       "' (expected none, per-theta1-scan, per-theta2-scan, global-max)");
  }
  const auto cfg = load_config(a.common.config);
  const auto choice = resolve_state(a.state, cfg);

  auto land = landscape(choice.state, g1.radians(), g2.radians(), a.common.threads);
  if (mode) land = normalize(land, *mode);
  const auto axis1 = g1.points();
  const auto axis2 = g2.points();
  if (axis1.size() != land.rows() || axis2.size() != land.cols())
    throw UsageError("--grid-deg: grid does not divide evenly");

  std::ostringstream text;
  if (a.common.format == "csv") {
    text << "theta1_deg,theta2_deg,value\n";
    for (std::size_t i = 0; i < land.rows(); ++i)
      for (std::size_t j = 0; j < land.cols(); ++j)
        text << format_shortest(axis1[i]) << ',' << format_shortest(axis2[j]) << ','
             << format_value(land.at(i, j)) << '\n';
  } else {
    json values = json::array();
    for (std::size_t i = 0; i < land.rows(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < land.cols(); ++j) row.push_back(land.at(i, j));
      values.push_back(std::move(row));
    }
    const json doc{{"theta1_deg", axis1}, {"theta2_deg", axis2},     {"values", values},
                   {"normalized", land.normalized}, {"normalize", a.normalize}, {"state", choice.description}};
    text << doc.dump(2) << '\n';
  }

  Emitter emit(a.common, line, out);
  emit.primary(text.str());
  auto config = base_config(a.common, "landscape");
  config["state"] = choice.description;
  config["grid1"] = grid_json(g1);
  config["grid2"] = grid_json(g2);
  config["normalize"] = a.normalize;
  emit.finish(config);
}

// --------------------------------------------------------------------- chsh

struct ChshArgs {
  Common common;
  StateFlags state;
  std::string angles;
  bool optimize = false;
  double seed_step_deg = 5.0;
};

void cmd_chsh(const ChshArgs& a, const std::string& line, std::ostream& out) {
  if (a.common.format_opt->count() && a.common.format != "json")
    throw UsageError("--format: chsh writes JSON only");
  if (a.angles.empty() && !a.optimize) throw UsageError("one of --angles or --optimize is required");
  if (!(a.seed_step_deg > 0.0)) throw UsageError("--grid-step-deg: must be > 0");
  const auto cfg = load_config(a.common.config);
  const auto choice = resolve_state(a.state, cfg);

  json doc{{"state", choice.description}};
  ChshResult r;
  if (a.optimize) {
    const auto opt = optimize_angles(choice.state, deg_to_rad(a.seed_step_deg), a.common.threads);
    r = opt.best;
    doc["search"] = {{"grid_points_per_axis", opt.trace.grid_points_per_axis},
                     {"grid_evaluations", opt.trace.grid_evaluations},
                     {"grid_best_abs_S", opt.trace.grid_best_abs_s},
                     {"refinement_starts", opt.trace.refinement_starts},
                     {"refinement_evaluations", opt.trace.refinement_evaluations},
                     {"orientation_flipped", opt.trace.orientation_flipped}};
  } else {
    r = s_value(choice.state, parse_chsh_angles(a.angles, "--angles"));
  }
  const auto ang = chsh_angles_json(r.angles);
  doc["angles_deg"] = ang["deg"];
  doc["angles_rad"] = ang["rad"];
  doc["E"] = r.e_values;
  doc["S"] = r.s;
  doc["abs_S"] = std::abs(r.s);
  doc["violates"] = r.violates;

  Emitter emit(a.common, line, out);
  emit.primary(doc.dump(2) + "\n");
  auto config = base_config(a.common, "chsh");
  config["state"] = choice.description;
  config["optimize"] = a.optimize;
  config["grid_step"] = angle_json(deg_to_rad(a.seed_step_deg));
  if (!a.angles.empty()) config["angles"] = chsh_angles_json(parse_chsh_angles(a.angles, "--angles"));
  emit.finish(config);
}

// ----------------------------------------------------------------- simulate

struct SimulateArgs {
  Common common;
  StateFlags state;
  ModelFlags model;
  std::optional<double> theta1_deg, theta2_deg;
  std::string grid, grid2, angles;
  bool chsh_optimal = false;
  std::size_t runs = 20;
  double duration = 1.0;
};

struct SimRow {
  std::size_t setting;
  std::size_t run;
  std::optional<double> theta1_deg, theta2_deg;
  SettingCounts counts;
};

std::string angle_cell(const std::optional<double>& deg) { return deg ? format_shortest(*deg) : "open"; }

void cmd_simulate(const SimulateArgs& a, const std::string& line, std::ostream& out) {
  if (a.runs < 2) throw UsageError("--runs: need at least 2 runs");
  if (!(a.duration > 0.0)) throw UsageError("--duration: must be > 0");
  const bool chsh_mode = a.chsh_optimal || !a.angles.empty();
  const auto cfg = load_config(a.common.config);
  const auto [source, detector] = resolve_model(a.model, cfg);
  const auto choice = resolve_state(a.state, cfg);

  std::vector<SimRow> rows;
  json doc{{"state", choice.description}, {"runs", a.runs}, {"duration_s", a.duration}};
  auto config = base_config(a.common, "simulate");
  config["state"] = choice.description;
  config.update(model_json(source, detector));
  config["runs"] = a.runs;
  config["duration_s"] = a.duration;

  if (chsh_mode) {
    const auto angles = a.chsh_optimal ? optimize_angles(choice.state, pi / 36.0, a.common.threads).best.angles
                                       : parse_chsh_angles(a.angles, "--angles");
    const auto est = estimate_S(choice.state, angles, a.runs, source, detector, a.duration, a.common.seed,
                                a.common.threads);
    const auto settings = chsh_settings(angles);
    for (std::size_t m = 0; m < a.runs; ++m)
      for (std::size_t k = 0; k < 16; ++k)
        rows.push_back({k, m, rad_to_deg(settings[k][0]), rad_to_deg(settings[k][1]), est.counts[m * 16 + k]});
    doc["mode"] = "chsh";
    const auto ang = chsh_angles_json(angles);
    doc["angles_deg"] = ang["deg"];
    doc["S"] = stats_json(est.stats);
    doc["S"]["exact"] = s_value(choice.state, angles).s;
    config["angles"] = ang;
  } else if (!a.grid.empty()) {
    const auto g1 = parse_degree_grid(a.grid, "--grid-deg");
    const auto g2 = a.grid2.empty() ? g1 : parse_degree_grid(a.grid2, "--grid2-deg");
    const auto res = run_experiment(choice.state, g1.radians(), g2.radians(), a.runs, source, detector,
                                    a.duration, a.common.seed, a.common.threads);
    const auto axis1 = g1.points(), axis2 = g2.points();
    const std::size_t cols = res.mean.cols();
    for (std::size_t i = 0; i < res.mean.rows(); ++i)
      for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t r = 0; r < a.runs; ++r)
          rows.push_back({i * cols + j, r, axis1[i], axis2[j], res.counts[(i * cols + j) * a.runs + r]});
    doc["mode"] = "grid";
    config["grid1"] = grid_json(g1);
    config["grid2"] = grid_json(g2);
  } else {
    AnalyzerSetting setting;
    if (a.theta1_deg) setting.theta1 = deg_to_rad(*a.theta1_deg);
    if (a.theta2_deg) setting.theta2 = deg_to_rad(*a.theta2_deg);
    for (std::size_t r = 0; r < a.runs; ++r)
      rows.push_back({0, r, a.theta1_deg, a.theta2_deg,
                      simulate_setting(choice.state, setting, source, detector, a.duration,
                                       derive_seed(a.common.seed, 0, 0, r))});
    doc["mode"] = "single";
    config["theta1"] = a.theta1_deg ? angle_json(deg_to_rad(*a.theta1_deg)) : json("open");
    config["theta2"] = a.theta2_deg ? angle_json(deg_to_rad(*a.theta2_deg)) : json("open");
  }

  // Per-setting statistics, settings in first-seen order.
  std::vector<std::size_t> order;
  std::map<std::size_t, std::vector<const SimRow*>> by_setting;
  for (const auto& row : rows) {
    auto& bucket = by_setting[row.setting];
    if (bucket.empty()) order.push_back(row.setting);
    bucket.push_back(&row);
  }
  json settings = json::array();
  for (auto k : order) {
    const auto& bucket = by_setting[k];
    std::vector<double> c, s1, s2;
    for (const auto* r : bucket) {
      c.push_back(static_cast<double>(r->counts.coincidences));
      s1.push_back(static_cast<double>(r->counts.singles1));
      s2.push_back(static_cast<double>(r->counts.singles2));
    }
    const auto deg_or_open = [](const std::optional<double>& d) { return d ? json(*d) : json("open"); };
    settings.push_back({{"setting", k},
                        {"theta1_deg", deg_or_open(bucket.front()->theta1_deg)},
                        {"theta2_deg", deg_or_open(bucket.front()->theta2_deg)},
                        {"coincidences", stats_json(summarize(c))},
                        {"singles1", stats_json(summarize(s1))},
                        {"singles2", stats_json(summarize(s2))}});
  }
  doc["settings"] = settings;
  const std::string stats = doc.dump(2) + "\n";

  Emitter emit(a.common, line, out);
  if (a.common.format == "json") {
    emit.primary(stats);
  } else {
    std::ostringstream csv;
    csv << "setting,run,theta1_deg,theta2_deg,singles1,singles2,coincidences\n";
    for (const auto& r : rows)
      csv << r.setting << ',' << r.run << ',' << angle_cell(r.theta1_deg) << ',' << angle_cell(r.theta2_deg)
          << ',' << r.counts.singles1 << ',' << r.counts.singles2 << ',' << r.counts.coincidences << '\n';
    emit.primary(csv.str());
    emit.side(".stats.json", stats);
  }
  emit.finish(config);
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
  Common common;
};

void cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
  const auto result = calibrate_crystal_phase();
  fs::path target = a.common.out.empty()
                        ? (a.common.config.empty() ? default_config_path() : fs::path(a.common.config))
                        : resolve_output(a.common.out);
  json data = json::object();
  if (fs::exists(target)) {
    try {
      data = json::parse(read_text(target));
    } catch (const json::exception& e) {
      throw IoError("config '" + target.string() + "': " + e.what());
    }
    if (!data.is_object()) throw IoError("config '" + target.string() + "' is not a JSON object");
  }
  data["alpha0_rad"] = result.alpha0;
  data["alpha0_deg"] = rad_to_deg(result.alpha0);
  write_text(target, data.dump(2) + "\n");

  if (a.common.format == "json") {
    out << json{{"alpha0_rad", result.alpha0},
                {"alpha0_deg", rad_to_deg(result.alpha0)},
                {"residual", result.residual},
                {"config", target.string()}}
               .dump(2)
        << '\n';
  } else {
    out << "alpha0_rad=" << format_shortest(result.alpha0) << '\n'
        << "alpha0_deg=" << format_shortest(rad_to_deg(result.alpha0)) << '\n'
        << "residual=" << format_shortest(result.residual) << '\n'
        << "config=" << target.string() << '\n';
  }
}

// -------------------------------------------------------------------- sweep

struct SweepArgs {
  Common common;
  ModelFlags model;
  std::string qwp;
  std::string schedule;
  double beta_deg = 0.0;
  std::optional<double> alpha0_deg;
  double seed_step_deg = 5.0;
  double theta2_deg = 0.0;
  std::string scan = "0:180:9";
  double dwell = 0.1;
};

void cmd_sweep(const SweepArgs& a, const std::string& line, std::ostream& out) {
  if (a.qwp.empty() == a.schedule.empty()) throw UsageError("exactly one of --qwp-deg or --schedule is required");
  const auto cfg = load_config(a.common.config);
  const auto [alpha0, alpha0_source] = crystal_phase(a.alpha0_deg, cfg);
  const double beta = deg_to_rad(a.beta_deg);
  auto config = base_config(a.common, "sweep");
  config["beta"] = angle_json(beta);
  config["alpha0"] = angle_json(alpha0);
  config["alpha0_source"] = alpha0_source;
  std::ostringstream text;

  if (!a.qwp.empty()) {
    if (!(a.seed_step_deg > 0.0)) throw UsageError("--grid-step-deg: must be > 0");
    std::vector<double> degrees;
    if (a.qwp.find(':') != std::string::npos) degrees = parse_degree_grid(a.qwp, "--qwp-deg").points();
    else degrees = parse_degree_list(a.qwp, "--qwp-deg");
    std::vector<double> radians;
    for (double d : degrees) radians.push_back(deg_to_rad(d));
    const auto profile = sweep_qwp_vs_s(beta, radians, alpha0, deg_to_rad(a.seed_step_deg), a.common.threads);
    if (a.common.format == "csv") {
      text << "theta_qwp_deg,max_abs_S\n";
      for (std::size_t k = 0; k < profile.size(); ++k)
        text << format_shortest(degrees[k]) << ',' << format_value(profile[k].max_abs_s) << '\n';
    } else {
      json points = json::array();
      for (std::size_t k = 0; k < profile.size(); ++k)
        points.push_back({{"theta_qwp_deg", degrees[k]},
                          {"max_abs_S", profile[k].max_abs_s},
                          {"angles_deg", chsh_angles_json(profile[k].angles)["deg"]}});
      text << json{{"mode", "static"}, {"points", points}}.dump(2) << '\n';
    }
    config["mode"] = "static";
    config["qwp_deg"] = degrees;
    config["grid_step"] = angle_json(deg_to_rad(a.seed_step_deg));
  } else {
    if (!(a.dwell > 0.0)) throw UsageError("--dwell: must be > 0");
    const auto scan = parse_degree_grid(a.scan, "--scan-deg");
    const auto [source, detector] = resolve_model(a.model, cfg);
    const auto schedule = read_schedule(a.schedule);
    const DynamicSweepConfig dyn{deg_to_rad(a.theta2_deg), beta, alpha0, a.dwell};
    const auto samples = dynamic_sweep(schedule, scan.radians(), dyn, source, detector, a.common.seed,
                                       a.common.threads);
    const auto scan_deg = scan.points();
    if (a.common.format == "csv") {
      text << "t_s,theta_qwp_deg,theta1_deg,coincidence_rate\n";
      for (std::size_t k = 0; k < samples.size(); ++k)
        text << format_shortest(samples[k].time_s) << ',' << format_value(rad_to_deg(samples[k].theta_qwp))
             << ',' << format_shortest(scan_deg[k % scan_deg.size()]) << ','
             << format_value(samples[k].coincidence_rate) << '\n';
    } else {
      json series = json::array();
      for (std::size_t k = 0; k < samples.size(); ++k)
        series.push_back({{"t_s", samples[k].time_s},
                          {"theta_qwp_deg", rad_to_deg(samples[k].theta_qwp)},
                          {"theta1_deg", scan_deg[k % scan_deg.size()]},
                          {"coincidence_rate", samples[k].coincidence_rate}});
      text << json{{"mode", "dynamic"}, {"samples", series}}.dump(2) << '\n';
    }
    config["mode"] = "dynamic";
    config["schedule"] = a.schedule;
    config["schedule_sha256"] = sha256_hex(a.schedule);
    config["theta2"] = angle_json(dyn.theta2);
    config["scan"] = grid_json(scan);
    config["dwell_s"] = a.dwell;
    config.update(model_json(source, detector));
  }

  Emitter emit(a.common, line, out);
  emit.primary(text.str());
  emit.finish(config);
}

std::string join_command(const std::vector<std::string>& args) {
  std::string line = "psbell";
  for (const auto& a : args) line += " " + a;
  return line;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase-shifted EPR-Bell simulator", "psbell"};
  app.set_version_flag("--version", PSBELL_VERSION);
  app.require_subcommand(1);
  app.footer(kFormats);

  LandscapeArgs la;
  auto* landscape_cmd = app.add_subcommand("landscape", "Coincidence landscape over (theta1, theta2)");
  add_common(landscape_cmd, la.common, "csv");
  add_state(landscape_cmd, la.state);
  landscape_cmd->add_option("--grid-deg", la.grid, "Grid start:stop:step, degrees")->capture_default_str();
  landscape_cmd->add_option("--grid2-deg", la.grid2, "Separate theta2 grid (default: same as --grid-deg)");
  landscape_cmd->add_option("--normalize", la.normalize, "none, per-theta1-scan, per-theta2-scan, global-max")
      ->capture_default_str();

  ChshArgs ca;
  auto* chsh_cmd = app.add_subcommand("chsh", "CHSH S at given angles, or maximized");
  add_common(chsh_cmd, ca.common, "json");
  add_state(chsh_cmd, ca.state);
  auto* angles_opt = chsh_cmd->add_option("--angles", ca.angles, "theta1,theta1',theta2,theta2' in degrees");
  chsh_cmd->add_flag("--optimize", ca.optimize, "Maximize |S| over analyzer angles")->excludes(angles_opt);
  chsh_cmd->add_option("--grid-step-deg", ca.seed_step_deg, "Optimizer seed grid step")->capture_default_str();

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo photon counting");
  add_common(sim_cmd, sa.common, "csv");
  add_state(sim_cmd, sa.state);
  add_model(sim_cmd, sa.model);
  auto* t1 = sim_cmd->add_option("--theta1-deg", sa.theta1_deg, "Arm 1 polarizer (open when omitted)");
  auto* t2 = sim_cmd->add_option("--theta2-deg", sa.theta2_deg, "Arm 2 polarizer (open when omitted)");
  auto* sgrid = sim_cmd->add_option("--grid-deg", sa.grid, "Scan a grid start:stop:step");
  sim_cmd->add_option("--grid2-deg", sa.grid2, "Separate theta2 grid")->needs(sgrid);
  auto* sangles = sim_cmd->add_option("--angles", sa.angles, "CHSH angles theta1,theta1',theta2,theta2'");
  auto* sopt = sim_cmd->add_flag("--chsh-optimal", sa.chsh_optimal, "CHSH at the optimized angles");
  sim_cmd->add_option("-n,--runs", sa.runs, "Independent runs per setting (also --n)")->capture_default_str();
  sim_cmd->add_option("--duration", sa.duration, "Integration time per run, s")->capture_default_str();
  sgrid->excludes(t1)->excludes(t2)->excludes(sangles)->excludes(sopt);
  sangles->excludes(t1)->excludes(t2)->excludes(sopt);
  sopt->excludes(t1)->excludes(t2);

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate the crystal phase and store it in the config");
  add_common(cal_cmd, cal.common, "csv");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "max|S| against the QWP angle, or a timed QWP schedule");
  add_common(sweep_cmd, sw.common, "csv");
  add_model(sweep_cmd, sw.model);
  auto* sq = sweep_cmd->add_option("--qwp-deg", sw.qwp, "QWP angles: start:stop:step or a,b,c");
  auto* ss = sweep_cmd->add_option("--schedule", sw.schedule, "CSV time_s,theta_qwp_deg");
  sq->excludes(ss);
  sweep_cmd->add_option("--beta-deg", sw.beta_deg, "HWP angle")->capture_default_str();
  sweep_cmd->add_option("--alpha0-deg", sw.alpha0_deg, "Crystal phase, overrides the config");
  sweep_cmd->add_option("--grid-step-deg", sw.seed_step_deg, "Optimizer seed grid step")->capture_default_str();
  sweep_cmd->add_option("--theta2-deg", sw.theta2_deg, "Fixed arm 2 angle (schedule mode)")->capture_default_str();
  sweep_cmd->add_option("--scan-deg", sw.scan, "theta1 scan cycled by the schedule")->capture_default_str();
  sweep_cmd->add_option("--dwell", sw.dwell, "Counting time per step, s")->capture_default_str();

  try {
    // CLI11 rejects one-letter long names, so "--n" is spelled out here.
    std::vector<std::string> reversed;
    for (auto it = args.rbegin(); it != args.rend(); ++it) {
      if (*it == "--n") reversed.push_back("--runs");
      else if (it->rfind("--n=", 0) == 0) reversed.push_back("--runs=" + it->substr(4));
      else reversed.push_back(*it);
    }
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const std::string line = join_command(args);
  try {
    if (*landscape_cmd) cmd_landscape(la, line, out);
    else if (*chsh_cmd) cmd_chsh(ca, line, out);
    else if (*sim_cmd) cmd_simulate(sa, line, out);
    else if (*cal_cmd) cmd_calibrate(cal, out);
    else if (*sweep_cmd) cmd_sweep(sw, line, out);
    return 0;
  } catch (const UsageError& e) {
    err << "psbell: " << e.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const std::exception& e) {
    err << "psbell: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace psbell::cli
