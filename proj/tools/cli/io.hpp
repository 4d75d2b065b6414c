#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "psbell/coincidence.hpp"
#include "psbell/montecarlo.hpp"

namespace psbell::cli {

/// Bad flag value; the message names the flag. Maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File system or file format failure. Maps to exit code 1.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inclusive degree range as typed on the command line ("start:stop:step").
struct DegreeGrid {
  double start = 0.0;
  double stop = 180.0;
  double step = 9.0;

  std::size_t size() const;
  std::vector<double> points() const;
  AngleGrid radians() const;
};

DegreeGrid parse_degree_grid(std::string_view text, std::string_view flag);
/// "a,b,c" in degrees.
std::vector<double> parse_degree_list(std::string_view text, std::string_view flag);

/// Fixed notation with 9 decimals, as in data files.
std::string format_value(double v);
/// Shortest text that reads back to the same double.
std::string format_shortest(double v);

/// Relative paths are placed under $PSBELL_OUTPUT_DIR when it is set.
std::filesystem::path resolve_output(const std::string& out);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
std::string sha256_hex(const std::filesystem::path& path);
std::string iso8601_now();

/// "time_s,theta_qwp_deg" CSV with header; angles are returned in radians.
std::vector<ScheduleEntry> read_schedule(const std::filesystem::path& path);

/// $PSBELL_CONFIG, else $XDG_CONFIG_HOME/psbell/config.json, else
/// $HOME/.config/psbell/config.json, else ./psbell.json.
std::filesystem::path default_config_path();

}  // namespace psbell::cli
