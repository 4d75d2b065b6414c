#include "cli/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "psbell/angles.hpp"

namespace psbell::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc{} && ptr == end && std::isfinite(value);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t from = 0;
  for (;;) {
    const auto at = text.find(sep, from);
    parts.push_back(text.substr(from, at - from));
    if (at == std::string_view::npos) return parts;
    from = at + 1;
  }
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

}  // namespace

std::size_t DegreeGrid::size() const {
  return static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
}

std::vector<double> DegreeGrid::points() const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = start + static_cast<double>(k) * step;
  return out;
}

AngleGrid DegreeGrid::radians() const {
  return AngleGrid{deg_to_rad(start), deg_to_rad(stop), deg_to_rad(step)};
}

DegreeGrid parse_degree_grid(std::string_view text, std::string_view flag) {
  const auto parts = split(text, ':');
  DegreeGrid g;
  if (parts.size() != 3 || !parse_double(parts[0], g.start) || !parse_double(parts[1], g.stop) ||
      !parse_double(parts[2], g.step)) {
    throw UsageError(std::string(flag) + ": expected start:stop:step in degrees, got '" +
                     std::string(text) + "'");
  }
  if (!(g.step > 0.0) || g.stop < g.start)
    throw UsageError(std::string(flag) + ": need step > 0 and stop >= start");
  return g;
}

std::vector<double> parse_degree_list(std::string_view text, std::string_view flag) {
  std::vector<double> out;
  for (auto part : split(text, ',')) {
    double v = 0.0;
    if (!parse_double(part, v))
      throw UsageError(std::string(flag) + ": '" + std::string(part) + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::string format_value(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.9f", v == 0.0 ? 0.0 : v);
  return buf.data();
}

std::string format_shortest(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v == 0.0 ? 0.0 : v);
  return std::string(buf.data(), ptr);
}

std::filesystem::path resolve_output(const std::string& out) {
  std::filesystem::path p(out);
  if (const char* dir = env("PSBELL_OUTPUT_DIR"); dir && p.is_relative()) p = std::filesystem::path(dir) / p;
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  f.close();
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string sha256_hex(const std::filesystem::path& path) {
  const auto data = read_text(path);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed for '" + path.string() + "'");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 0xF];
  }
  return out;
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::vector<ScheduleEntry> read_schedule(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "time_s,theta_qwp_deg")
    throw IoError(path.string() + ": expected header 'time_s,theta_qwp_deg'");
  std::vector<ScheduleEntry> out;
  for (std::size_t row = 2; std::getline(in, line); ++row) {
    if (trim(line).empty()) continue;
    const auto parts = split(trim(line), ',');
    double t = 0.0, q = 0.0;
    if (parts.size() != 2 || !parse_double(parts[0], t) || !parse_double(parts[1], q))
      throw IoError(path.string() + ":" + std::to_string(row) + ": expected two numbers");
    out.push_back({t, deg_to_rad(q)});
  }
  return out;
}

std::filesystem::path default_config_path() {
  if (const char* p = env("PSBELL_CONFIG")) return p;
  if (const char* x = env("XDG_CONFIG_HOME")) return std::filesystem::path(x) / "psbell" / "config.json";
  if (const char* h = env("HOME")) return std::filesystem::path(h) / ".config" / "psbell" / "config.json";
  return "psbell.json";
}

}  // namespace psbell::cli
