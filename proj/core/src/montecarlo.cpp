#include "psbell/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "psbell/error.hpp"
#include "psbell/parallel.hpp"

namespace psbell {

namespace {

constexpr double kNsPerSecond = 1e9;

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

void invalid_model(const std::string& what) { throw Error(ErrorKind::invalid_model, what); }

// joint[a][b]: probability that arm 1 gives outcome a and arm 2 outcome b,
// 0 = pass, 1 = block. An open arm always passes.
std::array<std::array<double, 2>, 2> outcome_table(const TwoPhotonState& state,
                                                   const AnalyzerSetting& setting) {
  const double base1 = setting.theta1.value_or(0.0);
  const double base2 = setting.theta2.value_or(0.0);
  std::array<std::array<double, 2>, 2> joint{};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double p = probability(state, base1 + a * (pi / 2.0), base2 + b * (pi / 2.0));
      joint[setting.theta1 ? a : 0][setting.theta2 ? b : 0] += p;
    }
  }
  return joint;
}

// Poisson process with `rate_per_ns` on [0, duration_ns), via exponential gaps.
template <typename Rng, typename OnEvent>
void poisson_times(Rng& rng, double rate_per_ns, double duration_ns, OnEvent&& on_event) {
  if (rate_per_ns <= 0.0) return;
  std::exponential_distribution<double> gap(rate_per_ns);
  for (double t = gap(rng); t < duration_ns; t += gap(rng)) on_event(t);
}

std::vector<double> merge_sorted(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  return out;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void DetectorModel::validate() const {
  if (!is_probability(efficiency)) invalid_model("detector efficiency must lie in [0, 1]");
  if (!std::isfinite(dark_rate) || dark_rate < 0.0) invalid_model("dark rate must be >= 0");
  if (!std::isfinite(dead_time) || dead_time < 0.0) invalid_model("dead time must be >= 0");
  if (!std::isfinite(coincidence_window) || coincidence_window <= 0.0)
    invalid_model("coincidence window must be > 0");
  if (!std::isfinite(timing_jitter) || timing_jitter < 0.0)
    invalid_model("timing jitter must be >= 0");
}

void SourceModel::validate() const {
  if (!std::isfinite(pair_rate) || pair_rate <= 0.0) invalid_model("pair rate must be > 0");
  if (!is_probability(arm_transmission)) invalid_model("arm transmission must lie in [0, 1]");
}

double detection_probability(const SourceModel& source, const DetectorModel& detector) {
  return source.arm_transmission * detector.efficiency;
}

DetectionStreams simulate_streams(const TwoPhotonState& state, const AnalyzerSetting& setting,
                                  const SourceModel& source, const DetectorModel& detector,
                                  double duration_s, std::uint64_t seed) {
  source.validate();
  detector.validate();
  if (!std::isfinite(duration_s) || duration_s <= 0.0) invalid_model("duration must be > 0");

  const double duration_ns = duration_s * kNsPerSecond;
  const double eta = detection_probability(source, detector);
  const auto joint = outcome_table(state, setting);

  const double p_both = joint[0][0] * eta * eta;
  const double p_only1 = joint[0][0] * eta * (1.0 - eta) + joint[0][1] * eta;
  const double p_only2 = joint[0][0] * (1.0 - eta) * eta + joint[1][0] * eta;
  const double p_any = p_both + p_only1 + p_only2;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, detector.timing_jitter > 0.0 ? detector.timing_jitter : 1.0);
  const bool jittered = detector.timing_jitter > 0.0;
  auto stamp = [&](double t) {
    return jittered ? std::clamp(t + jitter(rng), 0.0, duration_ns) : t;
  };

  std::vector<double> arm1;
  std::vector<double> arm2;
  const double expected = source.pair_rate * duration_s * p_any;
  arm1.reserve(static_cast<std::size_t>(expected * 0.6) + 16);
  arm2.reserve(static_cast<std::size_t>(expected * 0.6) + 16);

  poisson_times(rng, source.pair_rate / kNsPerSecond * p_any, duration_ns, [&](double t) {
    const double u = uniform(rng) * p_any;
    if (u < p_both) {
      arm1.push_back(stamp(t));
      arm2.push_back(stamp(t));
    } else if (u < p_both + p_only1) {
      arm1.push_back(stamp(t));
    } else {
      arm2.push_back(stamp(t));
    }
  });
  if (jittered) {
    std::sort(arm1.begin(), arm1.end());
    std::sort(arm2.begin(), arm2.end());
  }

  std::vector<double> dark1;
  std::vector<double> dark2;
  const double dark_per_ns = detector.dark_rate / kNsPerSecond;
  poisson_times(rng, dark_per_ns, duration_ns, [&](double t) { dark1.push_back(t); });
  poisson_times(rng, dark_per_ns, duration_ns, [&](double t) { dark2.push_back(t); });

  DetectionStreams out;
  out.arm1 = apply_dead_time({merge_sorted(arm1, dark1), duration_ns}, detector.dead_time);
  out.arm2 = apply_dead_time({merge_sorted(arm2, dark2), duration_ns}, detector.dead_time);
  return out;
}

SettingCounts simulate_setting(const TwoPhotonState& state, const AnalyzerSetting& setting,
                               const SourceModel& source, const DetectorModel& detector,
                               double duration_s, std::uint64_t seed) {
  const auto streams = simulate_streams(state, setting, source, detector, duration_s, seed);
  return {streams.arm1.timestamps.size(), streams.arm2.timestamps.size(),
          correlate(streams.arm1, streams.arm2, detector.coincidence_window)};
}

SettingCounts simulate_setting(const TwoPhotonState& state, double theta1, double theta2,
                               const SourceModel& source, const DetectorModel& detector,
                               double duration_s, std::uint64_t seed) {
  return simulate_setting(state, AnalyzerSetting{theta1, theta2}, source, detector, duration_s,
                          seed);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i, std::uint64_t j,
                          std::uint64_t run) {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ mix64(i + 0x1ULL));
  h = mix64(h ^ mix64(j + 0x100000001ULL));
  h = mix64(h ^ mix64(run + 0x200000002ULL));
  return h;
}

RunStats summarize(const std::vector<double>& samples) {
  RunStats stats;
  stats.n_runs = samples.size();
  if (samples.empty()) return stats;
  double sum = 0.0;
  for (double x : samples) sum += x;
  stats.mean = sum / static_cast<double>(samples.size());
  if (samples.size() >= 2) {
    double ss = 0.0;
    for (double x : samples) ss += (x - stats.mean) * (x - stats.mean);
    stats.std = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  stats.ci95_halfwidth = 1.96 * stats.std / std::sqrt(static_cast<double>(samples.size()));
  return stats;
}

ExperimentResult run_experiment(const TwoPhotonState& state, const AngleGrid& grid1,
                                const AngleGrid& grid2, std::size_t runs,
                                const SourceModel& source, const DetectorModel& detector,
                                double duration_s, std::uint64_t seed, unsigned threads) {
  if (runs < 2) throw Error(ErrorKind::invalid_argument, "run_experiment needs runs >= 2");
  ExperimentResult out;
  out.runs = runs;
  out.mean.theta1_axis = grid1.points();
  out.mean.theta2_axis = grid2.points();
  const std::size_t rows = out.mean.rows();
  const std::size_t cols = out.mean.cols();
  out.counts.resize(rows * cols * runs);

  parallel_for(out.counts.size(), threads, [&](std::size_t task) {
    const std::size_t cell = task / runs;
    const std::size_t run = task % runs;
    const std::size_t i = cell / cols;
    const std::size_t j = cell % cols;
    try {
      out.counts[task] = simulate_setting(state, out.mean.theta1_axis[i], out.mean.theta2_axis[j],
                                          source, detector, duration_s,
                                          derive_seed(seed, i, j, run));
    } catch (const Error& e) {
      throw Error(e.kind(), "cell (" + std::to_string(i) + ", " + std::to_string(j) + ") run " +
                                std::to_string(run) + ": " + e.what());
    }
  });

  out.std = out.mean;
  out.mean.values.assign(rows * cols, 0.0);
  out.std.values.assign(rows * cols, 0.0);
  std::vector<double> samples(runs);
  for (std::size_t cell = 0; cell < rows * cols; ++cell) {
    for (std::size_t r = 0; r < runs; ++r) {
      samples[r] = static_cast<double>(out.counts[cell * runs + r].coincidences);
    }
    const auto stats = summarize(samples);
    out.mean.values[cell] = stats.mean;
    out.std.values[cell] = stats.std;
  }
  return out;
}

std::array<std::array<double, 2>, 16> chsh_settings(const ChshAngles& angles) {
  // Same arithmetic as correlation_settings() so lookups match bit for bit.
  const std::array<double, 4> t1{angles.theta1, angles.theta1 + pi / 2.0, angles.theta1_prime,
                                 angles.theta1_prime + pi / 2.0};
  const std::array<double, 4> t2{angles.theta2, angles.theta2 + pi / 2.0, angles.theta2_prime,
                                 angles.theta2_prime + pi / 2.0};
  std::array<std::array<double, 2>, 16> out{};
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) out[a * 4 + b] = {t1[a], t2[b]};
  return out;
}

SEstimate estimate_S(const TwoPhotonState& state, const ChshAngles& angles, std::size_t n,
                     const SourceModel& source, const DetectorModel& detector,
                     double duration_s, std::uint64_t seed, unsigned threads) {
  if (n < 2) throw Error(ErrorKind::invalid_argument, "estimate_S needs n >= 2");
  const auto settings = chsh_settings(angles);

  SEstimate out;
  out.counts.resize(n * settings.size());
  parallel_for(out.counts.size(), threads, [&](std::size_t task) {
    const std::size_t m = task / settings.size();
    const std::size_t k = task % settings.size();
    out.counts[task] = simulate_setting(state, settings[k][0], settings[k][1], source, detector,
                                        duration_s, derive_seed(seed, m, k, 0));
  });

  out.samples.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    const CoincidenceFunction counted = [&](double t1, double t2) {
      for (std::size_t k = 0; k < settings.size(); ++k) {
        if (settings[k][0] == t1 && settings[k][1] == t2) {
          return static_cast<double>(out.counts[m * settings.size() + k].coincidences);
        }
      }
      throw Error(ErrorKind::invalid_argument, "setting outside the CHSH quadruple");
    };
    try {
      out.samples[m] = s_value(counted, angles).s;
    } catch (const Error& e) {
      throw Error(e.kind(), "measurement " + std::to_string(m) + ": " + e.what());
    }
  }
  out.stats = summarize(out.samples);
  return out;
}

std::vector<DynamicSample> dynamic_sweep(const std::vector<ScheduleEntry>& schedule,
                                         const AngleGrid& theta1_scan,
                                         const DynamicSweepConfig& config,
                                         const SourceModel& source,
                                         const DetectorModel& detector, std::uint64_t seed,
                                         unsigned threads) {
  if (schedule.empty()) throw Error(ErrorKind::empty_schedule, "schedule has no entries");
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    if (schedule[k].time_s < schedule[k - 1].time_s) {
      throw Error(ErrorKind::invalid_argument,
                  "schedule times decrease at entry " + std::to_string(k));
    }
  }
  if (!(config.dwell_s > 0.0)) throw Error(ErrorKind::invalid_argument, "dwell must be > 0");
  const auto theta1_points = theta1_scan.points();

  std::vector<DynamicSample> out(schedule.size());
  parallel_for(schedule.size(), threads, [&](std::size_t k) {
    const auto& entry = schedule[k];
    const double theta1 = theta1_points[k % theta1_points.size()];
    const auto state = prepare({.theta_qwp = entry.theta_qwp, .beta = config.beta,
                                .alpha0 = config.alpha0});
    const auto counts = simulate_setting(state, theta1, config.theta2, source, detector,
                                         config.dwell_s, derive_seed(seed, k, 0, 0));
    out[k] = {entry.time_s, entry.theta_qwp, theta1,
              static_cast<double>(counts.coincidences) / config.dwell_s};
  });
  return out;
}

}  // namespace psbell
