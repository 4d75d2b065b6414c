#pragma once

// Stochastic model of the counting bench: a Poissonian pair source, one
// polarizer per arm, lossy detectors with dark counts and dead time, and a
// coincidence unit. Rates are per second, times inside streams are ns.

#include <cstdint>
#include <optional>
#include <vector>

#include "psbell/chsh.hpp"
#include "psbell/coincidence.hpp"
#include "psbell/events.hpp"
#include "psbell/states.hpp"

namespace psbell {

struct DetectorModel {
  double efficiency = 1.0;          // per photon
  double dark_rate = 100.0;         // counts / s
  double dead_time = 20.0;          // ns
  double coincidence_window = 10.0; // ns
  double timing_jitter = 0.0;       // ns, Gaussian sigma per detection

  void validate() const;
};

struct SourceModel {
  double pair_rate = 1.288e6;        // pairs / s
  double arm_transmission = 0.0233;  // coupling losses, per arm

  void validate() const;
};

/// Detection probability for one photon that passes its polarizer.
double detection_probability(const SourceModel& source, const DetectorModel& detector);

/// Polarizer angles for both arms. An empty arm has no polarizer (every
/// photon reaches the detector), as during alignment.
struct AnalyzerSetting {
  std::optional<double> theta1;
  std::optional<double> theta2;
};

struct SettingCounts {
  std::uint64_t singles1 = 0;
  std::uint64_t singles2 = 0;
  std::uint64_t coincidences = 0;
};

struct DetectionStreams {
  EventStream arm1;
  EventStream arm2;
};

/// Detector output streams (dead time applied) for one setting.
///
/// Pairs are a Poisson process at pair_rate. Each pair takes one of the four
/// pass/block outcomes with the quantum probabilities at the setting, and each
/// passing photon is detected with detection_probability(). Only pairs with
/// at least one detection are materialized: they form a thinned Poisson
/// process with the same law as the per-pair procedure. Both photons of a
/// pair share its timestamp (plus optional jitter). Dark counts are added per
/// arm as independent Poisson processes. Deterministic in `seed`.
DetectionStreams simulate_streams(const TwoPhotonState& state, const AnalyzerSetting& setting,
                                  const SourceModel& source, const DetectorModel& detector,
                                  double duration_s, std::uint64_t seed);

SettingCounts simulate_setting(const TwoPhotonState& state, const AnalyzerSetting& setting,
                               const SourceModel& source, const DetectorModel& detector,
                               double duration_s, std::uint64_t seed);

SettingCounts simulate_setting(const TwoPhotonState& state, double theta1, double theta2,
                               const SourceModel& source, const DetectorModel& detector,
                               double duration_s, std::uint64_t seed);

/// Stable per-task seed from (master, i, j, run) via splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i, std::uint64_t j,
                          std::uint64_t run);

struct RunStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  std::size_t n_runs = 0;
  double ci95_halfwidth = 0.0;  // 1.96 std / sqrt(n)
};

RunStats summarize(const std::vector<double>& samples);

struct ExperimentResult {
  Landscape mean;
  Landscape std;
  // counts[(i * cols + j) * runs + r]
  std::vector<SettingCounts> counts;
  std::size_t runs = 0;
};

/// Simulates every grid cell `runs` times (seed derive_seed(seed, i, j, r))
/// and reports the element-wise mean and sample std of the coincidences.
ExperimentResult run_experiment(const TwoPhotonState& state, const AngleGrid& grid1,
                                const AngleGrid& grid2, std::size_t runs,
                                const SourceModel& source, const DetectorModel& detector,
                                double duration_s, std::uint64_t seed, unsigned threads = 1);

/// The 16 distinct analyzer settings of one CHSH measurement, in the order
/// used by SEstimate::counts: theta1 in {t1, t1+pi/2, t1', t1'+pi/2} (outer)
/// by theta2 in {t2, t2+pi/2, t2', t2'+pi/2} (inner).
std::array<std::array<double, 2>, 16> chsh_settings(const ChshAngles& angles);

struct SEstimate {
  RunStats stats;
  std::vector<double> samples;
  // counts[m * 16 + k] for measurement m and chsh_settings index k
  std::vector<SettingCounts> counts;
};

/// n independent counted S measurements, each from the 16 settings of
/// chsh_settings(); setting k of measurement m uses derive_seed(seed, m, k, 0).
SEstimate estimate_S(const TwoPhotonState& state, const ChshAngles& angles, std::size_t n,
                     const SourceModel& source, const DetectorModel& detector,
                     double duration_s, std::uint64_t seed, unsigned threads = 1);

struct ScheduleEntry {
  double time_s = 0.0;
  double theta_qwp = 0.0;
};

struct DynamicSample {
  double time_s = 0.0;
  double theta_qwp = 0.0;
  double theta1 = 0.0;
  double coincidence_rate = 0.0;  // counts / s
};

struct DynamicSweepConfig {
  double theta2 = 0.0;
  double beta = 0.0;
  double alpha0 = 0.0;
  double dwell_s = 1.0;  // integration time per step
};

/// One scan step per schedule entry: step k re-prepares the pair with the
/// entry's QWP angle and counts at theta1 = scan[k mod |scan|], theta2 fixed.
/// Throws empty_schedule for an empty schedule and invalid_argument when
/// times decrease.
std::vector<DynamicSample> dynamic_sweep(const std::vector<ScheduleEntry>& schedule,
                                         const AngleGrid& theta1_scan,
                                         const DynamicSweepConfig& config,
                                         const SourceModel& source,
                                         const DetectorModel& detector, std::uint64_t seed,
                                         unsigned threads = 1);

}  // namespace psbell
