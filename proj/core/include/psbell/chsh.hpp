#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "psbell/angles.hpp"
#include "psbell/coincidence.hpp"

namespace psbell {

/// Analyzer settings for one CHSH test. Orthogonal settings are always
/// derived as angle + pi/2.
struct ChshAngles {
  double theta1 = 0.0;
  double theta1_prime = 0.0;
  double theta2 = 0.0;
  double theta2_prime = 0.0;
};

/// Coincidences C(a, b), C(a_perp, b_perp), C(a, b_perp), C(a_perp, b).
struct CorrelationInputs {
  std::array<double, 4> c{};
};

struct ChshResult {
  // E(t1, t2), E(t1', t2), E(t1, t2'), E(t1', t2')
  std::array<double, 4> e_values{};
  double s = 0.0;
  bool violates = false;
  ChshAngles angles;
};

/// (c1 + c2 - c3 - c4) / (c1 + c2 + c3 + c4). Throws zero_denominator when
/// the sum is not positive.
double correlation_E(const CorrelationInputs& inputs);

/// The four coincidence settings that feed E(a, b), in CorrelationInputs order.
std::array<std::array<double, 2>, 4> correlation_settings(double a, double b);

/// E at (a, b) from any coincidence source.
double correlation_at(const CoincidenceFunction& source, double a, double b);

/// S = E(t1, t2) - E(t1', t2) + E(t1, t2') + E(t1', t2').
ChshResult s_value(const CoincidenceFunction& source, const ChshAngles& angles);
ChshResult s_value(const TwoPhotonState& state, const ChshAngles& angles);

struct SearchTrace {
  std::size_t grid_points_per_axis = 0;
  std::size_t grid_evaluations = 0;
  double grid_best_abs_s = 0.0;
  std::size_t refinement_starts = 0;
  std::size_t refinement_evaluations = 0;
  bool orientation_flipped = false;
};

struct OptimizationResult {
  ChshResult best;
  SearchTrace trace;
};

/// Maximizes |S| over linear-polarizer quadruples.
///
/// A coarse grid over [0, pi)^4 at `seed_grid_step` is scored exhaustively;
/// ties go to the lexicographically smallest quadruple. The best few cells
/// are then refined by coordinate descent with step halving down to 1e-8 rad.
/// The reported quadruple is finally oriented so that sign(S) matches the
/// state's H/V correlation E(0, 0) (shifting theta2, theta2' by pi/2 flips S
/// without changing |S|); states with E(0, 0) = 0 are left as found.
OptimizationResult optimize_angles(const TwoPhotonState& state,
                                   double seed_grid_step = pi / 36.0,
                                   unsigned threads = 1);

struct QwpSweepPoint {
  double theta_qwp = 0.0;
  double max_abs_s = 0.0;
  ChshAngles angles;
};

/// Profile of the maximal |S| against the QWP angle at fixed beta.
std::vector<QwpSweepPoint> sweep_qwp_vs_s(double beta, const std::vector<double>& qwp_angles,
                                          double alpha0, double seed_grid_step = pi / 36.0,
                                          unsigned threads = 1);

}  // namespace psbell
