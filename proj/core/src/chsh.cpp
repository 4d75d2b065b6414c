#include "psbell/chsh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "psbell/error.hpp"
#include "psbell/parallel.hpp"

namespace psbell {

namespace {

constexpr double kQuarterTurn = pi / 2.0;
constexpr double kTieTolerance = 1e-12;
constexpr std::size_t kRefinementStarts = 8;
constexpr double kFinalStep = 1e-8;

// Polarizers are pi-periodic; report angles in [0, pi).
double wrap_half_turn(double angle) {
  double r = std::fmod(angle, pi);
  if (r < 0.0) r += pi;
  if (r >= pi) r -= pi;
  return r;
}

ChshAngles wrap(const ChshAngles& a) {
  return {wrap_half_turn(a.theta1), wrap_half_turn(a.theta1_prime), wrap_half_turn(a.theta2),
          wrap_half_turn(a.theta2_prime)};
}

struct Candidate {
  double abs_s = 0.0;
  std::array<std::size_t, 4> index{};
};

// Keeps the best `capacity` candidates; among |S| ties the earlier insertion
// stays ahead, which with lexicographic visiting order is the smallest quadruple.
void offer(std::vector<Candidate>& best, const Candidate& c, std::size_t capacity) {
  auto pos = std::find_if(best.begin(), best.end(), [&](const Candidate& other) {
    return other.abs_s < c.abs_s - kTieTolerance;
  });
  if (pos == best.end() && best.size() >= capacity) return;
  best.insert(pos, c);
  if (best.size() > capacity) best.pop_back();
}

double abs_s_at(const TwoPhotonState& state, const std::array<double, 4>& x) {
  return std::abs(s_value(state, ChshAngles{x[0], x[1], x[2], x[3]}).s);
}

}  // namespace

double correlation_E(const CorrelationInputs& inputs) {
  const auto& c = inputs.c;
  const double denominator = c[0] + c[1] + c[2] + c[3];
  if (!(denominator > 0.0)) {
    throw Error(ErrorKind::zero_denominator, "no coincidences at this setting");
  }
  return (c[0] + c[1] - c[2] - c[3]) / denominator;
}

std::array<std::array<double, 2>, 4> correlation_settings(double a, double b) {
  return {{{a, b},
           {a + kQuarterTurn, b + kQuarterTurn},
           {a, b + kQuarterTurn},
           {a + kQuarterTurn, b}}};
}

double correlation_at(const CoincidenceFunction& source, double a, double b) {
  CorrelationInputs inputs;
  const auto settings = correlation_settings(a, b);
  for (std::size_t k = 0; k < 4; ++k) inputs.c[k] = source(settings[k][0], settings[k][1]);
  try {
    return correlation_E(inputs);
  } catch (const Error& e) {
    std::ostringstream msg;
    msg << e.what() << " (theta1 = " << a << " rad, theta2 = " << b << " rad)";
    throw Error(e.kind(), msg.str());
  }
}

ChshResult s_value(const CoincidenceFunction& source, const ChshAngles& angles) {
  // One code path for all four terms; only the angle pair changes.
  const std::array<std::array<double, 2>, 4> pairs{{{angles.theta1, angles.theta2},
                                                    {angles.theta1_prime, angles.theta2},
                                                    {angles.theta1, angles.theta2_prime},
                                                    {angles.theta1_prime, angles.theta2_prime}}};
  ChshResult result;
  result.angles = angles;
  for (std::size_t k = 0; k < 4; ++k) {
    result.e_values[k] = correlation_at(source, pairs[k][0], pairs[k][1]);
  }
  const auto& e = result.e_values;
  result.s = e[0] - e[1] + e[2] + e[3];
  result.violates = std::abs(result.s) > 2.0;
  return result;
}

ChshResult s_value(const TwoPhotonState& state, const ChshAngles& angles) {
  return s_value([&state](double t1, double t2) { return probability(state, t1, t2); }, angles);
}

OptimizationResult optimize_angles(const TwoPhotonState& state, double seed_grid_step,
                                   unsigned threads) {
  if (!(seed_grid_step > 0.0) || !std::isfinite(seed_grid_step)) {
    throw Error(ErrorKind::invalid_argument, "seed grid step must be > 0");
  }
  const auto n = static_cast<std::size_t>(std::ceil(pi / seed_grid_step - 1e-9));
  std::vector<double> axis(n);
  for (std::size_t k = 0; k < n; ++k) axis[k] = static_cast<double>(k) * seed_grid_step;

  const CoincidenceFunction source = [&state](double t1, double t2) {
    return probability(state, t1, t2);
  };
  std::vector<double> corr(n * n);
  parallel_for(n * n, threads, [&](std::size_t cell) {
    corr[cell] = correlation_at(source, axis[cell / n], axis[cell % n]);
  });
  auto E = [&](std::size_t i, std::size_t j) { return corr[i * n + j]; };

  std::vector<std::vector<Candidate>> per_row(n);
  parallel_for(n, threads, [&](std::size_t i) {
    auto& best = per_row[i];
    for (std::size_t ip = 0; ip < n; ++ip)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t jp = 0; jp < n; ++jp) {
          const double s = E(i, j) - E(ip, j) + E(i, jp) + E(ip, jp);
          offer(best, {std::abs(s), {i, ip, j, jp}}, kRefinementStarts);
        }
  });
  std::vector<Candidate> starts;
  for (const auto& row : per_row)
    for (const auto& c : row) offer(starts, c, kRefinementStarts);

  OptimizationResult out;
  out.trace.grid_points_per_axis = n;
  out.trace.grid_evaluations = n * n * n * n;
  out.trace.grid_best_abs_s = starts.front().abs_s;
  out.trace.refinement_starts = starts.size();

  std::vector<std::array<double, 4>> refined(starts.size());
  std::vector<double> refined_abs(starts.size());
  std::vector<std::size_t> evaluations(starts.size(), 0);
  parallel_for(starts.size(), threads, [&](std::size_t k) {
    std::array<double, 4> x{};
    for (std::size_t d = 0; d < 4; ++d) x[d] = axis[starts[k].index[d]];
    double fx = abs_s_at(state, x);
    std::size_t evals = 1;
    for (double h = seed_grid_step; h >= kFinalStep; h *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t d = 0; d < 4; ++d) {
          for (double dir : {1.0, -1.0}) {
            auto trial = x;
            trial[d] += dir * h;
            const double ft = abs_s_at(state, trial);
            ++evals;
            if (ft > fx) {
              x = trial;
              fx = ft;
              improved = true;
              break;
            }
          }
        }
      }
    }
    refined[k] = x;
    refined_abs[k] = fx;
    evaluations[k] = evals;
  });

  std::size_t winner = 0;
  for (std::size_t k = 1; k < refined.size(); ++k) {
    if (refined_abs[k] > refined_abs[winner] + kTieTolerance) winner = k;
  }
  for (auto e : evaluations) out.trace.refinement_evaluations += e;

  const auto& x = refined[winner];
  ChshAngles angles = wrap({x[0], x[1], x[2], x[3]});
  ChshResult best = s_value(state, angles);

  const double hv_correlation = correlation_at(source, 0.0, 0.0);
  if (std::abs(hv_correlation) > 1e-9 && std::signbit(best.s) != std::signbit(hv_correlation)) {
    angles.theta2 = wrap_half_turn(angles.theta2 + kQuarterTurn);
    angles.theta2_prime = wrap_half_turn(angles.theta2_prime + kQuarterTurn);
    best = s_value(state, angles);
    out.trace.orientation_flipped = true;
  }
  out.best = best;
  return out;
}

std::vector<QwpSweepPoint> sweep_qwp_vs_s(double beta, const std::vector<double>& qwp_angles,
                                          double alpha0, double seed_grid_step,
                                          unsigned threads) {
  std::vector<QwpSweepPoint> out;
  out.reserve(qwp_angles.size());
  for (double theta_qwp : qwp_angles) {
    const auto state = prepare({.theta_qwp = theta_qwp, .beta = beta, .alpha0 = alpha0});
    const auto opt = optimize_angles(state, seed_grid_step, threads);
    out.push_back({theta_qwp, std::abs(opt.best.s), opt.best.angles});
  }
  return out;
}

}  // namespace psbell
