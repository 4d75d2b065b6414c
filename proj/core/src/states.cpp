#include "psbell/states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "psbell/angles.hpp"
#include "psbell/coincidence.hpp"
#include "psbell/error.hpp"

namespace psbell {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

double calibration_residual(double alpha0, const Landscape& target, const AngleGrid& grid) {
  const auto state = prepare({.theta_qwp = 0.0, .beta = 0.0, .alpha0 = alpha0});
  return compare_landscapes(target, landscape(state, grid, grid)).deviation;
}

}  // namespace

double TwoPhotonState::norm_squared() const {
  double sum = 0.0;
  for (const auto& a : amp_) sum += std::norm(a);
  return sum;
}

TwoPhotonState TwoPhotonState::normalized() const {
  const double n = std::sqrt(norm_squared());
  if (n == 0.0) throw Error(ErrorKind::invalid_argument, "cannot normalize the zero state");
  auto amp = amp_;
  for (auto& a : amp) a /= n;
  return TwoPhotonState(amp);
}

std::string_view to_string(BellKind kind) noexcept {
  switch (kind) {
    case BellKind::psi_plus: return "psi+";
    case BellKind::psi_minus: return "psi-";
    case BellKind::phi_plus: return "phi+";
    case BellKind::phi_minus: return "phi-";
  }
  return "?";
}

std::optional<BellKind> parse_bell_kind(std::string_view text) noexcept {
  if (text == "psi+" || text == "psi_plus") return BellKind::psi_plus;
  if (text == "psi-" || text == "psi_minus") return BellKind::psi_minus;
  if (text == "phi+" || text == "phi_plus") return BellKind::phi_plus;
  if (text == "phi-" || text == "phi_minus") return BellKind::phi_minus;
  return std::nullopt;
}

TwoPhotonState bell_state(BellKind kind) {
  switch (kind) {
    case BellKind::psi_plus: return TwoPhotonState({0.0, kInvSqrt2, kInvSqrt2, 0.0});
    case BellKind::psi_minus: return TwoPhotonState({0.0, kInvSqrt2, -kInvSqrt2, 0.0});
    case BellKind::phi_plus: return TwoPhotonState({kInvSqrt2, 0.0, 0.0, kInvSqrt2});
    case BellKind::phi_minus: return TwoPhotonState({kInvSqrt2, 0.0, 0.0, -kInvSqrt2});
  }
  throw Error(ErrorKind::invalid_argument, "unknown Bell state");
}

TwoPhotonState phase_shifted_state(double alpha) {
  if (!std::isfinite(alpha)) throw Error(ErrorKind::invalid_argument, "alpha must be finite");
  // Reduce first so that alpha and alpha + 2 pi give identical bits.
  const double reduced = std::remainder(alpha, 2.0 * pi);
  return TwoPhotonState({0.0, kInvSqrt2, std::polar(kInvSqrt2, reduced), 0.0});
}

TwoPhotonState prepare(const PreparationConfig& config) {
  if (!std::isfinite(config.theta_qwp) || !std::isfinite(config.beta) ||
      !std::isfinite(config.alpha0)) {
    throw Error(ErrorKind::invalid_argument, "preparation angles must be finite");
  }
  const TwoPhotonState crystal({0.0, kInvSqrt2, std::polar(kInvSqrt2, config.alpha0), 0.0});
  const auto waveplates = compose(qwp(config.theta_qwp), hwp(config.beta));
  return TwoPhotonState(lift_to_arm(waveplates, 2).apply(crystal.amplitudes())).normalized();
}

PreparationConfig bell_preparation(BellKind kind, double alpha0) {
  switch (kind) {
    case BellKind::psi_plus: return {0.0, 0.0, alpha0};
    case BellKind::psi_minus: return {pi / 2.0, 0.0, alpha0};
    case BellKind::phi_plus: return {0.0, pi / 4.0, alpha0};
    case BellKind::phi_minus: return {pi / 2.0, pi / 4.0, alpha0};
  }
  throw Error(ErrorKind::invalid_argument, "unknown Bell state");
}

CalibrationResult calibrate_crystal_phase() {
  const auto grid = default_grid();
  const auto target = landscape(BellKind::psi_plus, grid, grid);

  CalibrationResult best{0.0, calibration_residual(0.0, target, grid)};
  for (double candidate : {pi / 2.0, -pi / 2.0, pi}) {
    const double r = calibration_residual(candidate, target, grid);
    if (r < best.residual) best = {candidate, r};
  }

  // Golden-section polish around the best candidate; only accepted if it
  // strictly improves the residual.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best.alpha0 - pi / 4.0;
  double hi = best.alpha0 + pi / 4.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = calibration_residual(x1, target, grid);
  double f2 = calibration_residual(x2, target, grid);
  while (hi - lo > 1e-12) {
    if (f1 < f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = calibration_residual(x1, target, grid);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = calibration_residual(x2, target, grid);
    }
  }
  const double polished = 0.5 * (lo + hi);
  const double polished_residual = calibration_residual(polished, target, grid);
  if (polished_residual < best.residual) best = {polished, polished_residual};

  best.alpha0 = wrap_phase(best.alpha0);
  if (!(best.residual < 1e-6)) {
    throw Error(ErrorKind::calibration_failed,
                "no crystal phase reproduces the psi+ landscape (residual " +
                    std::to_string(best.residual) + ")");
  }
  return best;
}

double relative_phase(const TwoPhotonState& state) {
  if (std::abs(state.hv()) <= 1e-12 || std::abs(state.vh()) <= 1e-12) {
    throw Error(ErrorKind::degenerate_state,
                "relative phase undefined: a cross amplitude (HV or VH) vanishes");
  }
  return wrap_phase(std::arg(state.vh()) - std::arg(state.hv()));
}

}  // namespace psbell
