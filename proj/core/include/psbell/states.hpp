#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "psbell/jones.hpp"

namespace psbell {

/// Pure polarization state of a photon pair over (HH, HV, VH, VV).
class TwoPhotonState {
public:
  TwoPhotonState() = default;
  /// Stores the amplitudes as given; use normalized() to rescale.
  explicit TwoPhotonState(const std::array<Complex, 4>& amp) : amp_(amp) {}

  const std::array<Complex, 4>& amplitudes() const { return amp_; }
  Complex hh() const { return amp_[0]; }
  Complex hv() const { return amp_[1]; }
  Complex vh() const { return amp_[2]; }
  Complex vv() const { return amp_[3]; }

  double norm_squared() const;
  TwoPhotonState normalized() const;

private:
  std::array<Complex, 4> amp_{};
};

enum class BellKind { psi_plus, psi_minus, phi_plus, phi_minus };

inline constexpr std::array<BellKind, 4> all_bell_kinds{
    BellKind::psi_plus, BellKind::psi_minus, BellKind::phi_plus, BellKind::phi_minus};

std::string_view to_string(BellKind kind) noexcept;
/// Accepts "psi+", "psi-", "phi+", "phi-" and the psi_plus style names.
std::optional<BellKind> parse_bell_kind(std::string_view text) noexcept;

/// Waveplate settings on arm 2 plus the crystal's intrinsic phase between
/// the |H1 V2> and |V1 H2> emission amplitudes.
struct PreparationConfig {
  double theta_qwp = 0.0;
  double beta = 0.0;
  double alpha0 = 0.0;
};

TwoPhotonState bell_state(BellKind kind);

/// (|H1 V2> + e^{i alpha} |V1 H2>) / sqrt 2.
TwoPhotonState phase_shifted_state(double alpha);

/// Raw crystal state with phase alpha0, then M = qwp(theta_qwp) * hwp(beta)
/// on arm 2 (the HWP sits before the QWP in the beam).
TwoPhotonState prepare(const PreparationConfig& config);

/// Waveplate settings that produce each Bell state once the crystal phase
/// is calibrated: psi+ (0, 0), psi- (pi/2, 0), phi+ (0, pi/4), phi- (pi/2, pi/4).
PreparationConfig bell_preparation(BellKind kind, double alpha0);

struct CalibrationResult {
  double alpha0 = 0.0;
  double residual = 0.0;
};

/// Finds the crystal phase for which theta_qwp = 0, beta = 0 yields a
/// landscape proportional to sin^2(theta1 + theta2) on the default 21x21
/// grid. Candidates {0, +-pi/2, pi} are scored first, then the best is
/// polished with a bounded scalar search. Throws calibration_failed if the
/// best residual is not below 1e-6.
CalibrationResult calibrate_crystal_phase();

/// arg(amp_VH) - arg(amp_HV), wrapped to (-pi, pi]. Throws degenerate_state
/// when either cross amplitude is below 1e-12 in modulus.
double relative_phase(const TwoPhotonState& state);

}  // namespace psbell
