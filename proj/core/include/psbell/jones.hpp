#pragma once

// Jones-calculus operators for a single photon's polarization, and their
// lifting onto one arm of a photon pair.
//
// Basis convention: H = (1, 0), V = (0, 1). Two-photon amplitudes are ordered
// (HH, HV, VH, VV), first letter = arm 1. Angles are radians.

#include <array>
#include <complex>
#include <span>

namespace psbell {

using Complex = std::complex<double>;

/// 2x2 complex matrix acting on one photon's polarization, row-major.
class JonesOperator {
public:
  constexpr JonesOperator() = default;
  constexpr JonesOperator(Complex m00, Complex m01, Complex m10, Complex m11)
      : m_{m00, m01, m10, m11} {}

  static constexpr JonesOperator identity() { return {1.0, 0.0, 0.0, 1.0}; }

  constexpr const Complex& operator()(int row, int col) const { return m_[row * 2 + col]; }
  constexpr std::span<const Complex, 4> elements() const { return m_; }

  JonesOperator adjoint() const;
  Complex trace() const { return m_[0] + m_[3]; }

  JonesOperator operator*(const JonesOperator& rhs) const;
  JonesOperator operator*(Complex scale) const;

  friend bool operator==(const JonesOperator&, const JonesOperator&) = default;

private:
  std::array<Complex, 4> m_{};
};

/// Largest elementwise modulus of (a - b).
double max_abs_diff(const JonesOperator& a, const JonesOperator& b);

/// Linear polarizer transmitting along `theta` from H:
/// [[cos^2, sin cos], [sin cos, sin^2]].
JonesOperator polarizer(double theta);

/// Quarter-wave plate with fast axis at `theta_qwp`, including its global
/// phase exp(-i pi/4).
JonesOperator qwp(double theta_qwp);

/// Half-wave plate at `beta`, including its global phase exp(-i pi/2).
JonesOperator hwp(double beta);

/// Matrix product a * b: `b` acts first.
JonesOperator compose(const JonesOperator& a, const JonesOperator& b);

/// 4x4 operator on the (HH, HV, VH, VV) amplitude space, row-major.
class TwoPhotonOperator {
public:
  TwoPhotonOperator() = default;
  explicit TwoPhotonOperator(const std::array<Complex, 16>& m) : m_(m) {}

  static TwoPhotonOperator identity();

  const Complex& operator()(int row, int col) const { return m_[row * 4 + col]; }
  TwoPhotonOperator adjoint() const;
  TwoPhotonOperator operator*(const TwoPhotonOperator& rhs) const;
  std::array<Complex, 4> apply(const std::array<Complex, 4>& amp) const;

private:
  std::array<Complex, 16> m_{};
};

double max_abs_diff(const TwoPhotonOperator& a, const TwoPhotonOperator& b);

/// Kronecker product a (arm 1) x b (arm 2).
TwoPhotonOperator kron(const JonesOperator& arm1, const JonesOperator& arm2);

/// op (x) I for arm 1, I (x) op for arm 2. Any other arm is rejected.
TwoPhotonOperator lift_to_arm(const JonesOperator& op, int arm);

}  // namespace psbell
