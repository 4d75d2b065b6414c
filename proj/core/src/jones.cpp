#include "psbell/jones.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "psbell/error.hpp"

namespace psbell {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_finite(double angle, const char* name) {
  if (!std::isfinite(angle)) {
    throw Error(ErrorKind::invalid_argument, std::string(name) + " must be finite");
  }
}

}  // namespace

JonesOperator JonesOperator::adjoint() const {
  return {std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])};
}

JonesOperator JonesOperator::operator*(const JonesOperator& rhs) const {
  const auto& a = m_;
  const auto& b = rhs.m_;
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

JonesOperator JonesOperator::operator*(Complex scale) const {
  return {m_[0] * scale, m_[1] * scale, m_[2] * scale, m_[3] * scale};
}

double max_abs_diff(const JonesOperator& a, const JonesOperator& b) {
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    worst = std::max(worst, std::abs(a.elements()[k] - b.elements()[k]));
  }
  return worst;
}

JonesOperator polarizer(double theta) {
  require_finite(theta, "polarizer angle");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * c, s * c, s * c, s * s};
}

JonesOperator qwp(double theta_qwp) {
  require_finite(theta_qwp, "QWP angle");
  const double c = std::cos(theta_qwp);
  const double s = std::sin(theta_qwp);
  const Complex phase = std::polar(1.0, -std::numbers::pi / 4.0);
  const Complex off = (1.0 - kI) * (s * c);
  return JonesOperator{c * c + kI * (s * s), off, off, s * s + kI * (c * c)} * phase;
}

JonesOperator hwp(double beta) {
  require_finite(beta, "HWP angle");
  const double c2 = std::cos(2.0 * beta);
  const double s2 = std::sin(2.0 * beta);
  return JonesOperator{c2, s2, s2, -c2} * -kI;
}

JonesOperator compose(const JonesOperator& a, const JonesOperator& b) { return a * b; }

TwoPhotonOperator TwoPhotonOperator::identity() {
  std::array<Complex, 16> m{};
  for (int k = 0; k < 4; ++k) m[k * 4 + k] = 1.0;
  return TwoPhotonOperator(m);
}

TwoPhotonOperator TwoPhotonOperator::adjoint() const {
  std::array<Complex, 16> m{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m[c * 4 + r] = std::conj(m_[r * 4 + c]);
  }
  return TwoPhotonOperator(m);
}

TwoPhotonOperator TwoPhotonOperator::operator*(const TwoPhotonOperator& rhs) const {
  std::array<Complex, 16> m{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      Complex sum = 0.0;
      for (int k = 0; k < 4; ++k) sum += m_[r * 4 + k] * rhs.m_[k * 4 + c];
      m[r * 4 + c] = sum;
    }
  }
  return TwoPhotonOperator(m);
}

std::array<Complex, 4> TwoPhotonOperator::apply(const std::array<Complex, 4>& amp) const {
  std::array<Complex, 4> out{};
  for (int r = 0; r < 4; ++r) {
    Complex sum = 0.0;
    for (int k = 0; k < 4; ++k) sum += m_[r * 4 + k] * amp[k];
    out[r] = sum;
  }
  return out;
}

double max_abs_diff(const TwoPhotonOperator& a, const TwoPhotonOperator& b) {
  double worst = 0.0;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) worst = std::max(worst, std::abs(a(r, c) - b(r, c)));
  }
  return worst;
}

TwoPhotonOperator kron(const JonesOperator& arm1, const JonesOperator& arm2) {
  // Row index 2*i1 + i2 matches (HH, HV, VH, VV).
  std::array<Complex, 16> m{};
  for (int r1 = 0; r1 < 2; ++r1)
    for (int r2 = 0; r2 < 2; ++r2)
      for (int c1 = 0; c1 < 2; ++c1)
        for (int c2 = 0; c2 < 2; ++c2)
          m[(2 * r1 + r2) * 4 + (2 * c1 + c2)] = arm1(r1, c1) * arm2(r2, c2);
  return TwoPhotonOperator(m);
}

TwoPhotonOperator lift_to_arm(const JonesOperator& op, int arm) {
  switch (arm) {
    case 1: return kron(op, JonesOperator::identity());
    case 2: return kron(JonesOperator::identity(), op);
    default:
      throw Error(ErrorKind::invalid_argument,
                  "arm must be 1 or 2, got " + std::to_string(arm));
  }
}

}  // namespace psbell
