#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "psbell/angles.hpp"
#include "psbell/coincidence.hpp"
#include "psbell/error.hpp"
#include "psbell/states.hpp"

using namespace psbell;

namespace {

const double r = 1.0 / std::numbers::sqrt2;

double amp_diff(const TwoPhotonState& s, const std::array<Complex, 4>& expected) {
  double worst = 0.0;
  for (int k = 0; k < 4; ++k) worst = std::max(worst, std::abs(s.amplitudes()[k] - expected[k]));
  return worst;
}

// Max cellwise gap between the column-normalized landscape of `state` and
// the ideal form, both on the default grid, using the bra-projection oracle.
double ideal_gap(const TwoPhotonState& state, BellKind kind) {
  const auto grid = default_grid();
  const auto measured = normalize(
      landscape([&](double a, double b) { return oracle::bra_probability(state.amplitudes(), a, b); },
                grid, grid),
      NormalizeMode::per_theta2_scan);
  const auto ideal = landscape(kind, grid, grid);
  double worst = 0.0;
  for (std::size_t k = 0; k < ideal.values.size(); ++k)
    worst = std::max(worst, std::abs(measured.values[k] - ideal.values[k]));
  return worst;
}

}  // namespace

TEST_CASE("bell states") {
  CHECK(amp_diff(bell_state(BellKind::psi_plus), {0, r, r, 0}) == 0.0);
  CHECK(amp_diff(bell_state(BellKind::psi_minus), {0, r, -r, 0}) == 0.0);
  CHECK(amp_diff(bell_state(BellKind::phi_plus), {r, 0, 0, r}) == 0.0);
  CHECK(amp_diff(bell_state(BellKind::phi_minus), {r, 0, 0, -r}) == 0.0);
  for (auto kind : all_bell_kinds) {
    CHECK(std::abs(bell_state(kind).norm_squared() - 1.0) < 1e-12);
    CHECK(parse_bell_kind(to_string(kind)) == kind);
  }
  CHECK_FALSE(parse_bell_kind("chi+").has_value());
}

TEST_CASE("phase-shifted states") {
  CHECK(amp_diff(phase_shifted_state(0.0), bell_state(BellKind::psi_plus).amplitudes()) == 0.0);
  CHECK(amp_diff(phase_shifted_state(pi / 4), {0, r, std::polar(r, pi / 4), 0}) < 1e-15);
  CHECK(amp_diff(phase_shifted_state(pi / 2), {0, r, Complex(0, r), 0}) < 1e-15);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const double alpha = dist(rng);
    const auto s = phase_shifted_state(alpha);
    CHECK(std::abs(s.norm_squared() - 1.0) < 1e-12);
    CHECK(amp_diff(s, phase_shifted_state(alpha + 2 * pi).amplitudes()) < 1e-14);
  }
  CHECK_THROWS_AS(phase_shifted_state(std::nan("")), Error);
}

TEST_CASE("crystal phase calibration") {
  const auto cal = calibrate_crystal_phase();
  CHECK(cal.alpha0 == doctest::Approx(-pi / 2).epsilon(1e-12));
  CHECK(cal.residual < 1e-9);
  CHECK(calibrate_crystal_phase().alpha0 == cal.alpha0);

  // Flipping the crystal phase by pi turns the theta_qwp = 0 pair into psi-.
  const auto flipped = prepare({.theta_qwp = 0.0, .beta = 0.0, .alpha0 = cal.alpha0 + pi});
  CHECK(ideal_gap(flipped, BellKind::psi_minus) < 1e-9);
  CHECK(ideal_gap(flipped, BellKind::psi_plus) > 0.5);
}

TEST_CASE("waveplate preparation reproduces the four Bell landscapes") {
  const double alpha0 = calibrate_crystal_phase().alpha0;
  CHECK(ideal_gap(prepare({0.0, 0.0, alpha0}), BellKind::psi_plus) < 1e-9);
  CHECK(ideal_gap(prepare({pi / 2, 0.0, alpha0}), BellKind::psi_minus) < 1e-9);
  CHECK(ideal_gap(prepare({0.0, pi / 4, alpha0}), BellKind::phi_plus) < 1e-9);
  CHECK(ideal_gap(prepare({pi / 2, pi / 4, alpha0}), BellKind::phi_minus) < 1e-9);
  for (auto kind : all_bell_kinds) {
    CHECK(ideal_gap(prepare(bell_preparation(kind, alpha0)), kind) < 1e-9);
  }
}

TEST_CASE("preparation preserves the norm") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-pi, pi);
  for (int k = 0; k < 500; ++k) {
    const auto s = prepare({dist(rng), dist(rng), dist(rng)});
    CHECK(std::abs(s.norm_squared() - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(prepare({std::nan(""), 0.0, 0.0}), Error);
}

TEST_CASE("relative phase") {
  CHECK(relative_phase(phase_shifted_state(pi / 4)) == doctest::Approx(pi / 4).epsilon(1e-14));
  CHECK(relative_phase(phase_shifted_state(0.0)) == 0.0);
  CHECK(relative_phase(phase_shifted_state(pi)) == doctest::Approx(pi).epsilon(1e-14));
  CHECK(relative_phase(phase_shifted_state(-pi)) == doctest::Approx(pi).epsilon(1e-14));
  try {
    relative_phase(bell_state(BellKind::phi_plus));
    FAIL("expected degenerate-state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_state);
  }
}

TEST_CASE("qwp angle versus phase at landscape level") {
  const double alpha0 = calibrate_crystal_phase().alpha0;
  const auto grid = default_grid();
  auto normalized = [&](const TwoPhotonState& s) {
    return normalize(landscape(s, grid, grid), NormalizeMode::per_theta2_scan);
  };
  auto gap = [](const Landscape& a, const Landscape& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k)
      worst = std::max(worst, std::abs(a.values[k] - b.values[k]));
    return worst;
  };

  CHECK(gap(normalized(prepare({0.0, 0.0, alpha0})), normalized(phase_shifted_state(0.0))) < 1e-9);

  // At theta_qwp = pi/8 the QWP also mixes H and V, so the landscape is not
  // that of the pure-phase state with alpha = pi/4. Frozen from an
  // independent numpy evaluation of the same matrices.
  const double d = gap(normalized(prepare({pi / 8, 0.0, alpha0})), normalized(phase_shifted_state(pi / 4)));
  CHECK(d == doctest::Approx(0.477704186739256).epsilon(1e-9));
}
