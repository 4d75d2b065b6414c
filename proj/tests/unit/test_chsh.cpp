#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "psbell/chsh.hpp"
#include "psbell/error.hpp"

using namespace psbell;

namespace {

const double tsirelson = 2.0 * std::numbers::sqrt2;

TwoPhotonState random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return TwoPhotonState({Complex(g(rng), g(rng)), Complex(g(rng), g(rng)),
                         Complex(g(rng), g(rng)), Complex(g(rng), g(rng))})
      .normalized();
}

}  // namespace

TEST_CASE("correlation E") {
  CHECK(correlation_E({{1, 1, 0, 0}}) == 1.0);
  CHECK(correlation_E({{0, 0, 2, 3}}) == -1.0);
  CHECK(correlation_E({{3, 1, 1, 1}}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  try {
    correlation_E({{0, 0, 0, 0}});
    FAIL("expected zero denominator");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::zero_denominator);
  }

  const auto psi = bell_state(BellKind::psi_plus);
  CHECK(correlation_at([&](double a, double b) { return probability(psi, a, b); }, 0.0, pi / 8) ==
        doctest::Approx(-0.7071067811865476).epsilon(1e-14));

  const auto s = correlation_settings(0.1, 0.2);
  CHECK(s[1][0] == doctest::Approx(0.1 + pi / 2));
  CHECK(s[2][1] == doctest::Approx(0.2 + pi / 2));
  CHECK(s[3][0] == doctest::Approx(0.1 + pi / 2));
  CHECK(s[3][1] == doctest::Approx(0.2));
}

TEST_CASE("correlation signs of the Bell states") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-pi, pi);
  for (int k = 0; k < 200; ++k) {
    const double a = angle(rng), b = angle(rng);
    auto e = [&](BellKind kind) {
      const auto st = bell_state(kind);
      return correlation_at([&](double x, double y) { return probability(st, x, y); }, a, b);
    };
    CHECK(e(BellKind::psi_plus) == doctest::Approx(-std::cos(2 * (a + b))).epsilon(1e-12));
    CHECK(e(BellKind::psi_minus) == doctest::Approx(-std::cos(2 * (a - b))).epsilon(1e-12));
    CHECK(e(BellKind::phi_plus) == doctest::Approx(std::cos(2 * (a - b))).epsilon(1e-12));
    CHECK(e(BellKind::phi_minus) == doctest::Approx(std::cos(2 * (a + b))).epsilon(1e-12));
  }
}

TEST_CASE("S at standard angles") {
  const ChshAngles standard{0.0, pi / 4, pi / 8, -pi / 8};
  const auto r = s_value(bell_state(BellKind::psi_plus), standard);
  CHECK(r.s == doctest::Approx(-tsirelson).epsilon(1e-12));
  CHECK(r.violates);

  const ChshAngles phi{0.0, pi / 4, -pi / 8, pi / 8};
  CHECK(s_value(bell_state(BellKind::phi_plus), phi).s == doctest::Approx(tsirelson).epsilon(1e-12));

  const auto product = TwoPhotonState({1.0, 0.0, 0.0, 0.0});
  CHECK_FALSE(s_value(product, standard).violates);
}

TEST_CASE("S from a function source equals S from the state") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> angle(0.0, pi);
  for (int k = 0; k < 50; ++k) {
    const auto st = random_state(rng);
    const ChshAngles a{angle(rng), angle(rng), angle(rng), angle(rng)};
    const double from_state = s_value(st, a).s;
    const double from_fn = s_value([&](double x, double y) { return probability(st, x, y); }, a).s;
    CHECK(from_state == from_fn);
    // Counts scale out of E.
    const double scaled = s_value([&](double x, double y) { return 1234.5 * probability(st, x, y); }, a).s;
    CHECK(scaled == doctest::Approx(from_state).epsilon(1e-12));
  }
}

TEST_CASE("S permutation structure") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle(0.0, pi);
  for (int k = 0; k < 50; ++k) {
    const auto st = random_state(rng);
    const ChshAngles a{angle(rng), angle(rng), angle(rng), angle(rng)};
    const auto r = s_value(st, a);
    // Shifting both arm-2 settings by pi/2 negates every E.
    const ChshAngles shifted{a.theta1, a.theta1_prime, a.theta2 + pi / 2, a.theta2_prime + pi / 2};
    CHECK(s_value(st, shifted).s == doctest::Approx(-r.s).epsilon(1e-12));
    // Swapping t2 and t2' together with t1' -> t1' + pi/2 permutes the terms.
    const ChshAngles swapped{a.theta1, a.theta1_prime + pi / 2, a.theta2_prime, a.theta2};
    CHECK(s_value(st, swapped).s == doctest::Approx(r.s).epsilon(1e-12));
  }
}

TEST_CASE("optimizer on Bell states") {
  for (auto kind : all_bell_kinds) {
    const auto r = optimize_angles(bell_state(kind));
    CHECK(std::abs(r.best.s) == doctest::Approx(tsirelson).epsilon(1e-6));
    const bool psi = kind == BellKind::psi_plus || kind == BellKind::psi_minus;
    CHECK((psi ? r.best.s < 0 : r.best.s > 0));
    CHECK(r.trace.grid_points_per_axis == 36);
    CHECK(s_value(bell_state(kind), r.best.angles).s == doctest::Approx(r.best.s).epsilon(1e-12));
  }
}

TEST_CASE("optimizer on phase-shifted states") {
  const auto half = optimize_angles(phase_shifted_state(pi / 2));
  CHECK(half.best.s == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK_FALSE(half.best.violates);

  const auto quarter = optimize_angles(phase_shifted_state(pi / 4));
  CHECK(std::abs(quarter.best.s) ==
        doctest::Approx(2.0 * std::sqrt(1.0 + 0.5)).epsilon(1e-6));
  CHECK(quarter.best.violates);
}

TEST_CASE("optimizer reaches the linear-analyzer bound") {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 25; ++k) {
    const auto st = random_state(rng);
    const double bound = oracle::linear_chsh_max(st.amplitudes());
    const double found = std::abs(optimize_angles(st).best.s);
    CHECK(found <= bound + 1e-9);
    CHECK(found == doctest::Approx(bound).epsilon(1e-6));
  }
  std::uniform_real_distribution<double> angle(0.0, pi);
  for (int k = 0; k < 10; ++k) {
    const double a = angle(rng), b = angle(rng);
    const auto product =
        TwoPhotonState({std::cos(a) * std::cos(b), std::cos(a) * std::sin(b),
                        std::sin(a) * std::cos(b), std::sin(a) * std::sin(b)});
    CHECK(std::abs(optimize_angles(product).best.s) <= 2.0 + 1e-9);
  }
}

TEST_CASE("QWP sweep") {
  const double alpha0 = -pi / 2;
  std::vector<double> qwp;
  for (int k = 0; k <= 8; ++k) qwp.push_back(k * pi / 16);
  const auto profile = sweep_qwp_vs_s(0.0, qwp, alpha0);
  REQUIRE(profile.size() == qwp.size());
  for (const auto& p : profile) {
    const double c = std::cos(2 * p.theta_qwp);
    CHECK(p.max_abs_s == doctest::Approx(2.0 * std::sqrt(1.0 + c * c)).epsilon(1e-6));
  }
  CHECK(profile[4].max_abs_s <= 2.0 + 1e-9);

  const auto classical = sweep_qwp_vs_s(pi / 4, {pi / 4}, alpha0);
  CHECK(classical[0].max_abs_s <= 2.0 + 1e-9);
}
