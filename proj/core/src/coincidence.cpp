#include "psbell/coincidence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psbell/angles.hpp"
#include "psbell/error.hpp"
#include "psbell/parallel.hpp"

namespace psbell {

void AngleGrid::validate() const {
  if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step)) {
    throw Error(ErrorKind::invalid_argument, "angle grid bounds must be finite");
  }
  if (!(step > 0.0)) throw Error(ErrorKind::invalid_argument, "angle grid step must be > 0");
  if (stop < start) throw Error(ErrorKind::invalid_argument, "angle grid stop < start");
}

std::size_t AngleGrid::size() const {
  validate();
  // Tolerate rounding in (stop - start) / step so 0..pi by pi/20 gives 21.
  return static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
}

std::vector<double> AngleGrid::points() const {
  const std::size_t n = size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = start + static_cast<double>(k) * step;
  return out;
}

AngleGrid default_grid() { return {0.0, pi, pi / 20.0}; }

double Landscape::max_value() const {
  if (values.empty()) throw Error(ErrorKind::empty_landscape, "landscape has no cells");
  return *std::max_element(values.begin(), values.end());
}

std::string_view to_string(NormalizeMode mode) noexcept {
  switch (mode) {
    case NormalizeMode::per_theta1_scan: return "per-theta1-scan";
    case NormalizeMode::per_theta2_scan: return "per-theta2-scan";
    case NormalizeMode::global_max: return "global-max";
  }
  return "?";
}

std::optional<NormalizeMode> parse_normalize_mode(std::string_view text) noexcept {
  if (text == "per-theta1-scan") return NormalizeMode::per_theta1_scan;
  if (text == "per-theta2-scan") return NormalizeMode::per_theta2_scan;
  if (text == "global-max") return NormalizeMode::global_max;
  return std::nullopt;
}

double probability(const TwoPhotonState& state, double theta1, double theta2) {
  const double norm = std::sqrt(state.norm_squared());
  if (std::abs(norm - 1.0) > 1e-9) {
    throw Error(ErrorKind::unnormalized_state,
                "state norm " + std::to_string(norm) + " deviates from 1");
  }
  const auto analyzers = kron(polarizer(theta1), polarizer(theta2));
  const auto passed = analyzers.apply(state.amplitudes());
  double p = 0.0;
  for (const auto& a : passed) p += std::norm(a);
  return p;
}

double closed_form(const ClosedFormKind& kind, double theta1, double theta2, double gamma) {
  const Complex k = kind.coefficient == Coefficient::i ? Complex{0.0, 1.0} : Complex{0.0, 2.0};
  const double g2 = 2.0 * gamma;
  Complex z;
  switch (kind.bell) {
    case BellKind::psi_plus:
      z = k * std::sin(g2 - theta1 + theta2) + std::sin(g2 + theta1 + theta2);
      break;
    case BellKind::psi_minus:
      z = k * std::sin(-g2 + theta1 + theta2) - std::sin(g2 + theta1 - theta2);
      break;
    case BellKind::phi_plus:
      z = k * std::cos(-g2 + theta1 + theta2) + std::cos(g2 + theta1 - theta2);
      break;
    case BellKind::phi_minus:
      z = k * std::cos(g2 - theta1 + theta2) + std::cos(g2 + theta1 + theta2);
      break;
  }
  return std::norm(z);
}

double ideal_form(BellKind kind, double theta1, double theta2) {
  auto sq = [](double x) { return x * x; };
  switch (kind) {
    case BellKind::psi_plus: return sq(std::sin(theta1 + theta2));
    case BellKind::psi_minus: return sq(std::sin(theta1 - theta2));
    case BellKind::phi_plus: return sq(std::cos(theta1 - theta2));
    case BellKind::phi_minus: return sq(std::cos(theta1 + theta2));
  }
  return 0.0;
}

Landscape landscape(const CoincidenceFunction& fn, const AngleGrid& grid1,
                    const AngleGrid& grid2, unsigned threads) {
  Landscape out;
  out.theta1_axis = grid1.points();
  out.theta2_axis = grid2.points();
  out.values.assign(out.rows() * out.cols(), 0.0);
  const std::size_t cols = out.cols();
  parallel_for(out.values.size(), threads, [&](std::size_t cell) {
    out.values[cell] = fn(out.theta1_axis[cell / cols], out.theta2_axis[cell % cols]);
  });
  return out;
}

Landscape landscape(const TwoPhotonState& state, const AngleGrid& grid1,
                    const AngleGrid& grid2, unsigned threads) {
  return landscape([&state](double t1, double t2) { return probability(state, t1, t2); },
                   grid1, grid2, threads);
}

Landscape landscape(const ClosedFormKind& kind, double gamma, const AngleGrid& grid1,
                    const AngleGrid& grid2) {
  return landscape([&](double t1, double t2) { return closed_form(kind, t1, t2, gamma); },
                   grid1, grid2);
}

Landscape landscape(BellKind ideal, const AngleGrid& grid1, const AngleGrid& grid2) {
  return landscape([ideal](double t1, double t2) { return ideal_form(ideal, t1, t2); }, grid1,
                   grid2);
}

namespace {

// Min-max stretch of the cells at `first + k * stride`, k < count.
void stretch_scan(std::vector<double>& v, std::size_t first, std::size_t stride,
                  std::size_t count) {
  double lo = v[first];
  double hi = v[first];
  for (std::size_t k = 1; k < count; ++k) {
    lo = std::min(lo, v[first + k * stride]);
    hi = std::max(hi, v[first + k * stride]);
  }
  const double span = hi - lo;
  for (std::size_t k = 0; k < count; ++k) {
    double& x = v[first + k * stride];
    x = span > 0.0 ? (x - lo) / span : 0.0;
  }
}

}  // namespace

Landscape normalize(const Landscape& input, NormalizeMode mode) {
  if (input.values.empty()) throw Error(ErrorKind::empty_landscape, "cannot normalize an empty landscape");
  Landscape out = input;
  const std::size_t rows = out.rows();
  const std::size_t cols = out.cols();
  switch (mode) {
    case NormalizeMode::per_theta1_scan:
      for (std::size_t i = 0; i < rows; ++i) stretch_scan(out.values, i * cols, 1, cols);
      break;
    case NormalizeMode::per_theta2_scan:
      for (std::size_t j = 0; j < cols; ++j) stretch_scan(out.values, j, cols, rows);
      break;
    case NormalizeMode::global_max: {
      const double peak = out.max_value();
      if (peak > 0.0) {
        for (auto& x : out.values) x /= peak;
      }
      break;
    }
  }
  out.normalized = true;
  return out;
}

namespace {

bool same_axis(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > 1e-12) return false;
  }
  return true;
}

double max_residual(const Landscape& a, const Landscape& b, double scale) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    worst = std::max(worst, std::abs(a.values[k] - scale * b.values[k]));
  }
  return worst;
}

}  // namespace

LandscapeComparison compare_landscapes(const Landscape& a, const Landscape& b) {
  if (!same_axis(a.theta1_axis, b.theta1_axis) || !same_axis(a.theta2_axis, b.theta2_axis) ||
      a.values.size() != b.values.size()) {
    throw Error(ErrorKind::grid_mismatch, "landscapes are defined on different grids");
  }
  if (a.values.empty()) throw Error(ErrorKind::empty_landscape, "cannot compare empty landscapes");

  double amax = 0.0;
  double bmax = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    amax = std::max(amax, std::abs(a.values[k]));
    bmax = std::max(bmax, std::abs(b.values[k]));
  }
  if (bmax == 0.0) return {1.0, amax};

  // f(s) = max_k |a_k - s b_k| is convex; beyond |s| = 2 amax / bmax it
  // exceeds f(0), so the minimizer lies inside that bracket.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = -2.0 * amax / bmax;
  double hi = 2.0 * amax / bmax;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = max_residual(a, b, x1);
  double f2 = max_residual(a, b, x2);
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++iter) {
    if (f1 <= f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = max_residual(a, b, x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = max_residual(a, b, x2);
    }
  }
  const double scale = 0.5 * (lo + hi);
  return {scale, max_residual(a, b, scale)};
}

}  // namespace psbell
