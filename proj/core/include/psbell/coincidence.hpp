#pragma once

#include <cstddef>
#include <functional>
#include <string_view>
#include <optional>
#include <vector>

#include "psbell/states.hpp"

namespace psbell {

/// Inclusive angle range start, start + step, ..., stop (radians).
struct AngleGrid {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;

  /// Throws invalid_argument unless step > 0, stop >= start and all finite.
  void validate() const;
  std::size_t size() const;
  std::vector<double> points() const;
};

/// 0..pi in steps of pi/20: 21 points.
AngleGrid default_grid();

/// Coincidence values over theta1 (rows) x theta2 (columns), row-major.
struct Landscape {
  std::vector<double> theta1_axis;
  std::vector<double> theta2_axis;
  std::vector<double> values;
  bool normalized = false;

  std::size_t rows() const { return theta1_axis.size(); }
  std::size_t cols() const { return theta2_axis.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
  double max_value() const;
};

enum class Coefficient { i, two_i };

/// Selects one printed closed form: which Bell family, and whether the
/// leading coefficient is read as i or as 2i.
struct ClosedFormKind {
  BellKind bell = BellKind::psi_plus;
  Coefficient coefficient = Coefficient::i;
};

enum class NormalizeMode {
  per_theta1_scan,  // each row (fixed theta1, scanned over theta2)
  per_theta2_scan,  // each column (fixed theta2, scanned over theta1)
  global_max,
};

std::string_view to_string(NormalizeMode mode) noexcept;
std::optional<NormalizeMode> parse_normalize_mode(std::string_view text) noexcept;

/// Joint pass/pass probability behind polarizers at theta1 (arm 1) and
/// theta2 (arm 2). Throws unnormalized_state if |norm - 1| > 1e-9.
double probability(const TwoPhotonState& state, double theta1, double theta2);

/// Verbatim evaluation of the attenuated closed forms for phase-shifted
/// states, parameterized by gamma.
double closed_form(const ClosedFormKind& kind, double theta1, double theta2, double gamma);

/// sin^2(t1 + t2), sin^2(t1 - t2), cos^2(t1 - t2), cos^2(t1 + t2) for
/// psi+, psi-, phi+, phi-.
double ideal_form(BellKind kind, double theta1, double theta2);

using CoincidenceFunction = std::function<double(double theta1, double theta2)>;

/// Raw landscape of `fn` over grid1 x grid2. Cells are independent; with
/// threads > 1 they are filled in parallel with identical results.
Landscape landscape(const CoincidenceFunction& fn, const AngleGrid& grid1,
                    const AngleGrid& grid2, unsigned threads = 1);
Landscape landscape(const TwoPhotonState& state, const AngleGrid& grid1,
                    const AngleGrid& grid2, unsigned threads = 1);
Landscape landscape(const ClosedFormKind& kind, double gamma, const AngleGrid& grid1,
                    const AngleGrid& grid2);
Landscape landscape(BellKind ideal, const AngleGrid& grid1, const AngleGrid& grid2);

/// Contrast normalization. Scan modes map each scan linearly so its min is 0
/// and max is 1; a constant scan maps to all zeros. global_max divides by the
/// largest value (an all-zero landscape stays zero).
Landscape normalize(const Landscape& input, NormalizeMode mode);

struct LandscapeComparison {
  double scale = 1.0;
  double deviation = 0.0;
};

/// Minimax fit of b onto a: the scale s minimizing max |a - s b| and the
/// deviation it achieves. Throws grid_mismatch if the axes differ.
LandscapeComparison compare_landscapes(const Landscape& a, const Landscape& b);

}  // namespace psbell
