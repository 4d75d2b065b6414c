#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psbell {

enum class ErrorKind {
  invalid_argument,
  calibration_failed,
  degenerate_state,
  unnormalized_state,
  empty_landscape,
  grid_mismatch,
  zero_denominator,
  unsorted_stream,
  invalid_model,
  empty_schedule,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this type; `kind()` lets callers
// branch without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace psbell
