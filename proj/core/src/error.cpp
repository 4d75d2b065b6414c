#include "psbell/error.hpp"

namespace psbell {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::calibration_failed: return "calibration-failed";
    case ErrorKind::degenerate_state: return "degenerate-state";
    case ErrorKind::unnormalized_state: return "unnormalized-state";
    case ErrorKind::empty_landscape: return "empty-landscape";
    case ErrorKind::grid_mismatch: return "grid-mismatch";
    case ErrorKind::zero_denominator: return "zero-denominator";
    case ErrorKind::unsorted_stream: return "unsorted-stream";
    case ErrorKind::invalid_model: return "invalid-model";
    case ErrorKind::empty_schedule: return "empty-schedule";
  }
  return "unknown";
}

}  // namespace psbell
