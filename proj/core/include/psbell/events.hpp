#pragma once

#include <cstdint>
#include <vector>

namespace psbell {

/// Detection timestamps in nanoseconds, sorted ascending, within [0, duration].
struct EventStream {
  std::vector<double> timestamps;
  double duration = 0.0;  // ns
};

/// Non-paralyzable dead time: an event is kept iff it is at least `dead_time`
/// ns after the previously kept event. Input must be sorted.
EventStream apply_dead_time(const EventStream& raw, double dead_time);

/// Coincidences between two sorted streams: pairs with |t_a - t_b| <= window,
/// each event used at most once, matched greedily earliest-first in a single
/// two-pointer pass. Throws unsorted_stream on unsorted input.
std::uint64_t correlate(const EventStream& a, const EventStream& b, double window);

}  // namespace psbell
