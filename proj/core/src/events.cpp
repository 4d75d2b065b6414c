#include "psbell/events.hpp"

#include <algorithm>
#include <cmath>

#include "psbell/error.hpp"

namespace psbell {

namespace {

void require_sorted(const EventStream& s, const char* name) {
  if (!std::is_sorted(s.timestamps.begin(), s.timestamps.end())) {
    throw Error(ErrorKind::unsorted_stream, std::string(name) + " stream is not sorted");
  }
}

}  // namespace

EventStream apply_dead_time(const EventStream& raw, double dead_time) {
  require_sorted(raw, "input");
  if (!(dead_time >= 0.0)) throw Error(ErrorKind::invalid_argument, "dead time must be >= 0");
  EventStream out;
  out.duration = raw.duration;
  out.timestamps.reserve(raw.timestamps.size());
  for (double t : raw.timestamps) {
    if (out.timestamps.empty() || t - out.timestamps.back() >= dead_time) {
      out.timestamps.push_back(t);
    }
  }
  return out;
}

std::uint64_t correlate(const EventStream& a, const EventStream& b, double window) {
  require_sorted(a, "first");
  require_sorted(b, "second");
  if (!(window >= 0.0)) throw Error(ErrorKind::invalid_argument, "window must be >= 0");
  const auto& ta = a.timestamps;
  const auto& tb = b.timestamps;
  std::uint64_t matches = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ta.size() && j < tb.size()) {
    const double d = ta[i] - tb[j];
    if (d > window) {
      ++j;
    } else if (d < -window) {
      ++i;
    } else {
      ++matches;
      ++i;
      ++j;
    }
  }
  return matches;
}

}  // namespace psbell
