#pragma once

#include <cstddef>
#include <cstdint>

namespace cycloroute {

/// UTC epoch seconds. Arrival times accumulate real-valued travel times, so
/// timestamps are kept as doubles rather than integers.
using Timestamp = double;
using Seconds = double;

/// Fixed-resolution time grid. Interval l covers the half-open range
/// [start + l*res, start + (l+1)*res).
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(std::int64_t start_epoch, std::int64_t resolution, std::size_t n_intervals);

  std::int64_t start_epoch() const noexcept { return start_epoch_; }
  std::int64_t resolution() const noexcept { return resolution_; }
  std::size_t n_intervals() const noexcept { return n_intervals_; }

  Timestamp start() const noexcept { return static_cast<Timestamp>(start_epoch_); }
  /// One past the last covered instant.
  Timestamp end() const noexcept;
  Timestamp interval_start(std::size_t l) const noexcept;
  bool covers(Timestamp t) const noexcept { return t >= start() && t < end(); }

  /// Sub-grid of `count` intervals starting at interval `first`.
  TimeGrid slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::int64_t start_epoch_ = 0;
  std::int64_t resolution_ = 600;
  std::size_t n_intervals_ = 1;
};

/// floor((t - start) / resolution); throws OutOfRange outside the grid.
std::size_t interval_index(const TimeGrid& grid, Timestamp t);

}  // namespace cycloroute
