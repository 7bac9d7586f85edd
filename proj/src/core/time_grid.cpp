#include "cycloroute/core/time_grid.hpp"

#include <cmath>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute {

TimeGrid::TimeGrid(std::int64_t start_epoch, std::int64_t resolution, std::size_t n_intervals)
    : start_epoch_(start_epoch), resolution_(resolution), n_intervals_(n_intervals) {
  if (resolution <= 0) {
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
  }
  if (n_intervals == 0) {
    throw Error(ErrorCode::InvalidArgument, "grid must have at least one interval");
  }
}

Timestamp TimeGrid::end() const noexcept {
  return start() + static_cast<double>(resolution_) * static_cast<double>(n_intervals_);
}

Timestamp TimeGrid::interval_start(std::size_t l) const noexcept {
  return start() + static_cast<double>(resolution_) * static_cast<double>(l);
}

TimeGrid TimeGrid::slice(std::size_t first, std::size_t count) const {
  if (first + count > n_intervals_ || count == 0) {
    throw Error(ErrorCode::OutOfRange, "grid slice exceeds grid coverage");
  }
  return TimeGrid(start_epoch_ + static_cast<std::int64_t>(first) * resolution_, resolution_,
                  count);
}

std::size_t interval_index(const TimeGrid& grid, Timestamp t) {
  if (!grid.covers(t)) {
    throw Error(ErrorCode::OutOfRange,
                "timestamp " + std::to_string(t) + " outside grid coverage");
  }
  const double offset = (t - grid.start()) / static_cast<double>(grid.resolution());
  auto l = static_cast<std::size_t>(std::floor(offset));
  // Guard against rounding pushing t just below end() onto index n.
  if (l >= grid.n_intervals()) l = grid.n_intervals() - 1;
  return l;
}

}  // namespace cycloroute
