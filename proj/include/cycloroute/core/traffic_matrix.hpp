#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "cycloroute/core/time_grid.hpp"

namespace cycloroute {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// m x n segment travel times (seconds) on a time grid with an observation mask.
///
/// Storage is column-major so that the weight vector of one interval (one
/// column) is contiguous; routing reads whole columns at a time. Masked cells
/// hold NaN. Immutable after construction.
class TrafficMatrix {
 public:
  TrafficMatrix() = default;

  /// Fully observed matrix.
  TrafficMatrix(TimeGrid grid, Eigen::MatrixXd values);
  TrafficMatrix(TimeGrid grid, Eigen::MatrixXd values, Mask mask);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t m() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t n() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const Mask& mask() const noexcept { return mask_; }

  bool observed(std::size_t row, std::size_t col) const { return mask_(row, col); }
  double value(std::size_t row, std::size_t col) const { return values_(row, col); }

  std::span<const double> column(std::size_t col) const;
  bool column_observed(std::size_t col) const;

  bool fully_observed() const;
  std::size_t missing_count() const;
  double missing_fraction() const;

  /// Row as (values, mask) pair, used by row-wise conditioning.
  std::vector<double> row_values(std::size_t row) const;
  std::vector<bool> row_mask(std::size_t row) const;

  /// Columns [first, first+count) with the matching sub-grid.
  TrafficMatrix slice_columns(std::size_t first, std::size_t count) const;
  /// Rows in the given order.
  TrafficMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  void validate() const;

  TimeGrid grid_;
  Eigen::MatrixXd values_;
  Mask mask_;
};

/// Travel time of segment `edge_row` entered at time t (frozen-at-entry).
/// Throws OutOfRange beyond the grid and MissingValue on a masked cell.
double weight_at(const TrafficMatrix& matrix, std::size_t edge_row, Timestamp t);

}  // namespace cycloroute
