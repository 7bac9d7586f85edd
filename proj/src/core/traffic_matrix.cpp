#include "cycloroute/core/traffic_matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute {

TrafficMatrix::TrafficMatrix(TimeGrid grid, Eigen::MatrixXd values)
    : grid_(grid), values_(std::move(values)) {
  mask_ = Mask::Constant(values_.rows(), values_.cols(), true);
  validate();
}

TrafficMatrix::TrafficMatrix(TimeGrid grid, Eigen::MatrixXd values, Mask mask)
    : grid_(grid), values_(std::move(values)), mask_(std::move(mask)) {
  validate();
  for (Eigen::Index c = 0; c < values_.cols(); ++c) {
    for (Eigen::Index r = 0; r < values_.rows(); ++r) {
      if (!mask_(r, c)) values_(r, c) = std::numeric_limits<double>::quiet_NaN();
    }
  }
}

void TrafficMatrix::validate() const {
  if (static_cast<std::size_t>(values_.cols()) != grid_.n_intervals()) {
    throw Error(ErrorCode::DimensionMismatch,
                "matrix has " + std::to_string(values_.cols()) + " columns but grid has " +
                    std::to_string(grid_.n_intervals()) + " intervals");
  }
  if (mask_.rows() != values_.rows() || mask_.cols() != values_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "mask shape differs from value shape");
  }
  for (Eigen::Index c = 0; c < values_.cols(); ++c) {
    for (Eigen::Index r = 0; r < values_.rows(); ++r) {
      if (!mask_(r, c)) continue;
      const double v = values_(r, c);
      if (!std::isfinite(v) || v <= 0.0) {
        throw Error(ErrorCode::InvalidArgument,
                    "observed cell (" + std::to_string(r) + "," + std::to_string(c) +
                        ") is not a positive finite travel time");
      }
    }
  }
}

std::span<const double> TrafficMatrix::column(std::size_t col) const {
  if (col >= n()) throw Error(ErrorCode::OutOfRange, "column index out of range");
  return {values_.data() + col * m(), m()};
}

bool TrafficMatrix::column_observed(std::size_t col) const {
  return mask_.col(static_cast<Eigen::Index>(col)).all();
}

bool TrafficMatrix::fully_observed() const { return mask_.all(); }

std::size_t TrafficMatrix::missing_count() const {
  return static_cast<std::size_t>(mask_.size()) - static_cast<std::size_t>(mask_.count());
}

double TrafficMatrix::missing_fraction() const {
  if (mask_.size() == 0) return 0.0;
  return static_cast<double>(missing_count()) / static_cast<double>(mask_.size());
}

std::vector<double> TrafficMatrix::row_values(std::size_t row) const {
  std::vector<double> out(n());
  for (std::size_t c = 0; c < n(); ++c) out[c] = values_(row, c);
  return out;
}

std::vector<bool> TrafficMatrix::row_mask(std::size_t row) const {
  std::vector<bool> out(n());
  for (std::size_t c = 0; c < n(); ++c) out[c] = mask_(row, c);
  return out;
}

TrafficMatrix TrafficMatrix::slice_columns(std::size_t first, std::size_t count) const {
  TimeGrid sub = grid_.slice(first, count);
  const auto f = static_cast<Eigen::Index>(first);
  const auto c = static_cast<Eigen::Index>(count);
  return TrafficMatrix(sub, values_.middleCols(f, c), mask_.middleCols(f, c));
}

TrafficMatrix TrafficMatrix::select_rows(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), values_.cols());
  Mask mk(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m()) throw Error(ErrorCode::OutOfRange, "row index out of range");
    v.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    mk.row(static_cast<Eigen::Index>(i)) = mask_.row(static_cast<Eigen::Index>(rows[i]));
  }
  return TrafficMatrix(grid_, std::move(v), std::move(mk));
}

double weight_at(const TrafficMatrix& matrix, std::size_t edge_row, Timestamp t) {
  const std::size_t l = interval_index(matrix.grid(), t);
  if (edge_row >= matrix.m()) throw Error(ErrorCode::OutOfRange, "segment row out of range");
  if (!matrix.observed(edge_row, l)) {
    throw Error(ErrorCode::MissingValue, "segment " + std::to_string(edge_row) +
                                             " unobserved at interval " + std::to_string(l));
  }
  return matrix.value(edge_row, l);
}

}  // namespace cycloroute
