#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cycloroute/core/traffic_matrix.hpp"

namespace cycloroute::lowrank {

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Householder tridiagonalization followed by implicit-shift QL iterations.
/// Fails with ConvergenceFailure if the QL sweeps exceed `max_iterations`
/// (default 10 * dim) or the final relative residual max|A v - lambda v|
/// exceeds `tolerance`.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a, double tolerance = 1e-10,
                               std::optional<std::size_t> max_iterations = std::nullopt);

struct TrainedOn {
  std::int64_t start_epoch = 0;
  std::int64_t end_epoch = 0;
  std::size_t m = 0;
  std::size_t n = 0;
};

/// First k left singular vectors of the training matrix and its full
/// singular spectrum. Columns are orthonormal; each column's entry of largest
/// magnitude is positive.
struct SpatialBasis {
  Eigen::MatrixXd u_bar;                 // m x k
  std::vector<double> singular_values;   // min(m, n), nonincreasing
  TrainedOn trained_on;

  std::size_t m() const noexcept { return static_cast<std::size_t>(u_bar.rows()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(u_bar.cols()); }
  /// max |U^T U - I|.
  double orthonormality_error() const;
};

struct SvdOptions {
  bool want_right_factors = false;
  double tolerance = 1e-10;
};

struct TruncatedSvd {
  SpatialBasis basis;
  /// n x k right singular vectors, present when requested.
  std::optional<Eigen::MatrixXd> right_factors;
};

/// Truncated SVD through the Gram matrix W W^T (or W^T W when m > n).
TruncatedSvd truncated_svd(const Eigen::MatrixXd& w, std::size_t k, const SvdOptions& options = {});
TruncatedSvd truncated_svd(const TrafficMatrix& matrix, std::size_t k,
                           const SvdOptions& options = {});

/// U_k diag(sigma_1..k) Xi_k^T; requires right factors.
Eigen::MatrixXd reconstruct(const TruncatedSvd& svd);

}  // namespace cycloroute::lowrank
