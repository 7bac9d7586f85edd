#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cycloroute/core/time_grid.hpp"
#include "cycloroute/core/traffic_matrix.hpp"
#include "cycloroute/lowrank/svd.hpp"

namespace cycloroute::predictors {

inline constexpr std::int64_t kDaySeconds = 86400;
inline constexpr std::int64_t kWeekSeconds = 7 * kDaySeconds;

struct CycleConfig {
  std::int64_t cycle_period = kDaySeconds;
  std::int64_t resolution = 600;

  /// Intervals per cycle; throws InvalidArgument unless the period is a
  /// positive multiple of the resolution.
  std::size_t L() const;
  void validate() const;
};

/// Least-squares coefficients of w in the column space of `basis`. Uses the
/// transpose when the basis is orthonormal (to 1e-10), normal equations
/// otherwise.
Eigen::VectorXd project_coefficients(std::span<const double> w, const Eigen::MatrixXd& basis);

enum class ModelKind { CycloLowRank, CycloFullRank, LowRankStatic };

/// Per-phase running means over cycles. The low-rank kinds keep k
/// coefficients per phase; the full-rank kind keeps raw m-vectors. The static
/// kind is a single phase, i.e. one global mean.
class CycleModel {
 public:
  static CycleModel lowrank(std::shared_ptr<const lowrank::SpatialBasis> basis, CycleConfig cfg,
                            std::int64_t anchor_epoch);
  static CycleModel fullrank(std::size_t m, CycleConfig cfg, std::int64_t anchor_epoch);
  static CycleModel static_lowrank(std::shared_ptr<const lowrank::SpatialBasis> basis,
                                   std::int64_t resolution, std::int64_t anchor_epoch);

  ModelKind kind() const noexcept { return kind_; }
  const CycleConfig& config() const noexcept { return cfg_; }
  std::int64_t anchor_epoch() const noexcept { return anchor_epoch_; }
  const std::shared_ptr<const lowrank::SpatialBasis>& basis() const noexcept { return basis_; }

  std::size_t m() const noexcept { return m_; }
  /// Coefficient dimension: k for low-rank kinds, m for full rank.
  std::size_t dim() const noexcept { return static_cast<std::size_t>(alphas_.cols()); }
  std::size_t L() const noexcept { return static_cast<std::size_t>(alphas_.rows()); }

  /// L x dim running means; rows with count 0 are zero.
  const Eigen::MatrixXd& alphas() const noexcept { return alphas_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  /// Stored scalars beyond the basis: L*dim means plus L counters.
  std::size_t state_size() const noexcept { return static_cast<std::size_t>(alphas_.size()) + counts_.size(); }

  /// Phase index of t: intervals since the anchor, modulo L.
  std::size_t phase(Timestamp t) const;

  /// Coefficients of an observation in this model's space.
  Eigen::VectorXd coefficients(std::span<const double> w) const;
  /// Projects w and folds it into phase l.
  void ingest(std::size_t l, std::span<const double> w);

  /// Length-m prediction for phase l (unclamped); ColdStart if count is 0.
  Eigen::VectorXd predict_phase(std::size_t l) const;

  /// Replaces the state wholesale (model loading).
  void restore(Eigen::MatrixXd alphas, std::vector<std::uint64_t> counts);

  friend void update_running_mean(CycleModel& model, std::size_t l, const Eigen::VectorXd& alpha_hat);

 private:
  CycleModel(ModelKind kind, std::shared_ptr<const lowrank::SpatialBasis> basis, std::size_t m,
             std::size_t dim, CycleConfig cfg, std::int64_t anchor_epoch);

  ModelKind kind_;
  std::shared_ptr<const lowrank::SpatialBasis> basis_;
  std::size_t m_;
  CycleConfig cfg_;
  std::int64_t anchor_epoch_;
  Eigen::MatrixXd alphas_;
  std::vector<std::uint64_t> counts_;
};

/// alpha_l <- ((p-1)/p) alpha_l + (1/p) alpha_hat with p the new count.
void update_running_mean(CycleModel& model, std::size_t l, const Eigen::VectorXd& alpha_hat);

/// Folds every fully observed column of `training` into `model`; returns the
/// number of columns ingested.
std::size_t ingest_columns(CycleModel& model, const TrafficMatrix& training);

/// Fits are anchored at the training grid start. InsufficientData if no
/// column is fully observed.
CycleModel fit_cyclo(const TrafficMatrix& training,
                     std::shared_ptr<const lowrank::SpatialBasis> basis, const CycleConfig& cfg);
CycleModel fit_fullrank(const TrafficMatrix& training, const CycleConfig& cfg);
CycleModel fit_static(const TrafficMatrix& training,
                      std::shared_ptr<const lowrank::SpatialBasis> basis);

}  // namespace cycloroute::predictors
