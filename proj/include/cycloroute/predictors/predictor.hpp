#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>

#include "cycloroute/core/time_grid.hpp"
#include "cycloroute/core/traffic_matrix.hpp"
#include "cycloroute/predictors/cycle_model.hpp"

namespace cycloroute::predictors {

enum class Variant { CycloLowRank, CycloFullRank, LowRankStatic, Lag, Realtime, StaticOracle };

const char* to_string(Variant v) noexcept;

/// Immutable weight predictor. Implementations are safe to share between
/// threads; `live` is the ground-truth matrix the lag variants read from.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual Variant variant() const noexcept = 0;
  const std::string& name() const noexcept { return name_; }
  double floor() const noexcept { return floor_; }

  /// Writes the m predicted weights for time t into `out`, clamped below at
  /// the floor.
  virtual void predict(Timestamp t, const TrafficMatrix& live, std::span<double> out) const = 0;
  Eigen::VectorXd predict_weights(Timestamp t, const TrafficMatrix& live) const;

 protected:
  Predictor(std::string name, double floor);

 private:
  std::string name_;
  double floor_;
};

using PredictorSnapshot = std::shared_ptr<const Predictor>;

/// Snapshot of a cycle model: predictions for every phase are precomputed,
/// so later updates to `model` do not affect it.
PredictorSnapshot freeze(const CycleModel& model, double floor = 1.0, std::string name = {});

/// Live column at interval_index(t - delta); ColdStart if t - delta precedes
/// the grid.
PredictorSnapshot make_lag(Seconds delta, double floor = 1.0, std::string name = {});
PredictorSnapshot make_realtime(double floor = 1.0);

}  // namespace cycloroute::predictors
