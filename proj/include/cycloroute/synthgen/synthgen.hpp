#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>

#include "cycloroute/core/road_network.hpp"
#include "cycloroute/core/traffic_matrix.hpp"

namespace cycloroute::synthgen {

struct NetworkParams {
  std::size_t vertices = 200;
  /// Target edges per vertex; the edge count is round(vertices * avg_degree).
  double avg_degree = 2.5;
  /// Geometric layout in the unit square with short local edges. Otherwise a
  /// random spanning cycle plus uniformly random extra edges.
  bool planar = true;
  /// Free-flow seconds per unit of layout distance.
  double seconds_per_unit = 3600.0;
  /// Sigma of the lognormal per-edge factor on the free-flow time.
  double base_log_sigma = 0.3;
  /// Lower bound on free-flow edge time, seconds.
  double min_base = 30.0;
};

struct TemplateParams {
  /// Peak relative slowdown of the shared rush-hour mode.
  double rush_amplitude = 0.5;
  /// Weekly modulation of the rush-hour mode (weekday vs weekend).
  double weekly_modulation = 0.3;
  /// Amplitude of each remaining mode's daily and weekly harmonics.
  double mode_amplitude = 0.06;
  std::size_t daily_harmonics = 3;
  std::size_t weekly_harmonics = 2;
};

struct TransientParams {
  double rate_per_day = 0.0;  // events per day over the whole network
  double magnitude_min = 1.5;
  double magnitude_max = 3.0;
  double mean_duration = 3600.0;
  double min_duration = 600.0;
  double max_duration = 4 * 3600.0;
  /// Neighbouring segments are scaled by 1 + neighbor_share * (M - 1).
  double neighbor_share = 0.5;
};

struct MissingnessParams {
  double cell_rate = 0.0;
  double blackouts_per_segment_day = 0.0;
  double blackout_mean_length = 4 * 3600.0;
};

struct SynthSpec {
  NetworkParams network;
  std::size_t days = 14;
  std::int64_t resolution = 600;
  /// Midnight of a Monday (2023-05-01 UTC).
  std::int64_t start_epoch = 1682899200;
  std::size_t k_true = 5;
  TemplateParams templates;
  double noise_std = 0.0;
  /// AR(1) coefficient of the relative noise between consecutive intervals;
  /// 0 gives independent cells.
  double noise_correlation = 0.0;
  TransientParams transients;
  MissingnessParams missingness;
  double floor = 1.0;
  std::uint64_t seed = 1;

  std::size_t intervals() const;
  void validate() const;
};

nlohmann::json to_json(const SynthSpec& spec);
/// Missing keys keep their defaults; unknown keys raise ConfigError.
SynthSpec spec_from_json(const nlohmann::json& j);

RoadNetwork generate_network(const SynthSpec& spec);

struct SynthTruth {
  TrafficMatrix matrix;
  Eigen::MatrixXd planted_basis;  // m x k_true, orthonormal
  Eigen::MatrixXd templates;      // k_true x n
  Eigen::VectorXd base;           // free-flow time per row
  std::size_t clamped_cells = 0;
  std::size_t transient_events = 0;
};

/// w[e,t] = max(floor, base_e (1 + sqrt(m) sum_j U0[e,j] tau_j(t)) (1 + noise) * transients).
SynthTruth generate_truth(const SynthSpec& spec, const RoadNetwork& network);

/// Degraded copy of `truth` with random cells and per-segment blackouts masked.
TrafficMatrix inject_missingness(const TrafficMatrix& truth, const SynthSpec& spec);

}  // namespace cycloroute::synthgen
