#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <utility>
#include <vector>

#include "cycloroute/core/road_network.hpp"
#include "cycloroute/core/time_grid.hpp"
#include "cycloroute/core/traffic_matrix.hpp"

namespace cycloroute::preprocess {

/// Irregularly sampled travel times of one segment.
struct RawSeries {
  std::size_t segment_id = 0;
  std::vector<std::pair<Timestamp, double>> samples;

  /// Throws InvalidArgument unless timestamps strictly increase and values are > 0.
  void validate() const;
};

struct PreprocessConfig {
  TimeGrid grid;
  Seconds snap_tolerance = 300.0;
  Seconds interp_window = 600.0;
  std::size_t max_gap_intervals = 2;
  double outlier_fraction = 0.2;
  Seconds blackout_duration = 3.0 * 3600.0;
  double max_missing_fraction = 0.3;
  /// Temporal anchors farther than this many intervals from a missing cell
  /// are ignored by spatio-temporal imputation.
  std::size_t temporal_window_intervals = 18;

  void validate() const;
};

struct Row {
  std::vector<double> values;
  std::vector<bool> mask;

  std::size_t observed_count() const;
};

struct AlignCounts {
  std::size_t snapped = 0;
  std::size_t interpolated = 0;
  std::size_t missing = 0;
};

/// Resamples one raw series onto cfg.grid. A slot takes the nearest sample
/// within snap_tolerance; otherwise it is linearly interpolated from the
/// closest samples on each side within interp_window; otherwise it is missing.
Row align_to_grid(const RawSeries& raw, const PreprocessConfig& cfg, AlignCounts* counts = nullptr);

/// Masks observed values below outlier_fraction x (mean of observed values).
/// The mean is taken once, before masking.
Row remove_outliers(Row row, const PreprocessConfig& cfg);

/// Linearly fills interior runs of at most max_gap_intervals missing cells.
Row interpolate_short_gaps(Row row, const PreprocessConfig& cfg);

struct BlackoutResult {
  TrafficMatrix matrix;
  std::vector<std::size_t> kept_rows;
  std::vector<std::size_t> removed_rows;
  std::size_t removed_for_blackout = 0;
  std::size_t removed_for_missing_fraction = 0;
};

/// Drops rows with a contiguous missing run longer than blackout_duration or
/// an overall missing fraction above max_missing_fraction.
BlackoutResult drop_blackout_segments(const TrafficMatrix& matrix, const PreprocessConfig& cfg);

/// Fills every missing cell from the segment's own nearest observations in
/// time and from graph-adjacent segments observed in the same interval,
/// rescaled by the ratio of segment means. When both kinds of estimate exist
/// they are averaged with equal weight. Observed cells are returned bit-exact.
TrafficMatrix impute_spatiotemporal(const TrafficMatrix& matrix, const RoadNetwork& network,
                                    const PreprocessConfig& cfg, std::size_t workers = 1);

struct SubnetworkResult {
  RoadNetwork network;
  /// new vertex id -> old vertex id
  std::vector<VertexId> vertex_map;
  /// new segment row -> old segment row
  std::vector<std::size_t> row_map;
};

/// Induced subgraph on the largest strongly connected component (ties broken
/// by smallest contained vertex id). Vertices, edges and segment rows are
/// renumbered densely in ascending order of their old ids.
SubnetworkResult largest_scc(const RoadNetwork& network);

/// Removes the edges whose segment rows are not in `kept_rows` (ascending) and
/// renumbers rows so that new row i corresponds to kept_rows[i].
RoadNetwork restrict_to_rows(const RoadNetwork& network, const std::vector<std::size_t>& kept_rows);

struct PipelineResult {
  RoadNetwork network;
  TrafficMatrix matrix;
  /// Output row -> input row.
  std::vector<std::size_t> row_map;
  nlohmann::json report;
};

/// Full conditioning chain on an already gridded matrix:
/// outliers -> short gaps -> blackout drop -> largest SCC -> imputation.
PipelineResult run_pipeline(const TrafficMatrix& observed, const RoadNetwork& network,
                            const PreprocessConfig& cfg, std::size_t workers = 1);

/// Same, starting from raw series (one per segment row of `network`;
/// segments without a series become all-missing rows).
PipelineResult run_pipeline(const std::vector<RawSeries>& raw, const RoadNetwork& network,
                            const PreprocessConfig& cfg, std::size_t workers = 1);

/// Parses "segment_id,timestamp,travel_time" CSV (header row optional).
std::vector<RawSeries> read_raw_series_csv(const std::string& text);

}  // namespace cycloroute::preprocess
