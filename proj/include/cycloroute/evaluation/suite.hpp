#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/road_network.hpp"
#include "cycloroute/core/traffic_matrix.hpp"
#include "cycloroute/evaluation/stats.hpp"
#include "cycloroute/evaluation/testset.hpp"
#include "cycloroute/predictors/predictor.hpp"
#include "cycloroute/routing/routing.hpp"

namespace cycloroute::evaluation {

struct EvalConfig {
  std::vector<double> alphas = {0.10, 0.01};
  /// Hop-length bins with fewer samples are not reported.
  std::size_t hop_min_samples = 1000;
  std::size_t workers = 1;
  routing::RerouteOptions reroute;
  /// Adds the clairvoyant fixed-path benchmark as "static_oracle".
  bool include_static_oracle = true;
};

struct RegretSample {
  std::size_t query_index = 0;
  std::size_t predictor = 0;  // index into SuiteResult::predictors
  double t_pred = 0.0;
  double t_rt = 0.0;
  double regret = 0.0;
};

struct QueryError {
  std::size_t query_index = 0;
  std::string predictor;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
};

struct HopQuantiles {
  std::size_t hop_length = 0;
  std::size_t count = 0;
  std::vector<QuantileValue> quantiles;
};

struct PredictorReport {
  std::string name;
  RegretStats overall;
  std::size_t errors = 0;
  /// Partition key ("hour=06", "dow=2", "workday=1", "direction=inner_to_outer")
  /// to statistics without CCDF.
  std::map<std::string, RegretStats> partitions;
  std::vector<HopQuantiles> hops;
};

struct SuiteResult {
  std::vector<std::string> predictors;
  std::vector<RegretSample> samples;  // sorted by (query, predictor)
  std::vector<PredictorReport> reports;
  std::vector<QueryError> errors;     // sorted by (query, predictor)
  std::size_t queries = 0;
  std::size_t realtime_failures = 0;
  std::vector<double> alphas;

  const PredictorReport& report(const std::string& name) const;
};

/// Runs the real-time benchmark and every predictor's greedy re-routing on
/// every query. Per-query failures are recorded and excluded from the
/// statistics. Results do not depend on the worker count.
SuiteResult evaluate_suite(const RoadNetwork& network, const TrafficMatrix& truth,
                           const std::vector<predictors::PredictorSnapshot>& predictors,
                           const TestSet& tests, const EvalConfig& cfg = {});

/// Writes regret_samples.csv, stats.json, ccdf_<predictor>.csv and
/// hopquantiles.csv into `dir`.
void write_outputs(const std::filesystem::path& dir, const SuiteResult& result, const TestSet& tests);

/// Plain-text table: one row per predictor with count, errors, mean and
/// quantiles in minutes.
std::string summary_table(const SuiteResult& result);

}  // namespace cycloroute::evaluation
