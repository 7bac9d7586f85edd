#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cycloroute/evaluation/suite.hpp"
#include "cycloroute/evaluation/testset.hpp"
#include "cycloroute/lowrank/spectrum.hpp"
#include "cycloroute/predictors/predictor.hpp"
#include "cycloroute/preprocess/preprocess.hpp"
#include "cycloroute/synthgen/synthgen.hpp"

namespace cycloroute::cli {

/// Name of the environment variable holding the default config path.
inline constexpr const char* kConfigEnv = "CYCLOROUTE_CONFIG";

struct Paths {
  /// Base directory for every relative path below.
  std::filesystem::path output_dir = "run";
  std::filesystem::path graph = "graph.csv";
  std::filesystem::path truth = "truth.cmat";
  std::filesystem::path observed = "observed.cmat";
  /// Optional raw "segment_id,timestamp,travel_time" input for preprocess.
  std::filesystem::path raw;
  std::filesystem::path clean = "clean.cmat";
  std::filesystem::path clean_graph = "clean_graph.csv";
  std::filesystem::path preprocess_report = "preprocess_report.json";
  std::filesystem::path basis = "basis.cmat";
  std::filesystem::path models = "models";
  std::filesystem::path test_set = "testset.csv";
  std::filesystem::path results = "results";
  std::filesystem::path spectra = "spectra";
  std::filesystem::path synth_record = "spec.json";

  /// `p` against output_dir unless absolute.
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

struct PredictorSpec {
  std::string name;
  predictors::Variant variant = predictors::Variant::CycloLowRank;
  std::int64_t cycle_period = 7 * 86400;  // model-based variants
  double delta = 86400.0;                 // lag
  bool has_model() const;
};

struct FitSettings {
  std::size_t rank = 25;
  bool mdl = false;
  std::size_t train_start_day = 0;
  std::size_t train_days = 28;
};

struct SpectraSettings {
  /// 1-based mode indices.
  std::vector<std::size_t> modes = {1, 2, 3, 4, 5, 6};
  lowrank::WelchParams welch;
};

enum class TruthSource { Auto, Truth, Clean };

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  Paths paths;
  synthgen::SynthSpec synth;
  preprocess::PreprocessConfig preprocess;
  /// Grid for raw-series input; gridded input carries its own.
  std::optional<TimeGrid> raw_grid;
  FitSettings fit;
  std::vector<PredictorSpec> predictors;
  evaluation::TestSetConfig test_set;
  /// Unset: the first day after the training window.
  std::optional<std::size_t> test_first_day;
  evaluation::EvalConfig evaluation;
  TruthSource truth = TruthSource::Auto;
  double floor = 1.0;
  SpectraSettings spectra;

  /// Propagates the root seed and worker count into every component config.
  void propagate();
};

/// realtime, cyclo weekly/daily, full-rank weekly/daily, low-rank static,
/// lags of one day, one week and one interval.
std::vector<PredictorSpec> default_predictors();

/// Unknown keys anywhere in the tree raise ConfigError naming the key.
/// Relative paths.output_dir is taken against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace cycloroute::cli
