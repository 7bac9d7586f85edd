#include "cycloroute/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <sstream>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/io.hpp"
#include "cycloroute/evaluation/communities.hpp"
#include "cycloroute/lowrank/basis_io.hpp"
#include "cycloroute/lowrank/mdl.hpp"
#include "cycloroute/lowrank/svd.hpp"
#include "cycloroute/predictors/cycle_model.hpp"
#include "cycloroute/predictors/model_io.hpp"

namespace cycloroute::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path require(const RunConfig& cfg, const fs::path& p, const char* what, const char* producer) {
  const fs::path full = cfg.paths.resolve(p);
  if (!fs::exists(full)) {
    throw Error(ErrorCode::ConfigError,
                std::string("missing ") + what + " " + full.string() + " (produced by `" + producer + "`)");
  }
  return full;
}

fs::path output(const RunConfig& cfg, const fs::path& p) {
  const fs::path full = cfg.paths.resolve(p);
  if (full.has_parent_path()) fs::create_directories(full.parent_path());
  return full;
}

std::size_t columns_per_day(const TimeGrid& grid) {
  if (86400 % grid.resolution() != 0) {
    throw Error(ErrorCode::ConfigError, "grid resolution " + std::to_string(grid.resolution()) + " s does not divide a day");
  }
  return static_cast<std::size_t>(86400 / grid.resolution());
}

TrafficMatrix training_slice(const RunConfig& cfg, const TrafficMatrix& m) {
  const std::size_t cpd = columns_per_day(m.grid());
  const std::size_t first = cfg.fit.train_start_day * cpd;
  const std::size_t count = cfg.fit.train_days * cpd;
  if (first + count > m.n()) {
    throw Error(ErrorCode::ConfigError, "config.fit: training days [" + std::to_string(cfg.fit.train_start_day) + ", " +
                                            std::to_string(cfg.fit.train_start_day + cfg.fit.train_days) +
                                            ") extend past the " + std::to_string(m.n() / cpd) + " days of data");
  }
  return m.slice_columns(first, count);
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string alpha_label(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

fs::path model_path(const RunConfig& cfg, const PredictorSpec& p) {
  return cfg.paths.resolve(cfg.paths.models) / (p.name + ".cmat");
}

void print_mdl(const lowrank::MdlResult& r, std::ostream& out) {
  out << "k,mdl\n";
  for (std::size_t k = 0; k < r.curve.size(); ++k) out << k << ',' << fixed(r.curve[k], 6) << '\n';
  out << "k*=" << r.best_k << '\n';
}

lowrank::MdlResult run_mdl(const TrafficMatrix& train) {
  const auto sv = lowrank::truncated_svd(train, 1).basis.singular_values;
  return lowrank::mdl_order(sv, train.m(), train.n());
}

TrafficMatrix evaluation_truth(const RunConfig& cfg, const TrafficMatrix& clean) {
  const fs::path truth_path = cfg.paths.resolve(cfg.paths.truth);
  TruthSource src = cfg.truth;
  if (src == TruthSource::Auto) src = fs::exists(truth_path) ? TruthSource::Truth : TruthSource::Clean;
  if (src == TruthSource::Clean) return clean;
  const TrafficMatrix truth = io::read_matrix(require(cfg, cfg.paths.truth, "truth matrix", "synth"));
  const fs::path report_path = cfg.paths.resolve(cfg.paths.preprocess_report);
  TrafficMatrix aligned = truth;
  if (fs::exists(report_path)) {
    const json report = json::parse(io::read_text(report_path));
    if (report.contains("row_map")) {
      const auto rows = report.at("row_map").get<std::vector<std::size_t>>();
      for (std::size_t r : rows) {
        if (r >= truth.m()) throw Error(ErrorCode::DimensionMismatch, "row map exceeds the truth matrix");
      }
      aligned = truth.select_rows(rows);
    }
  }
  if (aligned.m() != clean.m() || !(aligned.grid() == clean.grid())) {
    throw Error(ErrorCode::DimensionMismatch, "truth matrix does not align with the cleaned matrix");
  }
  return aligned;
}

std::vector<predictors::PredictorSnapshot> build_predictors(const RunConfig& cfg) {
  std::vector<predictors::PredictorSnapshot> out;
  for (const auto& p : cfg.predictors) {
    switch (p.variant) {
      case predictors::Variant::Realtime:
        out.push_back(predictors::make_realtime(cfg.floor));
        break;
      case predictors::Variant::Lag:
        out.push_back(predictors::make_lag(p.delta, cfg.floor, p.name));
        break;
      default: {
        const fs::path path = model_path(cfg, p);
        if (!fs::exists(path)) {
          throw Error(ErrorCode::ConfigError, "missing model " + path.string() + " (produced by `fit`)");
        }
        out.push_back(predictors::freeze(predictors::load_model(path), cfg.floor, p.name));
      }
    }
  }
  return out;
}

}  // namespace

void cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const auto& spec = cfg.synth;
  spec.validate();
  const RoadNetwork net = synthgen::generate_network(spec);
  const synthgen::SynthTruth truth = synthgen::generate_truth(spec, net);
  const TrafficMatrix observed = synthgen::inject_missingness(truth.matrix, spec);
  io::write_graph(output(cfg, cfg.paths.graph), net);
  io::write_matrix(output(cfg, cfg.paths.truth), truth.matrix);
  io::write_matrix(output(cfg, cfg.paths.observed), observed);
  json record = {{"spec", synthgen::to_json(spec)},
                 {"vertices", net.vertex_count()},
                 {"segments", net.edge_count()},
                 {"intervals", truth.matrix.n()},
                 {"clamped_cells", truth.clamped_cells},
                 {"transient_events", truth.transient_events},
                 {"missing_fraction", observed.missing_fraction()}};
  io::write_text(output(cfg, cfg.paths.synth_record), record.dump(2) + "\n");
  out << "synth: " << net.vertex_count() << " vertices, " << net.edge_count() << " segments, "
      << truth.matrix.n() << " intervals, " << truth.transient_events << " transients, missing "
      << fixed(100.0 * observed.missing_fraction(), 2) << "%\n";
}

void cmd_preprocess(const RunConfig& cfg, std::ostream& out) {
  const RoadNetwork net = io::read_graph(require(cfg, cfg.paths.graph, "graph", "synth"));
  preprocess::PreprocessConfig pc = cfg.preprocess;
  preprocess::PipelineResult result;
  if (!cfg.paths.raw.empty()) {
    const fs::path raw_path = require(cfg, cfg.paths.raw, "raw series", "an external source");
    if (!cfg.raw_grid) throw Error(ErrorCode::ConfigError, "config.preprocess.grid is required for raw input");
    pc.grid = *cfg.raw_grid;
    const auto raw = preprocess::read_raw_series_csv(io::read_text(raw_path));
    result = preprocess::run_pipeline(raw, net, pc, cfg.workers);
  } else {
    const TrafficMatrix observed = io::read_matrix(require(cfg, cfg.paths.observed, "observed matrix", "synth"));
    pc.grid = observed.grid();
    result = preprocess::run_pipeline(observed, net, pc, cfg.workers);
  }
  result.report["row_map"] = result.row_map;
  io::write_matrix(output(cfg, cfg.paths.clean), result.matrix);
  io::write_graph(output(cfg, cfg.paths.clean_graph), result.network);
  io::write_text(output(cfg, cfg.paths.preprocess_report), result.report.dump(2) + "\n");
  const auto& rep = result.report;
  out << "preprocess: " << rep["output"]["segments"].get<std::size_t>() << " of "
      << rep["input"]["segments"].get<std::size_t>() << " segments kept, " << rep["rows_dropped"].size()
      << " dropped, " << rep["cells_imputed"].get<std::size_t>() << " cells imputed\n";
}

void cmd_fit(const RunConfig& cfg, const FitOptions& opts, std::ostream& out) {
  const TrafficMatrix clean = io::read_matrix(require(cfg, cfg.paths.clean, "cleaned matrix", "preprocess"));
  const TrafficMatrix train = training_slice(cfg, clean);
  const auto train_seconds = static_cast<std::int64_t>(cfg.fit.train_days) * 86400;
  for (const auto& p : cfg.predictors) {
    if (p.has_model() && p.variant != predictors::Variant::LowRankStatic && train_seconds < p.cycle_period) {
      throw Error(ErrorCode::InsufficientData, "training window of " + std::to_string(cfg.fit.train_days) +
                                                   " days is shorter than the cycle of " + p.name);
    }
  }

  std::size_t k = cfg.fit.rank;
  if (opts.mdl || cfg.fit.mdl) {
    const auto r = run_mdl(train);
    print_mdl(r, out);
    if (!opts.rank) {
      if (r.best_k == 0) throw Error(ErrorCode::InsufficientData, "MDL finds no significant mode");
      k = r.best_k;
    }
  }
  if (opts.rank) k = *opts.rank;
  if (k == 0 || k > std::min(train.m(), train.n())) {
    throw Error(ErrorCode::ConfigError, "rank " + std::to_string(k) + " outside 1.." +
                                            std::to_string(std::min(train.m(), train.n())));
  }

  const bool needs_basis = std::any_of(cfg.predictors.begin(), cfg.predictors.end(), [](const PredictorSpec& p) {
    return p.variant == predictors::Variant::CycloLowRank || p.variant == predictors::Variant::LowRankStatic;
  });
  std::shared_ptr<const lowrank::SpatialBasis> basis;
  const fs::path basis_path = output(cfg, cfg.paths.basis);
  if (needs_basis) {
    basis = std::make_shared<const lowrank::SpatialBasis>(lowrank::truncated_svd(train, k).basis);
    lowrank::write_basis(basis_path, *basis);
    out << "basis: k=" << k << " m=" << basis->m() << " trained on " << train.n() << " intervals\n";
  }
  fs::create_directories(cfg.paths.resolve(cfg.paths.models));
  for (const auto& p : cfg.predictors) {
    if (!p.has_model()) continue;
    const predictors::CycleConfig cc{p.cycle_period, train.grid().resolution()};
    predictors::CycleModel model = [&] {
      switch (p.variant) {
        case predictors::Variant::CycloLowRank: return predictors::fit_cyclo(train, basis, cc);
        case predictors::Variant::CycloFullRank: return predictors::fit_fullrank(train, cc);
        default: return predictors::fit_static(train, basis);
      }
    }();
    const fs::path path = model_path(cfg, p);
    predictors::save_model(path, model, model.basis() ? basis_path : fs::path{});
    out << "model " << p.name << ": L=" << model.L() << " dim=" << model.dim() << " -> " << path.string() << '\n';
  }
}

void cmd_mdl(const RunConfig& cfg, std::ostream& out) {
  const TrafficMatrix clean = io::read_matrix(require(cfg, cfg.paths.clean, "cleaned matrix", "preprocess"));
  const auto r = run_mdl(training_slice(cfg, clean));
  std::ostringstream csv;
  print_mdl(r, csv);
  out << csv.str();
  const std::string text = csv.str();
  io::write_text(output(cfg, "mdl_curve.csv"), text.substr(0, text.rfind("k*=")));
}

void cmd_spectra(const RunConfig& cfg, std::ostream& out) {
  const TrafficMatrix clean = io::read_matrix(require(cfg, cfg.paths.clean, "cleaned matrix", "preprocess"));
  const TrafficMatrix train = training_slice(cfg, clean);
  const auto& modes = cfg.spectra.modes;
  if (modes.empty()) throw Error(ErrorCode::ConfigError, "config.spectra.modes must not be empty");
  const std::size_t limit = std::min(train.m(), train.n());
  std::vector<std::size_t> zero_based;
  for (std::size_t mode : modes) {
    if (mode == 0 || mode > limit) {
      throw Error(ErrorCode::ConfigError,
                  "spectra mode " + std::to_string(mode) + " outside 1.." + std::to_string(limit));
    }
    zero_based.push_back(mode - 1);
  }
  lowrank::SvdOptions so;
  so.want_right_factors = true;
  const auto svd = lowrank::truncated_svd(train, *std::max_element(modes.begin(), modes.end()), so);
  const auto reports = lowrank::psd_of_modes(*svd.right_factors, zero_based, cfg.spectra.welch);
  const fs::path dir = cfg.paths.resolve(cfg.paths.spectra);
  fs::create_directories(dir);
  for (const auto& r : reports) {
    std::ostringstream csv;
    csv << "frequency_per_day,psd\n";
    char buf[64];
    for (std::size_t b = 0; b < r.psd.size(); ++b) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.frequencies[b], r.psd[b]);
      csv << buf;
    }
    io::write_text(dir / ("mode_" + std::to_string(r.mode + 1) + ".csv"), csv.str());
    const double f = r.frequencies[r.peak_bin()];
    out << "mode " << r.mode + 1 << ": peak at " << fixed(f, 4) << " per day";
    if (f > 0) out << " (period " << fixed(24.0 / f, 2) << " h)";
    out << ", " << r.segments << " segment(s)\n";
  }
}

bool cmd_evaluate(const RunConfig& cfg, const EvaluateOptions& opts, std::ostream& out) {
  const RoadNetwork net = io::read_graph(require(cfg, cfg.paths.clean_graph, "cleaned graph", "preprocess"));
  const TrafficMatrix clean = io::read_matrix(require(cfg, cfg.paths.clean, "cleaned matrix", "preprocess"));
  const TrafficMatrix truth = evaluation_truth(cfg, clean);
  const auto preds = build_predictors(cfg);

  const fs::path tests_path = cfg.paths.resolve(cfg.paths.test_set);
  evaluation::TestSet tests;
  if (fs::exists(tests_path) && !opts.rebuild_tests) {
    tests = evaluation::read_test_set_csv(tests_path);
    out << "test set: " << tests.queries.size() << " queries loaded from " << tests_path.string() << '\n';
  } else {
    const auto communities = evaluation::detect_communities(net, cfg.seed);
    const auto bc = evaluation::sampled_betweenness(net, cfg.test_set.betweenness_samples, cfg.seed);
    const auto inner = evaluation::label_inner(communities, bc);
    tests = evaluation::build_test_set(net, communities, inner, truth, cfg.test_set);
    evaluation::write_test_set_csv(output(cfg, cfg.paths.test_set), tests);
    out << "test set: " << communities.count << " communities (" << tests.inner_communities << " inner), "
        << tests.od_pairs.size() << " OD pairs, " << tests.candidates << " candidates, " << tests.queries.size()
        << " kept, " << tests.discarded_short << " short, " << tests.discarded_error << " unroutable\n";
  }

  const auto result = evaluation::evaluate_suite(net, truth, preds, tests, cfg.evaluation);
  const fs::path dir = cfg.paths.resolve(cfg.paths.results);
  evaluation::write_outputs(dir, result, tests);
  const std::string table = evaluation::summary_table(result);
  io::write_text(dir / "summary.txt", table);
  out << table;
  const std::size_t runs = result.queries * result.predictors.size();
  out << "failed runs: " << result.errors.size() << " of " << runs << " (" << result.realtime_failures
      << " real-time benchmark failures)\n";
  return !result.samples.empty();
}

void cmd_report(const RunConfig& cfg, const std::string& partition, std::ostream& out) {
  const fs::path stats_path = cfg.paths.resolve(cfg.paths.results) / "stats.json";
  if (!fs::exists(stats_path)) {
    throw Error(ErrorCode::ConfigError, "missing " + stats_path.string() + " (produced by `evaluate`)");
  }
  json stats;
  try {
    stats = json::parse(io::read_text(stats_path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, stats_path.string() + ": " + e.what());
  }
  const auto alphas = stats.at("alphas").get<std::vector<double>>();
  auto quantile = [](const json& s, double alpha) {
    for (const auto& [key, v] : s.at("upper_quantiles_seconds").items()) {
      if (std::stod(key) == alpha) return v.get<double>() / 60.0;
    }
    return 0.0;
  };
  char buf[160];
  if (partition.empty()) {
    std::snprintf(buf, sizeof buf, "%-22s %8s %7s %10s", "predictor", "count", "errors", "mean[min]");
    out << buf;
    for (double a : alphas) {
      std::snprintf(buf, sizeof buf, " %11s", ("q" + alpha_label(a) + "[min]").c_str());
      out << buf;
    }
    out << '\n';
    for (const auto& p : stats.at("predictors")) {
      std::snprintf(buf, sizeof buf, "%-22s %8zu %7zu %10.3f", p.at("name").get<std::string>().c_str(),
                    p.at("count").get<std::size_t>(), p.at("errors").get<std::size_t>(),
                    p.at("mean_minutes").get<double>());
      out << buf;
      for (double a : alphas) {
        std::snprintf(buf, sizeof buf, " %11.3f", p.at("count").get<std::size_t>() ? quantile(p, a) : 0.0);
        out << buf;
      }
      out << '\n';
    }
    out << "queries: " << stats.at("queries").get<std::size_t>() << ", failed runs: " << stats.at("errors").size()
        << '\n';
    return;
  }

  // mean regret [min] per partition value (rows) and predictor (columns)
  const std::string prefix = partition + "=";
  std::map<std::string, std::map<std::string, double>> table;
  std::vector<std::string> names;
  for (const auto& p : stats.at("predictors")) {
    names.push_back(p.at("name").get<std::string>());
    for (const auto& [key, s] : p.at("partitions").items()) {
      if (key.rfind(prefix, 0) == 0) table[key.substr(prefix.size())][names.back()] = s.at("mean_minutes").get<double>();
    }
  }
  if (table.empty()) {
    throw Error(ErrorCode::ConfigError, "unknown partition '" + partition + "' (hour, dow, workday, direction)");
  }
  std::snprintf(buf, sizeof buf, "%-16s", partition.c_str());
  out << buf;
  for (const auto& n : names) {
    std::snprintf(buf, sizeof buf, " %22s", n.c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& [value, row] : table) {
    std::snprintf(buf, sizeof buf, "%-16s", value.c_str());
    out << buf;
    for (const auto& n : names) {
      const auto it = row.find(n);
      std::snprintf(buf, sizeof buf, " %22s", it == row.end() ? "-" : fixed(it->second).c_str());
      out << buf;
    }
    out << '\n';
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cyclostationary low-rank travel-time prediction and routing experiments", "cycloroute"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out_dir;
  app.add_option("-c,--config", config_path, std::string("JSON run config (default: $") + kConfigEnv + ")");
  app.add_option("--seed", seed, "root seed override");
  app.add_option("-j,--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("-o,--out", out_dir, "output directory override");

  auto* synth = app.add_subcommand("synth", "generate a synthetic network, truth and degraded observations");
  auto* prep = app.add_subcommand("preprocess", "align, clean and impute the observed matrix");
  auto* fit = app.add_subcommand("fit", "fit the spatial basis and cycle models");
  FitOptions fit_opts;
  std::optional<std::size_t> rank;
  fit->add_option("-k,--rank", rank, "number of spatial modes")->check(CLI::PositiveNumber);
  fit->add_flag("--mdl", fit_opts.mdl, "print the MDL curve and use its minimiser unless --rank is given");
  auto* mdl = app.add_subcommand("mdl", "print the MDL curve of the training window");
  auto* spectra = app.add_subcommand("spectra", "PSD of the temporal singular vectors");
  std::vector<std::size_t> modes;
  spectra->add_option("-m,--modes", modes, "1-based mode indices");
  auto* evaluate = app.add_subcommand("evaluate", "route every test query with every predictor");
  EvaluateOptions eval_opts;
  evaluate->add_flag("--rebuild-tests", eval_opts.rebuild_tests, "regenerate the test set even if one exists");
  auto* report = app.add_subcommand("report", "print stored evaluation statistics");
  std::string by;
  report->add_option("--by", by, "partition: hour, dow, workday or direction");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv)) config_path = env;
    }
    RunConfig cfg = config_path.empty() ? config_from_json(json::object()) : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
    if (!out_dir.empty()) cfg.paths.output_dir = out_dir;
    if (!modes.empty()) cfg.spectra.modes = modes;
    cfg.propagate();
    fit_opts.rank = rank;
    fs::create_directories(cfg.paths.output_dir);

    if (synth->parsed()) cmd_synth(cfg, out);
    if (prep->parsed()) cmd_preprocess(cfg, out);
    if (fit->parsed()) cmd_fit(cfg, fit_opts, out);
    if (mdl->parsed()) cmd_mdl(cfg, out);
    if (spectra->parsed()) cmd_spectra(cfg, out);
    if (evaluate->parsed() && !cmd_evaluate(cfg, eval_opts, out)) {
      err << "error: every evaluation run failed\n";
      return kRuntimeFailure;
    }
    if (report->parsed()) cmd_report(cfg, by, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::ConfigError ? kUsageError : kRuntimeFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kSuccess;
}

}  // namespace cycloroute::cli
