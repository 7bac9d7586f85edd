#include "cycloroute/cli/config.hpp"

#include <cctype>
#include <set>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/io.hpp"
#include "cycloroute/core/json_reader.hpp"
#include "cycloroute/predictors/cycle_model.hpp"

namespace cycloroute::cli {

using nlohmann::json;
namespace fs = std::filesystem;
using predictors::Variant;

namespace {

std::string cycle_suffix(std::int64_t period) {
  if (period == predictors::kWeekSeconds) return "weekly";
  if (period == predictors::kDaySeconds) return "daily";
  return std::to_string(period) + "s";
}

std::string default_name(const PredictorSpec& p) {
  switch (p.variant) {
    case Variant::CycloLowRank: return "cyclo_" + cycle_suffix(p.cycle_period);
    case Variant::CycloFullRank: return "cyclo_fullrank_" + cycle_suffix(p.cycle_period);
    case Variant::LowRankStatic: return "lowrank_static";
    case Variant::Realtime: return "realtime";
    case Variant::StaticOracle: return "static_oracle";
    case Variant::Lag:
      if (p.delta == static_cast<double>(predictors::kDaySeconds)) return "lag_day";
      if (p.delta == static_cast<double>(predictors::kWeekSeconds)) return "lag_week";
      return "lag_" + std::to_string(static_cast<long long>(p.delta)) + "s";
  }
  return "predictor";
}

Variant parse_variant(const std::string& s, const std::string& where) {
  if (s == "cyclo_lowrank") return Variant::CycloLowRank;
  if (s == "cyclo_fullrank") return Variant::CycloFullRank;
  if (s == "lowrank_static") return Variant::LowRankStatic;
  if (s == "lag") return Variant::Lag;
  if (s == "realtime") return Variant::Realtime;
  throw Error(ErrorCode::ConfigError, where + ": unknown variant '" + s + "'");
}

// "weekly", "daily" or a number of seconds.
std::int64_t parse_period(const json& v, const std::string& where) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "weekly" || s == "week") return predictors::kWeekSeconds;
    if (s == "daily" || s == "day") return predictors::kDaySeconds;
  } else if (v.is_number_integer() && v.get<long long>() > 0) {
    return v.get<std::int64_t>();
  }
  throw Error(ErrorCode::ConfigError, where + ": expected \"weekly\", \"daily\" or positive seconds");
}

PredictorSpec parse_predictor(const json& j, const std::string& where) {
  JsonReader r(j, where);
  PredictorSpec p;
  std::string variant;
  r.get("variant", variant);
  if (variant.empty()) throw Error(ErrorCode::ConfigError, where + ".variant is required");
  p.variant = parse_variant(variant, r.field("variant"));
  if (const json* c = r.child("cycle")) p.cycle_period = parse_period(*c, r.field("cycle"));
  if (const json* d = r.child("delta")) {
    p.delta = static_cast<double>(parse_period(*d, r.field("delta")));
  }
  r.get("name", p.name);
  r.finish();
  if (p.name.empty()) p.name = default_name(p);
  // Names become CSV fields and file names.
  for (char ch : p.name) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' && ch != '.') {
      throw Error(ErrorCode::ConfigError, where + ".name: only letters, digits, '_', '-' and '.' are allowed");
    }
  }
  return p;
}

}  // namespace

fs::path Paths::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return output_dir / p;
}

bool PredictorSpec::has_model() const {
  return variant == Variant::CycloLowRank || variant == Variant::CycloFullRank ||
         variant == Variant::LowRankStatic;
}

std::vector<PredictorSpec> default_predictors() {
  std::vector<PredictorSpec> out;
  auto add = [&](Variant v, std::int64_t period, double delta) {
    PredictorSpec p;
    p.variant = v;
    p.cycle_period = period;
    p.delta = delta;
    p.name = default_name(p);
    out.push_back(p);
  };
  add(Variant::Realtime, 0, 0);
  add(Variant::CycloLowRank, predictors::kWeekSeconds, 0);
  add(Variant::CycloLowRank, predictors::kDaySeconds, 0);
  add(Variant::CycloFullRank, predictors::kWeekSeconds, 0);
  add(Variant::CycloFullRank, predictors::kDaySeconds, 0);
  add(Variant::LowRankStatic, 0, 0);
  add(Variant::Lag, 0, predictors::kDaySeconds);
  add(Variant::Lag, 0, predictors::kWeekSeconds);
  add(Variant::Lag, 0, 600);
  return out;
}

void RunConfig::propagate() {
  synth.seed = seed;
  test_set.seed = seed;
  test_set.workers = workers;
  evaluation.workers = workers;
  if (test_first_day) {
    test_set.first_day = *test_first_day;
  } else {
    test_set.first_day = fit.train_start_day + fit.train_days;
  }
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.predictors = default_predictors();
  JsonReader r(j, "config");
  r.get("seed", cfg.seed);
  r.get("workers", cfg.workers);
  r.get("floor", cfg.floor);
  if (!(cfg.floor > 0.0)) throw Error(ErrorCode::ConfigError, "config.floor must be positive");

  if (const json* p = r.child("paths")) {
    JsonReader rp(*p, "config.paths");
    auto path = [&](const char* key, fs::path& out) {
      std::string s = out.string();
      rp.get(key, s);
      out = s;
    };
    path("output_dir", cfg.paths.output_dir);
    path("graph", cfg.paths.graph);
    path("truth", cfg.paths.truth);
    path("observed", cfg.paths.observed);
    path("raw", cfg.paths.raw);
    path("clean", cfg.paths.clean);
    path("clean_graph", cfg.paths.clean_graph);
    path("preprocess_report", cfg.paths.preprocess_report);
    path("basis", cfg.paths.basis);
    path("models", cfg.paths.models);
    path("test_set", cfg.paths.test_set);
    path("results", cfg.paths.results);
    path("spectra", cfg.paths.spectra);
    path("synth_record", cfg.paths.synth_record);
    rp.finish();
  }
  if (cfg.paths.output_dir.is_relative() && !base_dir.empty()) {
    cfg.paths.output_dir = base_dir / cfg.paths.output_dir;
  }

  if (const json* s = r.child("synth")) {
    if (s->is_object() && s->contains("seed")) {
      throw Error(ErrorCode::ConfigError, "config.synth.seed: randomness is driven by the root config.seed");
    }
    cfg.synth = synthgen::spec_from_json(*s);
  }

  if (const json* p = r.child("preprocess")) {
    JsonReader rp(*p, "config.preprocess");
    auto& pc = cfg.preprocess;
    rp.get("snap_tolerance", pc.snap_tolerance);
    rp.get("interp_window", pc.interp_window);
    rp.get("max_gap_intervals", pc.max_gap_intervals);
    rp.get("outlier_fraction", pc.outlier_fraction);
    rp.get("blackout_duration", pc.blackout_duration);
    rp.get("max_missing_fraction", pc.max_missing_fraction);
    rp.get("temporal_window_intervals", pc.temporal_window_intervals);
    if (const json* g = rp.child("grid")) {
      JsonReader rg(*g, "config.preprocess.grid");
      std::int64_t start = 0, res = 600;
      std::size_t intervals = 0;
      rg.get("start_epoch", start);
      rg.get("resolution", res);
      rg.get("intervals", intervals);
      rg.finish();
      if (res <= 0 || intervals == 0) {
        throw Error(ErrorCode::ConfigError, "config.preprocess.grid needs resolution > 0 and intervals > 0");
      }
      cfg.raw_grid = TimeGrid(start, res, intervals);
    }
    rp.finish();
    try {
      pc.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, std::string("config.preprocess: ") + e.what());
    }
  }

  if (const json* f = r.child("fit")) {
    JsonReader rf(*f, "config.fit");
    rf.get("rank", cfg.fit.rank);
    rf.get("mdl", cfg.fit.mdl);
    rf.get("train_start_day", cfg.fit.train_start_day);
    rf.get("train_days", cfg.fit.train_days);
    rf.finish();
    if (cfg.fit.rank == 0) throw Error(ErrorCode::ConfigError, "config.fit.rank must be positive");
    if (cfg.fit.train_days == 0) throw Error(ErrorCode::ConfigError, "config.fit.train_days must be positive");
  }

  if (const json* p = r.child("predictors")) {
    if (!p->is_array() || p->empty()) {
      throw Error(ErrorCode::ConfigError, "config.predictors must be a nonempty array");
    }
    cfg.predictors.clear();
    std::set<std::string> names;
    for (std::size_t i = 0; i < p->size(); ++i) {
      auto spec = parse_predictor((*p)[i], "config.predictors[" + std::to_string(i) + "]");
      if (spec.name == "static_oracle" || !names.insert(spec.name).second) {
        throw Error(ErrorCode::ConfigError, "config.predictors: duplicate or reserved name '" + spec.name + "'");
      }
      cfg.predictors.push_back(std::move(spec));
    }
  }

  if (const json* t = r.child("test_set")) {
    JsonReader rt(*t, "config.test_set");
    auto& tc = cfg.test_set;
    rt.get("hours", tc.hours);
    if (t->contains("first_day")) {
      std::size_t d = 0;
      rt.get("first_day", d);
      cfg.test_first_day = d;
    } else {
      rt.child("first_day");
    }
    rt.get("day_count", tc.day_count);
    rt.get("min_travel_time", tc.min_travel_time);
    rt.get("rest_days", tc.rest_days);
    rt.get("betweenness_samples", tc.betweenness_samples);
    rt.finish();
    for (int h : tc.hours) {
      if (h < 0 || h > 23) throw Error(ErrorCode::ConfigError, "config.test_set.hours: hour outside 0..23");
    }
    for (int d : tc.rest_days) {
      if (d < 0 || d > 6) throw Error(ErrorCode::ConfigError, "config.test_set.rest_days: day outside 0..6");
    }
  }

  if (const json* e = r.child("evaluation")) {
    JsonReader re(*e, "config.evaluation");
    auto& ec = cfg.evaluation;
    re.get("alphas", ec.alphas);
    re.get("hop_min_samples", ec.hop_min_samples);
    re.get("guard_factor", ec.reroute.guard_factor);
    re.get("static_oracle", ec.include_static_oracle);
    std::string truth = "auto";
    re.get("truth", truth);
    re.finish();
    if (truth == "auto") {
      cfg.truth = TruthSource::Auto;
    } else if (truth == "truth") {
      cfg.truth = TruthSource::Truth;
    } else if (truth == "clean") {
      cfg.truth = TruthSource::Clean;
    } else {
      throw Error(ErrorCode::ConfigError, "config.evaluation.truth must be auto, truth or clean");
    }
    if (ec.alphas.empty()) throw Error(ErrorCode::ConfigError, "config.evaluation.alphas must not be empty");
    for (double a : ec.alphas) {
      if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::ConfigError, "config.evaluation.alphas: values must lie in (0, 1)");
    }
  }

  if (const json* s = r.child("spectra")) {
    JsonReader rs(*s, "config.spectra");
    auto& sp = cfg.spectra;
    rs.get("modes", sp.modes);
    rs.get("fs", sp.welch.fs);
    rs.get("nfft", sp.welch.nfft);
    if (s->contains("segment_length")) {
      std::size_t v = 0;
      rs.get("segment_length", v);
      sp.welch.segment_length = v;
    } else {
      rs.child("segment_length");
    }
    if (s->contains("overlap")) {
      std::size_t v = 0;
      rs.get("overlap", v);
      sp.welch.overlap = v;
    } else {
      rs.child("overlap");
    }
    rs.finish();
  }

  r.finish();
  cfg.propagate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::ConfigError, "config file not found: " + path.string());
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

}  // namespace cycloroute::cli
