#include "cycloroute/evaluation/suite.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cycloroute/core/io.hpp"
#include "cycloroute/core/parallel.hpp"

namespace cycloroute::evaluation {

namespace {

constexpr const char* kStaticOracle = "static_oracle";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string alpha_key(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

std::string two_digit(int v) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

struct Outcome {
  bool ok = false;
  double t_pred = 0.0;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
};

}  // namespace

const PredictorReport& SuiteResult::report(const std::string& name) const {
  for (const auto& r : reports)
    if (r.name == name) return r;
  throw Error(ErrorCode::InvalidArgument, "no predictor named '" + name + "'");
}

SuiteResult evaluate_suite(const RoadNetwork& network, const TrafficMatrix& truth,
                           const std::vector<predictors::PredictorSnapshot>& preds, const TestSet& tests,
                           const EvalConfig& cfg) {
  SuiteResult out;
  out.alphas = cfg.alphas;
  out.queries = tests.queries.size();
  for (const auto& p : preds) out.predictors.push_back(p->name());
  if (cfg.include_static_oracle) out.predictors.push_back(kStaticOracle);
  const std::size_t P = out.predictors.size();
  const std::size_t Q = tests.queries.size();

  std::vector<double> t_rt(Q, 0.0);
  std::vector<Outcome> rt_outcome(Q);
  std::vector<Outcome> outcomes(Q * P);
  parallel_for(Q, cfg.workers, [&](std::size_t q) {
    const ODQuery& query = tests.queries[q].query;
    try {
      t_rt[q] = routing::realtime_benchmark(network, truth, query, cfg.reroute).realized_total;
      rt_outcome[q].ok = true;
    } catch (const Error& e) {
      rt_outcome[q] = {false, 0.0, e.code(), e.what()};
      return;
    }
    for (std::size_t p = 0; p < P; ++p) {
      Outcome& o = outcomes[q * P + p];
      try {
        o.t_pred = p < preds.size()
                       ? routing::greedy_reroute(network, *preds[p], truth, query, cfg.reroute).realized_total
                       : routing::static_oracle(network, truth, query).realized_total;
        o.ok = true;
      } catch (const Error& e) {
        o.code = e.code();
        o.message = e.what();
      }
    }
  });

  std::vector<std::vector<double>> regrets(P);
  std::vector<std::size_t> errors(P, 0);
  for (std::size_t q = 0; q < Q; ++q) {
    if (!rt_outcome[q].ok) {
      ++out.realtime_failures;
      out.errors.push_back({q, "realtime_benchmark", rt_outcome[q].code, rt_outcome[q].message});
      for (std::size_t p = 0; p < P; ++p) ++errors[p];
      continue;
    }
    for (std::size_t p = 0; p < P; ++p) {
      const Outcome& o = outcomes[q * P + p];
      if (!o.ok) {
        ++errors[p];
        out.errors.push_back({q, out.predictors[p], o.code, o.message});
        continue;
      }
      const double r = regret(o.t_pred, t_rt[q]);
      out.samples.push_back({q, p, o.t_pred, t_rt[q], r});
      regrets[p].push_back(r);
    }
  }

  // Partition and hop-length groupings, filled in query order.
  std::vector<std::map<std::string, std::vector<double>>> parts(P);
  std::vector<std::map<std::size_t, std::vector<double>>> hops(P);
  for (const RegretSample& s : out.samples) {
    const TestQuery& tq = tests.queries[s.query_index];
    auto& g = parts[s.predictor];
    g["hour=" + two_digit(tq.hour)].push_back(s.regret);
    g["dow=" + std::to_string(tq.day_of_week)].push_back(s.regret);
    g[std::string("workday=") + (tq.workday ? "1" : "0")].push_back(s.regret);
    g[std::string("direction=") + (tq.inner_to_outer ? "inner_to_outer" : "outer_to_inner")].push_back(s.regret);
    hops[s.predictor][tq.hop_length].push_back(s.regret);
  }

  for (std::size_t p = 0; p < P; ++p) {
    PredictorReport rep;
    rep.name = out.predictors[p];
    rep.errors = errors[p];
    rep.overall = summarize(regrets[p], cfg.alphas, true);
    for (const auto& [key, vals] : parts[p]) rep.partitions[key] = summarize(vals, cfg.alphas, false);
    for (const auto& [hop, vals] : hops[p]) {
      if (vals.size() < cfg.hop_min_samples) continue;
      HopQuantiles h;
      h.hop_length = hop;
      h.count = vals.size();
      h.quantiles = summarize(vals, cfg.alphas, false).quantiles;
      rep.hops.push_back(std::move(h));
    }
    out.reports.push_back(std::move(rep));
  }
  return out;
}

void write_outputs(const std::filesystem::path& dir, const SuiteResult& result, const TestSet& tests) {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream csv;
    csv << "query_index,origin,destination,t_start,predictor,t_pred,t_rt,regret,hop_length,hour,day_of_week,workday,"
           "direction\n";
    for (const RegretSample& s : result.samples) {
      const TestQuery& q = tests.queries[s.query_index];
      csv << s.query_index << ',' << q.query.origin << ',' << q.query.destination << ',' << fmt(q.query.t_start)
          << ',' << result.predictors[s.predictor] << ',' << fmt(s.t_pred) << ',' << fmt(s.t_rt) << ','
          << fmt(s.regret) << ',' << q.hop_length << ',' << q.hour << ',' << q.day_of_week << ','
          << (q.workday ? 1 : 0) << ',' << (q.inner_to_outer ? "inner_to_outer" : "outer_to_inner") << '\n';
    }
    io::write_text(dir / "regret_samples.csv", csv.str());
  }

  auto stats_json = [](const RegretStats& s) {
    nlohmann::json j = {{"count", s.count}, {"mean_seconds", s.mean}, {"mean_minutes", s.mean / 60.0}};
    nlohmann::json q = nlohmann::json::object();
    for (const auto& qv : s.quantiles) q[alpha_key(qv.alpha)] = qv.value;
    j["upper_quantiles_seconds"] = q;
    return j;
  };
  nlohmann::json stats = {{"queries", result.queries},
                          {"realtime_failures", result.realtime_failures},
                          {"alphas", result.alphas},
                          {"predictors", nlohmann::json::array()}};
  for (const auto& rep : result.reports) {
    nlohmann::json j = stats_json(rep.overall);
    j["name"] = rep.name;
    j["errors"] = rep.errors;
    nlohmann::json parts = nlohmann::json::object();
    for (const auto& [key, s] : rep.partitions) parts[key] = stats_json(s);
    j["partitions"] = parts;
    stats["predictors"].push_back(j);
  }
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& e : result.errors) {
    errs.push_back({{"query_index", e.query_index},
                    {"predictor", e.predictor},
                    {"code", to_string(e.code)},
                    {"message", e.message}});
  }
  stats["errors"] = errs;
  io::write_text(dir / "stats.json", stats.dump(2) + "\n");

  for (const auto& rep : result.reports) {
    std::ostringstream csv;
    csv << "regret_seconds,exceedance\n";
    for (std::size_t i = 0; i < rep.overall.curve.support.size(); ++i) {
      csv << fmt(rep.overall.curve.support[i]) << ',' << fmt(rep.overall.curve.exceedance[i]) << '\n';
    }
    io::write_text(dir / ("ccdf_" + rep.name + ".csv"), csv.str());
  }

  std::ostringstream hop;
  hop << "predictor,hop_length,count";
  for (double a : result.alphas) hop << ",q_" << alpha_key(a);
  hop << '\n';
  for (const auto& rep : result.reports)
    for (const auto& h : rep.hops) {
      hop << rep.name << ',' << h.hop_length << ',' << h.count;
      for (const auto& qv : h.quantiles) hop << ',' << fmt(qv.value);
      hop << '\n';
    }
  io::write_text(dir / "hopquantiles.csv", hop.str());
}

std::string summary_table(const SuiteResult& result) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-22s %8s %7s %10s", "predictor", "count", "errors", "mean[min]");
  out << buf;
  for (double a : result.alphas) {
    std::snprintf(buf, sizeof buf, " %11s", ("q" + alpha_key(a) + "[min]").c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& rep : result.reports) {
    std::snprintf(buf, sizeof buf, "%-22s %8zu %7zu %10.3f", rep.name.c_str(), rep.overall.count, rep.errors,
                  rep.overall.mean / 60.0);
    out << buf;
    for (const auto& qv : rep.overall.quantiles) {
      std::snprintf(buf, sizeof buf, " %11.3f", qv.value / 60.0);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cycloroute::evaluation
