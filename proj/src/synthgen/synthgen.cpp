#include "cycloroute/synthgen/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/json_reader.hpp"
#include "cycloroute/core/rng.hpp"

namespace cycloroute::synthgen {

using nlohmann::json;

namespace {

constexpr double kDay = 86400.0;

struct Point {
  double x, y;
};

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<Point> layout(const SynthSpec& spec) {
  CounterRng rng(spec.seed, Stream::Network, 0);
  std::vector<Point> pts(spec.network.vertices);
  for (auto& p : pts) {
    p.x = rng.uniform();
    p.y = rng.uniform();
  }
  return pts;
}

// Prim's algorithm on the complete Euclidean graph; ties go to the smaller index.
std::vector<std::pair<std::size_t, std::size_t>> euclidean_mst(const std::vector<Point>& pts) {
  const std::size_t v = pts.size();
  std::vector<double> best(v, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(v, 0);
  std::vector<char> in(v, 0);
  std::vector<std::pair<std::size_t, std::size_t>> tree;
  best[0] = 0.0;
  for (std::size_t step = 0; step < v; ++step) {
    std::size_t u = v;
    for (std::size_t i = 0; i < v; ++i) {
      if (!in[i] && (u == v || best[i] < best[u])) u = i;
    }
    in[u] = 1;
    if (step > 0) tree.emplace_back(parent[u], u);
    for (std::size_t i = 0; i < v; ++i) {
      const double d = distance(pts[u], pts[i]);
      if (!in[i] && d < best[i]) {
        best[i] = d;
        parent[i] = u;
      }
    }
  }
  return tree;
}

double mode0_profile(double day_fraction) {
  const double h = 24.0 * day_fraction;
  return std::exp(-(h - 8.0) * (h - 8.0) / (2.0 * 1.2 * 1.2)) +
         0.9 * std::exp(-(h - 17.5) * (h - 17.5) / (2.0 * 1.8 * 1.8));
}

Eigen::MatrixXd make_templates(const SynthSpec& spec, std::size_t n) {
  const auto k = static_cast<Eigen::Index>(spec.k_true);
  Eigen::MatrixXd tau = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(n));
  const double res_days = static_cast<double>(spec.resolution) / kDay;
  const auto& tp = spec.templates;
  // Templates are evaluated on the phase within the week, so columns one
  // week apart are bit-identical.
  const std::size_t per_week = static_cast<std::size_t>(7 * 86400 / spec.resolution);
  auto week_time = [&](std::size_t c) { return static_cast<double>(c % per_week) * res_days; };
  for (Eigen::Index j = 0; j < k; ++j) {
    if (j == 0) {
      for (std::size_t c = 0; c < n; ++c) {
        const double t = week_time(c);
        const double weekly = 1.0 + tp.weekly_modulation * std::cos(2.0 * std::numbers::pi * (t - 2.5) / 7.0);
        tau(0, static_cast<Eigen::Index>(c)) = tp.rush_amplitude * mode0_profile(t - std::floor(t)) * weekly;
      }
      continue;
    }
    CounterRng rng(spec.seed, Stream::Temporal, static_cast<std::uint32_t>(1 + j));
    struct Harmonic {
      double period, weight, phase;
    };
    std::vector<Harmonic> hs;
    for (std::size_t h = 1; h <= tp.daily_harmonics; ++h) {
      hs.push_back({1.0 / static_cast<double>(h), rng.uniform(0.3, 1.0) / static_cast<double>(h),
                    rng.uniform(0.0, 2.0 * std::numbers::pi)});
    }
    for (std::size_t h = 1; h <= tp.weekly_harmonics; ++h) {
      hs.push_back({7.0 / static_cast<double>(h), rng.uniform(0.3, 1.0) / static_cast<double>(h),
                    rng.uniform(0.0, 2.0 * std::numbers::pi)});
    }
    // Normalize over one week so the amplitude is the RMS of the template.
    auto value = [&](double t) {
      double s = 0.0;
      for (const auto& hm : hs) s += hm.weight * std::cos(2.0 * std::numbers::pi * t / hm.period + hm.phase);
      return s;
    };
    double energy = 0.0;
    for (std::size_t c = 0; c < per_week; ++c) {
      const double v = value(week_time(c));
      energy += v * v;
    }
    const double scale = energy > 0.0 ? tp.mode_amplitude / std::sqrt(energy / static_cast<double>(per_week)) : 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      tau(j, static_cast<Eigen::Index>(c)) = scale * value(week_time(c));
    }
  }
  return tau;
}

Eigen::MatrixXd planted_basis(const SynthSpec& spec, std::size_t m) {
  CounterRng rng(spec.seed, Stream::Temporal, 0);
  const auto mi = static_cast<Eigen::Index>(m);
  const auto k = static_cast<Eigen::Index>(spec.k_true);
  Eigen::MatrixXd g(mi, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < mi; ++i) g(i, j) = j == 0 ? 1.0 + 0.3 * rng.normal() : rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(mi, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (q.col(j).dot(g.col(j)) < 0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

std::size_t SynthSpec::intervals() const {
  return static_cast<std::size_t>(static_cast<std::int64_t>(days) * 86400 / resolution);
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (network.vertices < 2) fail("network.vertices must be at least 2");
  if (!(network.avg_degree > 0.0)) fail("network.avg_degree must be positive");
  if (!(network.seconds_per_unit > 0.0) || !(network.min_base > 0.0)) fail("network time scales must be positive");
  if (network.base_log_sigma < 0.0) fail("network.base_log_sigma must be nonnegative");
  if (days == 0) fail("days must be positive");
  if (resolution <= 0 || 86400 % resolution != 0) fail("resolution must divide a day");
  if (k_true == 0) fail("k_true must be positive");
  if (noise_std < 0.0) fail("noise_std must be nonnegative");
  if (!(noise_correlation >= 0.0 && noise_correlation < 1.0)) fail("noise_correlation must lie in [0, 1)");
  if (transients.rate_per_day < 0.0) fail("transients.rate_per_day must be nonnegative");
  if (!(transients.magnitude_min > 0.0) || transients.magnitude_max < transients.magnitude_min) {
    fail("transient magnitudes must satisfy 0 < min <= max");
  }
  if (!(transients.min_duration > 0.0) || transients.max_duration < transients.min_duration ||
      !(transients.mean_duration > 0.0)) {
    fail("transient durations must satisfy 0 < min <= max and mean > 0");
  }
  if (!(missingness.cell_rate >= 0.0 && missingness.cell_rate < 1.0)) fail("missingness.cell_rate must lie in [0, 1)");
  if (missingness.blackouts_per_segment_day < 0.0) fail("missingness.blackouts_per_segment_day must be nonnegative");
  if (!(missingness.blackout_mean_length > 0.0)) fail("missingness.blackout_mean_length must be positive");
  if (!(floor > 0.0)) fail("floor must be positive");
}

json to_json(const SynthSpec& s) {
  return {
      {"network",
       {{"vertices", s.network.vertices},
        {"avg_degree", s.network.avg_degree},
        {"planar", s.network.planar},
        {"seconds_per_unit", s.network.seconds_per_unit},
        {"base_log_sigma", s.network.base_log_sigma},
        {"min_base", s.network.min_base}}},
      {"days", s.days},
      {"resolution", s.resolution},
      {"start_epoch", s.start_epoch},
      {"k_true", s.k_true},
      {"templates",
       {{"rush_amplitude", s.templates.rush_amplitude},
        {"weekly_modulation", s.templates.weekly_modulation},
        {"mode_amplitude", s.templates.mode_amplitude},
        {"daily_harmonics", s.templates.daily_harmonics},
        {"weekly_harmonics", s.templates.weekly_harmonics}}},
      {"noise_std", s.noise_std},
      {"noise_correlation", s.noise_correlation},
      {"transients",
       {{"rate_per_day", s.transients.rate_per_day},
        {"magnitude_min", s.transients.magnitude_min},
        {"magnitude_max", s.transients.magnitude_max},
        {"mean_duration", s.transients.mean_duration},
        {"min_duration", s.transients.min_duration},
        {"max_duration", s.transients.max_duration},
        {"neighbor_share", s.transients.neighbor_share}}},
      {"missingness",
       {{"cell_rate", s.missingness.cell_rate},
        {"blackouts_per_segment_day", s.missingness.blackouts_per_segment_day},
        {"blackout_mean_length", s.missingness.blackout_mean_length}}},
      {"floor", s.floor},
      {"seed", s.seed},
  };
}

SynthSpec spec_from_json(const json& j) {
  SynthSpec s;
  JsonReader r(j, "synth");
  if (const json* n = r.child("network")) {
    JsonReader rn(*n, "synth.network");
    rn.get("vertices", s.network.vertices);
    rn.get("avg_degree", s.network.avg_degree);
    rn.get("planar", s.network.planar);
    rn.get("seconds_per_unit", s.network.seconds_per_unit);
    rn.get("base_log_sigma", s.network.base_log_sigma);
    rn.get("min_base", s.network.min_base);
    rn.finish();
  }
  r.get("days", s.days);
  r.get("resolution", s.resolution);
  r.get("start_epoch", s.start_epoch);
  r.get("k_true", s.k_true);
  if (const json* t = r.child("templates")) {
    JsonReader rt(*t, "synth.templates");
    rt.get("rush_amplitude", s.templates.rush_amplitude);
    rt.get("weekly_modulation", s.templates.weekly_modulation);
    rt.get("mode_amplitude", s.templates.mode_amplitude);
    rt.get("daily_harmonics", s.templates.daily_harmonics);
    rt.get("weekly_harmonics", s.templates.weekly_harmonics);
    rt.finish();
  }
  r.get("noise_std", s.noise_std);
  r.get("noise_correlation", s.noise_correlation);
  if (const json* t = r.child("transients")) {
    JsonReader rt(*t, "synth.transients");
    rt.get("rate_per_day", s.transients.rate_per_day);
    rt.get("magnitude_min", s.transients.magnitude_min);
    rt.get("magnitude_max", s.transients.magnitude_max);
    rt.get("mean_duration", s.transients.mean_duration);
    rt.get("min_duration", s.transients.min_duration);
    rt.get("max_duration", s.transients.max_duration);
    rt.get("neighbor_share", s.transients.neighbor_share);
    rt.finish();
  }
  if (const json* mm = r.child("missingness")) {
    JsonReader rm(*mm, "synth.missingness");
    rm.get("cell_rate", s.missingness.cell_rate);
    rm.get("blackouts_per_segment_day", s.missingness.blackouts_per_segment_day);
    rm.get("blackout_mean_length", s.missingness.blackout_mean_length);
    rm.finish();
  }
  r.get("floor", s.floor);
  r.get("seed", s.seed);
  r.finish();
  s.validate();
  return s;
}

RoadNetwork generate_network(const SynthSpec& spec) {
  spec.validate();
  const std::size_t v = spec.network.vertices;
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(v) * spec.network.avg_degree));
  std::vector<std::vector<char>> has(v, std::vector<char>(v, 0));
  std::size_t count = 0;
  auto add = [&](std::size_t a, std::size_t b) {
    if (a != b && !has[a][b]) {
      has[a][b] = 1;
      ++count;
    }
  };

  if (spec.network.planar) {
    const std::vector<Point> pts = layout(spec);
    for (const auto& [a, b] : euclidean_mst(pts)) {
      add(a, b);
      add(b, a);
    }
    std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> pairs;
    pairs.reserve(v * (v - 1) / 2);
    for (std::size_t a = 0; a < v; ++a)
      for (std::size_t b = a + 1; b < v; ++b) pairs.push_back({distance(pts[a], pts[b]), {a, b}});
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [d, ab] : pairs) {
      if (count >= target) break;
      add(ab.first, ab.second);
      if (count >= target) break;
      add(ab.second, ab.first);
    }
  } else {
    CounterRng rng(spec.seed, Stream::Network, 1);
    std::vector<std::size_t> order(v);
    for (std::size_t i = 0; i < v; ++i) order[i] = i;
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < v; ++i) add(order[i], order[(i + 1) % v]);
    const std::size_t cap = std::min(target, v * (v - 1));
    while (count < cap) add(rng.uniform_int(v), rng.uniform_int(v));
  }

  std::vector<Edge> edges;
  edges.reserve(count);
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = 0; b < v; ++b)
      if (has[a][b]) {
        const auto id = static_cast<EdgeId>(edges.size());
        edges.push_back({id, static_cast<VertexId>(a), static_cast<VertexId>(b), id});
      }
  return RoadNetwork(v, std::move(edges));
}

SynthTruth generate_truth(const SynthSpec& spec, const RoadNetwork& network) {
  spec.validate();
  const std::size_t m = network.edge_count();
  const std::size_t n = spec.intervals();
  if (spec.k_true > m) {
    throw Error(ErrorCode::ConfigError, "k_true exceeds the number of segments");
  }
  if (network.vertex_count() > spec.network.vertices) {
    throw Error(ErrorCode::InvalidArgument, "network has more vertices than the spec's layout");
  }
  network.validate_rows(m);

  SynthTruth out;
  const std::vector<Point> pts = layout(spec);
  out.base.resize(static_cast<Eigen::Index>(m));
  const double sigma = spec.network.base_log_sigma;
  for (const Edge& e : network.edges()) {
    CounterRng rng(spec.seed, Stream::Network, static_cast<std::uint32_t>(2 + e.segment_row));
    const double factor = std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
    out.base(static_cast<Eigen::Index>(e.segment_row)) =
        std::max(spec.network.min_base, distance(pts[e.from], pts[e.to]) * spec.network.seconds_per_unit * factor);
  }

  out.planted_basis = planted_basis(spec, m);
  out.templates = make_templates(spec, n);
  const double root_m = std::sqrt(static_cast<double>(m));
  // Explicit loops fix the summation order per cell, keeping periodic
  // columns bit-identical.
  const Eigen::MatrixXd loadings = root_m * out.planted_basis;
  Eigen::MatrixXd w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = 1.0;
      for (Eigen::Index j = 0; j < loadings.cols(); ++j) s += loadings(r, j) * out.templates(j, c);
      w(r, c) = out.base(r) * s;
    }
  }

  if (spec.noise_std > 0.0) {
    const double rho = spec.noise_correlation;
    const double innovation = std::sqrt(1.0 - rho * rho);
    for (std::size_t r = 0; r < m; ++r) {
      CounterRng rng(spec.seed, Stream::Noise, static_cast<std::uint32_t>(r));
      double z = rng.normal();
      for (std::size_t c = 0; c < n; ++c) {
        if (c > 0) z = rho * z + innovation * rng.normal();
        w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *= 1.0 + spec.noise_std * z;
      }
    }
  }

  const auto& tr = spec.transients;
  if (tr.rate_per_day > 0.0) {
    CounterRng rng(spec.seed, Stream::Transients, 0);
    const auto neighbors = network.segment_neighbors();
    const double horizon = static_cast<double>(spec.days) * kDay;
    const double res = static_cast<double>(spec.resolution);
    auto scale = [&](std::size_t row, std::size_t first, std::size_t last, double factor) {
      for (std::size_t c = first; c < last; ++c) w(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) *= factor;
    };
    for (double t = rng.exponential(kDay / tr.rate_per_day); t < horizon; t += rng.exponential(kDay / tr.rate_per_day)) {
      const std::size_t row = rng.uniform_int(m);
      const double duration = std::clamp(rng.exponential(tr.mean_duration), tr.min_duration, tr.max_duration);
      const double magnitude = rng.uniform(tr.magnitude_min, tr.magnitude_max);
      const auto first = static_cast<std::size_t>(t / res);
      const auto last = std::min(n, static_cast<std::size_t>(std::ceil((t + duration) / res)));
      scale(row, first, last, magnitude);
      for (std::size_t nb : neighbors[row]) scale(nb, first, last, 1.0 + tr.neighbor_share * (magnitude - 1.0));
      ++out.transient_events;
    }
  }

  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      if (!(w(r, c) >= spec.floor)) {
        w(r, c) = spec.floor;
        ++out.clamped_cells;
      }

  out.matrix = TrafficMatrix(TimeGrid(spec.start_epoch, spec.resolution, n), std::move(w));
  return out;
}

TrafficMatrix inject_missingness(const TrafficMatrix& truth, const SynthSpec& spec) {
  spec.validate();
  const auto& mp = spec.missingness;
  Mask mask = Mask::Constant(static_cast<Eigen::Index>(truth.m()), static_cast<Eigen::Index>(truth.n()), true);
  const double res = static_cast<double>(truth.grid().resolution());
  const double horizon = res * static_cast<double>(truth.n());
  for (std::size_t r = 0; r < truth.m(); ++r) {
    CounterRng rng(spec.seed, Stream::Missingness, static_cast<std::uint32_t>(r));
    const auto row = static_cast<Eigen::Index>(r);
    if (mp.cell_rate > 0.0) {
      for (Eigen::Index c = 0; c < mask.cols(); ++c)
        if (rng.uniform() < mp.cell_rate) mask(row, c) = false;
    }
    if (mp.blackouts_per_segment_day > 0.0) {
      const double mean_gap = kDay / mp.blackouts_per_segment_day;
      for (double t = rng.exponential(mean_gap); t < horizon; t += rng.exponential(mean_gap)) {
        const double len = rng.exponential(mp.blackout_mean_length);
        const auto first = static_cast<std::size_t>(t / res);
        const auto last = std::min(truth.n(), static_cast<std::size_t>(std::ceil((t + len) / res)));
        for (std::size_t c = first; c < last; ++c) mask(row, static_cast<Eigen::Index>(c)) = false;
      }
    }
  }
  return TrafficMatrix(truth.grid(), truth.values(), std::move(mask));
}

}  // namespace cycloroute::synthgen
