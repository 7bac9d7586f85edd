#include "cycloroute/preprocess/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/parallel.hpp"

namespace cycloroute::preprocess {

void RawSeries::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].second > 0.0) || !std::isfinite(samples[i].second)) {
      throw Error(ErrorCode::InvalidArgument,
                  "segment " + std::to_string(segment_id) + " has a non-positive travel time");
    }
    if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
      throw Error(ErrorCode::InvalidArgument, "segment " + std::to_string(segment_id) +
                                                  " timestamps are not strictly increasing");
    }
  }
}

void PreprocessConfig::validate() const {
  if (!(snap_tolerance > 0) || !(interp_window > 0) || !(blackout_duration > 0)) {
    throw Error(ErrorCode::ConfigError, "preprocess durations must be positive");
  }
  if (max_gap_intervals == 0 || temporal_window_intervals == 0) {
    throw Error(ErrorCode::ConfigError, "preprocess interval counts must be positive");
  }
  if (!(outlier_fraction > 0 && outlier_fraction < 1) ||
      !(max_missing_fraction > 0 && max_missing_fraction < 1)) {
    throw Error(ErrorCode::ConfigError, "preprocess fractions must lie in (0, 1)");
  }
}

std::size_t Row::observed_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

Row align_to_grid(const RawSeries& raw, const PreprocessConfig& cfg, AlignCounts* counts) {
  raw.validate();
  const std::size_t n = cfg.grid.n_intervals();
  Row row{std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()),
          std::vector<bool>(n, false)};
  AlignCounts local;
  const auto& s = raw.samples;
  for (std::size_t j = 0; j < n; ++j) {
    const Timestamp slot = cfg.grid.interval_start(j);
    const auto after = std::lower_bound(s.begin(), s.end(), slot,
                                        [](const auto& p, Timestamp t) { return p.first < t; });
    const bool has_after = after != s.end();
    const bool has_before = after != s.begin();
    const double d_after = has_after ? after->first - slot : std::numeric_limits<double>::infinity();
    const double d_before =
        has_before ? slot - std::prev(after)->first : std::numeric_limits<double>::infinity();

    // Nearest sample, earlier one on ties.
    if (std::min(d_before, d_after) <= cfg.snap_tolerance) {
      row.values[j] = d_before <= d_after ? std::prev(after)->second : after->second;
      row.mask[j] = true;
      ++local.snapped;
      continue;
    }
    if (d_before <= cfg.interp_window && d_after <= cfg.interp_window) {
      const auto& [t0, v0] = *std::prev(after);
      const auto& [t1, v1] = *after;
      row.values[j] = v0 + (v1 - v0) * (slot - t0) / (t1 - t0);
      row.mask[j] = true;
      ++local.interpolated;
      continue;
    }
    ++local.missing;
  }
  if (counts) *counts = local;
  return row;
}

Row remove_outliers(Row row, const PreprocessConfig& cfg) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < row.values.size(); ++j) {
    if (row.mask[j]) {
      sum += row.values[j];
      ++count;
    }
  }
  if (count == 0) return row;
  const double threshold = cfg.outlier_fraction * (sum / static_cast<double>(count));
  for (std::size_t j = 0; j < row.values.size(); ++j) {
    if (row.mask[j] && row.values[j] < threshold) {
      row.mask[j] = false;
      row.values[j] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return row;
}

Row interpolate_short_gaps(Row row, const PreprocessConfig& cfg) {
  const std::size_t n = row.values.size();
  std::size_t j = 0;
  while (j < n) {
    if (row.mask[j]) {
      ++j;
      continue;
    }
    const std::size_t begin = j;
    while (j < n && !row.mask[j]) ++j;
    const std::size_t end = j;  // one past the run
    const std::size_t len = end - begin;
    if (begin == 0 || end == n || len > cfg.max_gap_intervals) continue;
    const double left = row.values[begin - 1];
    const double right = row.values[end];
    const double span = static_cast<double>(len + 1);
    for (std::size_t k = begin; k < end; ++k) {
      const double frac = static_cast<double>(k - begin + 1) / span;
      row.values[k] = left + (right - left) * frac;
      row.mask[k] = true;
    }
  }
  return row;
}

BlackoutResult drop_blackout_segments(const TrafficMatrix& matrix, const PreprocessConfig& cfg) {
  BlackoutResult out;
  const double res = static_cast<double>(matrix.grid().resolution());
  for (std::size_t r = 0; r < matrix.m(); ++r) {
    std::size_t missing = 0, run = 0, longest = 0;
    for (std::size_t c = 0; c < matrix.n(); ++c) {
      if (matrix.observed(r, c)) {
        run = 0;
      } else {
        ++missing;
        longest = std::max(longest, ++run);
      }
    }
    const bool blackout = static_cast<double>(longest) * res > cfg.blackout_duration;
    const bool sparse =
        static_cast<double>(missing) / static_cast<double>(matrix.n()) > cfg.max_missing_fraction;
    if (blackout || sparse) {
      out.removed_rows.push_back(r);
      if (blackout) {
        ++out.removed_for_blackout;
      } else {
        ++out.removed_for_missing_fraction;
      }
    } else {
      out.kept_rows.push_back(r);
    }
  }
  out.matrix = matrix.select_rows(out.kept_rows);
  return out;
}

TrafficMatrix impute_spatiotemporal(const TrafficMatrix& matrix, const RoadNetwork& network,
                                    const PreprocessConfig& cfg, std::size_t workers) {
  network.validate_rows(matrix.m());
  if (matrix.fully_observed()) return matrix;

  const std::size_t m = matrix.m();
  const std::size_t n = matrix.n();
  const auto neighbors = network.segment_neighbors();

  std::vector<double> means(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (matrix.observed(r, c)) {
        sum += matrix.value(r, c);
        ++count;
      }
    }
    means[r] = count ? sum / static_cast<double>(count) : 0.0;
  }

  Eigen::MatrixXd filled = matrix.values();
  const auto window = static_cast<std::ptrdiff_t>(cfg.temporal_window_intervals);
  parallel_for(m, workers, [&](std::size_t r) {
    // Previous/next observed column for every column of this row.
    std::vector<std::ptrdiff_t> prev(n, -1), next(n, -1);
    std::ptrdiff_t last = -1;
    for (std::size_t c = 0; c < n; ++c) {
      prev[c] = last;
      if (matrix.observed(r, c)) last = static_cast<std::ptrdiff_t>(c);
    }
    last = -1;
    for (std::size_t c = n; c-- > 0;) {
      next[c] = last;
      if (matrix.observed(r, c)) last = static_cast<std::ptrdiff_t>(c);
    }

    for (std::size_t c = 0; c < n; ++c) {
      if (matrix.observed(r, c)) continue;
      const auto col = static_cast<std::ptrdiff_t>(c);
      const bool has_prev = prev[c] >= 0 && col - prev[c] <= window;
      const bool has_next = next[c] >= 0 && next[c] - col <= window;
      double temporal = 0.0;
      bool has_temporal = true;
      if (has_prev && has_next) {
        const double v0 = matrix.value(r, static_cast<std::size_t>(prev[c]));
        const double v1 = matrix.value(r, static_cast<std::size_t>(next[c]));
        const double frac =
            static_cast<double>(col - prev[c]) / static_cast<double>(next[c] - prev[c]);
        temporal = v0 + (v1 - v0) * frac;
      } else if (has_prev) {
        temporal = matrix.value(r, static_cast<std::size_t>(prev[c]));
      } else if (has_next) {
        temporal = matrix.value(r, static_cast<std::size_t>(next[c]));
      } else {
        has_temporal = false;
      }

      double spatial_sum = 0.0;
      std::size_t spatial_count = 0;
      if (means[r] > 0.0) {
        for (std::size_t f : neighbors[r]) {
          if (matrix.observed(f, c) && means[f] > 0.0) {
            spatial_sum += matrix.value(f, c) / means[f] * means[r];
            ++spatial_count;
          }
        }
      }

      if (has_temporal && spatial_count) {
        filled(r, c) = 0.5 * (temporal + spatial_sum / static_cast<double>(spatial_count));
      } else if (has_temporal) {
        filled(r, c) = temporal;
      } else if (spatial_count) {
        filled(r, c) = spatial_sum / static_cast<double>(spatial_count);
      } else {
        throw Error(ErrorCode::IsolatedSegment,
                    "segment " + std::to_string(r) + " has no temporal or spatial anchor at interval " +
                        std::to_string(c));
      }
    }
  });
  return TrafficMatrix(matrix.grid(), std::move(filled));
}

namespace {

// Iterative Tarjan; returns component id per vertex.
std::vector<std::size_t> tarjan_components(const RoadNetwork& g, std::size_t& count) {
  const std::size_t nv = g.vertex_count();
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> index(nv, kUnvisited), low(nv, 0), comp(nv, kUnvisited);
  std::vector<bool> on_stack(nv, false);
  std::vector<VertexId> stack;
  std::vector<std::pair<VertexId, std::size_t>> call;  // (vertex, next out-edge position)
  std::size_t next_index = 0;
  count = 0;

  for (VertexId root = 0; root < nv; ++root) {
    if (index[root] != kUnvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      const auto out = g.out_edges(v);
      if (pos < out.size()) {
        const VertexId w = g.edge(out[pos++]).to;
        if (index[w] == kUnvisited) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const VertexId done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
      if (low[done] == index[done]) {
        VertexId w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = count;
        } while (w != done);
        ++count;
      }
    }
  }
  return comp;
}

}  // namespace

SubnetworkResult largest_scc(const RoadNetwork& network) {
  SubnetworkResult out;
  if (network.vertex_count() == 0) return out;
  std::size_t count = 0;
  const auto comp = tarjan_components(network, count);
  std::vector<std::size_t> size(count, 0);
  std::vector<VertexId> min_vertex(count, std::numeric_limits<VertexId>::max());
  for (VertexId v = 0; v < network.vertex_count(); ++v) {
    ++size[comp[v]];
    min_vertex[comp[v]] = std::min(min_vertex[comp[v]], v);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < count; ++c) {
    if (size[c] > size[best] || (size[c] == size[best] && min_vertex[c] < min_vertex[best])) {
      best = c;
    }
  }

  std::vector<VertexId> new_id(network.vertex_count(), std::numeric_limits<VertexId>::max());
  for (VertexId v = 0; v < network.vertex_count(); ++v) {
    if (comp[v] == best) {
      new_id[v] = static_cast<VertexId>(out.vertex_map.size());
      out.vertex_map.push_back(v);
    }
  }
  std::vector<const Edge*> kept;
  for (const Edge& e : network.edges()) {
    if (comp[e.from] == best && comp[e.to] == best) kept.push_back(&e);
  }
  std::vector<std::size_t> rows;
  rows.reserve(kept.size());
  for (const Edge* e : kept) rows.push_back(e->segment_row);
  std::sort(rows.begin(), rows.end());
  out.row_map = rows;

  std::vector<Edge> edges;
  edges.reserve(kept.size());
  for (const Edge* e : kept) {
    const auto row = static_cast<std::size_t>(
        std::lower_bound(rows.begin(), rows.end(), e->segment_row) - rows.begin());
    edges.push_back({static_cast<EdgeId>(edges.size()), new_id[e->from], new_id[e->to], row});
  }
  out.network = RoadNetwork(out.vertex_map.size(), std::move(edges));
  return out;
}

RoadNetwork restrict_to_rows(const RoadNetwork& network, const std::vector<std::size_t>& kept_rows) {
  std::vector<Edge> edges;
  for (const Edge& e : network.edges()) {
    const auto it = std::lower_bound(kept_rows.begin(), kept_rows.end(), e.segment_row);
    if (it == kept_rows.end() || *it != e.segment_row) continue;
    edges.push_back({static_cast<EdgeId>(edges.size()), e.from, e.to,
                     static_cast<std::size_t>(it - kept_rows.begin())});
  }
  return RoadNetwork(network.vertex_count(), std::move(edges));
}

PipelineResult run_pipeline(const TrafficMatrix& observed, const RoadNetwork& network,
                            const PreprocessConfig& cfg, std::size_t workers) {
  cfg.validate();
  network.validate_rows(observed.m());
  const std::size_t m = observed.m();
  const std::size_t n = observed.n();

  nlohmann::json report;
  report["input"] = {{"segments", m},
                     {"intervals", n},
                     {"missing_cells", observed.missing_count()},
                     {"missing_fraction", observed.missing_fraction()}};

  // Row-wise rules.
  Eigen::MatrixXd values = observed.values();
  Mask mask = observed.mask();
  std::vector<std::size_t> outliers(m, 0), gap_fills(m, 0);
  parallel_for(m, workers, [&](std::size_t r) {
    Row row{observed.row_values(r), observed.row_mask(r)};
    const std::size_t before = row.observed_count();
    row = remove_outliers(std::move(row), cfg);
    const std::size_t after_outliers = row.observed_count();
    row = interpolate_short_gaps(std::move(row), cfg);
    outliers[r] = before - after_outliers;
    gap_fills[r] = row.observed_count() - after_outliers;
    for (std::size_t c = 0; c < n; ++c) {
      values(r, c) = row.values[c];
      mask(r, c) = row.mask[c];
    }
  });
  const TrafficMatrix conditioned(observed.grid(), std::move(values), std::move(mask));
  report["outliers_removed"] = std::accumulate(outliers.begin(), outliers.end(), std::size_t{0});
  report["gap_cells_interpolated"] =
      std::accumulate(gap_fills.begin(), gap_fills.end(), std::size_t{0});

  BlackoutResult dropped = drop_blackout_segments(conditioned, cfg);
  report["rows_dropped"] = dropped.removed_rows;
  report["rows_dropped_blackout"] = dropped.removed_for_blackout;
  report["rows_dropped_missing_fraction"] = dropped.removed_for_missing_fraction;

  const RoadNetwork reduced = restrict_to_rows(network, dropped.kept_rows);
  SubnetworkResult scc = largest_scc(reduced);
  if (scc.network.edge_count() == 0) {
    throw Error(ErrorCode::InsufficientData, "no strongly connected segments survive preprocessing");
  }
  std::vector<std::size_t> scc_removed;
  {
    std::vector<bool> keep(dropped.kept_rows.size(), false);
    for (std::size_t r : scc.row_map) keep[r] = true;
    for (std::size_t r = 0; r < keep.size(); ++r) {
      if (!keep[r]) scc_removed.push_back(dropped.kept_rows[r]);
    }
  }
  report["scc"] = {{"vertices_removed", network.vertex_count() - scc.network.vertex_count()},
                   {"segments_removed", scc_removed.size()},
                   {"rows_removed", scc_removed}};

  const TrafficMatrix restricted = dropped.matrix.select_rows(scc.row_map);
  const std::size_t missing_before_impute = restricted.missing_count();
  TrafficMatrix imputed = impute_spatiotemporal(restricted, scc.network, cfg, workers);
  report["cells_imputed"] = missing_before_impute;
  report["imputed_fraction"] =
      restricted.m() * restricted.n() == 0
          ? 0.0
          : static_cast<double>(missing_before_impute) /
                static_cast<double>(restricted.m() * restricted.n());
  report["output"] = {{"segments", imputed.m()},
                      {"intervals", imputed.n()},
                      {"vertices", scc.network.vertex_count()}};

  PipelineResult out{scc.network, std::move(imputed), {}, std::move(report)};
  out.row_map.reserve(scc.row_map.size());
  for (std::size_t r : scc.row_map) out.row_map.push_back(dropped.kept_rows[r]);
  return out;
}

PipelineResult run_pipeline(const std::vector<RawSeries>& raw, const RoadNetwork& network,
                            const PreprocessConfig& cfg, std::size_t workers) {
  cfg.validate();
  const std::size_t m = network.edge_count();
  network.validate_rows(m);
  std::vector<const RawSeries*> by_row(m, nullptr);
  for (const RawSeries& s : raw) {
    if (s.segment_id >= m) {
      throw Error(ErrorCode::InvalidArgument,
                  "raw series for unknown segment " + std::to_string(s.segment_id));
    }
    by_row[s.segment_id] = &s;
  }
  const std::size_t n = cfg.grid.n_intervals();
  Eigen::MatrixXd values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m),
                                                     static_cast<Eigen::Index>(n),
                                                     std::numeric_limits<double>::quiet_NaN());
  Mask mask = Mask::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n), false);
  std::vector<AlignCounts> counts(m);
  parallel_for(m, workers, [&](std::size_t r) {
    if (!by_row[r]) {
      counts[r].missing = n;
      return;
    }
    Row row = align_to_grid(*by_row[r], cfg, &counts[r]);
    for (std::size_t c = 0; c < n; ++c) {
      values(r, c) = row.values[c];
      mask(r, c) = row.mask[c];
    }
  });
  AlignCounts total;
  for (const auto& c : counts) {
    total.snapped += c.snapped;
    total.interpolated += c.interpolated;
    total.missing += c.missing;
  }
  PipelineResult out =
      run_pipeline(TrafficMatrix(cfg.grid, std::move(values), std::move(mask)), network, cfg, workers);
  out.report["align"] = {{"snapped", total.snapped},
                         {"interpolated", total.interpolated},
                         {"missing", total.missing}};
  return out;
}

std::vector<RawSeries> read_raw_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<RawSeries> series;
  std::size_t line_no = 0;
  auto parse = [&](const std::string& s, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  std::vector<std::size_t> index_of;  // segment id -> position in `series`
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    std::size_t seg = 0;
    double t = 0, v = 0;
    if (cells.size() != 3 || !parse(cells[0], seg) || !parse(cells[1], t) || !parse(cells[2], v)) {
      if (line_no == 1) continue;  // header
      throw Error(ErrorCode::ParseError,
                  "raw series line " + std::to_string(line_no) +
                      ": expected segment_id,timestamp,travel_time");
    }
    if (seg >= index_of.size()) index_of.resize(seg + 1, std::numeric_limits<std::size_t>::max());
    if (index_of[seg] == std::numeric_limits<std::size_t>::max()) {
      index_of[seg] = series.size();
      series.push_back({seg, {}});
    }
    series[index_of[seg]].samples.emplace_back(t, v);
  }
  for (auto& s : series) {
    std::sort(s.samples.begin(), s.samples.end());
    s.validate();
  }
  return series;
}

}  // namespace cycloroute::preprocess
