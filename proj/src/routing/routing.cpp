#include "cycloroute/routing/routing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::routing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();

using HeapEntry = std::pair<double, VertexId>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

void check_vertex(const RoadNetwork& network, VertexId v) {
  if (v >= network.vertex_count()) {
    throw Error(ErrorCode::InvalidArgument, "vertex " + std::to_string(v) + " not in network");
  }
}

std::vector<EdgeId> unwind(const RoadNetwork& network, const std::vector<EdgeId>& pred,
                           VertexId source, VertexId target) {
  std::vector<EdgeId> path;
  for (VertexId v = target; v != source;) {
    const EdgeId e = pred[v];
    path.push_back(e);
    v = network.edge(e).from;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// Label setting shared by the static and time-dependent searches. `cost_of`
// returns the cost of entering edge e with label d, or NaN when the edge
// cannot be evaluated (beyond the horizon).
template <typename CostFn>
bool label_setting(const RoadNetwork& network, VertexId source, VertexId target, CostFn&& cost_of,
                   std::vector<double>& dist, std::vector<EdgeId>& pred, bool& skipped) {
  dist.assign(network.vertex_count(), kInf);
  pred.assign(network.vertex_count(), kNoEdge);
  std::vector<char> settled(network.vertex_count(), 0);
  MinHeap heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  skipped = false;
  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (settled[u] || d > dist[u]) continue;
    settled[u] = 1;
    if (u == target) return true;
    for (EdgeId e : network.out_edges(u)) {
      const VertexId v = network.edge(e).to;
      if (settled[v]) continue;
      const double w = cost_of(e, d);
      if (std::isnan(w)) {
        skipped = true;
        continue;
      }
      const double nd = d + w;
      if (nd < dist[v] || (nd == dist[v] && e < pred[v])) {
        dist[v] = nd;
        pred[v] = e;
        heap.emplace(nd, v);
      }
    }
  }
  return false;
}

}  // namespace

PathResult dijkstra(const RoadNetwork& network, std::span<const double> weights, VertexId source,
                    VertexId target) {
  check_vertex(network, source);
  check_vertex(network, target);
  std::vector<double> dist;
  std::vector<EdgeId> pred;
  bool skipped = false;
  auto cost = [&](EdgeId e, double) {
    const std::size_t row = network.edge(e).segment_row;
    if (row >= weights.size()) {
      throw Error(ErrorCode::DimensionMismatch, "weight vector shorter than segment row " + std::to_string(row));
    }
    return weights[row];
  };
  if (!label_setting(network, source, target, cost, dist, pred, skipped)) {
    throw Error(ErrorCode::Unreachable,
                "vertex " + std::to_string(target) + " unreachable from " + std::to_string(source));
  }
  return {unwind(network, pred, source, target), dist[target]};
}

Realized realized_time(const RoadNetwork& network, const TrafficMatrix& truth,
                       std::span<const EdgeId> edges, Timestamp t_start) {
  Realized out;
  out.entry_times.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] >= network.edge_count()) {
      throw Error(ErrorCode::InvalidArgument, "edge " + std::to_string(edges[i]) + " not in network");
    }
    if (i > 0 && network.edge(edges[i - 1]).to != network.edge(edges[i]).from) {
      throw Error(ErrorCode::InvalidArgument, "edges do not form a walk at position " + std::to_string(i));
    }
    const Timestamp t = t_start + out.total;
    if (!truth.grid().covers(t)) {
      throw Error(ErrorCode::HorizonExceeded, "entry time " + std::to_string(t) + " outside the grid");
    }
    out.entry_times.push_back(t);
    out.total += weight_at(truth, network.edge(edges[i]).segment_row, t);
  }
  return out;
}

RouteResult greedy_reroute(const RoadNetwork& network, const predictors::Predictor& predictor,
                           const TrafficMatrix& truth, const ODQuery& query,
                           const RerouteOptions& options) {
  validate_query(query, network, truth.grid());
  const auto guard = static_cast<std::size_t>(options.guard_factor * static_cast<double>(network.edge_count()));
  std::vector<double> predicted(truth.m());
  RouteResult out;
  VertexId current = query.origin;
  while (current != query.destination) {
    const Timestamp t = query.t_start + out.realized_total;
    if (!truth.grid().covers(t)) {
      throw Error(ErrorCode::HorizonExceeded, "trip passes the grid end at vertex " + std::to_string(current));
    }
    if (out.edges.size() >= guard) {
      throw Error(ErrorCode::CycleGuard, "committed " + std::to_string(out.edges.size()) +
                                             " edges without reaching the destination");
    }
    predictor.predict(t, truth, predicted);
    const PathResult plan = dijkstra(network, predicted, current, query.destination);
    ++out.reroute_count;
    const EdgeId e = plan.edges.front();
    out.edges.push_back(e);
    out.entry_times.push_back(t);
    out.realized_total += weight_at(truth, network.edge(e).segment_row, t);
    current = network.edge(e).to;
  }
  return out;
}

RouteResult realtime_benchmark(const RoadNetwork& network, const TrafficMatrix& truth,
                               const ODQuery& query, const RerouteOptions& options) {
  static const predictors::PredictorSnapshot realtime = predictors::make_realtime();
  return greedy_reroute(network, *realtime, truth, query, options);
}

bool fifo_holds(const TrafficMatrix& truth, std::size_t first, std::size_t last) {
  last = std::min(last, truth.n() - 1);
  for (std::size_t col = first; col < last; ++col) {
    const auto a = truth.column(col);
    const auto b = truth.column(col + 1);
    for (std::size_t r = 0; r < truth.m(); ++r) {
      if (b[r] < a[r]) return false;
    }
  }
  return true;
}

RouteResult static_oracle(const RoadNetwork& network, const TrafficMatrix& truth, const ODQuery& query) {
  validate_query(query, network, truth.grid());
  std::vector<double> dist;
  std::vector<EdgeId> pred;
  bool skipped = false;
  auto cost = [&](EdgeId e, double elapsed) {
    const Timestamp t = query.t_start + elapsed;
    if (!truth.grid().covers(t)) return std::numeric_limits<double>::quiet_NaN();
    return weight_at(truth, network.edge(e).segment_row, t);
  };
  if (!label_setting(network, query.origin, query.destination, cost, dist, pred, skipped)) {
    if (skipped) throw Error(ErrorCode::HorizonExceeded, "destination not reachable within the grid");
    throw Error(ErrorCode::Unreachable, "destination unreachable");
  }
  RouteResult out;
  out.edges = unwind(network, pred, query.origin, query.destination);
  Realized r = realized_time(network, truth, out.edges, query.t_start);
  out.entry_times = std::move(r.entry_times);
  out.realized_total = r.total;
  out.reroute_count = 1;
  // Every relaxation happened at or before the destination's label.
  const std::size_t first = interval_index(truth.grid(), query.t_start);
  const Timestamp last_t = std::min(query.t_start + dist[query.destination],
                                    std::nextafter(truth.grid().end(), truth.grid().start()));
  out.approximate = !fifo_holds(truth, first, interval_index(truth.grid(), last_t));
  return out;
}

}  // namespace cycloroute::routing
