#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cycloroute/core/road_network.hpp"
#include "cycloroute/core/time_grid.hpp"
#include "cycloroute/core/traffic_matrix.hpp"
#include "cycloroute/predictors/predictor.hpp"

namespace cycloroute::routing {

struct PathResult {
  std::vector<EdgeId> edges;
  double cost = 0.0;
};

/// Static shortest path with a binary heap. `weights` is indexed by segment
/// row. Among equal-cost relaxations the smaller edge id wins.
PathResult dijkstra(const RoadNetwork& network, std::span<const double> weights, VertexId source,
                    VertexId target);

/// Timing convention shared by every routine here: the running sum S of
/// realized weights is accumulated edge by edge and the i-th entry time is
/// t_start + S_{i-1}, so realized_total == S_n bit for bit.
struct RouteResult {
  std::vector<EdgeId> edges;
  std::vector<Timestamp> entry_times;
  Seconds realized_total = 0.0;
  std::size_t reroute_count = 0;
  /// Set by static_oracle when FIFO does not hold over the explored window.
  bool approximate = false;
};

struct Realized {
  Seconds total = 0.0;
  std::vector<Timestamp> entry_times;
};

/// Frozen-at-entry travel time of a walk. InvalidArgument if the edges are
/// not consecutive; HorizonExceeded if an entry time leaves the grid.
Realized realized_time(const RoadNetwork& network, const TrafficMatrix& truth,
                       std::span<const EdgeId> edges, Timestamp t_start);

struct RerouteOptions {
  double guard_factor = 4.0;
};

/// Greedy re-routing: predict, solve, commit the first edge, advance by its
/// true weight, repeat.
RouteResult greedy_reroute(const RoadNetwork& network, const predictors::Predictor& predictor,
                           const TrafficMatrix& truth, const ODQuery& query,
                           const RerouteOptions& options = {});

/// Greedy re-routing guided by the current true column.
RouteResult realtime_benchmark(const RoadNetwork& network, const TrafficMatrix& truth,
                               const ODQuery& query, const RerouteOptions& options = {});

/// Best fixed path under full knowledge of the truth, by time-dependent
/// label setting on earliest arrival. Exact when every edge's weights are
/// nondecreasing over the explored intervals; `approximate` is set otherwise.
RouteResult static_oracle(const RoadNetwork& network, const TrafficMatrix& truth,
                          const ODQuery& query);

/// True iff no edge weight decreases between consecutive intervals in
/// [first, last].
bool fifo_holds(const TrafficMatrix& truth, std::size_t first, std::size_t last);

}  // namespace cycloroute::routing
