#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cycloroute/core/time_grid.hpp"

namespace cycloroute {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Edge {
  EdgeId id = 0;
  VertexId from = 0;
  VertexId to = 0;
  /// Row of this segment in the associated TrafficMatrix.
  std::size_t segment_row = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Directed junction/segment graph. Edge ids are dense: edges()[i].id == i.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  RoadNetwork(std::size_t vertex_count, std::vector<Edge> edges);

  std::size_t vertex_count() const noexcept { return vertex_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[e]; }

  /// Outgoing edge ids of v in ascending id order.
  std::span<const EdgeId> out_edges(VertexId v) const;
  std::span<const EdgeId> in_edges(VertexId v) const;

  /// Throws DimensionMismatch unless segment rows are a bijection onto 0..m-1.
  void validate_rows(std::size_t m) const;

  /// For each segment row, the rows of segments sharing an endpoint with it.
  std::vector<std::vector<std::size_t>> segment_neighbors() const;

  friend bool operator==(const RoadNetwork& a, const RoadNetwork& b) {
    return a.vertex_count_ == b.vertex_count_ && a.edges_ == b.edges_;
  }

 private:
  std::size_t vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offsets_;
  std::vector<EdgeId> out_list_;
  std::vector<std::size_t> in_offsets_;
  std::vector<EdgeId> in_list_;
};

struct ODQuery {
  VertexId origin = 0;
  VertexId destination = 0;
  Timestamp t_start = 0.0;

  friend bool operator==(const ODQuery&, const ODQuery&) = default;
};

/// Throws InvalidArgument/OutOfRange unless origin != destination, both are
/// vertices of the network, and t_start + horizon_margin lies inside the grid.
void validate_query(const ODQuery& q, const RoadNetwork& network, const TimeGrid& grid,
                    Seconds horizon_margin = 0.0);

}  // namespace cycloroute
