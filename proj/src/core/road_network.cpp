#include "cycloroute/core/road_network.hpp"

#include <algorithm>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute {

namespace {

void build_csr(std::size_t vertex_count, const std::vector<Edge>& edges, bool outgoing,
               std::vector<std::size_t>& offsets, std::vector<EdgeId>& list) {
  offsets.assign(vertex_count + 1, 0);
  for (const Edge& e : edges) ++offsets[(outgoing ? e.from : e.to) + 1];
  for (std::size_t v = 0; v < vertex_count; ++v) offsets[v + 1] += offsets[v];
  list.assign(edges.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  // Edges are visited in id order, so each adjacency list is sorted by id.
  for (const Edge& e : edges) list[cursor[outgoing ? e.from : e.to]++] = e.id;
}

}  // namespace

RoadNetwork::RoadNetwork(std::size_t vertex_count, std::vector<Edge> edges)
    : vertex_count_(vertex_count), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.id != i) {
      throw Error(ErrorCode::InvalidArgument,
                  "edge ids must be dense and sorted; expected " + std::to_string(i) + ", got " +
                      std::to_string(e.id));
    }
    if (e.from >= vertex_count_ || e.to >= vertex_count_) {
      throw Error(ErrorCode::InvalidArgument,
                  "edge " + std::to_string(i) + " references a vertex outside 0.." +
                      std::to_string(vertex_count_));
    }
  }
  build_csr(vertex_count_, edges_, true, out_offsets_, out_list_);
  build_csr(vertex_count_, edges_, false, in_offsets_, in_list_);
}

std::span<const EdgeId> RoadNetwork::out_edges(VertexId v) const {
  return {out_list_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const EdgeId> RoadNetwork::in_edges(VertexId v) const {
  return {in_list_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

void RoadNetwork::validate_rows(std::size_t m) const {
  if (edges_.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "network has " + std::to_string(edges_.size()) +
                                                  " edges but matrix has " + std::to_string(m) +
                                                  " rows");
  }
  std::vector<bool> seen(m, false);
  for (const Edge& e : edges_) {
    if (e.segment_row >= m || seen[e.segment_row]) {
      throw Error(ErrorCode::DimensionMismatch,
                  "segment rows are not a bijection onto matrix rows (edge " +
                      std::to_string(e.id) + ")");
    }
    seen[e.segment_row] = true;
  }
}

std::vector<std::vector<std::size_t>> RoadNetwork::segment_neighbors() const {
  std::size_t rows = 0;
  for (const Edge& e : edges_) rows = std::max(rows, e.segment_row + 1);
  std::vector<std::vector<std::size_t>> out(rows);
  for (const Edge& e : edges_) {
    auto& nb = out[e.segment_row];
    for (VertexId v : {e.from, e.to}) {
      for (EdgeId f : out_edges(v)) nb.push_back(edges_[f].segment_row);
      for (EdgeId f : in_edges(v)) nb.push_back(edges_[f].segment_row);
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    nb.erase(std::remove(nb.begin(), nb.end(), e.segment_row), nb.end());
  }
  return out;
}

void validate_query(const ODQuery& q, const RoadNetwork& network, const TimeGrid& grid,
                    Seconds horizon_margin) {
  if (q.origin >= network.vertex_count() || q.destination >= network.vertex_count()) {
    throw Error(ErrorCode::InvalidArgument, "query endpoint is not a network vertex");
  }
  if (q.origin == q.destination) {
    throw Error(ErrorCode::InvalidArgument, "query origin equals destination");
  }
  if (!grid.covers(q.t_start) || !(q.t_start + horizon_margin < grid.end())) {
    throw Error(ErrorCode::OutOfRange, "query start time outside grid coverage minus horizon");
  }
}

}  // namespace cycloroute
