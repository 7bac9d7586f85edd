#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cycloroute/core/road_network.hpp"
#include "cycloroute/core/traffic_matrix.hpp"
#include "cycloroute/evaluation/communities.hpp"

namespace cycloroute::evaluation {

struct TestSetConfig {
  /// Departure hours of day, measured from the grid start (a midnight).
  std::vector<int> hours = {6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18};
  /// Days (from the grid start) on which departures are sampled.
  std::size_t first_day = 0;
  std::size_t day_count = 0;  // 0: through the last full day of the grid
  /// Queries whose real-time travel time is below this are discarded.
  double min_travel_time = 1800.0;
  std::vector<int> rest_days = {5, 6};
  std::size_t betweenness_samples = 64;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct TestQuery {
  ODQuery query;
  bool inner_to_outer = false;
  std::size_t hop_length = 0;
  int hour = 0;
  int day_of_week = 0;
  bool workday = true;
};

struct TestSet {
  std::vector<TestQuery> queries;
  /// Ordered OD pairs before departure-time expansion.
  std::vector<std::pair<VertexId, VertexId>> od_pairs;
  std::size_t inner_communities = 0;
  std::size_t outer_communities = 0;
  std::size_t candidates = 0;
  std::size_t discarded_short = 0;
  std::size_t discarded_error = 0;
};

/// Unweighted hop count of the shortest directed path; Unreachable if none.
std::size_t hop_distance(const RoadNetwork& network, VertexId from, VertexId to);

/// Partition keys of a departure time relative to the grid start.
void assign_time_keys(TestQuery& q, const TimeGrid& grid, const std::vector<int>& rest_days);

/// For every ordered (inner, outer) and (outer, inner) community pair, one
/// random vertex from each community; departures expanded over the
/// configured days and hours; queries with a real-time travel time below
/// the threshold (or failing to route) are dropped. NoEligiblePairs when
/// nothing survives or fewer than two communities exist.
TestSet build_test_set(const RoadNetwork& network, const CommunityResult& communities,
                       const std::vector<bool>& inner, const TrafficMatrix& truth,
                       const TestSetConfig& cfg);

void write_test_set_csv(const std::filesystem::path& path, const TestSet& set);
TestSet read_test_set_csv(const std::filesystem::path& path);

}  // namespace cycloroute::evaluation
