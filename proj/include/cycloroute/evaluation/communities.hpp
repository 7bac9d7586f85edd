#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cycloroute/core/road_network.hpp"

namespace cycloroute::evaluation {

struct CommunityResult {
  /// Community id per vertex, ids dense from 0.
  std::vector<std::size_t> assignment;
  std::size_t count = 0;
  double modularity = 0.0;
  /// Modularity after each aggregation level (starting with singletons).
  std::vector<double> level_modularity;
};

/// Modularity of a vertex partition on the undirected projection of the
/// network, each connected vertex pair weighted 1.
double modularity(const RoadNetwork& network, std::span<const std::size_t> assignment);

/// Louvain: local moving until no positive gain, aggregation, repeat. The
/// vertex sweep order is a seeded shuffle, so the result is a function of
/// (network, seed).
CommunityResult detect_communities(const RoadNetwork& network, std::uint64_t seed);

/// Approximate vertex betweenness on the directed, unweighted network from
/// `samples` seeded source vertices (all vertices if samples >= |V|).
std::vector<double> sampled_betweenness(const RoadNetwork& network, std::size_t samples,
                                        std::uint64_t seed);

/// Labels the half of the communities with the highest mean vertex
/// betweenness as inner (true); ties go to the smaller community id.
std::vector<bool> label_inner(const CommunityResult& communities, std::span<const double> betweenness);

}  // namespace cycloroute::evaluation
