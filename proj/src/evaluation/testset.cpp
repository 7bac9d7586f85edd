#include "cycloroute/evaluation/testset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <sstream>
#include <string>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/io.hpp"
#include "cycloroute/core/parallel.hpp"
#include "cycloroute/core/rng.hpp"
#include "cycloroute/routing/routing.hpp"

namespace cycloroute::evaluation {

namespace {
constexpr std::int64_t kDay = 86400;
}

std::size_t hop_distance(const RoadNetwork& network, VertexId from, VertexId to) {
  std::vector<long long> dist(network.vertex_count(), -1);
  std::queue<VertexId> queue;
  dist[from] = 0;
  queue.push(from);
  while (!queue.empty()) {
    const VertexId u = queue.front();
    queue.pop();
    if (u == to) return static_cast<std::size_t>(dist[u]);
    for (EdgeId e : network.out_edges(u)) {
      const VertexId v = network.edge(e).to;
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push(v);
      }
    }
  }
  throw Error(ErrorCode::Unreachable, "no path from " + std::to_string(from) + " to " + std::to_string(to));
}

void assign_time_keys(TestQuery& q, const TimeGrid& grid, const std::vector<int>& rest_days) {
  const double offset = q.query.t_start - grid.start();
  const auto day = static_cast<long long>(std::floor(offset / static_cast<double>(kDay)));
  const double in_day = offset - static_cast<double>(day * kDay);
  q.hour = static_cast<int>(std::floor(in_day / 3600.0));
  q.day_of_week = static_cast<int>(((day % 7) + 7) % 7);
  q.workday = std::find(rest_days.begin(), rest_days.end(), q.day_of_week) == rest_days.end();
}

TestSet build_test_set(const RoadNetwork& network, const CommunityResult& communities,
                       const std::vector<bool>& inner, const TrafficMatrix& truth, const TestSetConfig& cfg) {
  if (communities.count < 2 || inner.size() != communities.count) {
    throw Error(ErrorCode::NoEligiblePairs, "need at least two labelled communities");
  }
  for (int h : cfg.hours) {
    if (h < 0 || h > 23) throw Error(ErrorCode::ConfigError, "departure hour " + std::to_string(h) + " outside 0..23");
  }
  std::vector<std::vector<VertexId>> members(communities.count);
  for (std::size_t v = 0; v < communities.assignment.size(); ++v) {
    members[communities.assignment[v]].push_back(static_cast<VertexId>(v));
  }
  TestSet set;
  std::vector<std::size_t> in_ids, out_ids;
  for (std::size_t c = 0; c < communities.count; ++c) (inner[c] ? in_ids : out_ids).push_back(c);
  set.inner_communities = in_ids.size();
  set.outer_communities = out_ids.size();
  if (in_ids.empty() || out_ids.empty()) {
    throw Error(ErrorCode::NoEligiblePairs, "need both inner and outer communities");
  }

  CounterRng rng(cfg.seed, Stream::TestSet, 0);
  auto pick = [&](std::size_t c) { return members[c][rng.uniform_int(members[c].size())]; };
  std::vector<bool> direction;
  for (std::size_t a : in_ids)
    for (std::size_t b : out_ids) {
      const VertexId u = pick(a), v = pick(b);
      set.od_pairs.emplace_back(u, v);
      direction.push_back(true);
      const VertexId x = pick(b), y = pick(a);
      set.od_pairs.emplace_back(x, y);
      direction.push_back(false);
    }

  const std::size_t grid_days = truth.grid().n_intervals() * static_cast<std::size_t>(truth.grid().resolution()) /
                                static_cast<std::size_t>(kDay);
  const std::size_t last_day = cfg.day_count == 0 ? grid_days : std::min(grid_days, cfg.first_day + cfg.day_count);

  std::vector<TestQuery> candidates;
  for (std::size_t d = cfg.first_day; d < last_day; ++d)
    for (int h : cfg.hours)
      for (std::size_t p = 0; p < set.od_pairs.size(); ++p) {
        TestQuery q;
        q.query = {set.od_pairs[p].first, set.od_pairs[p].second,
                   truth.grid().start() + static_cast<double>(static_cast<std::int64_t>(d) * kDay + h * 3600)};
        q.inner_to_outer = direction[p];
        assign_time_keys(q, truth.grid(), cfg.rest_days);
        candidates.push_back(q);
      }
  set.candidates = candidates.size();

  std::vector<std::size_t> hops(set.od_pairs.size(), 0);
  for (std::size_t p = 0; p < set.od_pairs.size(); ++p) {
    if (set.od_pairs[p].first != set.od_pairs[p].second) {
      hops[p] = hop_distance(network, set.od_pairs[p].first, set.od_pairs[p].second);
    }
  }

  // 0 = keep, 1 = too short, 2 = routing failure
  std::vector<char> verdict(candidates.size(), 0);
  parallel_for(candidates.size(), cfg.workers, [&](std::size_t i) {
    const TestQuery& q = candidates[i];
    if (q.query.origin == q.query.destination) {
      verdict[i] = 2;
      return;
    }
    try {
      const auto r = routing::realtime_benchmark(network, truth, q.query);
      verdict[i] = r.realized_total < cfg.min_travel_time ? 1 : 0;
    } catch (const Error&) {
      verdict[i] = 2;
    }
  });
  const std::size_t pairs = set.od_pairs.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (verdict[i] == 1) {
      ++set.discarded_short;
    } else if (verdict[i] == 2) {
      ++set.discarded_error;
    } else {
      TestQuery q = candidates[i];
      q.hop_length = hops[i % pairs];
      set.queries.push_back(q);
    }
  }
  if (set.queries.empty()) {
    throw Error(ErrorCode::NoEligiblePairs, "no query survives the travel-time filter");
  }
  return set;
}

void write_test_set_csv(const std::filesystem::path& path, const TestSet& set) {
  std::ostringstream out;
  out << "origin,destination,t_start,direction,hop_length,hour,day_of_week,workday\n";
  char buf[64];
  for (const TestQuery& q : set.queries) {
    std::snprintf(buf, sizeof buf, "%.17g", q.query.t_start);
    out << q.query.origin << ',' << q.query.destination << ',' << buf << ','
        << (q.inner_to_outer ? "inner_to_outer" : "outer_to_inner") << ',' << q.hop_length << ',' << q.hour << ','
        << q.day_of_week << ',' << (q.workday ? 1 : 0) << '\n';
  }
  io::write_text(path, out.str());
}

TestSet read_test_set_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  TestSet set;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || lineno == 1) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    }
    try {
      TestQuery q;
      q.query.origin = static_cast<VertexId>(std::stoul(f[0]));
      q.query.destination = static_cast<VertexId>(std::stoul(f[1]));
      q.query.t_start = std::stod(f[2]);
      if (f[3] != "inner_to_outer" && f[3] != "outer_to_inner") throw std::invalid_argument("direction");
      q.inner_to_outer = f[3] == "inner_to_outer";
      q.hop_length = std::stoul(f[4]);
      q.hour = std::stoi(f[5]);
      q.day_of_week = std::stoi(f[6]);
      q.workday = f[7] == "1";
      set.queries.push_back(q);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return set;
}

}  // namespace cycloroute::evaluation
