#include "cycloroute/evaluation/communities.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/rng.hpp"

namespace cycloroute::evaluation {

namespace {

// Weighted undirected graph; each undirected edge appears in both adjacency
// lists, self-loops are kept separately.
struct WGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;
  std::vector<double> self;

  std::size_t size() const { return adj.size(); }
  double degree(std::size_t i) const {
    double k = 2.0 * self[i];
    for (const auto& [j, w] : adj[i]) k += w;
    return k;
  }
};

WGraph project(const RoadNetwork& network) {
  const std::size_t n = network.vertex_count();
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (const Edge& e : network.edges()) {
    if (e.from == e.to) continue;
    nbrs[e.from].push_back(e.to);
    nbrs[e.to].push_back(e.from);
  }
  WGraph g;
  g.adj.resize(n);
  g.self.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(nbrs[i].begin(), nbrs[i].end());
    nbrs[i].erase(std::unique(nbrs[i].begin(), nbrs[i].end()), nbrs[i].end());
    for (std::size_t j : nbrs[i]) g.adj[i].emplace_back(j, 1.0);
  }
  return g;
}

double graph_modularity(const WGraph& g, const std::vector<std::size_t>& comm) {
  double two_m = 0.0;
  std::vector<double> k(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    k[i] = g.degree(i);
    two_m += k[i];
  }
  if (two_m == 0.0) return 0.0;
  const std::size_t c_count = comm.empty() ? 0 : *std::max_element(comm.begin(), comm.end()) + 1;
  std::vector<double> in(c_count, 0.0), tot(c_count, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    tot[comm[i]] += k[i];
    in[comm[i]] += 2.0 * g.self[i];
    for (const auto& [j, w] : g.adj[i])
      if (comm[j] == comm[i]) in[comm[i]] += w;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) q += in[c] / two_m - (tot[c] / two_m) * (tot[c] / two_m);
  return q;
}

// One local-moving phase; returns true if any node changed community.
bool local_moving(const WGraph& g, std::vector<std::size_t>& comm, CounterRng& rng) {
  const std::size_t n = g.size();
  std::vector<double> k(n), tot(n, 0.0);
  double two_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = g.degree(i);
    two_m += k[i];
    tot[comm[i]] += k[i];
  }
  if (two_m == 0.0) return false;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order.begin(), order.end(), rng);

  std::vector<double> to(n, 0.0);
  std::vector<std::size_t> touched;
  bool improved = false;
  constexpr double kEps = 1e-12;
  for (int sweep = 0; sweep < 1000; ++sweep) {
    bool moved = false;
    for (std::size_t i : order) {
      const std::size_t old = comm[i];
      touched.clear();
      for (const auto& [j, w] : g.adj[i]) {
        if (to[comm[j]] == 0.0) touched.push_back(comm[j]);
        to[comm[j]] += w;
      }
      tot[old] -= k[i];
      std::size_t best = old;
      double best_gain = to[old] - tot[old] * k[i] / two_m;
      std::sort(touched.begin(), touched.end());
      for (std::size_t c : touched) {
        const double gain = to[c] - tot[c] * k[i] / two_m;
        if (gain > best_gain + kEps) {
          best = c;
          best_gain = gain;
        }
      }
      tot[best] += k[i];
      comm[i] = best;
      for (std::size_t c : touched) to[c] = 0.0;
      to[old] = 0.0;
      if (best != old) moved = improved = true;
    }
    if (!moved) break;
  }
  return improved;
}

// Dense ids in order of first appearance.
std::size_t renumber(std::vector<std::size_t>& comm) {
  std::vector<std::size_t> map(comm.size(), SIZE_MAX);
  std::size_t next = 0;
  for (auto& c : comm) {
    if (map[c] == SIZE_MAX) map[c] = next++;
    c = map[c];
  }
  return next;
}

WGraph aggregate(const WGraph& g, const std::vector<std::size_t>& comm, std::size_t count) {
  std::vector<std::map<std::size_t, double>> acc(count);
  WGraph out;
  out.self.assign(count, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.self[comm[i]] += g.self[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (comm[j] == comm[i]) {
        out.self[comm[i]] += 0.5 * w;
      } else {
        acc[comm[i]][comm[j]] += w;
      }
    }
  }
  out.adj.resize(count);
  for (std::size_t c = 0; c < count; ++c)
    for (const auto& [d, w] : acc[c]) out.adj[c].emplace_back(d, w);
  return out;
}

}  // namespace

double modularity(const RoadNetwork& network, std::span<const std::size_t> assignment) {
  if (assignment.size() != network.vertex_count()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment size differs from vertex count");
  }
  return graph_modularity(project(network), std::vector<std::size_t>(assignment.begin(), assignment.end()));
}

CommunityResult detect_communities(const RoadNetwork& network, std::uint64_t seed) {
  if (network.vertex_count() == 0) throw Error(ErrorCode::InvalidArgument, "empty network");
  WGraph g = project(network);
  CommunityResult out;
  out.assignment.resize(network.vertex_count());
  std::iota(out.assignment.begin(), out.assignment.end(), std::size_t{0});
  out.level_modularity.push_back(graph_modularity(g, out.assignment));

  for (std::uint32_t level = 0;; ++level) {
    std::vector<std::size_t> comm(g.size());
    std::iota(comm.begin(), comm.end(), std::size_t{0});
    CounterRng rng(seed, Stream::Communities, level);
    if (!local_moving(g, comm, rng)) break;
    const std::size_t count = renumber(comm);
    for (auto& a : out.assignment) a = comm[a];
    g = aggregate(g, comm, count);
    out.level_modularity.push_back(modularity(network, out.assignment));
    if (count == 1) break;
  }
  out.count = renumber(out.assignment);
  out.modularity = modularity(network, out.assignment);
  return out;
}

std::vector<double> sampled_betweenness(const RoadNetwork& network, std::size_t samples, std::uint64_t seed) {
  const std::size_t n = network.vertex_count();
  std::vector<VertexId> sources(n);
  std::iota(sources.begin(), sources.end(), VertexId{0});
  if (samples < n) {
    CounterRng rng(seed, Stream::Communities, 1u << 20);
    shuffle(sources.begin(), sources.end(), rng);
    sources.resize(samples);
    std::sort(sources.begin(), sources.end());
  }
  std::vector<double> bc(n, 0.0), sigma(n), delta(n);
  std::vector<long long> dist(n);
  std::vector<VertexId> stack;
  for (VertexId s : sources) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    stack.clear();
    std::queue<VertexId> queue;
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push(s);
    while (!queue.empty()) {
      const VertexId u = queue.front();
      queue.pop();
      stack.push_back(u);
      for (EdgeId e : network.out_edges(u)) {
        const VertexId v = network.edge(e).to;
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push(v);
        }
        if (dist[v] == dist[u] + 1) sigma[v] += sigma[u];
      }
    }
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const VertexId w = *it;
      for (EdgeId e : network.in_edges(w)) {
        const VertexId v = network.edge(e).from;
        if (dist[v] >= 0 && dist[v] + 1 == dist[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) bc[w] += delta[w];
    }
  }
  return bc;
}

std::vector<bool> label_inner(const CommunityResult& communities, std::span<const double> betweenness) {
  if (betweenness.size() != communities.assignment.size()) {
    throw Error(ErrorCode::DimensionMismatch, "betweenness size differs from vertex count");
  }
  std::vector<double> sum(communities.count, 0.0);
  std::vector<std::size_t> size(communities.count, 0);
  for (std::size_t v = 0; v < betweenness.size(); ++v) {
    sum[communities.assignment[v]] += betweenness[v];
    ++size[communities.assignment[v]];
  }
  std::vector<std::size_t> order(communities.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto score = [&](std::size_t c) { return size[c] ? sum[c] / static_cast<double>(size[c]) : 0.0; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score(a) > score(b); });
  std::vector<bool> inner(communities.count, false);
  const std::size_t n_inner = communities.count / 2;
  for (std::size_t i = 0; i < n_inner; ++i) inner[order[i]] = true;
  return inner;
}

}  // namespace cycloroute::evaluation
