#include "dsgd/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

#include "dsgd/error.hpp"

namespace dsgd {

namespace {

std::vector<Edge> normalize(int m, std::vector<Edge> edges) {
  for (auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= m || b >= m) {
      throw ValidationError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") out of range for m=" + std::to_string(m));
    }
    if (a == b) throw ValidationError("self-loop on node " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<Edge> ring_edges(int m, int k) {
  std::vector<Edge> edges;
  for (int i = 0; i < m; ++i) {
    for (int s = 1; s <= k; ++s) {
      int j = (i + s) % m;
      if (j != i) edges.emplace_back(i, j);
    }
  }
  return edges;
}

std::vector<Edge> erdos_renyi(int m, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return edges;
}

}  // namespace

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::Random: return "random";
    case TopologyKind::Star: return "star";
    case TopologyKind::Cycle: return "cycle";
    case TopologyKind::KNng: return "knng";
    case TopologyKind::Bipartite: return "bipartite";
    case TopologyKind::Complete: return "complete";
    case TopologyKind::Custom: return "custom";
  }
  return "unknown";
}

TopologyKind parse_topology_kind(std::string_view name) {
  for (auto kind : {TopologyKind::Random, TopologyKind::Star, TopologyKind::Cycle, TopologyKind::KNng,
                    TopologyKind::Bipartite, TopologyKind::Complete, TopologyKind::Custom}) {
    if (to_string(kind) == name) return kind;
  }
  if (name == "k-nng") return TopologyKind::KNng;
  throw ValidationError("unknown topology '" + std::string(name) + "'");
}

Graph::Graph(int m, std::vector<Edge> edges, TopologyKind kind)
    : m_(m), kind_(kind), edges_(std::move(edges)), adjacency_(static_cast<size_t>(m)) {
  for (const auto& [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

Graph Graph::from_edges(int m, std::vector<Edge> edges, TopologyKind kind) {
  if (m < 1) throw ValidationError("graph needs at least one node");
  edges = normalize(m, std::move(edges));
  if (!is_connected(m, edges)) throw ValidationError("graph is not connected");
  return Graph(m, std::move(edges), kind);
}

int Graph::max_degree() const noexcept {
  int best = 0;
  for (const auto& nbrs : adjacency_) best = std::max(best, static_cast<int>(nbrs.size()));
  return best;
}

bool Graph::has_edge(int i, int l) const {
  if (i == l || i < 0 || l < 0 || i >= m_ || l >= m_) return false;
  const auto& nbrs = adjacency_[i];
  return std::binary_search(nbrs.begin(), nbrs.end(), l);
}

bool is_connected(int m, const std::vector<Edge>& edges) {
  if (m <= 0) return false;
  std::vector<std::vector<int>> adj(static_cast<size_t>(m));
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= m || b >= m) return false;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(static_cast<size_t>(m), 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == m;
}

bool is_connected(const Graph& g) { return is_connected(g.size(), g.edges()); }

Graph build_graph(TopologyKind kind, int m, const TopologyParams& params, std::uint64_t seed) {
  if (m < 2) throw ValidationError("topology needs m >= 2, got " + std::to_string(m));
  std::vector<Edge> edges;
  switch (kind) {
    case TopologyKind::Complete:
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) edges.emplace_back(i, j);
      break;
    case TopologyKind::Star:
      for (int i = 1; i < m; ++i) edges.emplace_back(0, i);
      break;
    case TopologyKind::Cycle:
      edges = ring_edges(m, 1);
      break;
    case TopologyKind::KNng:
      if (params.k < 1 || params.k >= m) {
        throw ValidationError("knng needs 1 <= k < m, got k=" + std::to_string(params.k));
      }
      edges = ring_edges(m, params.k);
      break;
    case TopologyKind::Bipartite: {
      std::vector<int> sides = params.partition;
      if (sides.empty()) sides = {m / 2, m - m / 2};
      if (sides.size() != 2 || sides[0] < 1 || sides[1] < 1 || sides[0] + sides[1] != m) {
        throw ValidationError("bipartite partition must be two positive sizes summing to m");
      }
      for (int i = 0; i < sides[0]; ++i)
        for (int j = sides[0]; j < m; ++j) edges.emplace_back(i, j);
      break;
    }
    case TopologyKind::Random: {
      if (!(params.p > 0.0 && params.p <= 1.0)) {
        throw ValidationError("random graph edge probability must lie in (0, 1]");
      }
      if (params.max_retries < 1) throw ValidationError("max_retries must be positive");
      std::mt19937_64 rng(seed);
      for (int attempt = 1; attempt <= params.max_retries; ++attempt) {
        edges = erdos_renyi(m, params.p, rng);
        if (is_connected(m, edges)) {
          Graph g(m, normalize(m, std::move(edges)), kind);
          g.seed_ = seed;
          g.attempts_ = attempt;
          return g;
        }
      }
      throw ConstructionError("random graph still disconnected after " +
                              std::to_string(params.max_retries) + " attempts (m=" + std::to_string(m) +
                              ", p=" + std::to_string(params.p) + ")");
    }
    case TopologyKind::Custom:
      throw ValidationError("custom graphs are loaded from an edge list, not built");
  }
  return Graph(m, normalize(m, std::move(edges)), kind);
}

Graph read_edge_list(std::istream& in) {
  int m = 0;
  if (!(in >> m)) throw DataError("edge list: missing node count");
  std::vector<Edge> edges;
  int a = 0;
  int b = 0;
  while (in >> a) {
    if (!(in >> b)) throw DataError("edge list: dangling endpoint");
    edges.emplace_back(a, b);
  }
  if (!in.eof()) throw DataError("edge list: unparseable token");
  return Graph::from_edges(m, std::move(edges), TopologyKind::Custom);
}

Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list '" + path + "'");
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << g.size() << '\n';
  for (const auto& [a, b] : g.edges()) out << a << ' ' << b << '\n';
}

}  // namespace dsgd
