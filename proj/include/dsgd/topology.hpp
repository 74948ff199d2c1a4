#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dsgd {

enum class TopologyKind { Random, Star, Cycle, KNng, Bipartite, Complete, Custom };

std::string_view to_string(TopologyKind kind);
TopologyKind parse_topology_kind(std::string_view name);

/// The six built-in shapes used for experiments, in display order.
inline constexpr TopologyKind kBuiltinTopologies[] = {
    TopologyKind::Random,    TopologyKind::Star,     TopologyKind::Cycle,
    TopologyKind::KNng,      TopologyKind::Bipartite, TopologyKind::Complete};

struct TopologyParams {
  /// Ring neighbours on each side for KNng.
  int k = 2;
  /// Erdos-Renyi edge probability for Random.
  double p = 0.3;
  /// Side sizes for Bipartite; empty means {m/2, m - m/2}.
  std::vector<int> partition;
  int max_retries = 1000;
};

using Edge = std::pair<int, int>;

/// Undirected simple graph on nodes 0..m-1. Edges are stored normalized
/// (first < second), sorted, without duplicates. Connectivity is enforced by
/// every factory; the constructor is private so an invalid graph never exists.
class Graph {
 public:
  static Graph from_edges(int m, std::vector<Edge> edges, TopologyKind kind = TopologyKind::Custom);

  int size() const noexcept { return m_; }
  TopologyKind kind() const noexcept { return kind_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::vector<int>>& adjacency() const noexcept { return adjacency_; }
  int degree(int node) const { return static_cast<int>(adjacency_.at(node).size()); }
  int max_degree() const noexcept;
  bool has_edge(int i, int l) const;

  /// Seed of the stream that produced a Random graph (0 otherwise).
  std::uint64_t seed() const noexcept { return seed_; }
  /// Number of regenerations needed before a Random graph was connected.
  int attempts() const noexcept { return attempts_; }

 private:
  friend Graph build_graph(TopologyKind, int, const TopologyParams&, std::uint64_t);

  Graph(int m, std::vector<Edge> edges, TopologyKind kind);

  int m_ = 0;
  TopologyKind kind_ = TopologyKind::Custom;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::uint64_t seed_ = 0;
  int attempts_ = 1;
};

/// Builds one of the built-in topologies. Deterministic in all arguments.
Graph build_graph(TopologyKind kind, int m, const TopologyParams& params = {}, std::uint64_t seed = 0);

/// Breadth-first reachability from node 0.
bool is_connected(int m, const std::vector<Edge>& edges);
bool is_connected(const Graph& g);

/// Edge-list text: first token `m`, then whitespace-separated `i l` pairs.
Graph read_edge_list(std::istream& in);
Graph load_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace dsgd
