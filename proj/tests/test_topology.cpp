#include <doctest.h>

#include <set>
#include <sstream>

#include "dsgd/error.hpp"
#include "dsgd/topology.hpp"

using namespace dsgd;

namespace {

std::size_t expected_edges(TopologyKind kind, int m) {
  switch (kind) {
    case TopologyKind::Complete: return static_cast<std::size_t>(m * (m - 1) / 2);
    case TopologyKind::Star: return static_cast<std::size_t>(m - 1);
    case TopologyKind::Cycle: return m == 2 ? 1 : static_cast<std::size_t>(m);
    case TopologyKind::Bipartite: return static_cast<std::size_t>((m / 2) * (m - m / 2));
    default: return 0;
  }
}

}  // namespace

TEST_CASE("deterministic shapes have the textbook edge counts") {
  for (int m = 2; m <= 16; ++m) {
    for (auto kind : {TopologyKind::Complete, TopologyKind::Star, TopologyKind::Cycle, TopologyKind::Bipartite}) {
      CAPTURE(m);
      CAPTURE(to_string(kind));
      const Graph g = build_graph(kind, m);
      CHECK(g.size() == m);
      CHECK(g.kind() == kind);
      CHECK(g.edges().size() == expected_edges(kind, m));
      CHECK(is_connected(g));
    }
  }
}

TEST_CASE("star, cycle and knng degrees") {
  const Graph star = build_graph(TopologyKind::Star, 10);
  CHECK(star.degree(0) == 9);
  for (int i = 1; i < 10; ++i) CHECK(star.degree(i) == 1);
  CHECK(star.max_degree() == 9);

  const Graph cycle = build_graph(TopologyKind::Cycle, 10);
  for (int i = 0; i < 10; ++i) CHECK(cycle.degree(i) == 2);
  CHECK(cycle.has_edge(9, 0));
  CHECK(cycle.has_edge(0, 9));
  CHECK_FALSE(cycle.has_edge(0, 2));

  TopologyParams p;
  p.k = 2;
  const Graph knng = build_graph(TopologyKind::KNng, 10, p);
  for (int i = 0; i < 10; ++i) CHECK(knng.degree(i) == 4);
  CHECK(knng.has_edge(0, 8));
  CHECK_FALSE(knng.has_edge(0, 3));

  // k large enough to wrap around collapses to the complete graph.
  p.k = 5;
  CHECK(build_graph(TopologyKind::KNng, 10, p).edges().size() == 45);
}

TEST_CASE("bipartite has no edge inside a side") {
  TopologyParams p;
  p.partition = {3, 5};
  const Graph g = build_graph(TopologyKind::Bipartite, 8, p);
  CHECK(g.edges().size() == 15);
  for (const auto& [a, b] : g.edges()) CHECK(((a < 3) != (b < 3)));
  p.partition = {3, 4};
  CHECK_THROWS_AS(build_graph(TopologyKind::Bipartite, 8, p), ValidationError);
}

TEST_CASE("random graphs are seeded, connected and simple") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Graph g = build_graph(TopologyKind::Random, 10, {}, seed);
    CHECK(is_connected(g));
    CHECK(g.seed() == seed);
    CHECK(g.attempts() >= 1);
    std::set<Edge> unique(g.edges().begin(), g.edges().end());
    CHECK(unique.size() == g.edges().size());
    for (const auto& [a, b] : g.edges()) CHECK(a < b);
    const Graph again = build_graph(TopologyKind::Random, 10, {}, seed);
    CHECK(again.edges() == g.edges());
  }
  std::set<std::vector<Edge>> shapes;
  for (std::uint64_t seed = 0; seed < 20; ++seed) shapes.insert(build_graph(TopologyKind::Random, 10, {}, seed).edges());
  CHECK(shapes.size() > 10);
}

TEST_CASE("random graph gives up when connectivity is hopeless") {
  TopologyParams p;
  p.p = 1e-6;
  p.max_retries = 5;
  CHECK_THROWS_AS(build_graph(TopologyKind::Random, 12, p, 3), ConstructionError);
}

TEST_CASE("invalid construction requests") {
  CHECK_THROWS_AS(build_graph(TopologyKind::Cycle, 1), ValidationError);
  CHECK_THROWS_AS(build_graph(TopologyKind::Custom, 5), ValidationError);
  TopologyParams p;
  p.k = 0;
  CHECK_THROWS_AS(build_graph(TopologyKind::KNng, 5, p), ValidationError);
  p.k = 5;
  CHECK_THROWS_AS(build_graph(TopologyKind::KNng, 5, p), ValidationError);
  CHECK_THROWS_AS(Graph::from_edges(4, {{0, 1}, {2, 3}}), ValidationError);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1}, {1, 1}, {1, 2}}), ValidationError);
  CHECK_THROWS_AS(Graph::from_edges(3, {{0, 1}, {1, 3}}), ValidationError);
}

TEST_CASE("from_edges normalizes orientation and duplicates") {
  const Graph g = Graph::from_edges(4, {{1, 0}, {0, 1}, {2, 1}, {3, 2}, {2, 3}});
  CHECK(g.edges() == std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}});
  CHECK(g.kind() == TopologyKind::Custom);
  CHECK(g.degree(1) == 2);
}

TEST_CASE("edge list round trip and parse errors") {
  const Graph g = build_graph(TopologyKind::Random, 9, {}, 11);
  std::stringstream buf;
  write_edge_list(buf, g);
  const Graph back = read_edge_list(buf);
  CHECK(back.size() == 9);
  CHECK(back.edges() == g.edges());

  std::istringstream dangling("3 0 1 1");
  CHECK_THROWS_AS(read_edge_list(dangling), DataError);
  std::istringstream junk("3 0 1 x 2");
  CHECK_THROWS_AS(read_edge_list(junk), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_edge_list(empty), DataError);
  CHECK_THROWS_AS(load_edge_list("/nonexistent/edges.txt"), DataError);
}

TEST_CASE("topology names parse both ways") {
  for (auto kind : kBuiltinTopologies) CHECK(parse_topology_kind(to_string(kind)) == kind);
  CHECK(parse_topology_kind("k-nng") == TopologyKind::KNng);
  CHECK_THROWS_AS(parse_topology_kind("torus"), ValidationError);
}
