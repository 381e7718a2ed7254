#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <set>

#include "ciolab/rng.hpp"
#include "ciolab/topology.hpp"
#include "doctest.h"

using namespace ciolab;
using namespace ciolab::topo;

namespace {

NetworkGraph path_graph(int n) {
  std::vector<CellId> cells;
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i) cells.push_back(i);
  for (int i = 1; i < n; ++i) edges.emplace_back(i, i + 1);
  return NetworkGraph::from_edges(cells, edges);
}

// The 8-cell benchmark topology: two rows of four with two cross links,
// giving 8 cells and 8 controllable edges.
NetworkGraph bench8_graph() {
  std::vector<CellId> cells = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<Edge> edges = {{1, 2}, {2, 3}, {3, 4}, {5, 6}, {6, 7}, {7, 8}, {2, 6}, {3, 7}};
  return NetworkGraph::from_edges(cells, edges);
}

// Brute-force line graph: nodes are edges; adjacency by shared endpoint.
std::set<std::pair<int, int>> brute_force_line_graph_edges(const NetworkGraph& g) {
  std::set<std::pair<int, int>> out;
  for (int p = 0; p < g.num_edges(); ++p)
    for (int q = 0; q < g.num_edges(); ++q) {
      if (p >= q) continue;
      const Edge& a = g.edges()[p];
      const Edge& b = g.edges()[q];
      std::set<CellId> cells = {a.a, a.b, b.a, b.b};
      if (cells.size() < 4) out.insert({p, q});
    }
  return out;
}

// Random connected graph on n nodes: a random spanning tree plus extras.
NetworkGraph random_connected_graph(int n, Rng& rng) {
  std::vector<CellId> cells;
  for (int i = 1; i <= n; ++i) cells.push_back(i);
  std::set<std::pair<int, int>> edge_set;
  for (int i = 2; i <= n; ++i) {
    int j = 1 + rng.uniform_int(i - 1);
    edge_set.insert({std::min(i, j), std::max(i, j)});
  }
  int extras = rng.uniform_int(n + 1);
  for (int k = 0; k < extras; ++k) {
    int i = 1 + rng.uniform_int(n);
    int j = 1 + rng.uniform_int(n);
    if (i != j) edge_set.insert({std::min(i, j), std::max(i, j)});
  }
  std::vector<Edge> edges;
  for (auto [i, j] : edge_set) edges.emplace_back(i, j);
  return NetworkGraph::from_edges(cells, edges);
}

}  // namespace

TEST_CASE("dual of a path 1-2-3 has 2 nodes and 1 edge") {
  auto g = path_graph(3);
  auto d = build_dual_graph(g);
  CHECK(d.num_nodes == 2);
  REQUIRE(d.dual_edges.size() == 1);
  CHECK(d.dual_edges[0] == std::pair<int, int>{0, 1});
  CHECK(d.node_edges[0] == Edge(1, 2));
  CHECK(d.node_edges[1] == Edge(2, 3));
}

TEST_CASE("dual of a triangle is a triangle") {
  auto g = NetworkGraph::from_edges({1, 2, 3}, {{1, 2}, {2, 3}, {1, 3}});
  auto d = build_dual_graph(g);
  CHECK(d.num_nodes == 3);
  CHECK(d.dual_edges.size() == 3);
}

TEST_CASE("8-cell benchmark has 8 controllable CIOs") {
  auto g = bench8_graph();
  auto d = build_dual_graph(g);
  CHECK(g.num_edges() == 8);
  CHECK(d.num_nodes == 8);
}

TEST_CASE("empty edge set is an error") {
  auto g = NetworkGraph::from_edges({1}, {});
  CHECK_THROWS_WITH_AS(build_dual_graph(g), doctest::Contains("no controllable CIOs"),
                       std::invalid_argument);
}

TEST_CASE("line-graph oracle on random connected graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = random_connected_graph(3 + rng.uniform_int(10), rng);
    auto d = build_dual_graph(g);
    CHECK(d.num_nodes == g.num_edges());
    auto expect = brute_force_line_graph_edges(g);
    std::set<std::pair<int, int>> got(d.dual_edges.begin(), d.dual_edges.end());
    CHECK(got == expect);
    // Dual edge count identity: sum over cells of C(deg, 2).
    size_t expected_count = 0;
    for (int c = 0; c < g.num_cells(); ++c) {
      size_t deg = g.neighbors(c).size();
      expected_count += deg * (deg - 1) / 2;
    }
    CHECK(d.dual_edges.size() == expected_count);
    // Degree identity: dual degree of e={i,j} is deg(i) + deg(j) - 2.
    for (int p = 0; p < d.num_nodes; ++p) {
      const Edge& e = d.node_edges[p];
      size_t di = g.neighbors(g.cell_index(e.a)).size();
      size_t dj = g.neighbors(g.cell_index(e.b)).size();
      CHECK(d.adj[p].size() == di + dj - 2);
    }
  }
}

TEST_CASE("build_dual_graph is deterministic") {
  auto g = bench8_graph();
  auto d1 = build_dual_graph(g);
  auto d2 = build_dual_graph(g);
  CHECK(d1.dual_edges == d2.dual_edges);
  CHECK(d1.node_edges == d2.node_edges);
}

TEST_CASE("k-hop neighborhood basics") {
  auto g = path_graph(4);
  CHECK(k_hop_neighborhood(g.adjacency(), 0, 0) == std::vector<int>{0});
  CHECK(k_hop_neighborhood(g.adjacency(), 0, 2) == std::vector<int>{0, 1, 2});
  CHECK(k_hop_neighborhood(g.adjacency(), 0, 5) == std::vector<int>{0, 1, 2, 3});
  CHECK_THROWS(k_hop_neighborhood(g.adjacency(), 9, 1));
}

TEST_CASE("k-hop monotonicity") {
  Rng rng(17);
  auto g = random_connected_graph(9, rng);
  for (int v = 0; v < g.num_cells(); ++v) {
    for (int k = 0; k < 4; ++k) {
      auto a = k_hop_neighborhood(g.adjacency(), v, k);
      auto b = k_hop_neighborhood(g.adjacency(), v, k + 1);
      CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
    }
  }
}

TEST_CASE("single full-diameter region reproduces the centralized case") {
  auto g = bench8_graph();
  auto regions = decompose_regions(g, {1}, g.diameter());
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].cells.size() == 8);
  CHECK(regions[0].edges.size() == 8);
  auto c = centralized_region(g);
  CHECK(regions[0].cells == c.cells);
  CHECK(regions[0].edges == c.edges);
}

TEST_CASE("two centers on a 6-path with hops=2 cover with overlap") {
  auto g = path_graph(6);
  auto regions = decompose_regions(g, {2, 5}, 2);
  REQUIRE(regions.size() == 2);
  // brute-force BFS check
  for (const auto& r : regions) {
    auto expect = k_hop_neighborhood(g.adjacency(), g.cell_index(r.center), 2);
    CHECK(r.cells == expect);
  }
  std::set<int> inter;
  for (int c : regions[0].cells)
    if (std::count(regions[1].cells.begin(), regions[1].cells.end(), c)) inter.insert(c);
  CHECK(!inter.empty());
}

TEST_CASE("coverage failure is a hard error listing cells") {
  auto g = path_graph(6);
  CHECK_THROWS_WITH_AS(decompose_regions(g, {1}, 1), doctest::Contains("do not cover"),
                       std::runtime_error);
  CHECK_THROWS_AS(decompose_regions(g, {2, 2}, 5), std::invalid_argument);
}

TEST_CASE("greedy center fallback covers every cell") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = random_connected_graph(10, rng);
    auto centers = greedy_centers(g, 1);
    auto regions = decompose_regions(g, centers, 1);
    CHECK(!regions.empty());
  }
}

namespace {

GlobalState random_state(int cells, Rng& rng) {
  GlobalState s;
  for (int c = 0; c < cells; ++c) {
    CellKpi k;
    k.rho = rng.uniform();
    k.throughput_bps = rng.uniform(0, 1e7);
    k.ue_count = rng.uniform_int(30);
    k.mcs_hist.assign(8, 0.125);
    s.per_cell.push_back(k);
  }
  return s;
}

}  // namespace

TEST_CASE("restriction selects exactly the region rows and sums rewards") {
  Rng rng(31);
  auto g = bench8_graph();
  auto regions = decompose_regions(g, {2, 7}, 2);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_state(8, rng);
    JointAction a;
    for (int e = 0; e < 8; ++e) a.per_edge.push_back(rng.uniform_int(ActionSpace::size()));
    std::vector<double> reward(8);
    for (double& r : reward) r = rng.uniform(0, 1e6);
    for (const auto& region : regions) {
      auto res = restrict(region, s, a, reward);
      REQUIRE(res.state.size() == region.cells.size());
      double expect = 0.0;
      for (size_t k = 0; k < region.cells.size(); ++k) {
        CHECK(res.state[k].rho == s.per_cell[region.cells[k]].rho);
        expect += reward[region.cells[k]];
      }
      CHECK(res.region_return == doctest::Approx(expect).epsilon(1e-15));
      REQUIRE(res.action.size() == region.edges.size());
      for (size_t k = 0; k < region.edges.size(); ++k)
        CHECK(res.action[k] == a.per_edge[region.edges[k]]);
    }
  }
}

TEST_CASE("centralized restriction is the identity") {
  Rng rng(33);
  auto g = bench8_graph();
  auto region = centralized_region(g);
  auto s = random_state(8, rng);
  JointAction a;
  for (int e = 0; e < 8; ++e) a.per_edge.push_back(rng.uniform_int(7));
  std::vector<double> reward(8, 1.5);
  auto res = restrict(region, s, a, reward);
  CHECK(res.action == a.per_edge);
  CHECK(res.state.size() == 8);
  CHECK(res.region_return == doctest::Approx(12.0));
}

TEST_CASE("restriction rejects mismatched graphs") {
  auto g = bench8_graph();
  auto region = centralized_region(g);
  GlobalState s;
  s.per_cell.resize(5);
  JointAction a;
  a.per_edge.assign(8, 0);
  CHECK_THROWS_AS(restrict(region, s, a, std::vector<double>(8, 0.0)), std::invalid_argument);
}

TEST_CASE("site-level regions collapse co-sited cells") {
  // cells 1..6 on a path; sites pair them up: {1,2}, {3,4}, {5,6}
  auto g = path_graph(6);
  std::map<CellId, int> site_of = {{1, 0}, {2, 0}, {3, 1}, {4, 1}, {5, 2}, {6, 2}};
  auto regions = decompose_regions(g, {1, 6}, 1, &site_of);
  // center 1 -> site 0, 1 hop -> sites {0,1} -> cells 1..4
  CHECK(regions[0].cells == std::vector<int>{0, 1, 2, 3});
  CHECK(regions[1].cells == std::vector<int>{2, 3, 4, 5});
}
