#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ciolab/state.hpp"

namespace ciolab::topo {

using CellId = int;

// Undirected cell pair, stored canonically with a < b.
struct Edge {
  CellId a;
  CellId b;

  Edge(CellId i, CellId j) : a(i < j ? i : j), b(i < j ? j : i) {
    if (i == j) throw std::invalid_argument("Edge: self-loop");
  }
  bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
  bool operator<(const Edge& o) const { return a < o.a || (a == o.a && b < o.b); }
};

// Undirected cell-adjacency graph. Cells and edges are kept sorted; all
// vector layouts downstream (actions, logits, KPI concatenation) inherit
// this order. Immutable after construction.
class NetworkGraph {
 public:
  NetworkGraph() = default;  // empty; populate via from_edges
  static NetworkGraph from_edges(std::vector<CellId> cells, std::vector<Edge> edges);

  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<CellId>& cells() const { return cells_; }
  const std::vector<Edge>& edges() const { return edges_; }

  int cell_index(CellId id) const;  // throws on unknown id
  CellId cell_id(int index) const { return cells_.at(index); }
  int edge_index(const Edge& e) const;  // throws on unknown edge
  // Endpoints of edge k as cell indices (first < second).
  std::pair<int, int> edge_endpoints(int edge_idx) const;

  // Sorted neighbor cell indices.
  const std::vector<int>& neighbors(int cell_idx) const { return adj_.at(cell_idx); }
  const std::vector<std::vector<int>>& adjacency() const { return adj_; }

  bool is_connected() const;
  int diameter() const;

 private:
  std::vector<CellId> cells_;              // sorted ids
  std::vector<Edge> edges_;                // sorted canonical pairs
  std::vector<std::vector<int>> adj_;      // by cell index, sorted
  std::map<CellId, int> index_of_;
  std::map<std::pair<CellId, CellId>, int> edge_index_;
};

// Line graph of the primal network graph. Node k is primal edge k (same
// order as NetworkGraph::edges()); two dual nodes are adjacent iff their
// primal edges share an endpoint.
struct DualGraph {
  int num_nodes = 0;
  std::vector<Edge> node_edges;                  // primal edge per dual node
  std::vector<std::pair<int, int>> dual_edges;   // canonical (p < q) node index pairs
  std::vector<std::vector<int>> adj;             // by dual node index, sorted

  int diameter() const;
};

// Builds the line graph with deterministic node ordering. Errors on an
// empty edge set (no controllable CIOs).
DualGraph build_dual_graph(const NetworkGraph& g);

// BFS ball of radius k around root, as a sorted node list. k = 0 -> {root}.
std::vector<int> k_hop_neighborhood(const std::vector<std::vector<int>>& adj, int root, int k);

// N-hop primal region: the cells within `hops` of `center` plus the edges
// fully contained in that cell set.
struct Region {
  CellId center = 0;
  int hops = 0;
  int index = 0;
  std::vector<int> cells;  // cell indices, sorted
  std::vector<int> edges;  // primal edge indices (== dual node indices), sorted
  // Owner fingerprint for restriction sanity checks.
  int owner_cells = 0;
  int owner_edges = 0;
};

// One region per center. If a cell-to-site map is given, BFS distance is
// computed on the site graph (cells sharing a site collapse to one node)
// and a region contains every cell of every site within `hops`.
// Errors when the union of regions does not cover all cells, or on
// duplicate centers.
std::vector<Region> decompose_regions(const NetworkGraph& g, const std::vector<CellId>& centers,
                                      int hops, const std::map<CellId, int>* site_of = nullptr);

// The centralized special case: one region holding every cell and edge.
Region centralized_region(const NetworkGraph& g);

// Greedy max-coverage center selection (not taken from any published
// procedure; a fallback when a scenario gives no centers). Picks centers
// one at a time maximizing newly covered cells, lowest id on ties.
std::vector<CellId> greedy_centers(const NetworkGraph& g, int hops,
                                   const std::map<CellId, int>* site_of = nullptr);

// Restriction of a global (state, action, per-cell reward) triple to a
// region: state entries for region cells in graph order, action components
// for induced edges in dual order, and the summed per-cell reward.
struct Restriction {
  std::vector<CellKpi> state;
  std::vector<int> action;
  double region_return = 0.0;
};

Restriction restrict(const Region& region, const GlobalState& state, const JointAction& action,
                     const std::vector<double>& reward_per_cell);

// Graph dump helpers (edge-list text files).
std::string dump_primal(const NetworkGraph& g);
std::string dump_dual(const NetworkGraph& g, const DualGraph& d);

}  // namespace ciolab::topo
