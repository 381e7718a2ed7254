#include "ciolab/topology.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace ciolab::topo {

namespace {

// BFS distances from root; -1 for unreachable.
std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int root) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue{root};
  dist[root] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : adj[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

int graph_diameter(const std::vector<std::vector<int>>& adj) {
  int diam = 0;
  for (size_t v = 0; v < adj.size(); ++v) {
    auto dist = bfs_distances(adj, static_cast<int>(v));
    for (int d : dist) {
      if (d < 0) throw std::runtime_error("diameter: graph is disconnected");
      diam = std::max(diam, d);
    }
  }
  return diam;
}

}  // namespace

NetworkGraph NetworkGraph::from_edges(std::vector<CellId> cells, std::vector<Edge> edges) {
  NetworkGraph g;
  std::sort(cells.begin(), cells.end());
  if (std::adjacent_find(cells.begin(), cells.end()) != cells.end())
    throw std::invalid_argument("NetworkGraph: duplicate cell id");
  if (cells.empty()) throw std::invalid_argument("NetworkGraph: no cells");
  g.cells_ = std::move(cells);
  for (int i = 0; i < static_cast<int>(g.cells_.size()); ++i) g.index_of_[g.cells_[i]] = i;

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.edges_ = std::move(edges);

  g.adj_.assign(g.cells_.size(), {});
  for (int k = 0; k < static_cast<int>(g.edges_.size()); ++k) {
    const Edge& e = g.edges_[k];
    auto ia = g.index_of_.find(e.a);
    auto ib = g.index_of_.find(e.b);
    if (ia == g.index_of_.end() || ib == g.index_of_.end())
      throw std::invalid_argument("NetworkGraph: edge endpoint is not a cell");
    g.adj_[ia->second].push_back(ib->second);
    g.adj_[ib->second].push_back(ia->second);
    g.edge_index_[{e.a, e.b}] = k;
  }
  for (auto& nbrs : g.adj_) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

int NetworkGraph::cell_index(CellId id) const {
  auto it = index_of_.find(id);
  if (it == index_of_.end()) throw std::invalid_argument("NetworkGraph: unknown cell id");
  return it->second;
}

int NetworkGraph::edge_index(const Edge& e) const {
  auto it = edge_index_.find({e.a, e.b});
  if (it == edge_index_.end()) throw std::invalid_argument("NetworkGraph: unknown edge");
  return it->second;
}

std::pair<int, int> NetworkGraph::edge_endpoints(int edge_idx) const {
  const Edge& e = edges_.at(edge_idx);
  return {cell_index(e.a), cell_index(e.b)};
}

bool NetworkGraph::is_connected() const {
  if (cells_.empty()) return false;
  auto dist = bfs_distances(adj_, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d < 0; });
}

int NetworkGraph::diameter() const { return graph_diameter(adj_); }

int DualGraph::diameter() const { return graph_diameter(adj); }

DualGraph build_dual_graph(const NetworkGraph& g) {
  if (g.num_edges() == 0) throw std::invalid_argument("build_dual_graph: no controllable CIOs");
  DualGraph d;
  d.num_nodes = g.num_edges();
  d.node_edges = g.edges();
  d.adj.assign(d.num_nodes, {});
  // Edges of the graph are already in canonical lexicographic order, so the
  // node ordering here is deterministic. Two dual nodes are adjacent iff
  // their primal edges share an endpoint.
  for (int p = 0; p < d.num_nodes; ++p) {
    for (int q = p + 1; q < d.num_nodes; ++q) {
      const Edge& e1 = d.node_edges[p];
      const Edge& e2 = d.node_edges[q];
      bool share = e1.a == e2.a || e1.a == e2.b || e1.b == e2.a || e1.b == e2.b;
      if (share) {
        d.dual_edges.emplace_back(p, q);
        d.adj[p].push_back(q);
        d.adj[q].push_back(p);
      }
    }
  }
  for (auto& nbrs : d.adj) std::sort(nbrs.begin(), nbrs.end());
  return d;
}

std::vector<int> k_hop_neighborhood(const std::vector<std::vector<int>>& adj, int root, int k) {
  if (root < 0 || root >= static_cast<int>(adj.size()))
    throw std::invalid_argument("k_hop_neighborhood: unknown root");
  if (k < 0) throw std::invalid_argument("k_hop_neighborhood: negative radius");
  auto dist = bfs_distances(adj, root);
  std::vector<int> ball;
  for (int v = 0; v < static_cast<int>(adj.size()); ++v)
    if (dist[v] >= 0 && dist[v] <= k) ball.push_back(v);
  return ball;
}

namespace {

// Collects the edges whose endpoints both lie in `cells` (sorted indices).
std::vector<int> induced_edges(const NetworkGraph& g, const std::vector<int>& cells) {
  std::set<int> in(cells.begin(), cells.end());
  std::vector<int> out;
  for (int k = 0; k < g.num_edges(); ++k) {
    auto [ia, ib] = g.edge_endpoints(k);
    if (in.count(ia) && in.count(ib)) out.push_back(k);
  }
  return out;
}

// Cell-level region membership for a center, optionally via site collapsing.
std::vector<int> region_cells(const NetworkGraph& g, CellId center, int hops,
                              const std::map<CellId, int>* site_of) {
  if (!site_of || site_of->empty()) return k_hop_neighborhood(g.adjacency(), g.cell_index(center), hops);

  // Build the site graph: site nodes, adjacency when any member cells share
  // a primal edge.
  std::map<int, int> site_index;
  std::vector<int> site_of_cell(g.num_cells(), -1);
  for (int c = 0; c < g.num_cells(); ++c) {
    auto it = site_of->find(g.cell_id(c));
    if (it == site_of->end()) throw std::invalid_argument("decompose_regions: cell missing from site map");
    auto [pos, inserted] = site_index.try_emplace(it->second, static_cast<int>(site_index.size()));
    site_of_cell[c] = pos->second;
  }
  std::vector<std::set<int>> site_adj_sets(site_index.size());
  for (int k = 0; k < g.num_edges(); ++k) {
    auto [ia, ib] = g.edge_endpoints(k);
    int sa = site_of_cell[ia], sb = site_of_cell[ib];
    if (sa != sb) {
      site_adj_sets[sa].insert(sb);
      site_adj_sets[sb].insert(sa);
    }
  }
  std::vector<std::vector<int>> site_adj(site_index.size());
  for (size_t s = 0; s < site_adj_sets.size(); ++s)
    site_adj[s].assign(site_adj_sets[s].begin(), site_adj_sets[s].end());

  auto sites = k_hop_neighborhood(site_adj, site_of_cell[g.cell_index(center)], hops);
  std::set<int> site_set(sites.begin(), sites.end());
  std::vector<int> cells;
  for (int c = 0; c < g.num_cells(); ++c)
    if (site_set.count(site_of_cell[c])) cells.push_back(c);
  return cells;
}

}  // namespace

std::vector<Region> decompose_regions(const NetworkGraph& g, const std::vector<CellId>& centers,
                                      int hops, const std::map<CellId, int>* site_of) {
  if (centers.empty()) throw std::invalid_argument("decompose_regions: no centers");
  if (hops < 0) throw std::invalid_argument("decompose_regions: negative hops");
  {
    std::set<CellId> uniq(centers.begin(), centers.end());
    if (uniq.size() != centers.size()) throw std::invalid_argument("decompose_regions: duplicate centers");
  }

  std::vector<Region> regions;
  std::vector<bool> covered(g.num_cells(), false);
  for (size_t j = 0; j < centers.size(); ++j) {
    Region r;
    r.center = centers[j];
    r.hops = hops;
    r.index = static_cast<int>(j);
    r.cells = region_cells(g, centers[j], hops, site_of);
    r.edges = induced_edges(g, r.cells);
    r.owner_cells = g.num_cells();
    r.owner_edges = g.num_edges();
    for (int c : r.cells) covered[c] = true;
    regions.push_back(std::move(r));
  }

  std::vector<CellId> uncovered;
  for (int c = 0; c < g.num_cells(); ++c)
    if (!covered[c]) uncovered.push_back(g.cell_id(c));
  if (!uncovered.empty()) {
    std::ostringstream msg;
    msg << "decompose_regions: regions do not cover cells:";
    for (CellId id : uncovered) msg << ' ' << id;
    throw std::runtime_error(msg.str());
  }
  return regions;
}

Region centralized_region(const NetworkGraph& g) {
  Region r;
  r.center = g.cell_id(0);
  r.hops = g.diameter();
  r.index = 0;
  r.cells.resize(g.num_cells());
  for (int c = 0; c < g.num_cells(); ++c) r.cells[c] = c;
  r.edges.resize(g.num_edges());
  for (int k = 0; k < g.num_edges(); ++k) r.edges[k] = k;
  r.owner_cells = g.num_cells();
  r.owner_edges = g.num_edges();
  return r;
}

std::vector<CellId> greedy_centers(const NetworkGraph& g, int hops,
                                   const std::map<CellId, int>* site_of) {
  std::vector<CellId> centers;
  std::vector<bool> covered(g.num_cells(), false);
  int remaining = g.num_cells();
  while (remaining > 0) {
    int best_gain = -1;
    CellId best_center = 0;
    std::vector<int> best_cells;
    for (int c = 0; c < g.num_cells(); ++c) {
      CellId id = g.cell_id(c);
      auto cells = region_cells(g, id, hops, site_of);
      int gain = 0;
      for (int v : cells)
        if (!covered[v]) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best_center = id;
        best_cells = cells;
      }
    }
    if (best_gain <= 0) throw std::runtime_error("greedy_centers: cannot extend coverage");
    centers.push_back(best_center);
    for (int v : best_cells) {
      if (!covered[v]) --remaining;
      covered[v] = true;
    }
  }
  return centers;
}

Restriction restrict(const Region& region, const GlobalState& state, const JointAction& action,
                     const std::vector<double>& reward_per_cell) {
  if (state.num_cells() != region.owner_cells || action.num_edges() != region.owner_edges ||
      static_cast<int>(reward_per_cell.size()) != region.owner_cells)
    throw std::invalid_argument("restrict: state/action sized for a different graph");

  Restriction out;
  out.state.reserve(region.cells.size());
  for (int c : region.cells) {
    out.state.push_back(state.per_cell[c]);
    out.region_return += reward_per_cell[c];
  }
  out.action.reserve(region.edges.size());
  for (int k : region.edges) out.action.push_back(action.per_edge[k]);
  return out;
}

std::string dump_primal(const NetworkGraph& g) {
  std::ostringstream os;
  os << "# primal cells=" << g.num_cells() << " edges=" << g.num_edges() << "\n";
  for (const Edge& e : g.edges()) os << e.a << ' ' << e.b << "\n";
  return os.str();
}

std::string dump_dual(const NetworkGraph& g, const DualGraph& d) {
  std::ostringstream os;
  os << "# dual nodes=" << d.num_nodes << " edges=" << d.dual_edges.size() << "\n";
  os << "# node <index> <cell_a> <cell_b>\n";
  for (int p = 0; p < d.num_nodes; ++p)
    os << "node " << p << ' ' << d.node_edges[p].a << ' ' << d.node_edges[p].b << "\n";
  for (auto [p, q] : d.dual_edges) os << p << ' ' << q << "\n";
  (void)g;
  return os.str();
}

}  // namespace ciolab::topo
