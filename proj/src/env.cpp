#include "ciolab/env.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace ciolab::mdp {

std::vector<Observation> observe(const GlobalState& state, const topo::NetworkGraph& graph,
                                 const topo::DualGraph& dual, int m_hops) {
  if (m_hops < 0) throw std::invalid_argument("observe: negative radius");
  if (state.num_cells() != graph.num_cells())
    throw std::invalid_argument("observe: state size does not match graph");

  // Dual-node features z_e = [x_i, x_j], canonical endpoint order.
  std::vector<std::vector<double>> node_features(dual.num_nodes);
  for (int k = 0; k < dual.num_nodes; ++k) {
    auto [ia, ib] = graph.edge_endpoints(k);
    const CellKpi& xa = state.per_cell[ia];
    const CellKpi& xb = state.per_cell[ib];
    std::vector<double>& z = node_features[k];
    z.reserve(xa.feature_width() + xb.feature_width());
    for (const CellKpi* kpi : {&xa, &xb}) {
      z.push_back(kpi->rho);
      z.push_back(kpi->throughput_bps);
      z.push_back(kpi->ue_count);
      z.insert(z.end(), kpi->mcs_hist.begin(), kpi->mcs_hist.end());
    }
  }

  std::vector<Observation> out(dual.num_nodes);
  for (int root = 0; root < dual.num_nodes; ++root) {
    Observation& o = out[root];
    o.nodes = topo::k_hop_neighborhood(dual.adj, root, m_hops);
    std::vector<int> local(dual.num_nodes, -1);
    for (size_t k = 0; k < o.nodes.size(); ++k) local[o.nodes[k]] = static_cast<int>(k);
    o.root_local = local[root];
    for (auto [p, q] : dual.dual_edges)
      if (local[p] >= 0 && local[q] >= 0) o.edges.emplace_back(local[p], local[q]);
    o.features.reserve(o.nodes.size());
    for (int k : o.nodes) o.features.push_back(node_features[k]);
  }
  return out;
}

sim::CioAssignment apply(const JointAction& action) {
  action.validate();
  sim::CioAssignment cio;
  cio.bias_per_edge.reserve(action.per_edge.size());
  for (int idx : action.per_edge) cio.bias_per_edge.push_back(ActionSpace::level(idx));
  return cio;
}

std::vector<double> FeatureScaling::scale(const CellKpi& kpi) const {
  std::vector<double> f;
  f.reserve(kpi.feature_width());
  f.push_back(kpi.rho);
  f.push_back(kpi.throughput_bps / reference_rate_bps);
  f.push_back(kpi.ue_count / total_ues);
  f.insert(f.end(), kpi.mcs_hist.begin(), kpi.mcs_hist.end());
  return f;
}

Environment::Environment(std::shared_ptr<const sim::Scenario> scenario,
                         std::vector<topo::Region> regions)
    : scenario_(std::move(scenario)),
      dual_(topo::build_dual_graph(scenario_->graph)),
      regions_(std::move(regions)),
      simulator_(scenario_) {
  for (const auto& r : regions_) {
    if (r.owner_cells != scenario_->graph.num_cells() ||
        r.owner_edges != scenario_->graph.num_edges())
      throw std::invalid_argument("Environment: region built for a different graph");
  }
}

FeatureScaling Environment::scaling() const {
  FeatureScaling s;
  s.reference_rate_bps = scenario_->reference_rate_bps;
  s.total_ues = std::max(1, scenario_->total_ues());
  return s;
}

GlobalState Environment::state_from_kpis(const std::vector<CellKpi>& kpis) const {
  GlobalState s;
  s.per_cell = kpis;
  return s;
}

RewardReport Environment::reward_from_state(const GlobalState& s) const {
  RewardReport r;
  r.per_cell.reserve(s.per_cell.size());
  for (const CellKpi& k : s.per_cell) {
    r.per_cell.push_back(k.throughput_bps);
    r.team_reward += k.throughput_bps;
  }
  r.region_returns.reserve(regions_.size());
  for (const auto& region : regions_) {
    double sum = 0.0;
    for (int c : region.cells) sum += r.per_cell[c];
    r.region_returns.push_back(sum);
  }
  return r;
}

GlobalState Environment::reset(uint64_t seed) {
  simulator_.reset(seed);
  // Warm-up epoch under neutral CIOs: KPIs are epoch aggregates, so there is
  // no state to report before one epoch has run.
  sim::CioAssignment neutral;
  neutral.bias_per_edge.assign(scenario_->graph.num_edges(), 0.0);
  auto warm = simulator_.step_control(neutral);
  active_ = true;
  epoch_ = 0;
  return state_from_kpis(warm.kpis);
}

Environment::StepResult Environment::step(const JointAction& action) {
  if (!active_) throw std::runtime_error("Environment::step: episode finished; call reset");
  if (action.num_edges() != scenario_->graph.num_edges())
    throw std::invalid_argument("Environment::step: action does not cover all edges");

  auto result = simulator_.step_control(apply(action));
  StepResult out;
  out.state = state_from_kpis(result.kpis);
  out.reward = reward_from_state(out.state);
  out.ho_log = result.ho_log;
  ++epoch_;
  out.done = epoch_ >= scenario_->episode_epochs;
  if (out.done) active_ = false;
  if (!trace_path_.empty()) write_trace(out.state, action, out.reward, out.ho_log);
  return out;
}

void Environment::write_trace(const GlobalState& s, const JointAction& a, const RewardReport& r,
                              const sim::HoEventLog& ho) {
  nlohmann::json j;
  j["epoch"] = epoch_;
  auto& cells = j["state"] = nlohmann::json::array();
  for (const CellKpi& k : s.per_cell) {
    nlohmann::json c;
    c["rho"] = k.rho;
    c["throughput_bps"] = k.throughput_bps;
    c["ue_count"] = k.ue_count;
    c["mcs_hist"] = k.mcs_hist;
    cells.push_back(std::move(c));
  }
  j["action"] = a.per_edge;
  j["team_reward"] = r.team_reward;
  j["handovers"] = ho.handovers;
  j["pingpongs"] = ho.pingpongs;
  std::ofstream os(trace_path_, std::ios::app);
  os << j.dump() << "\n";
}

}  // namespace ciolab::mdp
