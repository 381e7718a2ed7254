#include "ciolab/baselines.hpp"

#include <cmath>

namespace ciolab::heur {

void HeuristicConfig::validate() const {
  if (rrm_margin_db <= 0.0 || son_margin_db <= 0.0)
    throw std::invalid_argument("HeuristicConfig: margins must be > 0");
  if (son_ttt_ms <= 0.0) throw std::invalid_argument("HeuristicConfig: son_ttt_ms must be > 0");
  if (delta_cio_db <= 0.0) throw std::invalid_argument("HeuristicConfig: delta_cio_db must be > 0");
  if (load_diff_threshold <= 0.0 || load_diff_threshold >= 1.0)
    throw std::invalid_argument("HeuristicConfig: load_diff_threshold must be in (0, 1)");
}

sim::HandoverConfig rrm_handover_config(const sim::HandoverConfig& base, const HeuristicConfig& h) {
  sim::HandoverConfig cfg = base;
  cfg.hysteresis_db = h.rrm_margin_db;
  cfg.ttt_instants = 1;
  return cfg;
}

sim::HandoverConfig son_handover_config(const sim::HandoverConfig& base, const sim::TimescaleConfig& ts,
                                        const HeuristicConfig& h) {
  sim::HandoverConfig cfg = base;
  cfg.hysteresis_db = h.son_margin_db;
  cfg.ttt_instants = static_cast<int>(std::ceil(h.son_ttt_ms / 1000.0 / ts.delta_meas_s));
  if (cfg.ttt_instants < 1) cfg.ttt_instants = 1;
  return cfg;
}

DeltaCioPolicy::DeltaCioPolicy(const topo::NetworkGraph& graph, HeuristicConfig config)
    : graph_(graph), config_(std::move(config)) {
  config_.validate();
  reset();
}

void DeltaCioPolicy::reset() { current_ = neutral_action(graph_.num_edges()); }

JointAction DeltaCioPolicy::act(const GlobalState& state) {
  if (state.num_cells() != graph_.num_cells())
    throw std::invalid_argument("DeltaCioPolicy: state does not match graph");
  const auto& levels = ActionSpace::levels();
  for (int e = 0; e < graph_.num_edges(); ++e) {
    auto [ia, ib] = graph_.edge_endpoints(e);  // ia < ib, canonical orientation
    const double rho_i = state.per_cell[ia].rho;
    const double rho_j = state.per_cell[ib].rho;
    double bias = levels[current_.per_edge[e]];
    if (rho_i - rho_j > config_.load_diff_threshold) {
      // i overloaded: lowering b_e relaxes the i->j trigger, shedding UEs to j.
      bias -= config_.delta_cio_db;
    } else if (rho_j - rho_i > config_.load_diff_threshold) {
      bias += config_.delta_cio_db;
    }
    bias = std::clamp(bias, levels.front(), levels.back());
    // Snap to the nearest level (lowest index on ties).
    int best = 0;
    double best_dist = std::abs(levels[0] - bias);
    for (int k = 1; k < ActionSpace::size(); ++k) {
      const double d = std::abs(levels[k] - bias);
      if (d < best_dist) {
        best_dist = d;
        best = k;
      }
    }
    current_.per_edge[e] = best;
  }
  return current_;
}

JointAction random_action(int num_edges, Rng& rng) {
  JointAction a;
  a.per_edge.resize(num_edges);
  for (int e = 0; e < num_edges; ++e) a.per_edge[e] = rng.uniform_int(ActionSpace::size());
  return a;
}

JointAction neutral_action(int num_edges) {
  JointAction a;
  a.per_edge.assign(num_edges, ActionSpace::neutral_index());
  return a;
}

}  // namespace ciolab::heur
