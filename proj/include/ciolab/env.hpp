#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ciolab/radiosim.hpp"
#include "ciolab/scenario.hpp"
#include "ciolab/state.hpp"
#include "ciolab/topology.hpp"

namespace ciolab::mdp {

// Per-agent local observation: the rooted M-hop attributed subgraph of the
// dual graph. Node k carries z = [x_i, x_j] for its primal edge {i, j}.
struct Observation {
  std::vector<int> nodes;                      // dual node indices, sorted
  std::vector<std::pair<int, int>> edges;      // local index pairs (into nodes)
  int root_local = 0;                          // position of the root in nodes
  std::vector<std::vector<double>> features;   // per local node, width 2*|CellKpi|
};

// One observation per dual node; a pure function of (state, topology, hops).
std::vector<Observation> observe(const GlobalState& state, const topo::NetworkGraph& graph,
                                 const topo::DualGraph& dual, int m_hops);

// Maps level indices to edge biases (dB).
sim::CioAssignment apply(const JointAction& action);

// Learning-side feature scaling. Never applied to rewards.
struct FeatureScaling {
  double reference_rate_bps = 1.0;
  double total_ues = 1.0;

  // rho as-is, throughput / reference rate, ue_count / total, histogram as-is.
  std::vector<double> scale(const CellKpi& kpi) const;
  int width(const CellKpi& kpi) const { return kpi.feature_width(); }
};

// Dec-POMDP adapter over one simulator instance: applies joint CIO actions
// at control epochs, produces KPI states, the team reward, and per-region
// returns; terminates episodes at the configured horizon.
class Environment {
 public:
  Environment(std::shared_ptr<const sim::Scenario> scenario, std::vector<topo::Region> regions);

  // Fresh UE placement, neutral CIOs, plus one warm-up control epoch so the
  // initial KPIs are meaningful.
  GlobalState reset(uint64_t seed);

  struct StepResult {
    GlobalState state;
    RewardReport reward;
    bool done = false;
    sim::HoEventLog ho_log;
  };
  StepResult step(const JointAction& action);

  bool episode_active() const { return active_; }
  int epochs_elapsed() const { return epoch_; }
  int horizon() const { return scenario_->episode_epochs; }
  const sim::Scenario& scenario() const { return *scenario_; }
  const topo::NetworkGraph& graph() const { return scenario_->graph; }
  const topo::DualGraph& dual() const { return dual_; }
  const std::vector<topo::Region>& regions() const { return regions_; }
  FeatureScaling scaling() const;

  // Optional per-epoch JSON-lines trace (state, action, reward, HO counts).
  void set_trace_path(const std::string& path) { trace_path_ = path; }

 private:
  GlobalState state_from_kpis(const std::vector<CellKpi>& kpis) const;
  RewardReport reward_from_state(const GlobalState& s) const;
  void write_trace(const GlobalState& s, const JointAction& a, const RewardReport& r,
                   const sim::HoEventLog& ho);

  std::shared_ptr<const sim::Scenario> scenario_;
  topo::DualGraph dual_;
  std::vector<topo::Region> regions_;
  sim::Simulator simulator_;
  bool active_ = false;
  int epoch_ = 0;
  std::string trace_path_;
};

}  // namespace ciolab::mdp
