#pragma once

#include <stdexcept>
#include <vector>

namespace ciolab {

// Per-cell KPI vector aggregated over one control epoch:
// PRB utilization, sum downlink throughput, connected-UE count, and a
// spectral-efficiency histogram (normalized to sum 1, all-zero when empty).
struct CellKpi {
  double rho = 0.0;
  double throughput_bps = 0.0;
  double ue_count = 0.0;
  std::vector<double> mcs_hist;

  // Flattened feature width: rho, throughput, ue_count, histogram bins.
  int feature_width() const { return 3 + static_cast<int>(mcs_hist.size()); }
};

// Network-wide state: one CellKpi per cell, in graph cell order.
struct GlobalState {
  std::vector<CellKpi> per_cell;

  int num_cells() const { return static_cast<int>(per_cell.size()); }
};

// The discrete CIO level set, shared by every edge agent.
class ActionSpace {
 public:
  static const std::vector<double>& levels();
  static int size() { return static_cast<int>(levels().size()); }
  static double level(int index);
  // Index of the 0 dB level.
  static int neutral_index();
};

// One CIO level index per edge, in dual-node (canonical edge) order.
struct JointAction {
  std::vector<int> per_edge;

  int num_edges() const { return static_cast<int>(per_edge.size()); }
  void validate() const {
    for (int idx : per_edge) {
      if (idx < 0 || idx >= ActionSpace::size())
        throw std::invalid_argument("JointAction: level index out of range");
    }
  }
};

// Team reward and its per-cell / per-region decomposition for one epoch.
struct RewardReport {
  double team_reward = 0.0;
  std::vector<double> per_cell;
  std::vector<double> region_returns;
};

}  // namespace ciolab
