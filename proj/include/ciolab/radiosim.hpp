#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "ciolab/rng.hpp"
#include "ciolab/scenario.hpp"
#include "ciolab/state.hpp"

namespace ciolab::sim {

// One scalar bias per undirected edge, in dual-node (canonical edge) order.
// Directed offsets follow the antisymmetric convention: for edge {i, j} with
// i < j, CIO_ij = +b_e and CIO_ji = -b_e.
struct CioAssignment {
  std::vector<double> bias_per_edge;

  void validate(int num_edges) const {
    if (static_cast<int>(bias_per_edge.size()) != num_edges)
      throw std::invalid_argument("CioAssignment: missing edge bias");
  }
};

// Directed offset for serving cell s toward neighbor t (cell indices).
double directed_cio(const topo::NetworkGraph& g, const CioAssignment& cio, int serving_idx,
                    int target_idx);

// Log-distance path loss with externally supplied shadowing. Distance is
// clamped to 1 m.
double rsrp_dbm(double tx_power_dbm, double distance_m, const RadioConfig& radio, double shadow_db);

// A3 entering condition (strict): RSRP_j - RSRP_i > CIO_ij + H.
bool a3_check(double rsrp_serving_dbm, double rsrp_neighbor_dbm, double cio_ij_db,
              double hysteresis_db);

// Shannon efficiency clamped to the configured MCS floor/ceiling.
double sinr_to_spectral_efficiency(double sinr_db, double eta_min, double eta_max);

// Per-neighbor consecutive-success counters for the time-to-trigger rule.
// Counters saturate at n_ttt, reset to zero on an A3 failure, and all clear
// when a handover fires. The A3 outcome fed at each instant must use the CIO
// active at that instant, so a window straddling a control update stays
// correct.
class TttTracker {
 public:
  explicit TttTracker(int n_ttt);

  // One measurement instant: parallel arrays over candidate neighbors
  // (ascending cell order). rank_metric is RSRP_j + CIO_ij at this instant.
  // Returns the handover target if one fires (argmax of rank_metric over
  // eligible neighbors, lowest cell on ties).
  std::optional<int> step(const std::vector<int>& neighbors, const std::vector<bool>& a3,
                          const std::vector<double>& rank_metric);

  void reset() { count_.clear(); }
  int count_for(int neighbor) const;
  int n_ttt() const { return n_ttt_; }

 private:
  int n_ttt_;
  std::map<int, int> count_;
};

// Demand-capped round-robin: one PRB is dealt at a time in cyclic UE order
// starting at `start % n`, skipping UEs whose requirement is met, until PRBs
// run out or all requirements are met.
std::vector<int> round_robin_schedule(const std::vector<int>& need_prb, int n_prb, int64_t start);

struct UeState {
  int id = 0;
  double x = 0, y = 0;
  int box = 0;
  int profile = 0;
  int serving = -1;  // cell index
  TttTracker ttt{1};
  double demand_bps = 0.0;  // current demand (0 while an on/off source is off)
  bool traffic_on = true;
  double traffic_remaining_s = 0.0;
  int interruption_left = 0;
  int prb_alloc = 0;
  double eta = 0.0;
  double rate_bps = 0.0;
  int64_t last_ho_instant = -1;
  int last_ho_from = -1;
};

struct HoEventLog {
  int handovers = 0;
  int pingpongs = 0;
  std::map<std::pair<int, int>, int> per_edge_directed;  // (from,to) cell indices

  void merge(const HoEventLog& other);
};

// Deterministic multi-cell downlink simulator: bounded random-walk mobility,
// log-distance propagation with per-epoch shadowing, A3/CIO/TTT handover,
// round-robin PRB scheduling, and KPI aggregation over control epochs.
// Single-threaded; independent instances may run in parallel.
class Simulator {
 public:
  explicit Simulator(std::shared_ptr<const Scenario> scenario);

  // Places UEs uniformly in their boxes, attaches each to the strongest cell
  // (zero shadowing, neutral CIO), clears TTT counters and accumulators.
  void reset(uint64_t seed);

  struct ControlResult {
    std::vector<CellKpi> kpis;  // per cell, graph order
    HoEventLog ho_log;
  };

  // Installs the CIO assignment for one control epoch, draws this epoch's
  // shadowing, runs n_meas_per_control measurement instants, and returns the
  // epoch-averaged KPIs.
  ControlResult step_control(const CioAssignment& cio);

  const Scenario& scenario() const { return *scenario_; }
  const std::vector<UeState>& ues() const { return ues_; }
  int64_t instant() const { return instant_; }
  // RSRP with the currently installed shadowing (test hook).
  double current_rsrp_dbm(int cell_idx, int ue_idx) const;

 private:
  void step_measurement();
  void advance_mobility(UeState& ue);
  void update_traffic(UeState& ue);
  void compute_rsrp();
  void run_handovers();
  void schedule_cells();
  void accumulate_kpis();

  std::shared_ptr<const Scenario> scenario_;
  Rng rng_{0};
  int64_t instant_ = 0;
  CioAssignment cio_;
  std::vector<UeState> ues_;
  std::vector<std::vector<double>> shadow_db_;   // [ue][cell], redrawn per epoch
  std::vector<std::vector<double>> rsrp_now_;    // [ue][cell], per instant
  std::vector<int64_t> rr_counter_;              // per cell
  // epoch accumulators
  std::vector<double> acc_rho_, acc_thr_, acc_ue_;
  std::vector<std::vector<double>> acc_hist_;
  int acc_samples_ = 0;
  HoEventLog epoch_ho_;
};

}  // namespace ciolab::sim
