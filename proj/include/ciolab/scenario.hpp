#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ciolab/topology.hpp"

namespace ciolab::sim {

// Control epoch length is delta_meas * n_meas: each control interval holds
// exactly n_meas_per_control measurement instants.
struct TimescaleConfig {
  double delta_meas_s = 0.05;
  int n_meas_per_control = 20;

  double delta_control_s() const { return delta_meas_s * n_meas_per_control; }
  void validate() const;
};

struct HandoverConfig {
  double hysteresis_db = 3.0;
  int ttt_instants = 1;
  // Instants a UE stays unscheduled after a handover.
  int ho_interruption_instants = 1;
  // Window (instants) within which A->B->A counts as a ping-pong.
  int pingpong_window_instants = 20;

  void validate() const;
};

struct RadioConfig {
  int n_prb = 25;
  double prb_bandwidth_hz = 180e3;
  std::vector<double> tx_power_dbm;  // per cell, graph order
  double pathloss_exponent = 3.76;
  double ref_loss_db = 128.1;
  double ref_distance_m = 1000.0;
  double shadowing_std_db = 4.0;
  double noise_figure_db = 7.0;
  double eta_min = 0.15;
  double eta_max = 7.4;
  int mcs_bins = 8;

  double bandwidth_hz() const { return n_prb * prb_bandwidth_hz; }
  void validate(int num_cells) const;
};

struct TrafficProfile {
  enum class Kind { kCbr, kOnOff };
  std::string name;
  Kind kind = Kind::kCbr;
  double rate_bps = 1e6;
  double mean_on_s = 5.0;   // on/off profiles only
  double mean_off_s = 5.0;
};

struct MobilityBox {
  std::string kind;  // "red" (multi-cell center area) or "green" (border hotspot)
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  int ue_count = 0;
  double speed_mps = 1.5;
  int profile = 0;  // index into traffic profiles
};

// A full scenario: topology with coordinates, radio/timescale/handover
// parameters, traffic and mobility layout, and episode bookkeeping.
struct Scenario {
  std::string name;
  topo::NetworkGraph graph;
  std::vector<std::pair<double, double>> cell_xy;  // per cell index
  std::map<topo::CellId, int> site_of;             // optional site grouping
  TimescaleConfig timescale;
  HandoverConfig handover;
  RadioConfig radio;
  std::vector<TrafficProfile> profiles;
  std::vector<MobilityBox> boxes;
  int episode_epochs = 50;
  // Learning-side feature scaling: throughput is divided by this reference,
  // UE counts by the scenario UE total. Defaults to the total offered load.
  double reference_rate_bps = 0.0;

  uint64_t content_hash = 0;  // FNV-1a of the source file bytes

  int total_ues() const;
  void validate() const;
};

Scenario load_scenario(const std::string& path);
Scenario scenario_from_json_text(const std::string& text, const std::string& origin);

}  // namespace ciolab::sim
