#pragma once

#include "ciolab/env.hpp"
#include "ciolab/rng.hpp"
#include "ciolab/scenario.hpp"
#include "ciolab/state.hpp"

namespace ciolab::heur {

struct HeuristicConfig {
  double rrm_margin_db = 3.0;
  double son_margin_db = 3.0;
  double son_ttt_ms = 110.0;
  double delta_cio_db = 2.0;
  double load_diff_threshold = 0.15;

  void validate() const;
};

// RRM: handover as soon as a neighbor is 3 dB better; CIOs stay neutral.
sim::HandoverConfig rrm_handover_config(const sim::HandoverConfig& base, const HeuristicConfig& h);

// SON: the 3 dB advantage must hold for a 110 ms TTT; CIOs stay neutral.
sim::HandoverConfig son_handover_config(const sim::HandoverConfig& base, const sim::TimescaleConfig& ts,
                                        const HeuristicConfig& h);

// Rule-based CIO tuning: moves an edge bias by a fixed step whenever the
// epoch-averaged load difference across the pair exceeds the threshold.
// Holds one bias map per episode.
class DeltaCioPolicy {
 public:
  DeltaCioPolicy(const topo::NetworkGraph& graph, HeuristicConfig config);

  void reset();
  JointAction act(const GlobalState& state);

 private:
  const topo::NetworkGraph& graph_;
  HeuristicConfig config_;
  JointAction current_;
};

JointAction random_action(int num_edges, Rng& rng);
JointAction neutral_action(int num_edges);

}  // namespace ciolab::heur
