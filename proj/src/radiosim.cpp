#include "ciolab/radiosim.hpp"

#include <algorithm>
#include <cmath>

namespace ciolab::sim {

double directed_cio(const topo::NetworkGraph& g, const CioAssignment& cio, int serving_idx,
                    int target_idx) {
  topo::CellId s = g.cell_id(serving_idx), t = g.cell_id(target_idx);
  int e = g.edge_index(topo::Edge(s, t));
  return s < t ? cio.bias_per_edge[e] : -cio.bias_per_edge[e];
}

double rsrp_dbm(double tx_power_dbm, double distance_m, const RadioConfig& radio, double shadow_db) {
  const double d = std::max(distance_m, 1.0);
  const double path_loss =
      radio.ref_loss_db + 10.0 * radio.pathloss_exponent * std::log10(d / radio.ref_distance_m);
  return tx_power_dbm - path_loss - shadow_db;
}

bool a3_check(double rsrp_serving_dbm, double rsrp_neighbor_dbm, double cio_ij_db,
              double hysteresis_db) {
  return rsrp_neighbor_dbm - rsrp_serving_dbm > cio_ij_db + hysteresis_db;
}

double sinr_to_spectral_efficiency(double sinr_db, double eta_min, double eta_max) {
  if (!std::isfinite(sinr_db)) {
    if (std::isnan(sinr_db)) throw std::invalid_argument("sinr_to_spectral_efficiency: NaN input");
    return sinr_db > 0 ? eta_max : eta_min;
  }
  const double eta = std::log2(1.0 + std::pow(10.0, sinr_db / 10.0));
  return std::clamp(eta, eta_min, eta_max);
}

TttTracker::TttTracker(int n_ttt) : n_ttt_(n_ttt) {
  if (n_ttt < 1) throw std::invalid_argument("TttTracker: n_ttt must be >= 1");
}

int TttTracker::count_for(int neighbor) const {
  auto it = count_.find(neighbor);
  return it == count_.end() ? 0 : it->second;
}

std::optional<int> TttTracker::step(const std::vector<int>& neighbors, const std::vector<bool>& a3,
                                    const std::vector<double>& rank_metric) {
  if (neighbors.size() != a3.size() || neighbors.size() != rank_metric.size())
    throw std::invalid_argument("TttTracker::step: array length mismatch");

  std::optional<int> target;
  double best_rank = 0.0;
  for (size_t k = 0; k < neighbors.size(); ++k) {
    int& c = count_[neighbors[k]];
    c = a3[k] ? std::min(c + 1, n_ttt_) : 0;
    if (c >= n_ttt_) {
      // Strict > keeps the first (lowest cell) on rank ties, since
      // neighbors arrive in ascending cell order.
      if (!target || rank_metric[k] > best_rank) {
        target = neighbors[k];
        best_rank = rank_metric[k];
      }
    }
  }
  if (target) count_.clear();
  return target;
}

std::vector<int> round_robin_schedule(const std::vector<int>& need_prb, int n_prb, int64_t start) {
  const int n = static_cast<int>(need_prb.size());
  std::vector<int> alloc(n, 0);
  if (n == 0 || n_prb <= 0) return alloc;

  int unmet = 0;
  for (int need : need_prb)
    if (need > 0) ++unmet;
  int left = n_prb;
  int pos = static_cast<int>(start % n);
  while (left > 0 && unmet > 0) {
    if (alloc[pos] < need_prb[pos]) {
      ++alloc[pos];
      --left;
      if (alloc[pos] == need_prb[pos]) --unmet;
    }
    pos = (pos + 1) % n;
  }
  return alloc;
}

void HoEventLog::merge(const HoEventLog& other) {
  handovers += other.handovers;
  pingpongs += other.pingpongs;
  for (const auto& [key, n] : other.per_edge_directed) per_edge_directed[key] += n;
}

Simulator::Simulator(std::shared_ptr<const Scenario> scenario) : scenario_(std::move(scenario)) {
  scenario_->validate();
}

void Simulator::reset(uint64_t seed) {
  const Scenario& sc = *scenario_;
  rng_ = Rng(seed);
  instant_ = 0;
  cio_.bias_per_edge.assign(sc.graph.num_edges(), 0.0);

  ues_.clear();
  int next_id = 0;
  for (size_t b = 0; b < sc.boxes.size(); ++b) {
    const MobilityBox& box = sc.boxes[b];
    for (int k = 0; k < box.ue_count; ++k) {
      UeState ue;
      ue.id = next_id++;
      ue.box = static_cast<int>(b);
      ue.profile = box.profile;
      ue.x = rng_.uniform(box.xmin, box.xmax);
      ue.y = rng_.uniform(box.ymin, box.ymax);
      ue.ttt = TttTracker(sc.handover.ttt_instants);
      const TrafficProfile& prof = sc.profiles[box.profile];
      ue.traffic_on = true;
      ue.demand_bps = prof.rate_bps;
      if (prof.kind == TrafficProfile::Kind::kOnOff)
        ue.traffic_remaining_s = rng_.exponential(prof.mean_on_s);
      ues_.push_back(std::move(ue));
    }
  }

  // Initial attachment: strongest cell under zero shadowing, neutral CIO.
  for (UeState& ue : ues_) {
    int best = 0;
    double best_rsrp = -1e300;
    for (int c = 0; c < sc.graph.num_cells(); ++c) {
      const double d = std::hypot(ue.x - sc.cell_xy[c].first, ue.y - sc.cell_xy[c].second);
      const double p = rsrp_dbm(sc.radio.tx_power_dbm[c], d, sc.radio, 0.0);
      if (p > best_rsrp) {
        best_rsrp = p;
        best = c;
      }
    }
    ue.serving = best;
  }

  shadow_db_.assign(ues_.size(), std::vector<double>(sc.graph.num_cells(), 0.0));
  rsrp_now_.assign(ues_.size(), std::vector<double>(sc.graph.num_cells(), 0.0));
  rr_counter_.assign(sc.graph.num_cells(), 0);
  acc_rho_.assign(sc.graph.num_cells(), 0.0);
  acc_thr_.assign(sc.graph.num_cells(), 0.0);
  acc_ue_.assign(sc.graph.num_cells(), 0.0);
  acc_hist_.assign(sc.graph.num_cells(), std::vector<double>(sc.radio.mcs_bins, 0.0));
  acc_samples_ = 0;
  epoch_ho_ = HoEventLog{};
}

Simulator::ControlResult Simulator::step_control(const CioAssignment& cio) {
  const Scenario& sc = *scenario_;
  cio.validate(sc.graph.num_edges());
  cio_ = cio;

  // Per-epoch i.i.d. log-normal shadowing, drawn UE-major for determinism.
  for (auto& row : shadow_db_)
    for (double& s : row) s = rng_.normal(0.0, sc.radio.shadowing_std_db);

  epoch_ho_ = HoEventLog{};
  for (int n = 0; n < sc.timescale.n_meas_per_control; ++n) step_measurement();

  ControlResult out;
  const double inv = 1.0 / acc_samples_;
  out.kpis.resize(sc.graph.num_cells());
  for (int c = 0; c < sc.graph.num_cells(); ++c) {
    CellKpi& k = out.kpis[c];
    k.rho = acc_rho_[c] * inv;
    k.throughput_bps = acc_thr_[c] * inv;
    k.ue_count = acc_ue_[c] * inv;
    k.mcs_hist.assign(sc.radio.mcs_bins, 0.0);
    double total = 0.0;
    for (double h : acc_hist_[c]) total += h;
    if (total > 0.0)
      for (int b = 0; b < sc.radio.mcs_bins; ++b) k.mcs_hist[b] = acc_hist_[c][b] / total;
  }
  out.ho_log = epoch_ho_;

  acc_rho_.assign(sc.graph.num_cells(), 0.0);
  acc_thr_.assign(sc.graph.num_cells(), 0.0);
  acc_ue_.assign(sc.graph.num_cells(), 0.0);
  for (auto& h : acc_hist_) std::fill(h.begin(), h.end(), 0.0);
  acc_samples_ = 0;
  return out;
}

void Simulator::advance_mobility(UeState& ue) {
  const MobilityBox& box = scenario_->boxes[ue.box];
  const double step = box.speed_mps * scenario_->timescale.delta_meas_s;
  const double phi = rng_.uniform(0.0, 2.0 * M_PI);
  double x = ue.x + step * std::cos(phi);
  double y = ue.y + step * std::sin(phi);
  // Reflect at box walls (steps are small relative to box size).
  if (x < box.xmin) x = box.xmin + (box.xmin - x);
  if (x > box.xmax) x = box.xmax - (x - box.xmax);
  if (y < box.ymin) y = box.ymin + (box.ymin - y);
  if (y > box.ymax) y = box.ymax - (y - box.ymax);
  ue.x = std::clamp(x, box.xmin, box.xmax);
  ue.y = std::clamp(y, box.ymin, box.ymax);
}

void Simulator::update_traffic(UeState& ue) {
  const TrafficProfile& prof = scenario_->profiles[ue.profile];
  if (prof.kind == TrafficProfile::Kind::kCbr) {
    ue.demand_bps = prof.rate_bps;
    return;
  }
  double dt = scenario_->timescale.delta_meas_s;
  ue.traffic_remaining_s -= dt;
  while (ue.traffic_remaining_s <= 0.0) {
    ue.traffic_on = !ue.traffic_on;
    ue.traffic_remaining_s +=
        rng_.exponential(ue.traffic_on ? prof.mean_on_s : prof.mean_off_s);
  }
  ue.demand_bps = ue.traffic_on ? prof.rate_bps : 0.0;
}

void Simulator::compute_rsrp() {
  const Scenario& sc = *scenario_;
  for (size_t u = 0; u < ues_.size(); ++u) {
    const UeState& ue = ues_[u];
    for (int c = 0; c < sc.graph.num_cells(); ++c) {
      const double d = std::hypot(ue.x - sc.cell_xy[c].first, ue.y - sc.cell_xy[c].second);
      rsrp_now_[u][c] = rsrp_dbm(sc.radio.tx_power_dbm[c], d, sc.radio, shadow_db_[u][c]);
    }
  }
}

void Simulator::run_handovers() {
  const Scenario& sc = *scenario_;
  for (size_t u = 0; u < ues_.size(); ++u) {
    UeState& ue = ues_[u];
    const auto& nbrs = sc.graph.neighbors(ue.serving);
    std::vector<bool> a3(nbrs.size());
    std::vector<double> rank(nbrs.size());
    for (size_t k = 0; k < nbrs.size(); ++k) {
      const double cio_sj = directed_cio(sc.graph, cio_, ue.serving, nbrs[k]);
      a3[k] = a3_check(rsrp_now_[u][ue.serving], rsrp_now_[u][nbrs[k]], cio_sj,
                       sc.handover.hysteresis_db);
      rank[k] = rsrp_now_[u][nbrs[k]] + cio_sj;
    }
    auto target = ue.ttt.step(nbrs, a3, rank);
    if (target) {
      const int from = ue.serving;
      ue.serving = *target;
      ue.interruption_left = sc.handover.ho_interruption_instants;
      ++epoch_ho_.handovers;
      ++epoch_ho_.per_edge_directed[{from, *target}];
      // ping-pong: A -> B followed by B -> A within the window
      if (ue.last_ho_instant >= 0 && *target == ue.last_ho_from &&
          instant_ - ue.last_ho_instant <= sc.handover.pingpong_window_instants)
        ++epoch_ho_.pingpongs;
      ue.last_ho_instant = instant_;
      ue.last_ho_from = from;
    }
  }
}

void Simulator::schedule_cells() {
  const Scenario& sc = *scenario_;
  const double b_prb = sc.radio.prb_bandwidth_hz;

  // SINR and spectral efficiency for every UE (interference from all other
  // cells at full power).
  const double noise_dbm =
      -174.0 + 10.0 * std::log10(sc.radio.bandwidth_hz()) + sc.radio.noise_figure_db;
  const double noise_mw = std::pow(10.0, noise_dbm / 10.0);
  for (size_t u = 0; u < ues_.size(); ++u) {
    UeState& ue = ues_[u];
    double interference_mw = 0.0;
    for (int c = 0; c < sc.graph.num_cells(); ++c)
      if (c != ue.serving) interference_mw += std::pow(10.0, rsrp_now_[u][c] / 10.0);
    const double serving_mw = std::pow(10.0, rsrp_now_[u][ue.serving] / 10.0);
    const double sinr_db = 10.0 * std::log10(serving_mw / (noise_mw + interference_mw));
    ue.eta = sinr_to_spectral_efficiency(sinr_db, sc.radio.eta_min, sc.radio.eta_max);
  }

  // Demand-capped round-robin per cell. UEs in handover interruption are
  // attached but receive no PRBs this instant.
  std::vector<std::vector<int>> cell_ues(sc.graph.num_cells());
  for (size_t u = 0; u < ues_.size(); ++u) cell_ues[ues_[u].serving].push_back(static_cast<int>(u));

  for (UeState& ue : ues_) {
    ue.prb_alloc = 0;
    ue.rate_bps = 0.0;
  }
  for (int c = 0; c < sc.graph.num_cells(); ++c) {
    std::vector<int> eligible;
    for (int u : cell_ues[c])
      if (ues_[u].interruption_left == 0) eligible.push_back(u);
    if (!eligible.empty()) {
      std::vector<int> need(eligible.size());
      for (size_t k = 0; k < eligible.size(); ++k) {
        const UeState& ue = ues_[eligible[k]];
        const double denom = ue.eta * b_prb;
        int want = ue.demand_bps <= 0.0
                       ? 0
                       : static_cast<int>(std::ceil(ue.demand_bps / denom));
        need[k] = std::min(want, sc.radio.n_prb);
      }
      auto alloc = round_robin_schedule(need, sc.radio.n_prb, rr_counter_[c]);
      for (size_t k = 0; k < eligible.size(); ++k) {
        UeState& ue = ues_[eligible[k]];
        ue.prb_alloc = alloc[k];
        ue.rate_bps = alloc[k] * ue.eta * b_prb;
      }
    }
    ++rr_counter_[c];
  }

  for (UeState& ue : ues_)
    if (ue.interruption_left > 0) --ue.interruption_left;
}

void Simulator::accumulate_kpis() {
  const Scenario& sc = *scenario_;
  std::vector<int> prbs(sc.graph.num_cells(), 0);
  std::vector<double> thr(sc.graph.num_cells(), 0.0);
  std::vector<int> count(sc.graph.num_cells(), 0);
  const double span = sc.radio.eta_max - sc.radio.eta_min;
  for (const UeState& ue : ues_) {
    prbs[ue.serving] += ue.prb_alloc;
    thr[ue.serving] += ue.rate_bps;
    ++count[ue.serving];
    int bin = static_cast<int>((ue.eta - sc.radio.eta_min) / span * sc.radio.mcs_bins);
    bin = std::clamp(bin, 0, sc.radio.mcs_bins - 1);
    acc_hist_[ue.serving][bin] += 1.0;
  }
  for (int c = 0; c < sc.graph.num_cells(); ++c) {
    acc_rho_[c] += static_cast<double>(prbs[c]) / sc.radio.n_prb;
    acc_thr_[c] += thr[c];
    acc_ue_[c] += count[c];
  }
  ++acc_samples_;
}

void Simulator::step_measurement() {
  for (UeState& ue : ues_) {
    advance_mobility(ue);
    update_traffic(ue);
  }
  compute_rsrp();
  run_handovers();
  schedule_cells();
  accumulate_kpis();
  ++instant_;
}

double Simulator::current_rsrp_dbm(int cell_idx, int ue_idx) const {
  const Scenario& sc = *scenario_;
  const UeState& ue = ues_.at(ue_idx);
  const double d = std::hypot(ue.x - sc.cell_xy[cell_idx].first, ue.y - sc.cell_xy[cell_idx].second);
  return rsrp_dbm(sc.radio.tx_power_dbm[cell_idx], d, sc.radio, shadow_db_.at(ue_idx).at(cell_idx));
}

}  // namespace ciolab::sim
