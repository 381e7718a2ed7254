#include "ciolab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ciolab/rng.hpp"
#include "json.hpp"

namespace ciolab::sim {

using nlohmann::json;

void TimescaleConfig::validate() const {
  if (delta_meas_s <= 0.0) throw std::invalid_argument("timescale: delta_meas_s must be > 0");
  if (n_meas_per_control < 1) throw std::invalid_argument("timescale: n_meas_per_control must be >= 1");
}

void HandoverConfig::validate() const {
  if (hysteresis_db <= 0.0) throw std::invalid_argument("handover: hysteresis_db must be > 0");
  if (ttt_instants < 1) throw std::invalid_argument("handover: ttt_instants must be >= 1");
  if (ho_interruption_instants < 0)
    throw std::invalid_argument("handover: ho_interruption_instants must be >= 0");
  if (pingpong_window_instants < 1)
    throw std::invalid_argument("handover: pingpong_window_instants must be >= 1");
}

void RadioConfig::validate(int num_cells) const {
  if (n_prb < 1) throw std::invalid_argument("radio: n_prb must be >= 1");
  if (prb_bandwidth_hz <= 0.0) throw std::invalid_argument("radio: prb_bandwidth_hz must be > 0");
  if (static_cast<int>(tx_power_dbm.size()) != num_cells)
    throw std::invalid_argument("radio: tx_power_dbm must cover every cell");
  if (eta_min < 0.0 || eta_max <= eta_min)
    throw std::invalid_argument("radio: need 0 <= eta_min < eta_max");
  if (mcs_bins < 1) throw std::invalid_argument("radio: mcs_bins must be >= 1");
  if (ref_distance_m <= 0.0) throw std::invalid_argument("radio: ref_distance_m must be > 0");
  if (shadowing_std_db < 0.0) throw std::invalid_argument("radio: shadowing_std_db must be >= 0");
}

int Scenario::total_ues() const {
  int n = 0;
  for (const auto& b : boxes) n += b.ue_count;
  return n;
}

void Scenario::validate() const {
  timescale.validate();
  handover.validate();
  radio.validate(graph.num_cells());
  if (!graph.is_connected()) throw std::invalid_argument("scenario: graph must be connected");
  if (graph.num_edges() == 0) throw std::invalid_argument("scenario: no controllable CIOs");
  if (static_cast<int>(cell_xy.size()) != graph.num_cells())
    throw std::invalid_argument("scenario: coordinates must cover every cell");
  if (profiles.empty()) throw std::invalid_argument("scenario: at least one traffic profile");
  for (const auto& p : profiles) {
    if (p.rate_bps <= 0.0) throw std::invalid_argument("scenario: profile rate must be > 0");
    if (p.kind == TrafficProfile::Kind::kOnOff && (p.mean_on_s <= 0.0 || p.mean_off_s <= 0.0))
      throw std::invalid_argument("scenario: on/off durations must be > 0");
  }
  if (boxes.empty()) throw std::invalid_argument("scenario: at least one mobility box");
  for (const auto& b : boxes) {
    if (b.xmax <= b.xmin || b.ymax <= b.ymin)
      throw std::invalid_argument("scenario: degenerate mobility box");
    if (b.ue_count < 0) throw std::invalid_argument("scenario: negative UE count");
    if (b.speed_mps < 0.0) throw std::invalid_argument("scenario: negative speed");
    if (b.profile < 0 || b.profile >= static_cast<int>(profiles.size()))
      throw std::invalid_argument("scenario: box references unknown traffic profile");
  }
  if (total_ues() == 0) throw std::invalid_argument("scenario: zero UEs");
  if (episode_epochs < 1) throw std::invalid_argument("scenario: episode_epochs must be >= 1");
  if (reference_rate_bps <= 0.0) throw std::invalid_argument("scenario: reference_rate_bps must be > 0");
}

namespace {

double require_number(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw std::invalid_argument("scenario " + ctx + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument("scenario " + origin + ": JSON parse error: " + e.what());
  }

  Scenario sc;
  sc.name = j.value("name", origin);
  sc.content_hash = fnv1a(text.data(), text.size());

  // graph section
  if (!j.contains("graph")) throw std::invalid_argument("scenario " + origin + ": missing 'graph'");
  const json& jg = j.at("graph");
  std::vector<topo::CellId> cells;
  std::map<topo::CellId, std::pair<double, double>> xy;
  for (const json& jc : jg.at("cells")) {
    topo::CellId id = jc.at("id").get<int>();
    cells.push_back(id);
    xy[id] = {require_number(jc, "x", "cell"), require_number(jc, "y", "cell")};
    if (jc.contains("site")) sc.site_of[id] = jc.at("site").get<int>();
  }
  std::vector<topo::Edge> edges;
  for (const json& je : jg.at("edges")) {
    if (!je.is_array() || je.size() != 2)
      throw std::invalid_argument("scenario " + origin + ": edge must be a [i, j] pair");
    edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
  }
  sc.graph = topo::NetworkGraph::from_edges(cells, edges);
  sc.cell_xy.resize(sc.graph.num_cells());
  for (int c = 0; c < sc.graph.num_cells(); ++c) sc.cell_xy[c] = xy.at(sc.graph.cell_id(c));
  if (!sc.site_of.empty() && static_cast<int>(sc.site_of.size()) != sc.graph.num_cells())
    throw std::invalid_argument("scenario " + origin + ": partial site map");

  // timescale section
  if (j.contains("timescale")) {
    const json& jt = j.at("timescale");
    sc.timescale.delta_meas_s = jt.value("delta_meas_s", sc.timescale.delta_meas_s);
    sc.timescale.n_meas_per_control =
        jt.value("n_meas_per_control", sc.timescale.n_meas_per_control);
  }

  // handover section
  if (j.contains("handover")) {
    const json& jh = j.at("handover");
    sc.handover.hysteresis_db = jh.value("hysteresis_db", sc.handover.hysteresis_db);
    if (jh.contains("ttt_instants")) {
      sc.handover.ttt_instants = jh.at("ttt_instants").get<int>();
    } else if (jh.contains("ttt_ms")) {
      sc.handover.ttt_instants = static_cast<int>(
          std::ceil(jh.at("ttt_ms").get<double>() / 1000.0 / sc.timescale.delta_meas_s));
    }
    sc.handover.ho_interruption_instants =
        jh.value("ho_interruption_instants", sc.handover.ho_interruption_instants);
    sc.handover.pingpong_window_instants =
        jh.value("pingpong_window_instants", sc.handover.pingpong_window_instants);
  } else {
    // Default TTT: 110 ms rounded up to whole measurement instants.
    sc.handover.ttt_instants =
        static_cast<int>(std::ceil(0.110 / sc.timescale.delta_meas_s));
  }
  if (sc.handover.ttt_instants < 1) sc.handover.ttt_instants = 1;

  // radio section
  if (!j.contains("radio")) throw std::invalid_argument("scenario " + origin + ": missing 'radio'");
  {
    const json& jr = j.at("radio");
    sc.radio.n_prb = jr.value("n_prb", sc.radio.n_prb);
    sc.radio.prb_bandwidth_hz = jr.value("prb_bandwidth_hz", sc.radio.prb_bandwidth_hz);
    sc.radio.pathloss_exponent = jr.value("pathloss_exponent", sc.radio.pathloss_exponent);
    sc.radio.ref_loss_db = jr.value("ref_loss_db", sc.radio.ref_loss_db);
    sc.radio.ref_distance_m = jr.value("ref_distance_m", sc.radio.ref_distance_m);
    sc.radio.shadowing_std_db = jr.value("shadowing_std_db", sc.radio.shadowing_std_db);
    sc.radio.noise_figure_db = jr.value("noise_figure_db", sc.radio.noise_figure_db);
    sc.radio.eta_min = jr.value("min_spectral_efficiency", sc.radio.eta_min);
    sc.radio.eta_max = jr.value("max_spectral_efficiency", sc.radio.eta_max);
    sc.radio.mcs_bins = jr.value("mcs_bins", sc.radio.mcs_bins);
    double default_tx = jr.value("tx_power_dbm", 43.0);
    sc.radio.tx_power_dbm.assign(sc.graph.num_cells(), default_tx);
    if (jr.contains("tx_power_dbm_per_cell")) {
      for (auto& [key, val] : jr.at("tx_power_dbm_per_cell").items())
        sc.radio.tx_power_dbm[sc.graph.cell_index(std::stoi(key))] = val.get<double>();
    }
  }

  // traffic section
  if (!j.contains("traffic")) throw std::invalid_argument("scenario " + origin + ": missing 'traffic'");
  std::map<std::string, int> profile_index;
  for (const json& jp : j.at("traffic").at("profiles")) {
    TrafficProfile p;
    p.name = jp.at("name").get<std::string>();
    std::string type = jp.value("type", "cbr");
    if (type == "cbr") {
      p.kind = TrafficProfile::Kind::kCbr;
    } else if (type == "onoff") {
      p.kind = TrafficProfile::Kind::kOnOff;
      p.mean_on_s = require_number(jp, "mean_on_s", "profile " + p.name);
      p.mean_off_s = require_number(jp, "mean_off_s", "profile " + p.name);
    } else {
      throw std::invalid_argument("scenario " + origin + ": unknown traffic type '" + type + "'");
    }
    p.rate_bps = require_number(jp, "rate_bps", "profile " + p.name);
    profile_index[p.name] = static_cast<int>(sc.profiles.size());
    sc.profiles.push_back(p);
  }

  // mobility section
  if (!j.contains("mobility")) throw std::invalid_argument("scenario " + origin + ": missing 'mobility'");
  for (const json& jb : j.at("mobility").at("boxes")) {
    MobilityBox b;
    b.kind = jb.value("type", "red");
    b.xmin = require_number(jb, "xmin", "box");
    b.xmax = require_number(jb, "xmax", "box");
    b.ymin = require_number(jb, "ymin", "box");
    b.ymax = require_number(jb, "ymax", "box");
    b.ue_count = jb.at("ue_count").get<int>();
    b.speed_mps = jb.value("speed_mps", 1.5);
    std::string prof = jb.value("profile", sc.profiles.front().name);
    auto it = profile_index.find(prof);
    if (it == profile_index.end())
      throw std::invalid_argument("scenario " + origin + ": box references unknown profile '" + prof + "'");
    b.profile = it->second;
    sc.boxes.push_back(b);
  }

  // episode section
  if (j.contains("episode")) sc.episode_epochs = j.at("episode").value("epochs", sc.episode_epochs);

  // learning-side scaling reference; default: total offered load.
  double offered = 0.0;
  for (const auto& b : sc.boxes) offered += b.ue_count * sc.profiles[b.profile].rate_bps;
  sc.reference_rate_bps = j.value("reference_rate_bps", offered);

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("scenario: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return scenario_from_json_text(buf.str(), path);
}

}  // namespace ciolab::sim
