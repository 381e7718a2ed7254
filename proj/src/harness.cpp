#include "ciolab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ciolab/env.hpp"
#include "json.hpp"

namespace ciolab::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

void ExperimentSpec::validate() const {
  if (train_scenarios.empty() && test_scenarios.empty())
    throw std::invalid_argument("experiment: no scenarios given");
  std::set<std::string> train_set(train_scenarios.begin(), train_scenarios.end());
  for (const auto& t : test_scenarios)
    if (train_set.count(t))
      throw std::invalid_argument("experiment: train and test scenario sets must be disjoint: " + t);
  for (const auto& p : train_scenarios)
    if (!fs::exists(p)) throw std::invalid_argument("experiment: missing scenario file " + p);
  for (const auto& p : test_scenarios)
    if (!fs::exists(p)) throw std::invalid_argument("experiment: missing scenario file " + p);
  static const std::set<std::string> kPolicies = {"rl", "rrm", "son", "delta-cio", "random",
                                                  "rl-checkpoint"};
  if (!kPolicies.count(policy)) throw std::invalid_argument("experiment: unknown policy " + policy);
  if (policy == "rl-checkpoint" && checkpoint.empty())
    throw std::invalid_argument("experiment: rl-checkpoint needs a checkpoint path");
  if (region_mode != "centralized" && region_mode != "decompose")
    throw std::invalid_argument("experiment: region_mode must be centralized or decompose");
  if (observation_hops < 0) throw std::invalid_argument("experiment: negative observation_hops");
  if (eval_episodes < 1) throw std::invalid_argument("experiment: eval_episodes must be >= 1");
  if (refs.mode != "compute" && refs.mode != "frozen" && refs.mode != "none")
    throw std::invalid_argument("experiment: refs.mode must be compute, frozen, or none");
  train.validate();
  heuristics.validate();
}

namespace {

rl::ActorConfig actor_from_json(const json& j) {
  rl::ActorConfig cfg;
  std::string backbone = j.value("backbone", "in");
  if (backbone == "in") {
    cfg.backbone = nn::Backbone::kInteraction;
  } else if (backbone == "gcn") {
    cfg.backbone = nn::Backbone::kGcn;
  } else {
    throw std::invalid_argument("experiment: actor backbone must be 'in' or 'gcn'");
  }
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.message_hops = j.value("message_hops", cfg.message_hops);
  cfg.head_hidden = j.value("head_hidden", cfg.head_hidden);
  return cfg;
}

rl::CriticConfig critic_from_json(const json& j) {
  rl::CriticConfig cfg;
  std::string kind = j.value("kind", "mlp");
  if (kind == "mlp") {
    cfg.kind = rl::CriticConfig::Kind::kMlp;
  } else if (kind == "gnn") {
    cfg.kind = rl::CriticConfig::Kind::kGnnReadout;
  } else {
    throw std::invalid_argument("experiment: critic kind must be 'mlp' or 'gnn'");
  }
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.mlp_layers = j.value("mlp_layers", cfg.mlp_layers);
  cfg.gnn_layers = j.value("gnn_layers", cfg.gnn_layers);
  return cfg;
}

rl::TrainConfig train_from_json(const json& j, rl::TrainConfig cfg) {
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.eta1 = j.value("eta1", cfg.eta1);
  cfg.eta2 = j.value("eta2", cfg.eta2);
  cfg.eta2_linear_decay = j.value("eta2_linear_decay", cfg.eta2_linear_decay);
  cfg.gumbel_tau = j.value("gumbel_tau", cfg.gumbel_tau);
  cfg.huber_delta = j.value("huber_delta", cfg.huber_delta);
  cfg.actor_delay = j.value("actor_delay", cfg.actor_delay);
  cfg.polyak = j.value("polyak", cfg.polyak);
  cfg.actor_lr = j.value("actor_lr", cfg.actor_lr);
  cfg.critic_lr = j.value("critic_lr", cfg.critic_lr);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.min_buffer = j.value("min_buffer", cfg.min_buffer);
  cfg.capacity = j.value("capacity", cfg.capacity);
  cfg.total_steps = j.value("total_steps", cfg.total_steps);
  return cfg;
}

}  // namespace

ExperimentSpec experiment_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument("experiment " + origin + ": JSON parse error: " + e.what());
  }
  ExperimentSpec spec;
  spec.train_scenarios = j.value("train_scenarios", spec.train_scenarios);
  spec.test_scenarios = j.value("test_scenarios", spec.test_scenarios);
  spec.policy = j.value("policy", spec.policy);
  spec.checkpoint = j.value("checkpoint", spec.checkpoint);
  spec.region_mode = j.value("region_mode", spec.region_mode);
  if (j.contains("region_centers"))
    spec.region_centers = j.at("region_centers").get<std::vector<int>>();
  spec.region_hops = j.value("region_hops", spec.region_hops);
  spec.site_level_regions = j.value("site_level_regions", spec.site_level_regions);
  spec.observation_hops = j.value("observation_hops", spec.observation_hops);
  if (j.contains("actor")) spec.actor = actor_from_json(j.at("actor"));
  if (j.contains("critic")) spec.critic = critic_from_json(j.at("critic"));
  if (j.contains("train")) spec.train = train_from_json(j.at("train"), spec.train);
  spec.eval_episodes = j.value("eval_episodes", spec.eval_episodes);
  spec.master_seed = j.value("master_seed", spec.master_seed);
  if (j.contains("refs")) {
    const json& jr = j.at("refs");
    spec.refs.mode = jr.value("mode", spec.refs.mode);
    spec.refs.oracle_steps = jr.value("oracle_steps", spec.refs.oracle_steps);
    spec.refs.cache_dir = jr.value("cache_dir", spec.refs.cache_dir);
    if (jr.contains("frozen"))
      for (auto& [path, vals] : jr.at("frozen").items())
        spec.refs.frozen[path] = {vals.at("rmin").get<double>(), vals.at("rmax").get<double>()};
  }
  if (j.contains("heuristics")) {
    const json& jh = j.at("heuristics");
    spec.heuristics.rrm_margin_db = jh.value("rrm_margin_db", spec.heuristics.rrm_margin_db);
    spec.heuristics.son_margin_db = jh.value("son_margin_db", spec.heuristics.son_margin_db);
    spec.heuristics.son_ttt_ms = jh.value("son_ttt_ms", spec.heuristics.son_ttt_ms);
    spec.heuristics.delta_cio_db = jh.value("delta_cio_db", spec.heuristics.delta_cio_db);
    spec.heuristics.load_diff_threshold =
        jh.value("load_diff_threshold", spec.heuristics.load_diff_threshold);
  }
  // The actor's message-passing depth tracks the observation radius unless
  // overridden explicitly.
  if (!j.contains("actor") || !j.at("actor").contains("message_hops"))
    spec.actor.message_hops = std::max(1, spec.observation_hops);
  spec.validate();
  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("experiment: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return experiment_from_json_text(buf.str(), path);
}

std::vector<topo::Region> build_regions(const ExperimentSpec& spec, const sim::Scenario& scenario) {
  if (spec.region_mode == "centralized") return {topo::centralized_region(scenario.graph)};
  const std::map<topo::CellId, int>* site_of =
      spec.site_level_regions && !scenario.site_of.empty() ? &scenario.site_of : nullptr;
  std::vector<topo::CellId> centers = spec.region_centers;
  if (centers.empty()) centers = topo::greedy_centers(scenario.graph, spec.region_hops, site_of);
  return topo::decompose_regions(scenario.graph, centers, spec.region_hops, site_of);
}

std::vector<uint64_t> eval_seeds(uint64_t master_seed, int episodes) {
  std::vector<uint64_t> seeds(episodes);
  for (int k = 0; k < episodes; ++k)
    seeds[k] = derive_seed(master_seed, "eval-episode", static_cast<uint64_t>(k));
  return seeds;
}

namespace {

std::shared_ptr<const sim::Scenario> load_shared_scenario(const std::string& path) {
  return std::make_shared<const sim::Scenario>(sim::load_scenario(path));
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// Rollout with a fixed per-epoch action callback.
template <typename PolicyFn>
std::vector<double> rollout_policy(std::shared_ptr<const sim::Scenario> scenario,
                                   const ExperimentSpec& spec, const std::vector<uint64_t>& seeds,
                                   PolicyFn&& policy_fn) {
  mdp::Environment env(scenario, build_regions(spec, *scenario));
  std::vector<double> returns;
  returns.reserve(seeds.size());
  for (uint64_t seed : seeds) {
    GlobalState s = env.reset(seed);
    double ep_return = 0.0;
    bool done = false;
    int epoch = 0;
    policy_fn(s, epoch, nullptr);  // episode-start notification
    while (!done) {
      JointAction a;
      policy_fn(s, epoch, &a);
      auto res = env.step(a);
      ep_return += res.reward.team_reward;
      s = std::move(res.state);
      done = res.done;
      ++epoch;
    }
    returns.push_back(ep_return);
  }
  return returns;
}

}  // namespace

std::vector<double> evaluate_policy(const std::string& policy, const ExperimentSpec& spec,
                                    const std::string& scenario_path, const rl::Actor* actor,
                                    const std::vector<uint64_t>& seeds) {
  auto base = sim::load_scenario(scenario_path);

  if (policy == "rrm" || policy == "son") {
    sim::Scenario modified = base;
    modified.handover = policy == "rrm"
                            ? heur::rrm_handover_config(base.handover, spec.heuristics)
                            : heur::son_handover_config(base.handover, base.timescale, spec.heuristics);
    auto scenario = std::make_shared<const sim::Scenario>(std::move(modified));
    const int n_edges = scenario->graph.num_edges();
    return rollout_policy(scenario, spec, seeds,
                          [n_edges](const GlobalState&, int, JointAction* out) {
                            if (out) *out = heur::neutral_action(n_edges);
                          });
  }
  if (policy == "delta-cio") {
    auto scenario = std::make_shared<const sim::Scenario>(base);
    auto dc = std::make_shared<heur::DeltaCioPolicy>(scenario->graph, spec.heuristics);
    return rollout_policy(scenario, spec, seeds,
                          [dc](const GlobalState& s, int, JointAction* out) {
                            if (!out) {
                              dc->reset();
                            } else {
                              *out = dc->act(s);
                            }
                          });
  }
  if (policy == "random") {
    auto scenario = std::make_shared<const sim::Scenario>(base);
    const int n_edges = scenario->graph.num_edges();
    auto rng = std::make_shared<Rng>(derive_seed(spec.master_seed, "random-policy"));
    return rollout_policy(scenario, spec, seeds,
                          [n_edges, rng](const GlobalState&, int, JointAction* out) {
                            if (out) *out = heur::random_action(n_edges, *rng);
                          });
  }
  if (policy == "rl" || policy == "rl-checkpoint") {
    if (!actor) throw std::invalid_argument("evaluate_policy: RL policy needs an actor");
    auto scenario = std::make_shared<const sim::Scenario>(base);
    mdp::Environment env(scenario, build_regions(spec, *scenario));
    return rl::evaluate(*actor, env, seeds);
  }
  throw std::invalid_argument("evaluate_policy: unknown policy " + policy);
}

References compute_references(const ExperimentSpec& spec, const std::string& scenario_path,
                              const std::vector<uint64_t>& seeds, const std::string& cache_dir) {
  auto scenario = sim::load_scenario(scenario_path);

  // Seed-set fingerprint for the cache key.
  uint64_t seed_hash = fnv1a(seeds.data(), seeds.size() * sizeof(uint64_t));
  char key[64];
  std::snprintf(key, sizeof(key), "refs_%016llx_%016llx.json",
                static_cast<unsigned long long>(scenario.content_hash),
                static_cast<unsigned long long>(seed_hash));
  fs::path cache_path = fs::path(cache_dir) / key;

  if (fs::exists(cache_path)) {
    try {
      std::ifstream is(cache_path);
      json j = json::parse(is);
      if (j.at("scenario_hash").get<uint64_t>() == scenario.content_hash) {
        References r;
        r.rmin = j.at("rmin").get<double>();
        r.rmax = j.at("rmax").get<double>();
        for (auto& [name, v] : j.at("heuristics").items()) r.heuristic_means[name] = v.get<double>();
        return r;
      }
    } catch (const std::exception&) {
      // cache corruption: fall through and recompute
    }
  }

  References r;
  for (const std::string& h : {std::string("rrm"), std::string("son"), std::string("delta-cio")}) {
    double m = mean(evaluate_policy(h, spec, scenario_path, nullptr, seeds));
    r.heuristic_means[h] = m;
    r.rmin = std::max(r.rmin, m);
  }
  if (r.heuristic_means.empty()) throw std::runtime_error("compute_references: no heuristics");
  r.rmin = std::max_element(r.heuristic_means.begin(), r.heuristic_means.end(),
                            [](auto& a, auto& b) { return a.second < b.second; })
               ->second;

  // Oracle specialization: a centralized policy trained solely on this
  // scenario, then evaluated greedily on the same seeds.
  {
    ExperimentSpec oracle = spec;
    oracle.region_mode = "centralized";
    oracle.train.total_steps = spec.refs.oracle_steps;
    oracle.train.seed = derive_seed(spec.master_seed, "oracle", scenario.content_hash);
    auto shared = std::make_shared<const sim::Scenario>(scenario);
    mdp::Environment env(shared, build_regions(oracle, *shared));
    rl::Trainer trainer({&env}, oracle.actor, oracle.critic, oracle.train);
    trainer.train();
    mdp::Environment eval_env(shared, build_regions(oracle, *shared));
    r.rmax = mean(rl::evaluate(trainer.actor(), eval_env, seeds));
  }

  if (!cache_dir.empty()) {
    fs::create_directories(cache_dir);
    json j;
    j["scenario_hash"] = scenario.content_hash;
    j["seeds"] = seeds;
    j["rmin"] = r.rmin;
    j["rmax"] = r.rmax;
    j["oracle_steps"] = spec.refs.oracle_steps;
    json jh;
    for (const auto& [name, v] : r.heuristic_means) jh[name] = v;
    j["heuristics"] = jh;
    write_text_file(cache_path.string(), j.dump(2) + "\n");
  }
  return r;
}

void write_text_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::string training_log_csv(const std::vector<rl::LogRow>& rows) {
  std::ostringstream os;
  os << "# ciolab-csv v1 train-log\n";
  os << "step,episode,region_id,critic1_loss,critic2_loss,actor_obj,mean_q,epsilon_uniform,return\n";
  for (const auto& r : rows) {
    os << r.step << ',' << r.episode << ',' << r.region_id << ',' << format_double(r.critic1_loss)
       << ',' << format_double(r.critic2_loss) << ','
       << (r.actor_obj ? format_double(*r.actor_obj) : std::string()) << ','
       << format_double(r.mean_q) << ',' << format_double(r.epsilon_uniform) << ','
       << format_double(r.episode_return) << "\n";
  }
  return os.str();
}

void run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
  spec.validate();
  fs::create_directories(out_dir);
  const auto seeds = eval_seeds(spec.master_seed, spec.eval_episodes);

  // Train when the policy is learned.
  std::unique_ptr<rl::Actor> actor;
  if (spec.policy == "rl") {
    std::vector<std::shared_ptr<const sim::Scenario>> scenarios;
    std::vector<std::unique_ptr<mdp::Environment>> envs;
    std::vector<mdp::Environment*> env_ptrs;
    for (const auto& path : spec.train_scenarios) {
      scenarios.push_back(load_shared_scenario(path));
      envs.push_back(std::make_unique<mdp::Environment>(scenarios.back(),
                                                        build_regions(spec, *scenarios.back())));
      env_ptrs.push_back(envs.back().get());
    }
    if (env_ptrs.empty()) throw std::invalid_argument("run_experiment: rl policy needs train scenarios");
    rl::TrainConfig train_cfg = spec.train;
    train_cfg.seed = derive_seed(spec.master_seed, "train");
    rl::Trainer trainer(env_ptrs, spec.actor, spec.critic, train_cfg);
    trainer.train();
    write_text_file((fs::path(out_dir) / "train_log.csv").string(), training_log_csv(trainer.log()));
    trainer.save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string());
    actor = std::make_unique<rl::Actor>(trainer.actor());
  } else if (spec.policy == "rl-checkpoint") {
    auto first = load_shared_scenario(!spec.train_scenarios.empty() ? spec.train_scenarios.front()
                                                                    : spec.test_scenarios.front());
    actor = std::make_unique<rl::Actor>(spec.actor, 2 * (3 + first->radio.mcs_bins),
                                        derive_seed(spec.master_seed, "actor-init"));
    actor->params().load(spec.checkpoint);
  }

  // Matched (train scenarios) and mismatched (test scenarios) evaluation.
  std::ostringstream eval_csv;
  eval_csv << "# ciolab-csv v1 eval\n";
  eval_csv << "scenario,scenario_hash,split,policy,episode,seed,return\n";
  std::ostringstream norm_csv;
  norm_csv << "# ciolab-csv v1 normalized\n";
  norm_csv << "scenario,scenario_hash,policy,R,R_min,R_max,r_bar,flagged\n";

  auto eval_one = [&](const std::string& path, const std::string& split) {
    auto scenario = sim::load_scenario(path);
    auto returns = evaluate_policy(spec.policy, spec, path, actor.get(), seeds);
    for (size_t k = 0; k < returns.size(); ++k) {
      eval_csv << path << ',' << std::hex << scenario.content_hash << std::dec << ',' << split << ','
               << spec.policy << ',' << k << ',' << seeds[k] << ',' << format_double(returns[k])
               << "\n";
    }
    if (spec.refs.mode != "none") {
      References refs;
      if (spec.refs.mode == "frozen") {
        auto it = spec.refs.frozen.find(path);
        if (it == spec.refs.frozen.end())
          throw std::invalid_argument("run_experiment: no frozen refs for " + path);
        refs.rmin = it->second.first;
        refs.rmax = it->second.second;
      } else {
        std::string cache = spec.refs.cache_dir.empty() ? out_dir : spec.refs.cache_dir;
        refs = compute_references(spec, path, seeds, cache);
      }
      const double r = mean(returns);
      const double denom = refs.rmax - refs.rmin;
      const double rbar = denom != 0.0 ? (r - refs.rmin) / denom
                                       : std::numeric_limits<double>::quiet_NaN();
      const bool flagged = !(rbar >= -0.5 && rbar <= 1.5);
      norm_csv << path << ',' << std::hex << scenario.content_hash << std::dec << ',' << spec.policy
               << ',' << format_double(r) << ',' << format_double(refs.rmin) << ','
               << format_double(refs.rmax) << ',' << format_double(rbar) << ','
               << (flagged ? 1 : 0) << "\n";
    }
  };

  for (const auto& path : spec.train_scenarios) eval_one(path, "matched");
  for (const auto& path : spec.test_scenarios) eval_one(path, "mismatched");

  write_text_file((fs::path(out_dir) / "eval.csv").string(), eval_csv.str());
  if (spec.refs.mode != "none")
    write_text_file((fs::path(out_dir) / "normalized.csv").string(), norm_csv.str());

  // Run manifest: config echo plus content hashes for provenance.
  json manifest;
  manifest["version"] = 1;
  manifest["policy"] = spec.policy;
  manifest["master_seed"] = spec.master_seed;
  manifest["eval_episodes"] = spec.eval_episodes;
  json scenarios_json = json::array();
  auto add_scenarios = [&](const std::vector<std::string>& paths, const char* split) {
    for (const auto& p : paths) {
      json s;
      s["path"] = p;
      s["split"] = split;
      char hex[32];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(sim::load_scenario(p).content_hash));
      s["hash"] = hex;
      scenarios_json.push_back(std::move(s));
    }
  };
  add_scenarios(spec.train_scenarios, "train");
  add_scenarios(spec.test_scenarios, "test");
  manifest["scenarios"] = scenarios_json;
  manifest["region_mode"] = spec.region_mode;
  manifest["observation_hops"] = spec.observation_hops;
  write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

void emit_plot_data(const std::string& log_csv_path, int window, const std::string& out_dir,
                    std::optional<std::pair<double, double>> normalize) {
  if (window < 1) throw std::invalid_argument("emit_plot_data: window must be >= 1");
  std::ifstream is(log_csv_path);
  if (!is) throw std::invalid_argument("emit_plot_data: cannot open " + log_csv_path);

  std::vector<std::pair<int64_t, double>> series;  // (step, return) from region 0 rows
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() < 9) continue;
    if (std::stoi(fields[2]) != 0) continue;  // region 0 carries the run series
    series.emplace_back(std::stoll(fields[0]), std::stod(fields[8]));
  }

  auto transform = [&](double v) {
    if (!normalize) return v;
    auto [rmin, rmax] = *normalize;
    return (v - rmin) / (rmax - rmin);
  };

  std::ostringstream os;
  os << "# ciolab-csv v1 plot-return\n";
  os << "step,smoothed_return\n";
  double acc = 0.0;
  std::vector<double> win;
  for (size_t k = 0; k < series.size(); ++k) {
    win.push_back(series[k].second);
    acc += series[k].second;
    if (static_cast<int>(win.size()) > window) {
      acc -= win[win.size() - window - 1];
    }
    if (static_cast<int>(win.size()) >= window) {
      os << series[k].first << ',' << format_double(transform(acc / window)) << "\n";
    }
  }
  write_text_file((fs::path(out_dir) / "plot_return.csv").string(), os.str());

  std::ostringstream fin;
  fin << "# ciolab-csv v1 plot-final\n";
  fin << "metric,value\n";
  if (!series.empty()) {
    const size_t tail = std::max<size_t>(1, series.size() / 10);
    double s = 0.0;
    for (size_t k = series.size() - tail; k < series.size(); ++k) s += series[k].second;
    fin << "final_return_mean," << format_double(transform(s / tail)) << "\n";
    fin << "final_window," << tail << "\n";
  }
  write_text_file((fs::path(out_dir) / "plot_final.csv").string(), fin.str());
}

}  // namespace ciolab::harness
