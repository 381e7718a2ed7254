#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "ciolab/harness.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ciolab;

int main(int argc, char** argv) {
  CLI::App app{"ciolab: cellular CIO handover optimization laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", scenario_path, checkpoint_path, log_path, trace_path;
  uint64_t seed = 0;
  bool seed_given = false;
  std::string policy = "rrm";
  int episodes = 5;
  int window = 10;
  int64_t oracle_steps = 0;
  double rmin = 0.0, rmax = 0.0;
  bool have_norm = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_dir, "Output directory");
    cmd->add_option_function<uint64_t>(
        "--seed", [&](uint64_t s) { seed = s; seed_given = true; }, "Master seed override");
  };

  auto* train_cmd = app.add_subcommand("train", "Train a policy per an experiment config");
  train_cmd->add_option("--config", config_path, "Experiment JSON")->required();
  add_common(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy per an experiment config");
  eval_cmd->add_option("--config", config_path, "Experiment JSON")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Actor checkpoint (rl-checkpoint policy)");
  eval_cmd->add_option("--trace", trace_path, "Episode trace JSON-lines output");
  add_common(eval_cmd);

  auto* baseline_cmd = app.add_subcommand("baseline", "Run a heuristic baseline on one scenario");
  baseline_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  baseline_cmd->add_option("--policy", policy, "rrm|son|delta-cio|random")->required();
  baseline_cmd->add_option("--episodes", episodes, "Evaluation episodes");
  add_common(baseline_cmd);

  auto* refs_cmd = app.add_subcommand("refs", "Compute normalization references for a scenario");
  refs_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  refs_cmd->add_option("--config", config_path, "Experiment JSON (oracle settings)");
  refs_cmd->add_option("--episodes", episodes, "Reference evaluation episodes");
  refs_cmd->add_option("--oracle-steps", oracle_steps, "Oracle training steps override");
  add_common(refs_cmd);

  auto* graph_cmd = app.add_subcommand("graph", "Topology utilities");
  auto* dump_cmd = graph_cmd->add_subcommand("dump", "Dump primal and dual graphs as edge lists");
  dump_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  add_common(dump_cmd);

  auto* plot_cmd = app.add_subcommand("plot-data", "Smooth a training log into plot-ready tables");
  plot_cmd->add_option("--log", log_path, "train_log.csv path")->required();
  plot_cmd->add_option("--window", window, "Smoothing window (rows)");
  plot_cmd->add_option("--rmin", rmin, "Normalization lower reference");
  plot_cmd->add_option("--rmax", [&](const CLI::results_t& r) {
    have_norm = true;
    return CLI::detail::lexical_cast(r[0], rmax);
  }, "Normalization upper reference");
  add_common(plot_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd || *eval_cmd) {
      harness::ExperimentSpec spec = harness::load_experiment(config_path);
      if (seed_given) spec.master_seed = seed;
      if (*eval_cmd && !checkpoint_path.empty()) {
        spec.policy = "rl-checkpoint";
        spec.checkpoint = checkpoint_path;
      }
      if (*eval_cmd && spec.policy == "rl")
        throw std::invalid_argument("eval: 'rl' policy trains first; use the train subcommand "
                                    "or pass --checkpoint");
      harness::run_experiment(spec, out_dir);
      std::cout << "results written to " << out_dir << "\n";
    } else if (*baseline_cmd) {
      harness::ExperimentSpec spec;
      spec.train_scenarios = {scenario_path};
      spec.policy = policy;
      spec.eval_episodes = episodes;
      spec.refs.mode = "none";
      if (seed_given) spec.master_seed = seed;
      harness::run_experiment(spec, out_dir);
      std::cout << "results written to " << out_dir << "\n";
    } else if (*refs_cmd) {
      harness::ExperimentSpec spec;
      if (!config_path.empty()) spec = harness::load_experiment(config_path);
      if (seed_given) spec.master_seed = seed;
      if (oracle_steps > 0) spec.refs.oracle_steps = oracle_steps;
      auto seeds = harness::eval_seeds(spec.master_seed, episodes);
      auto refs = harness::compute_references(spec, scenario_path, seeds, out_dir);
      std::cout << "R_min=" << harness::format_double(refs.rmin)
                << " R_max=" << harness::format_double(refs.rmax) << "\n";
      for (const auto& [name, v] : refs.heuristic_means)
        std::cout << "  " << name << "=" << harness::format_double(v) << "\n";
    } else if (*dump_cmd) {
      auto scenario = sim::load_scenario(scenario_path);
      auto dual = topo::build_dual_graph(scenario.graph);
      fs::create_directories(out_dir);
      harness::write_text_file((fs::path(out_dir) / "primal_edges.txt").string(),
                               topo::dump_primal(scenario.graph));
      harness::write_text_file((fs::path(out_dir) / "dual_edges.txt").string(),
                               topo::dump_dual(scenario.graph, dual));
      std::cout << "graphs written to " << out_dir << "\n";
    } else if (*plot_cmd) {
      std::optional<std::pair<double, double>> norm;
      if (have_norm) norm = {rmin, rmax};
      harness::emit_plot_data(log_path, window, out_dir, norm);
      std::cout << "plot data written to " << out_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
