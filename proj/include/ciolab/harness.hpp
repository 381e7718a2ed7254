#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ciolab/baselines.hpp"
#include "ciolab/scenario.hpp"
#include "ciolab/td3dma.hpp"
#include "ciolab/topology.hpp"

namespace ciolab::harness {

// Shortest round-trip decimal rendering; keeps result files byte-stable.
std::string format_double(double v);

struct RefsConfig {
  // "compute": heuristics + oracle training (cached by scenario/seed hash);
  // "frozen": values supplied per scenario path; "none": skip normalization.
  std::string mode = "compute";
  int64_t oracle_steps = 15000;
  std::map<std::string, std::pair<double, double>> frozen;  // path -> (rmin, rmax)
  std::string cache_dir;  // defaults to the run output directory
};

struct ExperimentSpec {
  std::vector<std::string> train_scenarios;
  std::vector<std::string> test_scenarios;
  std::string policy = "rl";  // rl | rrm | son | delta-cio | random | rl-checkpoint
  std::string checkpoint;     // rl-checkpoint input
  std::string region_mode = "centralized";  // "centralized" | "decompose"
  std::vector<topo::CellId> region_centers;  // empty -> greedy max-coverage fallback
  int region_hops = 2;
  bool site_level_regions = false;
  int observation_hops = 2;
  rl::ActorConfig actor;
  rl::CriticConfig critic;
  rl::TrainConfig train;
  heur::HeuristicConfig heuristics;
  int eval_episodes = 5;
  uint64_t master_seed = 1;
  RefsConfig refs;

  void validate() const;
};

ExperimentSpec experiment_from_json_text(const std::string& text, const std::string& origin);
ExperimentSpec load_experiment(const std::string& path);

// Critic regions for a scenario according to the spec's region settings.
std::vector<topo::Region> build_regions(const ExperimentSpec& spec, const sim::Scenario& scenario);

// Mean-return references for one scenario: R_min is the best heuristic,
// R_max a centralized policy trained solely on this scenario. Cached on
// disk keyed by (scenario hash, seed set).
struct References {
  double rmin = 0.0;
  double rmax = 0.0;
  std::map<std::string, double> heuristic_means;
};
References compute_references(const ExperimentSpec& spec, const std::string& scenario_path,
                              const std::vector<uint64_t>& seeds, const std::string& cache_dir);

// Per-episode greedy returns of a named policy on a scenario.
std::vector<double> evaluate_policy(const std::string& policy, const ExperimentSpec& spec,
                                    const std::string& scenario_path, const rl::Actor* actor,
                                    const std::vector<uint64_t>& seeds);

// Eval seed list shared by every policy and scenario of a run (paired
// comparisons); disjoint from training episode seeds by stream label.
std::vector<uint64_t> eval_seeds(uint64_t master_seed, int episodes);

// Full protocol: train when the policy is learned, evaluate on train
// (matched) and test (mismatched) scenario sets, emit CSVs and normalized
// returns. Deterministic given the master seed.
void run_experiment(const ExperimentSpec& spec, const std::string& out_dir);

// Window-mean smoothing of a training log into plot-ready tabular files.
void emit_plot_data(const std::string& log_csv_path, int window, const std::string& out_dir,
                    std::optional<std::pair<double, double>> normalize = std::nullopt);

void write_text_file(const std::string& path, const std::string& content);
std::string training_log_csv(const std::vector<rl::LogRow>& rows);

}  // namespace ciolab::harness
