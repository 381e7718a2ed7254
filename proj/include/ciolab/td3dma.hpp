#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ciolab/env.hpp"
#include "ciolab/nn.hpp"
#include "ciolab/rng.hpp"
#include "ciolab/state.hpp"
#include "ciolab/topology.hpp"

namespace ciolab::rl {

struct ActorConfig {
  nn::Backbone backbone = nn::Backbone::kInteraction;
  int hidden = 64;
  // Message-passing rounds; equals the observation radius M on the dual graph.
  int message_hops = 2;
  int head_hidden = 64;
};

struct CriticConfig {
  enum class Kind { kMlp, kGnnReadout };
  Kind kind = Kind::kMlp;
  int hidden = 64;
  int mlp_layers = 2;  // hidden layers of the MLP critic
  int gnn_layers = 2;  // message-passing rounds of the GNN critic
};

struct TrainConfig {
  double gamma = 0.95;
  double eta1 = 0.05;  // uniform-exploration threshold
  double eta2 = 0.5;   // Gumbel-sampling threshold
  bool eta2_linear_decay = false;  // optional drift of eta2 toward 1
  double gumbel_tau = 1.0;
  double huber_delta = 1.0;
  int actor_delay = 2;  // d_pi, counted in critic update cycles
  double polyak = 0.01;
  double actor_lr = 1e-4;
  double critic_lr = 3e-4;
  int batch_size = 64;
  int min_buffer = 500;   // replay pre-fill N_min
  int capacity = 50000;
  int64_t total_steps = 20000;
  uint64_t seed = 1;

  void validate() const;
};

// Shared-parameter GNN actor on the dual graph: message-passing backbone
// plus an MLP head emitting one logits row per dual node.
class Actor {
 public:
  Actor(ActorConfig cfg, int node_feature_width, uint64_t init_seed);

  nn::Tensor logits(const nn::GraphStructure& graph, const nn::Tensor& features) const;
  nn::Tensor logits_with(const nn::ParamSet& params, const nn::GraphStructure& graph,
                         const nn::Tensor& features) const;

  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  const ActorConfig& config() const { return cfg_; }
  int feature_width() const { return gnn_spec_.input_width; }

 private:
  ActorConfig cfg_;
  nn::GnnSpec gnn_spec_;
  nn::MlpSpec head_spec_;
  nn::ParamSet params_;
};

// Twin critics plus targets for one region, either an MLP over concatenated
// features or a permutation-aware GNN on the primal subnetwork with a mean
// readout. Forward input is always (flattened region state, region action
// embedding), shaped [B, n_cells*w] and [B, n_edges*L].
class RegionCritic {
 public:
  RegionCritic(CriticConfig cfg, const topo::NetworkGraph& graph, const topo::Region& region,
               int kpi_width, uint64_t init_seed);

  nn::Tensor forward(const nn::ParamSet& params, const nn::Tensor& state_flat,
                     const nn::Tensor& action_embed) const;

  int state_width() const { return n_cells_ * kpi_width_; }
  int action_width() const { return n_edges_ * ActionSpace::size(); }

  nn::ParamSet& q1() { return q1_; }
  nn::ParamSet& q2() { return q2_; }
  nn::ParamSet& target1() { return t1_; }
  nn::ParamSet& target2() { return t2_; }
  const nn::ParamSet& q1() const { return q1_; }
  const nn::ParamSet& q2() const { return q2_; }
  const nn::ParamSet& target1() const { return t1_; }
  const nn::ParamSet& target2() const { return t2_; }

 private:
  struct BatchPlan {
    std::vector<int> src, dst, edge_row;  // directed message arrays
    std::vector<int> node_batch;          // owning batch item per node row
  };
  const BatchPlan& plan_for(int batch) const;
  void init_params(nn::ParamSet& ps, Rng& rng) const;

  CriticConfig cfg_;
  int n_cells_ = 0;
  int n_edges_ = 0;
  int kpi_width_ = 0;
  std::vector<std::pair<int, int>> local_edges_;  // endpoints as region-local cell positions
  nn::MlpSpec mlp_spec_;   // kMlp
  nn::MlpSpec head_spec_;  // kGnnReadout readout head
  nn::ParamSet q1_, q2_, t1_, t2_;
  mutable std::map<int, BatchPlan> plans_;
};

// Clipped double-Q TD target: y = r + gamma * (1 - d) * min(q1, q2).
std::vector<double> td_targets(const std::vector<double>& region_returns,
                               const std::vector<uint8_t>& done, double gamma,
                               const std::vector<double>& q1, const std::vector<double>& q2);

// One-hot joint action embedding in dual-node order, length n_edges * L.
std::vector<double> embed_one_hot(const JointAction& action);
// Restriction of a flat embedding to a region's induced edges (dual order).
std::vector<double> slice_embedding(const std::vector<double>& flat, int levels,
                                    const std::vector<int>& edges);

enum class ActMode { kExplore, kGreedy };

// Two-threshold exploration over per-agent logits rows [n_agents, L]:
// u < eta1 -> uniform level; eta1 <= u < eta2 -> Gumbel-Softmax hard sample;
// u >= eta2 -> argmax (lowest index on ties). Greedy mode is pure argmax.
// The returned action is always discrete.
JointAction select_action(const std::vector<double>& logits_rowmajor, int n_agents, int levels,
                          ActMode mode, double eta1, double eta2, double tau, Rng* rng);

struct Transition {
  GlobalState s, s_next;
  JointAction a;
  double team_return = 0.0;
  std::vector<double> region_returns;
  bool done = false;
  mdp::FeatureScaling scaling;  // scenario-specific, applied when featurizing
};

// Uniform-sampling ring buffer shared across regions; restriction to a
// region happens at sample time.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);
  void push(Transition t);
  int size() const { return static_cast<int>(data_.size()); }
  // Distinct indices, uniform without replacement within the batch.
  std::vector<int> sample_indices(int batch, Rng& rng) const;
  const Transition& at(int i) const { return data_.at(i); }

 private:
  int capacity_;
  int64_t inserted_ = 0;
  std::vector<Transition> data_;
};

struct LogRow {
  int64_t step = 0;  // environment steps taken so far
  int episode = 0;
  int region_id = 0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  std::optional<double> actor_obj;  // set on actor-update cycles
  double mean_q = 0.0;
  double epsilon_uniform = 0.0;
  double episode_return = 0.0;  // last completed episode
};

// The full training loop: exploration rollouts into shared replay, per-region
// clipped double-Q critic regression on executed one-hot actions, delayed
// relaxed-action actor ascent accumulated across regions, Polyak targets.
class Trainer {
 public:
  Trainer(std::vector<mdp::Environment*> envs, ActorConfig actor_cfg, CriticConfig critic_cfg,
          TrainConfig cfg);

  // Runs until total_steps environment steps, or until `max_update_cycles`
  // critic update cycles have happened when given.
  void train(std::optional<int64_t> max_update_cycles = std::nullopt);

  const std::vector<LogRow>& log() const { return log_; }
  Actor& actor() { return actor_; }
  const Actor& actor() const { return actor_; }
  RegionCritic& critic(int j) { return *critics_.at(j); }
  int num_regions() const { return static_cast<int>(critics_.size()); }
  const ReplayBuffer& buffer() const { return buffer_; }

  void save_checkpoint(const std::string& path) const { actor_.params().save(path); }
  void load_checkpoint(const std::string& path) { actor_.params().load(path); }

 private:
  std::vector<double> featurize(const GlobalState& s, const mdp::FeatureScaling& sc) const;
  nn::Tensor batch_features(const std::vector<int>& idx, bool next) const;
  void update_cycle(int64_t env_steps, int episode, double last_return);
  void actor_update_and_sync(const std::vector<int>& idx, LogRow& row);
  double eta2_at(int64_t env_steps) const;

  std::vector<mdp::Environment*> envs_;
  ActorConfig actor_cfg_;
  CriticConfig critic_cfg_;
  TrainConfig cfg_;
  Actor actor_;
  nn::ParamSet actor_target_;
  nn::Adam actor_opt_;
  std::vector<std::unique_ptr<RegionCritic>> critics_;
  std::vector<nn::Adam> critic_opt1_, critic_opt2_;
  std::vector<topo::Region> regions_;
  nn::GraphStructure dual_struct_;   // single copy
  nn::GraphStructure batch_struct_;  // batch_size copies
  ReplayBuffer buffer_;
  Rng rng_explore_{0}, rng_sample_{0};
  int64_t update_cycles_ = 0;
  std::vector<LogRow> log_;
  // scratch for the current cycle
  std::vector<int> cur_idx_;
};

// Greedy rollouts with no exploration and no parameter updates; one return
// per seed (sum of team rewards over the episode).
std::vector<double> evaluate(const Actor& actor, mdp::Environment& env,
                             const std::vector<uint64_t>& seeds);

}  // namespace ciolab::rl
