#include "ciolab/td3dma.hpp"

#include <algorithm>
#include <cmath>

namespace ciolab::rl {

void TrainConfig::validate() const {
  if (!(eta1 >= 0.0 && eta1 <= eta2 && eta2 <= 1.0))
    throw std::invalid_argument("TrainConfig: need 0 <= eta1 <= eta2 <= 1");
  if (gamma <= 0.0 || gamma > 1.0) throw std::invalid_argument("TrainConfig: gamma must be in (0, 1]");
  if (actor_delay < 1) throw std::invalid_argument("TrainConfig: actor_delay must be >= 1");
  if (polyak <= 0.0 || polyak > 1.0) throw std::invalid_argument("TrainConfig: polyak must be in (0, 1]");
  if (gumbel_tau <= 0.0) throw std::invalid_argument("TrainConfig: gumbel_tau must be > 0");
  if (huber_delta <= 0.0) throw std::invalid_argument("TrainConfig: huber_delta must be > 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (capacity < batch_size) throw std::invalid_argument("TrainConfig: capacity below batch size");
  if (min_buffer < batch_size) throw std::invalid_argument("TrainConfig: min_buffer below batch size");
  if (actor_lr <= 0.0 || critic_lr <= 0.0) throw std::invalid_argument("TrainConfig: learning rates must be > 0");
}

Actor::Actor(ActorConfig cfg, int node_feature_width, uint64_t init_seed) : cfg_(cfg) {
  gnn_spec_.kind = cfg.backbone;
  gnn_spec_.input_width = node_feature_width;
  gnn_spec_.hidden = cfg.hidden;
  gnn_spec_.layers = cfg.message_hops;
  head_spec_.widths = {cfg.hidden, cfg.head_hidden, ActionSpace::size()};
  Rng rng(init_seed);
  nn::gnn_init(params_, "backbone", gnn_spec_, rng);
  nn::mlp_init(params_, "head", head_spec_, rng);
}

nn::Tensor Actor::logits(const nn::GraphStructure& graph, const nn::Tensor& features) const {
  return logits_with(params_, graph, features);
}

nn::Tensor Actor::logits_with(const nn::ParamSet& params, const nn::GraphStructure& graph,
                              const nn::Tensor& features) const {
  nn::Tensor h = nn::gnn_forward(params, "backbone", gnn_spec_, graph, features);
  return nn::mlp_forward(params, "head", head_spec_, h);
}

RegionCritic::RegionCritic(CriticConfig cfg, const topo::NetworkGraph& graph,
                           const topo::Region& region, int kpi_width, uint64_t init_seed)
    : cfg_(cfg),
      n_cells_(static_cast<int>(region.cells.size())),
      n_edges_(static_cast<int>(region.edges.size())),
      kpi_width_(kpi_width) {
  if (n_cells_ == 0) throw std::invalid_argument("RegionCritic: empty region");

  // Map region edges to local cell positions for the GNN kind.
  std::map<int, int> local_of;
  for (int k = 0; k < n_cells_; ++k) local_of[region.cells[k]] = k;
  for (int e : region.edges) {
    auto [ia, ib] = graph.edge_endpoints(e);
    local_edges_.emplace_back(local_of.at(ia), local_of.at(ib));
  }

  const int levels = ActionSpace::size();
  Rng rng(init_seed);
  if (cfg_.kind == CriticConfig::Kind::kMlp) {
    mlp_spec_.widths.push_back(state_width() + n_edges_ * levels);
    for (int l = 0; l < cfg_.mlp_layers; ++l) mlp_spec_.widths.push_back(cfg_.hidden);
    mlp_spec_.widths.push_back(1);
  } else {
    head_spec_.widths = {cfg_.hidden, cfg_.hidden, 1};
  }
  init_params(q1_, rng);
  init_params(q2_, rng);
  t1_ = q1_.clone();
  t2_ = q2_.clone();
}

void RegionCritic::init_params(nn::ParamSet& ps, Rng& rng) const {
  const int levels = ActionSpace::size();
  if (cfg_.kind == CriticConfig::Kind::kMlp) {
    nn::mlp_init(ps, "q", mlp_spec_, rng);
    return;
  }
  // Interaction-style layers with the edge action vector appended to every
  // message input; widths follow gnn_init conventions.
  int in = kpi_width_;
  auto bound_init = [&rng](int fan_in, int fan_out) {
    const double bound = std::sqrt(1.0 / fan_in);
    std::vector<double> data(static_cast<size_t>(fan_in) * fan_out);
    for (double& v : data) v = rng.uniform(-bound, bound);
    return nn::Tensor::from_data({fan_in, fan_out}, std::move(data), true);
  };
  auto zero_bias = [](int width) {
    return nn::Tensor::from_data({width}, std::vector<double>(width, 0.0), true);
  };
  for (int l = 0; l < cfg_.gnn_layers; ++l) {
    ps.add("msg_w" + std::to_string(l), bound_init(2 * in + levels, cfg_.hidden));
    ps.add("msg_b" + std::to_string(l), zero_bias(cfg_.hidden));
    ps.add("upd_w" + std::to_string(l), bound_init(in + cfg_.hidden, cfg_.hidden));
    ps.add("upd_b" + std::to_string(l), zero_bias(cfg_.hidden));
    in = cfg_.hidden;
  }
  nn::mlp_init(ps, "head", head_spec_, rng);
}

const RegionCritic::BatchPlan& RegionCritic::plan_for(int batch) const {
  auto it = plans_.find(batch);
  if (it != plans_.end()) return it->second;
  BatchPlan plan;
  for (int b = 0; b < batch; ++b) {
    const int node_off = b * n_cells_;
    for (int t = 0; t < n_edges_; ++t) {
      auto [p, q] = local_edges_[t];
      plan.src.push_back(node_off + p);
      plan.dst.push_back(node_off + q);
      plan.edge_row.push_back(b * n_edges_ + t);
      plan.src.push_back(node_off + q);
      plan.dst.push_back(node_off + p);
      plan.edge_row.push_back(b * n_edges_ + t);
    }
    for (int k = 0; k < n_cells_; ++k) plan.node_batch.push_back(b);
  }
  return plans_.emplace(batch, std::move(plan)).first->second;
}

nn::Tensor RegionCritic::forward(const nn::ParamSet& params, const nn::Tensor& state_flat,
                                 const nn::Tensor& action_embed) const {
  const int batch = state_flat.rows();
  if (state_flat.cols() != state_width())
    throw std::invalid_argument("RegionCritic: state width mismatch");
  if (action_embed.rows() != batch || action_embed.cols() != action_width())
    throw std::invalid_argument("RegionCritic: action width mismatch");

  if (cfg_.kind == CriticConfig::Kind::kMlp)
    return nn::mlp_forward(params, "q", mlp_spec_, nn::concat_cols(state_flat, action_embed));

  const int levels = ActionSpace::size();
  const BatchPlan& plan = plan_for(batch);
  nn::Tensor h = nn::reshape(state_flat, {batch * n_cells_, kpi_width_});
  nn::Tensor acts = nn::reshape(action_embed, {batch * n_edges_, levels});
  for (int l = 0; l < cfg_.gnn_layers; ++l) {
    const nn::Tensor& wm = params.at("msg_w" + std::to_string(l));
    const nn::Tensor& bm = params.at("msg_b" + std::to_string(l));
    const nn::Tensor& wu = params.at("upd_w" + std::to_string(l));
    const nn::Tensor& bu = params.at("upd_b" + std::to_string(l));
    nn::Tensor agg;
    if (plan.src.empty()) {
      agg = nn::Tensor::zeros({batch * n_cells_, cfg_.hidden});
    } else {
      nn::Tensor pair = nn::concat_cols(nn::gather_rows(h, plan.src), nn::gather_rows(h, plan.dst));
      nn::Tensor with_action = nn::concat_cols(pair, nn::gather_rows(acts, plan.edge_row));
      nn::Tensor msg = nn::relu(nn::add_rowwise(nn::matmul(with_action, wm), bm));
      agg = nn::scatter_add_rows(msg, plan.dst, batch * n_cells_);
    }
    h = nn::relu(nn::add_rowwise(nn::matmul(nn::concat_cols(h, agg), wu), bu));
  }
  nn::Tensor pooled = nn::scale(nn::scatter_add_rows(h, plan.node_batch, batch),
                                1.0 / static_cast<double>(n_cells_));
  return nn::mlp_forward(params, "head", head_spec_, pooled);
}

std::vector<double> td_targets(const std::vector<double>& region_returns,
                               const std::vector<uint8_t>& done, double gamma,
                               const std::vector<double>& q1, const std::vector<double>& q2) {
  if (region_returns.size() != done.size() || q1.size() != q2.size() ||
      region_returns.size() != q1.size())
    throw std::invalid_argument("td_targets: batch size mismatch");
  std::vector<double> y(region_returns.size());
  for (size_t b = 0; b < y.size(); ++b)
    y[b] = region_returns[b] + gamma * (done[b] ? 0.0 : 1.0) * std::min(q1[b], q2[b]);
  return y;
}

std::vector<double> embed_one_hot(const JointAction& action) {
  action.validate();
  const int levels = ActionSpace::size();
  std::vector<double> flat(action.per_edge.size() * static_cast<size_t>(levels), 0.0);
  for (size_t e = 0; e < action.per_edge.size(); ++e)
    flat[e * levels + action.per_edge[e]] = 1.0;
  return flat;
}

std::vector<double> slice_embedding(const std::vector<double>& flat, int levels,
                                    const std::vector<int>& edges) {
  std::vector<double> out;
  out.reserve(edges.size() * static_cast<size_t>(levels));
  for (int e : edges) {
    if ((e + 1) * static_cast<size_t>(levels) > flat.size())
      throw std::invalid_argument("slice_embedding: edge index out of range");
    out.insert(out.end(), flat.begin() + e * levels, flat.begin() + (e + 1) * levels);
  }
  return out;
}

namespace {

int argmax_lowest(const double* row, int n) {
  int best = 0;
  for (int k = 1; k < n; ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

}  // namespace

JointAction select_action(const std::vector<double>& logits_rowmajor, int n_agents, int levels,
                          ActMode mode, double eta1, double eta2, double tau, Rng* rng) {
  if (static_cast<int>(logits_rowmajor.size()) != n_agents * levels)
    throw std::invalid_argument("select_action: logits size mismatch");
  JointAction a;
  a.per_edge.resize(n_agents);
  for (int e = 0; e < n_agents; ++e) {
    const double* row = logits_rowmajor.data() + static_cast<size_t>(e) * levels;
    if (mode == ActMode::kGreedy) {
      a.per_edge[e] = argmax_lowest(row, levels);
      continue;
    }
    if (!rng) throw std::invalid_argument("select_action: explore mode needs an rng");
    const double u = rng->uniform();
    if (u < eta1) {
      a.per_edge[e] = rng->uniform_int(levels);
    } else if (u < eta2) {
      std::vector<double> logits(row, row + levels);
      a.per_edge[e] = nn::gumbel_softmax_sample(logits, tau, *rng).hard_index;
    } else {
      a.per_edge[e] = argmax_lowest(row, levels);
    }
  }
  return a;
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  data_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[inserted_ % capacity_] = std::move(t);
  }
  ++inserted_;
}

std::vector<int> ReplayBuffer::sample_indices(int batch, Rng& rng) const {
  if (batch > size()) throw std::invalid_argument("ReplayBuffer: batch larger than buffer");
  // Partial Fisher-Yates over [0, size).
  std::vector<int> pool(size());
  for (int i = 0; i < size(); ++i) pool[i] = i;
  std::vector<int> out(batch);
  for (int k = 0; k < batch; ++k) {
    const int j = k + rng.uniform_int(size() - k);
    std::swap(pool[k], pool[j]);
    out[k] = pool[k];
  }
  return out;
}

Trainer::Trainer(std::vector<mdp::Environment*> envs, ActorConfig actor_cfg,
                 CriticConfig critic_cfg, TrainConfig cfg)
    : envs_(std::move(envs)),
      actor_cfg_(actor_cfg),
      critic_cfg_(critic_cfg),
      cfg_(cfg),
      actor_(actor_cfg,
             2 * (3 + (envs_.empty() ? 0 : envs_.front()->scenario().radio.mcs_bins)),
             derive_seed(cfg.seed, "actor-init")),
      actor_target_(actor_.params().clone()),
      actor_opt_(cfg.actor_lr),
      buffer_(cfg.capacity),
      rng_explore_(derive_seed(cfg.seed, "explore")),
      rng_sample_(derive_seed(cfg.seed, "sample")) {
  cfg_.validate();
  if (envs_.empty()) throw std::invalid_argument("Trainer: no environments");
  const auto& g0 = envs_.front()->graph();
  for (auto* env : envs_) {
    if (env->graph().num_cells() != g0.num_cells() || env->graph().num_edges() != g0.num_edges() ||
        env->graph().edges() != g0.edges())
      throw std::invalid_argument("Trainer: one topology per training run");
    if (env->scenario().radio.mcs_bins != envs_.front()->scenario().radio.mcs_bins)
      throw std::invalid_argument("Trainer: histogram widths differ between scenarios");
  }
  regions_ = envs_.front()->regions();
  if (regions_.empty()) throw std::invalid_argument("Trainer: environment has no critic regions");
  for (auto* env : envs_) {
    if (env->regions().size() != regions_.size())
      throw std::invalid_argument("Trainer: environments disagree on regions");
  }

  const int kpi_width = 3 + envs_.front()->scenario().radio.mcs_bins;
  for (size_t j = 0; j < regions_.size(); ++j) {
    critics_.push_back(std::make_unique<RegionCritic>(
        critic_cfg_, g0, regions_[j], kpi_width,
        derive_seed(cfg_.seed, "critic-init", static_cast<uint64_t>(j))));
    critic_opt1_.emplace_back(cfg_.critic_lr);
    critic_opt2_.emplace_back(cfg_.critic_lr);
  }

  const auto& dual = envs_.front()->dual();
  dual_struct_ = nn::GraphStructure::from_undirected(dual.num_nodes, dual.dual_edges);
  batch_struct_ = dual_struct_.replicate(cfg_.batch_size);
}

std::vector<double> Trainer::featurize(const GlobalState& s, const mdp::FeatureScaling& sc) const {
  const auto& g = envs_.front()->graph();
  const auto& dual = envs_.front()->dual();
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(dual.num_nodes) * actor_.feature_width());
  for (int k = 0; k < dual.num_nodes; ++k) {
    auto [ia, ib] = g.edge_endpoints(k);
    for (int cell : {ia, ib}) {
      auto f = sc.scale(s.per_cell[cell]);
      flat.insert(flat.end(), f.begin(), f.end());
    }
  }
  return flat;
}

nn::Tensor Trainer::batch_features(const std::vector<int>& idx, bool next) const {
  const int n_dual = dual_struct_.n_nodes;
  const int w = actor_.feature_width();
  std::vector<double> data;
  data.reserve(idx.size() * static_cast<size_t>(n_dual) * w);
  for (int i : idx) {
    const Transition& t = buffer_.at(i);
    auto f = featurize(next ? t.s_next : t.s, t.scaling);
    data.insert(data.end(), f.begin(), f.end());
  }
  return nn::Tensor::from_data({static_cast<int>(idx.size()) * n_dual, w}, std::move(data));
}

double Trainer::eta2_at(int64_t env_steps) const {
  if (!cfg_.eta2_linear_decay || cfg_.total_steps <= 0) return cfg_.eta2;
  const double frac = std::min(1.0, static_cast<double>(env_steps) / cfg_.total_steps);
  return cfg_.eta2 + (1.0 - cfg_.eta2) * frac;
}

void Trainer::train(std::optional<int64_t> max_update_cycles) {
  const int levels = ActionSpace::size();
  int64_t env_steps = 0;
  int episode = 0;
  double last_return = 0.0;

  auto budget_left = [&] {
    if (env_steps >= cfg_.total_steps) return false;
    if (max_update_cycles && update_cycles_ >= *max_update_cycles) return false;
    return true;
  };

  while (budget_left()) {
    mdp::Environment& env = *envs_[episode % envs_.size()];
    GlobalState s = env.reset(derive_seed(cfg_.seed, "train-episode", episode));
    double ep_return = 0.0;
    bool done = false;
    while (!done && budget_left()) {
      JointAction a;
      {
        nn::NoGradGuard ng;
        auto feats = featurize(s, env.scaling());
        nn::Tensor logits = actor_.logits(
            dual_struct_, nn::Tensor::from_data({dual_struct_.n_nodes, actor_.feature_width()},
                                                std::move(feats)));
        a = select_action(logits.value(), dual_struct_.n_nodes, levels, ActMode::kExplore,
                          cfg_.eta1, eta2_at(env_steps), cfg_.gumbel_tau, &rng_explore_);
      }
      auto res = env.step(a);
      ep_return += res.reward.team_reward;

      Transition t;
      t.s = std::move(s);
      t.s_next = res.state;
      t.a = a;
      t.team_return = res.reward.team_reward;
      t.region_returns = res.reward.region_returns;
      t.done = res.done;
      t.scaling = env.scaling();
      buffer_.push(std::move(t));

      s = std::move(res.state);
      done = res.done;
      ++env_steps;

      if (buffer_.size() >= cfg_.min_buffer) update_cycle(env_steps, episode, last_return);
    }
    if (done) {
      last_return = ep_return;
      ++episode;
    }
  }
}

void Trainer::update_cycle(int64_t env_steps, int episode, double last_return) {
  const int levels = ActionSpace::size();
  const int B = cfg_.batch_size;
  cur_idx_ = buffer_.sample_indices(B, rng_sample_);

  // Global one-hot embeddings of executed actions and the target actor's
  // relaxed next action, built once and restricted per region.
  std::vector<std::vector<double>> one_hot(B);
  std::vector<double> region_r(B);
  std::vector<uint8_t> done(B);
  for (int b = 0; b < B; ++b) one_hot[b] = embed_one_hot(buffer_.at(cur_idx_[b]).a);

  std::vector<double> relaxed_next;  // [B*n_dual*L], row-major
  {
    nn::NoGradGuard ng;
    nn::Tensor logits = actor_.logits_with(actor_target_, batch_struct_, batch_features(cur_idx_, true));
    nn::Tensor probs = nn::row_softmax(logits);
    relaxed_next = probs.value();
  }

  const int n_dual = dual_struct_.n_nodes;
  for (size_t j = 0; j < critics_.size(); ++j) {
    RegionCritic& critic = *critics_[j];
    const topo::Region& region = regions_[j];
    const int sw = critic.state_width();
    const int aw = critic.action_width();
    const int kpi_w = critic.state_width() / std::max<size_t>(1, region.cells.size());

    // Restricted batch arrays. Returns are regressed in units of the
    // scenario reference rate, like the state features; reported rewards
    // stay raw.
    std::vector<double> s_flat(static_cast<size_t>(B) * sw);
    std::vector<double> s_next_flat(static_cast<size_t>(B) * sw);
    std::vector<double> a_flat(static_cast<size_t>(B) * aw);
    std::vector<double> a_next_flat(static_cast<size_t>(B) * aw);
    for (int b = 0; b < B; ++b) {
      const Transition& t = buffer_.at(cur_idx_[b]);
      region_r[b] = t.region_returns.at(j) / t.scaling.reference_rate_bps;
      done[b] = t.done ? 1 : 0;
      int off = b * sw;
      for (size_t k = 0; k < region.cells.size(); ++k) {
        auto f = t.scaling.scale(t.s.per_cell[region.cells[k]]);
        std::copy(f.begin(), f.end(), s_flat.begin() + off + k * kpi_w);
        auto fn = t.scaling.scale(t.s_next.per_cell[region.cells[k]]);
        std::copy(fn.begin(), fn.end(), s_next_flat.begin() + off + k * kpi_w);
      }
      auto a_slice = slice_embedding(one_hot[b], levels, region.edges);
      std::copy(a_slice.begin(), a_slice.end(), a_flat.begin() + static_cast<size_t>(b) * aw);
      for (size_t k = 0; k < region.edges.size(); ++k) {
        const double* src = relaxed_next.data() +
                            (static_cast<size_t>(b) * n_dual + region.edges[k]) * levels;
        std::copy(src, src + levels,
                  a_next_flat.begin() + static_cast<size_t>(b) * aw + k * levels);
      }
    }

    // Clipped double-Q TD target from the frozen targets.
    std::vector<double> y;
    {
      nn::NoGradGuard ng;
      nn::Tensor sn = nn::Tensor::from_data({B, sw}, s_next_flat);
      nn::Tensor an = nn::Tensor::from_data({B, aw}, a_next_flat);
      auto q1 = critic.forward(critic.target1(), sn, an).value();
      auto q2 = critic.forward(critic.target2(), sn, an).value();
      y = td_targets(region_r, done, cfg_.gamma, q1, q2);
    }

    LogRow row;
    row.step = env_steps;
    row.episode = episode;
    row.region_id = static_cast<int>(j);
    row.epsilon_uniform = cfg_.eta1;
    row.episode_return = last_return;

    nn::Tensor st = nn::Tensor::from_data({B, sw}, s_flat);
    nn::Tensor at = nn::Tensor::from_data({B, aw}, a_flat);
    nn::Tensor yt = nn::Tensor::from_data({B, 1}, y);
    for (int k = 0; k < 2; ++k) {
      nn::ParamSet& psk = k == 0 ? critic.q1() : critic.q2();
      psk.zero_grad();
      nn::Tensor q = critic.forward(psk, st, at);
      if (k == 0) {
        double mq = 0.0;
        for (double v : q.value()) mq += v;
        row.mean_q = mq / B;
      }
      nn::Tensor loss = nn::mean_all(nn::huber(nn::sub(q, yt), cfg_.huber_delta));
      loss.ensure_finite("critic loss");
      (k == 0 ? row.critic1_loss : row.critic2_loss) = loss.item();
      loss.backward();
      (k == 0 ? critic_opt1_[j] : critic_opt2_[j]).step(psk);
    }
    log_.push_back(row);
  }

  ++update_cycles_;
  if (update_cycles_ % cfg_.actor_delay == 0) {
    actor_update_and_sync(cur_idx_, log_.back());
  }
}

void Trainer::actor_update_and_sync(const std::vector<int>& idx, LogRow& row) {
  const int levels = ActionSpace::size();
  const int B = static_cast<int>(idx.size());
  const int n_dual = dual_struct_.n_nodes;

  actor_.params().zero_grad();
  nn::Tensor logits = actor_.logits(batch_struct_, batch_features(idx, false));
  nn::Tensor relaxed = nn::row_softmax(logits);

  // Surrogate objective accumulated over regions in index order; only the
  // first critic of each pair scores the relaxed action.
  nn::Tensor total = nn::Tensor::scalar(0.0);
  for (size_t j = 0; j < critics_.size(); ++j) {
    RegionCritic& critic = *critics_[j];
    const topo::Region& region = regions_[j];
    const int sw = critic.state_width();
    const int kpi_w = sw / std::max<size_t>(1, region.cells.size());

    std::vector<double> s_flat(static_cast<size_t>(B) * sw);
    for (int b = 0; b < B; ++b) {
      const Transition& t = buffer_.at(idx[b]);
      for (size_t k = 0; k < region.cells.size(); ++k) {
        auto f = t.scaling.scale(t.s.per_cell[region.cells[k]]);
        std::copy(f.begin(), f.end(), s_flat.begin() + static_cast<size_t>(b) * sw + k * kpi_w);
      }
    }
    std::vector<int> rows;
    rows.reserve(static_cast<size_t>(B) * region.edges.size());
    for (int b = 0; b < B; ++b)
      for (int e : region.edges) rows.push_back(b * n_dual + e);
    nn::Tensor a_rel = nn::reshape(nn::gather_rows(relaxed, rows),
                                   {B, static_cast<int>(region.edges.size()) * levels});
    nn::Tensor q = critic.forward(critic.q1(), nn::Tensor::from_data({B, sw}, std::move(s_flat)), a_rel);
    total = nn::add(total, nn::mean_all(q));
  }
  nn::Tensor loss = nn::scale(total, -1.0);
  loss.ensure_finite("actor objective");
  loss.backward();
  actor_opt_.step(actor_.params());
  row.actor_obj = total.item();
  // The critics accumulated gradients from this pass; they are cleared at
  // the start of their own updates, so no cleanup is needed here.

  actor_target_.polyak_from(actor_.params(), cfg_.polyak);
  for (auto& critic : critics_) {
    critic->target1().polyak_from(critic->q1(), cfg_.polyak);
    critic->target2().polyak_from(critic->q2(), cfg_.polyak);
  }
}

std::vector<double> evaluate(const Actor& actor, mdp::Environment& env,
                             const std::vector<uint64_t>& seeds) {
  nn::NoGradGuard ng;
  const auto& dual = env.dual();
  nn::GraphStructure graph = nn::GraphStructure::from_undirected(dual.num_nodes, dual.dual_edges);
  const auto& g = env.graph();
  const auto scaling = env.scaling();
  const int levels = ActionSpace::size();

  std::vector<double> returns;
  returns.reserve(seeds.size());
  for (uint64_t seed : seeds) {
    GlobalState s = env.reset(seed);
    double ep_return = 0.0;
    bool done = false;
    while (!done) {
      std::vector<double> flat;
      flat.reserve(static_cast<size_t>(dual.num_nodes) * actor.feature_width());
      for (int k = 0; k < dual.num_nodes; ++k) {
        auto [ia, ib] = g.edge_endpoints(k);
        for (int cell : {ia, ib}) {
          auto f = scaling.scale(s.per_cell[cell]);
          flat.insert(flat.end(), f.begin(), f.end());
        }
      }
      nn::Tensor logits = actor.logits(
          graph, nn::Tensor::from_data({dual.num_nodes, actor.feature_width()}, std::move(flat)));
      JointAction a = select_action(logits.value(), dual.num_nodes, levels, ActMode::kGreedy,
                                    0.0, 0.0, 1.0, nullptr);
      auto res = env.step(a);
      ep_return += res.reward.team_reward;
      s = std::move(res.state);
      done = res.done;
    }
    returns.push_back(ep_return);
  }
  return returns;
}

}  // namespace ciolab::rl
