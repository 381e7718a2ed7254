#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ciolab/rng.hpp"
#include "ciolab/tensor.hpp"

namespace ciolab::nn {

// Named parameter tensors with stable (insertion) iteration order. Target
// networks are clones of their source sets; Polyak updates and checkpoint
// loads validate shape congruence.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  size_t size() const { return items_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

  ParamSet clone() const;  // deep copy, independent tape leaves
  void copy_from(const ParamSet& src);
  // target <- (1 - tau) * target + tau * source, elementwise.
  void polyak_from(const ParamSet& src, double tau);
  void zero_grad();

  // 64-bit value fingerprint, used by no-mutation tests.
  uint64_t checksum() const;

  void save(const std::string& path) const;
  // Loads into the existing set; shapes must match.
  void load(const std::string& path);

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, size_t> index_;
};

// Affine-ReLU stack; the final layer is linear. widths = {in, h..., out}.
struct MlpSpec {
  std::vector<int> widths;
};

void mlp_init(ParamSet& params, const std::string& prefix, const MlpSpec& spec, Rng& rng);
Tensor mlp_forward(const ParamSet& params, const std::string& prefix, const MlpSpec& spec,
                   const Tensor& input);

// Graph structure for message passing. Undirected edges are expanded to a
// directed pair each; GCN additionally precomputes mean-aggregation scales
// over {self} + neighbors.
struct GraphStructure {
  int n_nodes = 0;
  std::vector<int> src;               // directed edge sources
  std::vector<int> dst;               // directed edge destinations
  std::vector<double> mean_scale;     // 1 / (1 + deg(v)) per node

  static GraphStructure from_undirected(int n_nodes, const std::vector<std::pair<int, int>>& edges);
  // B disjoint copies with node indices offset per copy.
  GraphStructure replicate(int copies) const;
};

enum class Backbone { kGcn, kInteraction };

// Message-passing stack: `layers` rounds of width `hidden`, ReLU activation.
// GCN layer: h' = relu(W * mean({h_v} + neighbors) + b).
// Interaction layer: per directed edge, message = relu(Wm [h_src, h_dst] + bm),
// sum-aggregated at dst; node update h' = relu(Wu [h, agg] + bu).
// With `layers` = M, node outputs depend only on the M-hop neighborhood.
struct GnnSpec {
  Backbone kind = Backbone::kInteraction;
  int input_width = 0;
  int hidden = 64;
  int layers = 2;
};

void gnn_init(ParamSet& params, const std::string& prefix, const GnnSpec& spec, Rng& rng);
Tensor gnn_forward(const ParamSet& params, const std::string& prefix, const GnnSpec& spec,
                   const GraphStructure& graph, const Tensor& node_features);

// Plain softmax over a logits vector (no tape), max-stabilized.
std::vector<double> softmax(const std::vector<double>& logits);

// Gumbel-Softmax draw at temperature tau: relaxed = softmax((logits + g)/tau),
// hard index = argmax of the relaxed vector. Deterministic given rng state.
struct GumbelSample {
  std::vector<double> relaxed;
  int hard_index = 0;
};
GumbelSample gumbel_softmax_sample(const std::vector<double>& logits, double tau, Rng& rng);

// Scalar Huber value (closed form), matching the tensor op.
double huber_value(double x, double delta);

// Adam with bias correction over one ParamSet. Moment buffers are keyed by
// parameter order, so the set must not change between steps.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ParamSet& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace ciolab::nn
