#include "ciolab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ciolab::nn {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
  if (index_.count(name)) throw std::invalid_argument("ParamSet::add: duplicate name " + name);
  index_[name] = items_.size();
  items_.emplace_back(name, std::move(t));
  return items_.back().second;
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamSet::at: unknown name " + name);
  return items_[it->second].second;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("ParamSet::at: unknown name " + name);
  return items_[it->second].second;
}

bool ParamSet::contains(const std::string& name) const { return index_.count(name) > 0; }

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [name, t] : items_)
    out.add(name, Tensor::from_data(t.shape(), t.value(), t.requires_grad()));
  return out;
}

void ParamSet::copy_from(const ParamSet& src) {
  if (src.size() != size()) throw std::invalid_argument("ParamSet::copy_from: size mismatch");
  for (size_t i = 0; i < items_.size(); ++i) {
    const Tensor& s = src.items_[i].second;
    Tensor& d = items_[i].second;
    if (s.shape() != d.shape() || src.items_[i].first != items_[i].first)
      throw std::invalid_argument("ParamSet::copy_from: incongruent sets");
    d.mutable_value() = s.value();
  }
}

void ParamSet::polyak_from(const ParamSet& src, double tau) {
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("polyak_from: tau must be in (0, 1]");
  if (src.size() != size()) throw std::invalid_argument("polyak_from: size mismatch");
  for (size_t i = 0; i < items_.size(); ++i) {
    const Tensor& s = src.items_[i].second;
    Tensor& d = items_[i].second;
    if (s.shape() != d.shape()) throw std::invalid_argument("polyak_from: shape mismatch");
    auto& dv = d.mutable_value();
    const auto& sv = s.value();
    for (size_t j = 0; j < dv.size(); ++j) dv[j] = (1.0 - tau) * dv[j] + tau * sv[j];
  }
}

void ParamSet::zero_grad() {
  for (auto& [name, t] : items_) t.zero_grad();
}

uint64_t ParamSet::checksum() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : items_) {
    h ^= fnv1a(name.data(), name.size());
    h *= 0x100000001b3ULL;
    h ^= fnv1a(t.value().data(), t.value().size() * sizeof(double));
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {
constexpr char kMagic[4] = {'C', 'L', 'C', 'K'};
constexpr uint32_t kVersion = 1;
}  // namespace

void ParamSet::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("ParamSet::save: cannot open " + path);
  os.write(kMagic, 4);
  uint32_t version = kVersion;
  os.write(reinterpret_cast<const char*>(&version), sizeof(version));
  uint64_t count = items_.size();
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& [name, t] : items_) {
    uint32_t name_len = static_cast<uint32_t>(name.size());
    os.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    os.write(name.data(), name_len);
    uint32_t ndim = static_cast<uint32_t>(t.shape().size());
    os.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
    for (int d : t.shape()) {
      int64_t dim = d;
      os.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    }
    os.write(reinterpret_cast<const char*>(t.value().data()),
             static_cast<std::streamsize>(t.value().size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("ParamSet::save: write failed for " + path);
}

void ParamSet::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ParamSet::load: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("ParamSet::load: bad magic in " + path);
  uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) throw std::runtime_error("ParamSet::load: unsupported format version");
  uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != items_.size()) throw std::runtime_error("ParamSet::load: parameter count mismatch");
  for (auto& [expect_name, t] : items_) {
    uint32_t name_len = 0;
    is.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (name != expect_name)
      throw std::runtime_error("ParamSet::load: parameter name mismatch: " + name);
    uint32_t ndim = 0;
    is.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
    std::vector<int> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) {
      int64_t dim = 0;
      is.read(reinterpret_cast<char*>(&dim), sizeof(dim));
      shape[d] = static_cast<int>(dim);
    }
    if (shape != t.shape()) throw std::runtime_error("ParamSet::load: shape mismatch for " + name);
    is.read(reinterpret_cast<char*>(t.mutable_value().data()),
            static_cast<std::streamsize>(t.value().size() * sizeof(double)));
    if (!is) throw std::runtime_error("ParamSet::load: truncated file " + path);
  }
}

namespace {

// Uniform fan-in initialization: U(-sqrt(1/fan_in), sqrt(1/fan_in)), zero bias.
Tensor init_weight(int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(1.0 / fan_in);
  std::vector<double> data(static_cast<size_t>(fan_in) * fan_out);
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from_data({fan_in, fan_out}, std::move(data), true);
}

Tensor init_bias(int width) {
  return Tensor::from_data({width}, std::vector<double>(width, 0.0), true);
}

std::string layer_name(const std::string& prefix, const char* kind, int layer) {
  return prefix + "." + kind + std::to_string(layer);
}

}  // namespace

void mlp_init(ParamSet& params, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
  if (spec.widths.size() < 2) throw std::invalid_argument("mlp_init: need at least in/out widths");
  for (size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    params.add(layer_name(prefix, "w", static_cast<int>(l)),
               init_weight(spec.widths[l], spec.widths[l + 1], rng));
    params.add(layer_name(prefix, "b", static_cast<int>(l)), init_bias(spec.widths[l + 1]));
  }
}

Tensor mlp_forward(const ParamSet& params, const std::string& prefix, const MlpSpec& spec,
                   const Tensor& input) {
  Tensor h = input;
  const size_t n_layers = spec.widths.size() - 1;
  for (size_t l = 0; l < n_layers; ++l) {
    const Tensor& w = params.at(layer_name(prefix, "w", static_cast<int>(l)));
    const Tensor& b = params.at(layer_name(prefix, "b", static_cast<int>(l)));
    h = add_rowwise(matmul(h, w), b);
    if (l + 1 < n_layers) h = relu(h);
  }
  h.ensure_finite("mlp_forward(" + prefix + ")");
  return h;
}

GraphStructure GraphStructure::from_undirected(int n_nodes,
                                               const std::vector<std::pair<int, int>>& edges) {
  GraphStructure g;
  g.n_nodes = n_nodes;
  std::vector<int> deg(n_nodes, 0);
  for (auto [p, q] : edges) {
    if (p < 0 || p >= n_nodes || q < 0 || q >= n_nodes)
      throw std::invalid_argument("GraphStructure: edge endpoint out of range");
    g.src.push_back(p);
    g.dst.push_back(q);
    g.src.push_back(q);
    g.dst.push_back(p);
    ++deg[p];
    ++deg[q];
  }
  g.mean_scale.resize(n_nodes);
  for (int v = 0; v < n_nodes; ++v) g.mean_scale[v] = 1.0 / (1.0 + deg[v]);
  return g;
}

GraphStructure GraphStructure::replicate(int copies) const {
  GraphStructure out;
  out.n_nodes = n_nodes * copies;
  out.src.reserve(src.size() * copies);
  out.dst.reserve(dst.size() * copies);
  out.mean_scale.reserve(mean_scale.size() * copies);
  for (int c = 0; c < copies; ++c) {
    const int off = c * n_nodes;
    for (size_t k = 0; k < src.size(); ++k) {
      out.src.push_back(src[k] + off);
      out.dst.push_back(dst[k] + off);
    }
    out.mean_scale.insert(out.mean_scale.end(), mean_scale.begin(), mean_scale.end());
  }
  return out;
}

void gnn_init(ParamSet& params, const std::string& prefix, const GnnSpec& spec, Rng& rng) {
  if (spec.layers < 1) throw std::invalid_argument("gnn_init: need at least one layer");
  if (spec.input_width <= 0 || spec.hidden <= 0)
    throw std::invalid_argument("gnn_init: widths must be positive");
  int in = spec.input_width;
  for (int l = 0; l < spec.layers; ++l) {
    if (spec.kind == Backbone::kGcn) {
      params.add(layer_name(prefix, "gcn_w", l), init_weight(in, spec.hidden, rng));
      params.add(layer_name(prefix, "gcn_b", l), init_bias(spec.hidden));
    } else {
      params.add(layer_name(prefix, "msg_w", l), init_weight(2 * in, spec.hidden, rng));
      params.add(layer_name(prefix, "msg_b", l), init_bias(spec.hidden));
      params.add(layer_name(prefix, "upd_w", l), init_weight(in + spec.hidden, spec.hidden, rng));
      params.add(layer_name(prefix, "upd_b", l), init_bias(spec.hidden));
    }
    in = spec.hidden;
  }
}

Tensor gnn_forward(const ParamSet& params, const std::string& prefix, const GnnSpec& spec,
                   const GraphStructure& graph, const Tensor& node_features) {
  if (node_features.rows() != graph.n_nodes)
    throw std::invalid_argument("gnn_forward: feature rows must equal node count");
  if (node_features.cols() != spec.input_width)
    throw std::invalid_argument("gnn_forward: feature width mismatch");

  Tensor h = node_features;
  for (int l = 0; l < spec.layers; ++l) {
    if (spec.kind == Backbone::kGcn) {
      // mean over {self} + neighbors, then affine + ReLU.
      Tensor agg = h;
      if (!graph.src.empty()) {
        Tensor nbr = scatter_add_rows(gather_rows(h, graph.src), graph.dst, graph.n_nodes);
        agg = add(h, nbr);
      }
      agg = row_scale(agg, graph.mean_scale);
      const Tensor& w = params.at(layer_name(prefix, "gcn_w", l));
      const Tensor& b = params.at(layer_name(prefix, "gcn_b", l));
      h = relu(add_rowwise(matmul(agg, w), b));
    } else {
      const Tensor& wm = params.at(layer_name(prefix, "msg_w", l));
      const Tensor& bm = params.at(layer_name(prefix, "msg_b", l));
      const Tensor& wu = params.at(layer_name(prefix, "upd_w", l));
      const Tensor& bu = params.at(layer_name(prefix, "upd_b", l));
      Tensor agg;
      if (graph.src.empty()) {
        agg = Tensor::zeros({graph.n_nodes, spec.hidden});
      } else {
        Tensor pair = concat_cols(gather_rows(h, graph.src), gather_rows(h, graph.dst));
        Tensor msg = relu(add_rowwise(matmul(pair, wm), bm));
        agg = scatter_add_rows(msg, graph.dst, graph.n_nodes);
      }
      h = relu(add_rowwise(matmul(concat_cols(h, agg), wu), bu));
    }
  }
  h.ensure_finite("gnn_forward(" + prefix + ")");
  return h;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    denom += out[i];
  }
  for (double& v : out) v /= denom;
  return out;
}

GumbelSample gumbel_softmax_sample(const std::vector<double>& logits, double tau, Rng& rng) {
  if (tau <= 0.0) throw std::invalid_argument("gumbel_softmax_sample: tau must be > 0");
  std::vector<double> perturbed(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) perturbed[i] = (logits[i] + rng.gumbel()) / tau;
  GumbelSample s;
  s.relaxed = softmax(perturbed);
  s.hard_index = static_cast<int>(
      std::max_element(s.relaxed.begin(), s.relaxed.end()) - s.relaxed.begin());
  return s;
}

double huber_value(double x, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("huber_value: delta must be > 0");
  const double ax = std::abs(x);
  return ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(ParamSet& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      size_t n = params.items()[i].second.value().size();
      m_[i].assign(n, 0.0);
      v_[i].assign(n, 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("Adam::step: parameter set changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& t = const_cast<Tensor&>(params.items()[i].second);
    const auto& g = t.grad();
    auto& val = t.mutable_value();
    if (g.size() != val.size()) throw std::runtime_error("Adam::step: grad size mismatch");
    for (size_t j = 0; j < val.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      val[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace ciolab::nn
