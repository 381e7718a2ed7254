#include "ciolab/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace ciolab::nn {

namespace {

std::atomic<int64_t> g_node_counter{0};
thread_local int g_no_grad_depth = 0;

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    n *= d;
  }
  return n;
}

std::shared_ptr<detail::Node> make_node(std::vector<int> shape, std::vector<double> val,
                                        bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->val = std::move(val);
  n->requires_grad = requires_grad && g_no_grad_depth == 0;
  n->id = g_node_counter.fetch_add(1, std::memory_order_relaxed);
  return n;
}

void ensure_grad_sized(detail::Node& n) {
  if (n.grad.size() != n.val.size()) n.grad.assign(n.val.size(), 0.0);
}

// Wires parents/backfn only when grads are enabled and some parent needs them.
Tensor make_op(std::vector<int> shape, std::vector<double> val,
               std::vector<std::shared_ptr<detail::Node>> parents,
               std::function<void(detail::Node&)> backfn) {
  bool needs = false;
  if (g_no_grad_depth == 0)
    for (const auto& p : parents)
      if (p->requires_grad) needs = true;
  auto n = make_node(std::move(shape), std::move(val), needs);
  if (needs) {
    n->parents = std::move(parents);
    n->backfn = std::move(backfn);
  }
  return Tensor(n);
}

void check_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2) throw std::invalid_argument(std::string(op) + ": expected 2-D tensor");
}

}  // namespace

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  int64_t n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    throw std::invalid_argument("Tensor::from_data: shape/data size mismatch");
  return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

const std::vector<int>& Tensor::shape() const {
  if (!node_) throw std::runtime_error("Tensor: undefined");
  return node_->shape;
}

int64_t Tensor::numel() const { return static_cast<int64_t>(value().size()); }

const std::vector<double>& Tensor::value() const {
  if (!node_) throw std::runtime_error("Tensor: undefined");
  return node_->val;
}

std::vector<double>& Tensor::mutable_value() {
  if (!node_) throw std::runtime_error("Tensor: undefined");
  return node_->val;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_) throw std::runtime_error("Tensor: undefined");
  ensure_grad_sized(*node_);
  return node_->grad;
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::item() const {
  if (numel() != 1) throw std::runtime_error("Tensor::item: not a single element");
  return value()[0];
}

void Tensor::backward() {
  if (!node_) throw std::runtime_error("Tensor::backward: undefined");
  if (numel() != 1) throw std::runtime_error("Tensor::backward: output must be scalar");

  // Collect the reachable subgraph, then run backfns in descending creation
  // id (a valid reverse-topological order for an eagerly built DAG).
  std::vector<std::shared_ptr<detail::Node>> nodes;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::shared_ptr<detail::Node>> stack{node_};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (const auto& p : n->parents)
      if (seen.insert(p.get()).second) stack.push_back(p);
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a->id > b->id; });

  ensure_grad_sized(*node_);
  node_->grad[0] += 1.0;
  for (const auto& n : nodes) {
    if (n->backfn) {
      ensure_grad_sized(*n);
      n->backfn(*n);
    }
  }
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->val.size(), 0.0);
}

void Tensor::ensure_finite(const std::string& what) const {
  for (double v : value())
    if (!std::isfinite(v)) throw std::runtime_error("non-finite value in " + what);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  const int n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) throw std::invalid_argument("matmul: inner dimensions differ");
  std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (int i = 0; i < n; ++i) {
    const double* arow = av.data() + static_cast<size_t>(i) * k;
    double* orow = out.data() + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  auto an = a.node(), bn = b.node();
  return make_op({n, m}, std::move(out), {an, bn}, [an, bn, n, k, m](detail::Node& self) {
    const auto& g = self.grad;
    if (an->requires_grad) {
      ensure_grad_sized(*an);
      // dA = G * B^T
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* grow = g.data() + static_cast<size_t>(i) * m;
          const double* brow = bn->val.data() + static_cast<size_t>(p) * m;
          for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
          an->grad[static_cast<size_t>(i) * k + p] += acc;
        }
    }
    if (bn->requires_grad) {
      ensure_grad_sized(*bn);
      // dB = A^T * G
      for (int p = 0; p < k; ++p) {
        double* brow = bn->grad.data() + static_cast<size_t>(p) * m;
        for (int i = 0; i < n; ++i) {
          const double aip = an->val[static_cast<size_t>(i) * k + p];
          if (aip == 0.0) continue;
          const double* grow = g.data() + static_cast<size_t>(i) * m;
          for (int j = 0; j < m; ++j) brow[j] += aip * grow[j];
        }
      }
    }
  });
}

namespace {

Tensor binary_same_shape(const Tensor& a, const Tensor& b, const char* op,
                         const std::function<double(double, double)>& f,
                         const std::function<void(detail::Node&, detail::Node&, detail::Node&)>& back) {
  if (a.shape() != b.shape()) throw std::invalid_argument(std::string(op) + ": shape mismatch");
  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[i]);
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {an, bn},
                 [an, bn, back](detail::Node& self) { back(self, *an, *bn); });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_same_shape(a, b, "add", [](double x, double y) { return x + y; },
                           [](detail::Node& self, detail::Node& an, detail::Node& bn) {
                             if (an.requires_grad) {
                               ensure_grad_sized(an);
                               for (size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
                             }
                             if (bn.requires_grad) {
                               ensure_grad_sized(bn);
                               for (size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] += self.grad[i];
                             }
                           });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_same_shape(a, b, "sub", [](double x, double y) { return x - y; },
                           [](detail::Node& self, detail::Node& an, detail::Node& bn) {
                             if (an.requires_grad) {
                               ensure_grad_sized(an);
                               for (size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
                             }
                             if (bn.requires_grad) {
                               ensure_grad_sized(bn);
                               for (size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] -= self.grad[i];
                             }
                           });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_same_shape(a, b, "mul", [](double x, double y) { return x * y; },
                           [](detail::Node& self, detail::Node& an, detail::Node& bn) {
                             if (an.requires_grad) {
                               ensure_grad_sized(an);
                               for (size_t i = 0; i < self.grad.size(); ++i)
                                 an.grad[i] += self.grad[i] * bn.val[i];
                             }
                             if (bn.requires_grad) {
                               ensure_grad_sized(bn);
                               for (size_t i = 0; i < self.grad.size(); ++i)
                                 bn.grad[i] += self.grad[i] * an.val[i];
                             }
                           });
}

Tensor add_rowwise(const Tensor& a, const Tensor& b) {
  check_2d(a, "add_rowwise");
  if (b.shape().size() != 1 || b.shape()[0] != a.cols())
    throw std::invalid_argument("add_rowwise: bias width mismatch");
  const int n = a.rows(), m = a.cols();
  std::vector<double> out(a.value());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[static_cast<size_t>(i) * m + j] += b.value()[j];
  auto an = a.node(), bn = b.node();
  return make_op({n, m}, std::move(out), {an, bn}, [an, bn, n, m](detail::Node& self) {
    if (an->requires_grad) {
      ensure_grad_sized(*an);
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      ensure_grad_sized(*bn);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) bn->grad[j] += self.grad[static_cast<size_t>(i) * m + j];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.value());
  for (double& v : out) v *= c;
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {an}, [an, c](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.value());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {an}, [an](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (an->val[i] > 0.0) an->grad[i] += self.grad[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  check_2d(a, "concat_cols");
  check_2d(b, "concat_cols");
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row count mismatch");
  const int n = a.rows(), p = a.cols(), q = b.cols();
  std::vector<double> out(static_cast<size_t>(n) * (p + q));
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.value().data() + static_cast<size_t>(i) * p, p,
                out.data() + static_cast<size_t>(i) * (p + q));
    std::copy_n(b.value().data() + static_cast<size_t>(i) * q, q,
                out.data() + static_cast<size_t>(i) * (p + q) + p);
  }
  auto an = a.node(), bn = b.node();
  return make_op({n, p + q}, std::move(out), {an, bn}, [an, bn, n, p, q](detail::Node& self) {
    for (int i = 0; i < n; ++i) {
      const double* grow = self.grad.data() + static_cast<size_t>(i) * (p + q);
      if (an->requires_grad) {
        ensure_grad_sized(*an);
        for (int j = 0; j < p; ++j) an->grad[static_cast<size_t>(i) * p + j] += grow[j];
      }
      if (bn->requires_grad) {
        ensure_grad_sized(*bn);
        for (int j = 0; j < q; ++j) bn->grad[static_cast<size_t>(i) * q + j] += grow[p + j];
      }
    }
  });
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& idx) {
  check_2d(a, "gather_rows");
  const int n = a.rows(), m = a.cols();
  std::vector<double> out(idx.size() * static_cast<size_t>(m));
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n) throw std::invalid_argument("gather_rows: index out of range");
    std::copy_n(a.value().data() + static_cast<size_t>(idx[r]) * m, m, out.data() + r * m);
  }
  auto an = a.node();
  auto indices = idx;
  return make_op({static_cast<int>(idx.size()), m}, std::move(out), {an},
                 [an, indices, m](detail::Node& self) {
                   if (!an->requires_grad) return;
                   ensure_grad_sized(*an);
                   for (size_t r = 0; r < indices.size(); ++r) {
                     const double* grow = self.grad.data() + r * m;
                     double* arow = an->grad.data() + static_cast<size_t>(indices[r]) * m;
                     for (int j = 0; j < m; ++j) arow[j] += grow[j];
                   }
                 });
}

Tensor scatter_add_rows(const Tensor& a, const std::vector<int>& idx, int n_out) {
  check_2d(a, "scatter_add_rows");
  if (static_cast<int>(idx.size()) != a.rows())
    throw std::invalid_argument("scatter_add_rows: index count must equal rows");
  const int m = a.cols();
  std::vector<double> out(static_cast<size_t>(n_out) * m, 0.0);
  for (size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n_out)
      throw std::invalid_argument("scatter_add_rows: index out of range");
    const double* arow = a.value().data() + r * m;
    double* orow = out.data() + static_cast<size_t>(idx[r]) * m;
    for (int j = 0; j < m; ++j) orow[j] += arow[j];
  }
  auto an = a.node();
  auto indices = idx;
  return make_op({n_out, m}, std::move(out), {an}, [an, indices, m](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (size_t r = 0; r < indices.size(); ++r) {
      const double* grow = self.grad.data() + static_cast<size_t>(indices[r]) * m;
      double* arow = an->grad.data() + r * m;
      for (int j = 0; j < m; ++j) arow[j] += grow[j];
    }
  });
}

Tensor row_scale(const Tensor& a, const std::vector<double>& s) {
  check_2d(a, "row_scale");
  if (static_cast<int>(s.size()) != a.rows())
    throw std::invalid_argument("row_scale: scale count must equal rows");
  const int n = a.rows(), m = a.cols();
  std::vector<double> out(a.value());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out[static_cast<size_t>(i) * m + j] *= s[i];
  auto an = a.node();
  auto sc = s;
  return make_op({n, m}, std::move(out), {an}, [an, sc, m](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (size_t i = 0; i < sc.size(); ++i)
      for (int j = 0; j < m; ++j)
        an->grad[i * m + j] += sc[i] * self.grad[i * m + j];
  });
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (shape_numel(shape) != a.numel()) throw std::invalid_argument("reshape: element count mismatch");
  auto an = a.node();
  return make_op(std::move(shape), a.value(), {an}, [an](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
  });
}

Tensor row_softmax(const Tensor& a) {
  check_2d(a, "row_softmax");
  const int n = a.rows(), m = a.cols();
  if (m == 0) throw std::invalid_argument("row_softmax: empty rows");
  std::vector<double> out(a.value().size());
  for (int i = 0; i < n; ++i) {
    const double* row = a.value().data() + static_cast<size_t>(i) * m;
    double mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    double* orow = out.data() + static_cast<size_t>(i) * m;
    for (int j = 0; j < m; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    for (int j = 0; j < m; ++j) orow[j] /= denom;
  }
  auto an = a.node();
  return make_op({n, m}, std::move(out), {an}, [an, n, m](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    // dL/dx_j = p_j * (g_j - sum_k g_k p_k)
    for (int i = 0; i < n; ++i) {
      const double* p = self.val.data() + static_cast<size_t>(i) * m;
      const double* g = self.grad.data() + static_cast<size_t>(i) * m;
      double dot = 0.0;
      for (int j = 0; j < m; ++j) dot += g[j] * p[j];
      double* out = an->grad.data() + static_cast<size_t>(i) * m;
      for (int j = 0; j < m; ++j) out[j] += p[j] * (g[j] - dot);
    }
  });
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  auto an = a.node();
  return make_op({1}, {s}, {an}, [an](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (double& g : an->grad) g += self.grad[0];
  });
}

Tensor mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.numel());
  double s = 0.0;
  for (double v : a.value()) s += v;
  auto an = a.node();
  return make_op({1}, {s * inv}, {an}, [an, inv](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (double& g : an->grad) g += inv * self.grad[0];
  });
}

Tensor huber(const Tensor& a, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("huber: delta must be > 0");
  std::vector<double> out(a.value().size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double x = a.value()[i];
    const double ax = std::abs(x);
    out[i] = ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
  }
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {an}, [an, delta](detail::Node& self) {
    if (!an->requires_grad) return;
    ensure_grad_sized(*an);
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const double x = an->val[i];
      const double d = std::abs(x) <= delta ? x : (x > 0.0 ? delta : -delta);
      an->grad[i] += d * self.grad[i];
    }
  });
}

}  // namespace ciolab::nn
