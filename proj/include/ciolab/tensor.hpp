#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ciolab::nn {

namespace detail {
struct Node;
}

// Dense double tensor with an optional reverse-mode gradient tape. Graphs
// are built eagerly by the free-function ops below; Tensor::backward walks
// the recorded tape. Creation order doubles as topological order, so
// gradient accumulation is bit-reproducible.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return static_cast<bool>(node_); }
  const std::vector<int>& shape() const;
  int64_t numel() const;
  int rows() const { return shape().at(0); }
  int cols() const { return shape().at(1); }
  const std::vector<double>& value() const;
  std::vector<double>& mutable_value();
  const std::vector<double>& grad() const;
  bool requires_grad() const;
  double item() const;  // single-element tensors only

  // Reverse pass from a scalar output. Accumulates into .grad of every
  // reachable tensor that requires grad.
  void backward();
  void zero_grad();

  // Throws if any value is non-finite. `what` names the producing op.
  void ensure_finite(const std::string& what) const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {
struct Node {
  std::vector<int> shape;
  std::vector<double> val;
  std::vector<double> grad;  // lazily sized
  bool requires_grad = false;
  int64_t id = 0;  // creation counter; ascending ids form a topological order
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backfn;  // reads this->grad, accumulates into parents
};
}  // namespace detail

// While a guard is alive, newly created ops record no tape (constants out).
// Used for target-network passes, action selection, and evaluation.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

// ---- ops ----
// Shapes are [rows, cols] matrices unless stated otherwise; vectors are
// [n] 1-D tensors. All ops validate shapes and throw on mismatch.

Tensor matmul(const Tensor& a, const Tensor& b);       // [n,k]x[k,m] -> [n,m]
Tensor add(const Tensor& a, const Tensor& b);          // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);          // elementwise
Tensor add_rowwise(const Tensor& a, const Tensor& b);  // [n,m] + [m]
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);  // [n,p],[n,q] -> [n,p+q]
Tensor gather_rows(const Tensor& a, const std::vector<int>& idx);          // -> [|idx|, m]
Tensor scatter_add_rows(const Tensor& a, const std::vector<int>& idx, int n_out);
Tensor row_scale(const Tensor& a, const std::vector<double>& s);  // row i *= s[i]
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor row_softmax(const Tensor& a);    // numerically stabilized, per row
Tensor sum_all(const Tensor& a);        // -> scalar
Tensor mean_all(const Tensor& a);       // -> scalar
Tensor huber(const Tensor& a, double delta);  // elementwise Huber value

}  // namespace ciolab::nn
