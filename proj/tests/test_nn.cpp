#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>

#include "ciolab/nn.hpp"
#include "doctest.h"

using namespace ciolab;
using namespace ciolab::nn;

namespace {

Tensor random_input(int rows, int cols, Rng& rng) {
  std::vector<double> data(static_cast<size_t>(rows) * cols);
  for (double& v : data) v = rng.uniform(-1.0, 1.0);
  return Tensor::from_data({rows, cols}, std::move(data));
}

// Central-difference check of d(scalar)/d(params) for every parameter in ps.
void check_param_gradients(ParamSet& ps, const std::function<Tensor()>& forward,
                           double tol = 1e-6) {
  ps.zero_grad();
  forward().backward();
  for (auto& [name, t] : ps.items()) {
    auto analytic = t.grad();
    auto& val = const_cast<Tensor&>(t).mutable_value();
    const double h = 1e-6;
    for (size_t i = 0; i < val.size(); ++i) {
      const double keep = val[i];
      val[i] = keep + h;
      const double up = forward().item();
      val[i] = keep - h;
      const double dn = forward().item();
      val[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
      CHECK(std::abs(fd - analytic[i]) / scale < tol);
    }
  }
}

GraphStructure path_structure(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return GraphStructure::from_undirected(n, edges);
}

}  // namespace

TEST_CASE("mlp with zero weights and bias gives zero output") {
  ParamSet ps;
  MlpSpec spec{{3, 4, 2}};
  Rng rng(1);
  mlp_init(ps, "m", spec, rng);
  for (auto& [name, t] : ps.items())
    std::fill(const_cast<Tensor&>(t).mutable_value().begin(),
              const_cast<Tensor&>(t).mutable_value().end(), 0.0);
  auto out = mlp_forward(ps, "m", spec, random_input(5, 3, rng));
  for (double v : out.value()) CHECK(v == 0.0);
}

TEST_CASE("identity-initialized single linear layer is the identity") {
  ParamSet ps;
  MlpSpec spec{{3, 3}};
  Rng rng(2);
  mlp_init(ps, "m", spec, rng);
  auto& w = ps.at("m.w0").mutable_value();
  std::fill(w.begin(), w.end(), 0.0);
  for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  auto in = random_input(4, 3, rng);
  auto out = mlp_forward(ps, "m", spec, in);
  for (size_t i = 0; i < in.value().size(); ++i) CHECK(out.value()[i] == in.value()[i]);
}

TEST_CASE("mlp gradients match finite differences") {
  Rng rng(3);
  ParamSet ps;
  MlpSpec spec{{4, 8, 8, 1}};
  mlp_init(ps, "m", spec, rng);
  auto input = random_input(6, 4, rng);
  check_param_gradients(ps, [&] { return mean_all(mlp_forward(ps, "m", spec, input)); });
}

TEST_CASE("gcn and interaction gradients match finite differences") {
  Rng rng(4);
  for (auto kind : {Backbone::kGcn, Backbone::kInteraction}) {
    ParamSet ps;
    GnnSpec spec{kind, 5, 6, 2};
    gnn_init(ps, "g", spec, rng);
    auto graph = path_structure(4);
    auto feats = random_input(4, 5, rng);
    check_param_gradients(ps, [&] { return mean_all(gnn_forward(ps, "g", spec, graph, feats)); });
  }
}

TEST_CASE("isolated node embeds through the self-update only") {
  Rng rng(5);
  GnnSpec spec{Backbone::kInteraction, 3, 4, 1};
  ParamSet ps;
  gnn_init(ps, "g", spec, rng);
  auto lonely = GraphStructure::from_undirected(1, {});
  auto feats = random_input(1, 3, rng);
  auto out = gnn_forward(ps, "g", spec, lonely, feats);
  // reference: update affine applied to [h, zeros]
  auto pair = concat_cols(feats, Tensor::zeros({1, 4}));
  auto expect = relu(add_rowwise(matmul(pair, ps.at("g.upd_w0")), ps.at("g.upd_b0")));
  for (int i = 0; i < 4; ++i) CHECK(out.value()[i] == doctest::Approx(expect.value()[i]));
}

TEST_CASE("message passing is equivariant under graph automorphisms") {
  Rng rng(6);
  // 4-cycle: rotation by one position is an automorphism.
  auto cyc = GraphStructure::from_undirected(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  for (auto kind : {Backbone::kGcn, Backbone::kInteraction}) {
    GnnSpec spec{kind, 3, 5, 2};
    ParamSet ps;
    gnn_init(ps, "g", spec, rng);
    auto feats = random_input(4, 3, rng);
    auto out = gnn_forward(ps, "g", spec, cyc, feats);
    // permuted input: node v takes the features of rot(v)
    const int rot[4] = {1, 2, 3, 0};
    std::vector<double> perm(feats.value().size());
    for (int v = 0; v < 4; ++v)
      for (int c = 0; c < 3; ++c) perm[v * 3 + c] = feats.value()[rot[v] * 3 + c];
    auto out_p = gnn_forward(ps, "g", spec, cyc, Tensor::from_data({4, 3}, perm));
    for (int v = 0; v < 4; ++v)
      for (int c = 0; c < 5; ++c)
        CHECK(out_p.value()[v * 5 + c] ==
              doctest::Approx(out.value()[rot[v] * 5 + c]).epsilon(1e-12));
  }
}

TEST_CASE("M layers bound the receptive field to M hops") {
  Rng rng(7);
  const int n = 7;
  auto graph = path_structure(n);
  for (int layers : {1, 2}) {
    GnnSpec spec{Backbone::kInteraction, 2, 4, layers};
    ParamSet ps;
    gnn_init(ps, "g", spec, rng);
    auto feats = random_input(n, 2, rng);
    auto base = gnn_forward(ps, "g", spec, graph, feats);
    // Perturbing a node at distance layers+1 leaves node 0 unchanged.
    auto perturbed = feats.value();
    perturbed[(layers + 1) * 2] += 10.0;
    auto out = gnn_forward(ps, "g", spec, graph, Tensor::from_data({n, 2}, perturbed));
    for (int c = 0; c < 4; ++c) CHECK(out.value()[c] == base.value()[c]);
    // ... while a node at distance exactly layers can reach it.
    auto reach = feats.value();
    reach[layers * 2] += 10.0;
    auto out2 = gnn_forward(ps, "g", spec, graph, Tensor::from_data({n, 2}, reach));
    bool changed = false;
    for (int c = 0; c < 4; ++c)
      if (out2.value()[c] != base.value()[c]) changed = true;
    CHECK(changed);
  }
}

TEST_CASE("replicate builds disjoint graph copies") {
  auto g = path_structure(3).replicate(2);
  CHECK(g.n_nodes == 6);
  CHECK(g.src.size() == 8);  // 2 undirected edges -> 4 directed, twice
  for (size_t k = 0; k < g.src.size(); ++k) CHECK((g.src[k] < 3) == (g.dst[k] < 3));
}

TEST_CASE("softmax basics") {
  auto p = softmax({0, 0, 0, 0, 0, 0, 0});
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 7));
  auto q = softmax({1000.0, 0.0});
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(q[1]));
}

TEST_CASE("gumbel-softmax: relaxed is a distribution, argmax is the hard index") {
  Rng rng(8);
  std::vector<double> logits = {0.5, -1.0, 2.0, 0.0, 1.0, -2.0, 0.3};
  for (int trial = 0; trial < 100; ++trial) {
    auto s = gumbel_softmax_sample(logits, 0.7, rng);
    double sum = 0.0;
    for (double v : s.relaxed) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(s.hard_index == static_cast<int>(std::max_element(s.relaxed.begin(), s.relaxed.end()) -
                                           s.relaxed.begin()));
  }
  CHECK_THROWS(gumbel_softmax_sample(logits, 0.0, rng));
}

TEST_CASE("gumbel-softmax hard samples follow softmax(logits)") {
  // Gumbel-max property: hard-index frequencies match the categorical
  // distribution within 3-sigma binomial bounds.
  Rng seed_rng(9);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<double> logits(7);
    for (double& v : logits) v = seed_rng.uniform(-2, 2);
    auto p = softmax(logits);
    Rng rng(1234 + rep);
    const int n = 100000;
    std::vector<int> counts(7, 0);
    for (int k = 0; k < n; ++k) ++counts[gumbel_softmax_sample(logits, 1.0, rng).hard_index];
    for (int i = 0; i < 7; ++i) {
      double expect = n * p[i];
      double sigma = std::sqrt(n * p[i] * (1 - p[i]));
      CHECK(std::abs(counts[i] - expect) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("gumbel-softmax at tiny temperature approaches one-hot") {
  std::vector<double> logits = {0.5, -1.0, 2.0};
  Rng a(77), b(77);
  auto hot = gumbel_softmax_sample(logits, 1e-9, a);
  double mx = *std::max_element(hot.relaxed.begin(), hot.relaxed.end());
  CHECK(mx > 1.0 - 1e-9);
  // deterministic given (logits, tau, seed)
  auto again = gumbel_softmax_sample(logits, 1e-9, b);
  CHECK(hot.hard_index == again.hard_index);
  CHECK(hot.relaxed == again.relaxed);
}

TEST_CASE("huber closed form at knee and tails") {
  CHECK(huber_value(0.0, 1.0) == 0.0);
  CHECK(huber_value(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  const double delta = 0.8;
  CHECK(0.5 * delta * delta == doctest::Approx(delta * (delta - 0.5 * delta)).epsilon(1e-15));
  CHECK(huber_value(3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(huber_value(-3.0, 1.0) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("adam leaves parameters alone under zero gradient") {
  ParamSet ps;
  ps.add("w", Tensor::from_data({2, 2}, {1, 2, 3, 4}, true));
  ps.zero_grad();
  Adam opt(0.1);
  opt.step(ps);
  CHECK(ps.at("w").value() == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("adam step size approaches lr under constant gradient") {
  ParamSet ps;
  ps.add("w", Tensor::from_data({1}, {0.0}, true));
  Adam opt(0.01);
  double prev = 0.0;
  double step = 0.0;
  for (int k = 0; k < 300; ++k) {
    ps.zero_grad();
    auto loss = mul(ps.at("w"), Tensor::scalar(2.5));  // constant gradient 2.5
    sum_all(loss).backward();
    opt.step(ps);
    step = prev - ps.at("w").value()[0];
    prev = ps.at("w").value()[0];
  }
  CHECK(step == doctest::Approx(0.01).epsilon(0.01));
}

TEST_CASE("adam minimizes a quadratic bowl below 1e-6 within 2000 steps") {
  ParamSet ps;
  ps.add("w", Tensor::from_data({1, 3}, {5.0, -3.0, 2.0}, true));
  auto target = Tensor::from_data({1, 3}, {1.0, 2.0, -0.5});
  Adam opt(0.05);
  double f = 0.0;
  for (int k = 0; k < 2000; ++k) {
    ps.zero_grad();
    auto d = sub(ps.at("w"), target);
    auto loss = scale(sum_all(mul(d, d)), 0.5);
    f = loss.item();
    if (f < 1e-8) break;
    loss.backward();
    opt.step(ps);
  }
  CHECK(f < 1e-6);
}

TEST_CASE("polyak update blends elementwise") {
  ParamSet target, source;
  target.add("w", Tensor::from_data({2}, {0.0, 0.0}, true));
  source.add("w", Tensor::from_data({2}, {2.0, 4.0}, true));
  target.polyak_from(source, 0.5);
  CHECK(target.at("w").value() == std::vector<double>{1.0, 2.0});
  target.polyak_from(source, 1.0);
  CHECK(target.at("w").value() == std::vector<double>{2.0, 4.0});
  CHECK_THROWS(target.polyak_from(source, 0.0));
}

TEST_CASE("repeated polyak converges geometrically to the source") {
  ParamSet target, source;
  target.add("w", Tensor::from_data({1}, {0.0}, true));
  source.add("w", Tensor::from_data({1}, {1.0}, true));
  for (int k = 0; k < 2000; ++k) target.polyak_from(source, 0.01);
  CHECK(std::abs(target.at("w").value()[0] - 1.0) < 1e-8);
}

TEST_CASE("checkpoint round trip and shape validation") {
  Rng rng(10);
  ParamSet ps;
  MlpSpec spec{{3, 5, 2}};
  mlp_init(ps, "m", spec, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "ciolab_ckpt_test.bin").string();
  ps.save(path);

  ParamSet other;
  mlp_init(other, "m", spec, rng);  // different values, same shapes
  CHECK(other.checksum() != ps.checksum());
  other.load(path);
  CHECK(other.checksum() == ps.checksum());

  ParamSet wrong;
  MlpSpec wrong_spec{{4, 5, 2}};
  mlp_init(wrong, "m", wrong_spec, rng);
  CHECK_THROWS(wrong.load(path));
  std::filesystem::remove(path);
}
