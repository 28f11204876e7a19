#include "videograph/gradient_suite.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <random>

#include "videograph/model.hpp"
#include "videograph/ops.hpp"

namespace videograph {

namespace {

class Inputs {
 public:
  explicit Inputs(std::uint64_t seed) : rng_(seed) {}

  Tensor normal(Shape shape, double stddev = 1.0) {
    std::normal_distribution<double> d(0.0, stddev);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = d(rng_);
    return Tensor(std::move(shape), std::move(v));
  }

  // Values with |x| >= 0.05 so a finite-difference step never crosses a ReLU kink.
  Tensor away_from_zero(Shape shape) {
    std::uniform_real_distribution<double> mag(0.05, 1.5);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = sign(rng_) ? mag(rng_) : -mag(rng_);
    return Tensor(std::move(shape), std::move(v));
  }

  // A permutation of well-separated values so max pooling has no near ties.
  Tensor distinct(Shape shape) {
    std::vector<double> v(shape_numel(shape));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i) - 0.05 * static_cast<double>(v.size());
    std::shuffle(v.begin(), v.end(), rng_);
    return Tensor(std::move(shape), std::move(v));
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Reduces any tensor to a scalar with fixed random weights so every output
// element gets a distinct upstream gradient.
struct Projector {
  Tensor weights;
  Tensor operator()(const Tensor& y) {
    if (!weights.defined() || weights.shape() != y.shape()) {
      std::mt19937_64 rng(y.numel() * 7919 + y.dim());
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<double> w(y.numel());
      for (double& x : w) x = u(rng);
      weights = Tensor(y.shape(), std::move(w));
    }
    return sum(mul(y, weights));
  }
};

constexpr std::size_t kFullModelComponents = 24;

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed, double tolerance) {
  Inputs in(seed);
  std::vector<GradSuiteEntry> out;
  auto check = [&](const std::string& name, const ScalarFunction& f, std::vector<Tensor> points,
                   std::size_t max_components = 0) {
    const GradCheckOptions options{1e-5, max_components, seed};
    GradSuiteEntry e{name, grad_check(f, std::move(points), options), false};
    e.passed = e.result.max_relative_error <= tolerance;
    out.push_back(std::move(e));
  };
  auto proj = std::make_shared<Projector>();
  auto project = [proj](const Tensor& y) { return (*proj)(y); };

  check("matmul", [&](const auto& p) { return project(matmul(p[0], p[1])); }, {in.normal({3, 4}), in.normal({4, 5})});
  check("transpose", [&](const auto& p) { return project(transpose(p[0])); }, {in.normal({3, 4})});
  check("reshape", [&](const auto& p) { return project(reshape(p[0], {2, 6})); }, {in.normal({3, 4})});
  check("add", [&](const auto& p) { return project(add(p[0], p[1])); }, {in.normal({2, 3}), in.normal({2, 3})});
  check("mul", [&](const auto& p) { return project(mul(p[0], p[1])); }, {in.normal({2, 3}), in.normal({2, 3})});
  check("scale", [&](const auto& p) { return project(scale(p[0], -1.7)); }, {in.normal({2, 3})});
  check("add_bias", [&](const auto& p) { return project(add_bias(p[0], p[1])); }, {in.normal({2, 3, 4}), in.normal({4})});
  check("sum", [&](const auto& p) { return scale(sum(p[0]), 0.3); }, {in.normal({2, 3})});
  check("mean", [&](const auto& p) {
    const std::array<std::size_t, 2> axes{1, 3};
    return project(mean(p[0], axes));
  }, {in.normal({2, 3, 2, 4})});
  check("relu", [&](const auto& p) { return project(relu(p[0])); }, {in.away_from_zero({3, 5})});
  check("sigmoid", [&](const auto& p) { return project(sigmoid(p[0])); }, {in.normal({3, 5})});
  check("tanh", [&](const auto& p) { return project(tanh(p[0])); }, {in.normal({3, 5})});
  check("softmax", [&](const auto& p) { return project(softmax(p[0], 1)); }, {in.normal({2, 4, 3})});
  check("depthwise_conv1d", [&](const auto& p) { return project(depthwise_conv1d(p[0], 1, p[1])); },
        {in.normal({2, 6, 3, 4}), in.normal({4, 3})});
  check("batch_norm", [&](const auto& p) {
    BatchNormState state(3);
    state.gamma = p[1];
    state.beta = p[2];
    return project(batch_norm(p[0], 2, state, Mode::kTrain));
  }, {in.normal({4, 2, 3}), in.normal({3}), in.normal({3})});
  check("max_pool", [&](const auto& p) {
    const std::array<std::size_t, 2> axes{0, 1};
    return project(max_pool(p[0], axes));
  }, {in.distinct({7, 6, 2})});
  check("node_attend", [&](const auto& p) { return project(node_attend(p[0], p[1])); },
        {in.normal({2, 2, 2, 3}), in.normal({3, 4})});
  {
    const std::vector<int> targets{2, 0, 1};
    check("cross_entropy", [targets](const auto& p) { return cross_entropy(p[0], targets); }, {in.normal({3, 4})});
  }
  {
    const Tensor targets({3, 4}, {1, 0, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1});
    check("binary_cross_entropy", [targets](const auto& p) { return binary_cross_entropy(p[0], targets); },
          {in.normal({3, 4})});
  }

  for (AttentionKind kind : {AttentionKind::kSigmoid, AttentionKind::kSoftmaxOverNodes, AttentionKind::kTanh}) {
    check("node_attention." + to_string(kind), [&, kind](const auto& p) {
      const NodeAttentionParams params{p[2], p[3], kind};
      return project(node_attention_forward(p[0], p[1], params).z);
    }, {in.normal({2, 2, 4}, 0.5), in.normal({3, 4}, 0.5), in.normal({4, 4}, 0.5), in.normal({4}, 0.5)});
  }

  // A bias feeding batch norm has an exactly zero gradient in train mode
  // (the batch mean absorbs it), so it is checked through the eval path.
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    GraphEmbeddingParams layer(3, 3, 3, in.rng());
    const Tensor z = in.normal({2, 5, 4, 1, 1, 3});
    {
      NoGradGuard guard;
      graph_embedding_activations(z, layer, Mode::kTrain);
    }
    std::vector<Tensor> points{z, layer.time_kernels, layer.node_kernels, layer.channel_mix, layer.norm.gamma,
                               layer.norm.beta};
    if (mode == Mode::kEval) points.push_back(layer.channel_bias);
    check(std::string("graph_embedding.") + (mode == Mode::kTrain ? "train" : "eval"),
          [&layer, mode, project](const auto& p) { return project(graph_embedding_activations(p[0], layer, mode)); },
          points);
  }

  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    ClassifierHead head(6, 5, 3, in.rng());
    const Tensor x = in.normal({4, 6});
    const std::vector<int> targets{0, 2, 1, 1};
    {
      NoGradGuard guard;
      head.forward(x, Mode::kTrain);
    }
    std::vector<Tensor> points{x, head.fc1_weight, head.norm.gamma, head.norm.beta, head.fc2_weight, head.fc2_bias};
    if (mode == Mode::kEval) points.push_back(head.fc1_bias);
    check(std::string("classifier_head.") + (mode == Mode::kTrain ? "train" : "eval"),
          [&head, mode, targets](const auto& p) { return cross_entropy(head.forward(p[0], mode), targets); }, points);
  }

  // Full desk-size model: segments and every trainable parameter group.
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    VideoGraphConfig config = VideoGraphConfig::desk();
    config.seed = seed;
    VideoGraph model(config);
    const Tensor segments = in.normal({3, config.timesteps, config.height, config.width, config.channels}, 0.5);
    const std::vector<int> targets{0, 3, 1};
    {
      // Eval mode needs running statistics; one train-mode pass provides them.
      NoGradGuard guard;
      model.logits(segments, Mode::kTrain);
    }
    std::vector<Tensor> points{segments};
    for (const auto& p : model.parameters()) {
      // Shifts that reach a train-mode batch norm as a per-channel constant:
      // pre-norm biases, and an embedding beta whose pooled ReLU outputs stay positive.
      const bool feeds_norm = p.name.ends_with("channel_bias") || p.name == "head.fc1.bias" ||
                              (p.name.starts_with("embedding") && p.name.ends_with("norm.beta"));
      if (mode == Mode::kEval || !feeds_norm) points.push_back(p.tensor);
    }
    check(std::string("videograph.") + (mode == Mode::kTrain ? "train" : "eval"), [&model, mode, targets](const auto& p) {
      return cross_entropy(model.logits(p[0], mode), targets);
    }, points, kFullModelComponents);
  }
  return out;
}

}  // namespace videograph
