#include "videograph/model.hpp"

#include <cmath>
#include <string>

#include "videograph/errors.hpp"
#include "videograph/kmeans.hpp"
#include "videograph/sobol.hpp"

namespace videograph {
namespace {

constexpr std::size_t kPoolKernel = 3;
constexpr std::size_t kPoolStride = 3;

std::size_t pooled_length(std::size_t length) { return (length - kPoolKernel) / kPoolStride + 1; }

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_bias(matmul(x, transpose(weight)), bias);
}

// Separate streams for the graph layers and the classifier head.
enum class Stream : std::uint32_t { kGraph = 1, kHead = 2 };

std::mt19937_64 weight_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<StageShape> shape_inference(const VideoGraphConfig& config) {
  config.validate();
  const std::size_t t = config.timesteps, n = config.nodes, h = config.height, w = config.width,
                    c = config.channels;
  std::vector<StageShape> stages;
  stages.push_back({"input", {t, h, w, c}});
  if (config.architecture == Architecture::kMeanPool) {
    stages.push_back({"classifier_input", {c}});
    stages.push_back({"logits", {config.num_classes}});
    return stages;
  }
  stages.push_back({"alpha", {h, w, n}});
  stages.push_back({"Z", {t, n, h, w, c}});
  std::size_t tl = t, nl = n;
  for (std::size_t layer = 0; layer < config.embedding_layers; ++layer) {
    if (tl < kPoolKernel || nl < kPoolKernel) {
      throw ShapeError("graph embedding layer " + std::to_string(layer + 1) + " needs T >= 3 and N >= 3, got T=" +
                       std::to_string(tl) + " N=" + std::to_string(nl));
    }
    tl = pooled_length(tl);
    nl = pooled_length(nl);
    stages.push_back({"embedding_" + std::to_string(layer + 1), {tl, nl, h, w, c}});
  }
  stages.push_back({"classifier_input", {tl * nl * c}});
  stages.push_back({"logits", {config.num_classes}});
  return stages;
}

// ---------------------------------------------------------------------------

Tensor transform_nodes(const Tensor& nodes, const NodeAttentionParams& params) {
  return linear(nodes, params.weight, params.bias);
}

NodeAttentiveFeature node_attention_forward(const Tensor& x, const Tensor& nodes, const NodeAttentionParams& params) {
  if (x.dim() < 3) throw ShapeError("node attention expects (..., H, W, C), got " + shape_to_string(x.shape()));
  const std::size_t c = x.shape().back();
  if (nodes.dim() != 2 || nodes.size(1) != c || params.weight.shape() != Shape{c, c} || params.bias.numel() != c) {
    throw ShapeError("node attention channel mismatch: x " + shape_to_string(x.shape()) + ", nodes " +
                     shape_to_string(nodes.shape()) + ", w " + shape_to_string(params.weight.shape()) + ", b " +
                     shape_to_string(params.bias.shape()));
  }
  const std::size_t n = nodes.size(0);
  NodeAttentiveFeature out;
  out.nodes_hat = transform_nodes(nodes, params);
  const std::size_t rows = x.numel() / c;
  Tensor similarity = matmul(reshape(x, {rows, c}), transpose(out.nodes_hat));
  Tensor alpha;
  switch (params.kind) {
    case AttentionKind::kSigmoid:
      alpha = sigmoid(similarity);
      break;
    case AttentionKind::kTanh:
      alpha = tanh(similarity);
      break;
    case AttentionKind::kSoftmaxOverNodes:
      alpha = softmax(similarity, 1);
      break;
  }
  Shape alpha_shape(x.shape().begin(), x.shape().end() - 1);
  alpha_shape.push_back(n);
  out.alpha = reshape(alpha, alpha_shape);
  out.z = node_attend(out.alpha, out.nodes_hat);
  return out;
}

// ---------------------------------------------------------------------------

GraphEmbeddingParams::GraphEmbeddingParams(std::size_t channels, std::size_t time_kernel, std::size_t node_kernel,
                                           std::mt19937_64& rng)
    : time_kernels(fan_in_uniform({channels, time_kernel}, time_kernel, rng)),
      node_kernels(fan_in_uniform({channels, node_kernel}, node_kernel, rng)),
      channel_mix(fan_in_uniform({channels, channels}, channels, rng)),
      channel_bias(fan_in_uniform({channels}, channels, rng)),
      norm(channels) {}

Tensor graph_embedding_activations(const Tensor& z, GraphEmbeddingParams& params, Mode mode) {
  if (z.dim() != 5 && z.dim() != 6) {
    throw ShapeError("graph embedding expects (T, N, H, W, C) or (B, T, N, H, W, C), got " +
                     shape_to_string(z.shape()));
  }
  const bool batched = z.dim() == 6;
  Tensor x = batched ? z : reshape(z, [&] {
    Shape s{1};
    s.insert(s.end(), z.shape().begin(), z.shape().end());
    return s;
  }());
  const Shape shape = x.shape();
  if (shape[1] < kPoolKernel || shape[2] < kPoolKernel) {
    throw ShapeError("graph embedding needs T >= 3 and N >= 3, got " + shape_to_string(z.shape()));
  }
  const std::size_t c = shape[5];
  x = depthwise_conv1d(x, 1, params.time_kernels);
  x = depthwise_conv1d(x, 2, params.node_kernels);
  x = reshape(linear(reshape(x, {x.numel() / c, c}), params.channel_mix, params.channel_bias), shape);
  x = relu(batch_norm(x, 5, params.norm, mode));
  return batched ? x : reshape(x, z.shape());
}

Tensor graph_embedding_forward(const Tensor& z, GraphEmbeddingParams& params, Mode mode) {
  Tensor activations = graph_embedding_activations(z, params, mode);
  const std::size_t offset = activations.dim() == 6 ? 1 : 0;
  const std::size_t axes[] = {offset, offset + 1};
  return max_pool(activations, axes, kPoolKernel, kPoolStride);
}

// ---------------------------------------------------------------------------

ClassifierHead::ClassifierHead(std::size_t input, std::size_t hidden, std::size_t classes, std::mt19937_64& rng)
    : fc1_weight(fan_in_uniform({hidden, input}, input, rng)),
      fc1_bias(fan_in_uniform({hidden}, input, rng)),
      norm(hidden),
      fc2_weight(fan_in_uniform({classes, hidden}, hidden, rng)),
      fc2_bias(fan_in_uniform({classes}, hidden, rng)) {}

Tensor ClassifierHead::forward(const Tensor& x, Mode mode) {
  if (x.dim() != 2 || x.size(1) != fc1_weight.size(1)) {
    throw ShapeError("classifier expects (B, " + std::to_string(fc1_weight.size(1)) + "), got " +
                     shape_to_string(x.shape()));
  }
  Tensor h = relu(batch_norm(linear(x, fc1_weight, fc1_bias), 1, norm, mode));
  return linear(h, fc2_weight, fc2_bias);
}

// ---------------------------------------------------------------------------

Tensor Model::scores(const Tensor& segments, Mode mode) {
  Tensor l = logits(segments, mode);
  return config().label_mode == LabelMode::kSingle ? softmax(l, 1) : sigmoid(l);
}

std::vector<Tensor> Model::parameter_tensors() {
  std::vector<Tensor> out;
  for (auto& p : parameters()) out.push_back(p.tensor);
  return out;
}

namespace {

std::size_t classifier_input_size(const VideoGraphConfig& config) {
  return shape_inference(config).rbegin()[1].shape[0];
}

void check_segments(const Tensor& segments, const VideoGraphConfig& c) {
  const Shape expected{c.timesteps, c.height, c.width, c.channels};
  if (segments.dim() != 5 || Shape(segments.shape().begin() + 1, segments.shape().end()) != expected) {
    throw ShapeError("segments must be (B, " + std::to_string(c.timesteps) + ", " + std::to_string(c.height) + ", " +
                     std::to_string(c.width) + ", " + std::to_string(c.channels) + "), got " +
                     shape_to_string(segments.shape()));
  }
}

}  // namespace

VideoGraph::VideoGraph(const VideoGraphConfig& config, const Tensor* feature_sample)
    : config_(config),
      head_([&]() -> ClassifierHead {
        auto rng = weight_rng(config.seed, Stream::kHead);
        return ClassifierHead(classifier_input_size(config), config.classifier_hidden, config.num_classes, rng);
      }()) {
  const std::size_t c = config.channels;
  nodes_ = init_latent_nodes(config.init, config.nodes, c, config.seed, feature_sample);
  nodes_.set_requires_grad(true);
  auto rng = weight_rng(config.seed, Stream::kGraph);
  attention_.weight = fan_in_uniform({c, c}, c, rng);
  attention_.bias = fan_in_uniform({c}, c, rng);
  attention_.kind = config.attention;
  layers_.reserve(config.embedding_layers);
  for (std::size_t i = 0; i < config.embedding_layers; ++i)
    layers_.emplace_back(c, config.time_kernel, config.node_kernel, rng);
}

Tensor VideoGraph::embed(const Tensor& segments, Mode mode) {
  check_segments(segments, config_);
  Tensor z = node_attention_forward(segments, nodes_, attention_).z;
  for (auto& layer : layers_) z = graph_embedding_forward(z, layer, mode);
  return z;
}

Tensor VideoGraph::embedding_activations(const Tensor& segments, Mode mode) {
  const std::size_t spatial[] = {3, 4};
  return mean(embed(segments, mode), spatial);
}

Tensor VideoGraph::logits(const Tensor& segments, Mode mode) {
  Tensor pooled = embedding_activations(segments, mode);
  const std::size_t b = pooled.size(0);
  return head_.forward(reshape(pooled, {b, pooled.numel() / b}), mode);
}

std::optional<Tensor> VideoGraph::nodes_hat() {
  NoGradGuard no_grad;
  return transform_nodes(nodes_, attention_);
}

std::vector<NamedTensor> VideoGraph::parameters() {
  std::vector<NamedTensor> out{{"nodes", nodes_},
                               {"attention.weight", attention_.weight},
                               {"attention.bias", attention_.bias}};
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string p = "embedding" + std::to_string(i) + ".";
    auto& l = layers_[i];
    out.push_back({p + "time_kernels", l.time_kernels});
    out.push_back({p + "node_kernels", l.node_kernels});
    out.push_back({p + "channel_mix", l.channel_mix});
    out.push_back({p + "channel_bias", l.channel_bias});
    out.push_back({p + "norm.gamma", l.norm.gamma});
    out.push_back({p + "norm.beta", l.norm.beta});
  }
  out.push_back({"head.fc1.weight", head_.fc1_weight});
  out.push_back({"head.fc1.bias", head_.fc1_bias});
  out.push_back({"head.norm.gamma", head_.norm.gamma});
  out.push_back({"head.norm.beta", head_.norm.beta});
  out.push_back({"head.fc2.weight", head_.fc2_weight});
  out.push_back({"head.fc2.bias", head_.fc2_bias});
  return out;
}

std::vector<NamedBatchNorm> VideoGraph::batch_norms() {
  std::vector<NamedBatchNorm> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    out.push_back({"embedding" + std::to_string(i) + ".norm", &layers_[i].norm});
  out.push_back({"head.norm", &head_.norm});
  return out;
}

// ---------------------------------------------------------------------------

MeanPoolBaseline::MeanPoolBaseline(const VideoGraphConfig& config)
    : config_(config), head_([&]() -> ClassifierHead {
        auto rng = weight_rng(config.seed, Stream::kHead);
        return ClassifierHead(config.channels, config.classifier_hidden, config.num_classes, rng);
      }()) {
  config_.validate();
}

Tensor MeanPoolBaseline::logits(const Tensor& segments, Mode mode) {
  check_segments(segments, config_);
  const std::size_t axes[] = {1, 2, 3};
  return head_.forward(mean(segments, axes, Summation::kSorted), mode);
}

std::vector<NamedTensor> MeanPoolBaseline::parameters() {
  return {{"head.fc1.weight", head_.fc1_weight}, {"head.fc1.bias", head_.fc1_bias},
          {"head.norm.gamma", head_.norm.gamma}, {"head.norm.beta", head_.norm.beta},
          {"head.fc2.weight", head_.fc2_weight}, {"head.fc2.bias", head_.fc2_bias}};
}

std::vector<NamedBatchNorm> MeanPoolBaseline::batch_norms() { return {{"head.norm", &head_.norm}}; }

std::unique_ptr<Model> make_model(const VideoGraphConfig& config, const Tensor* feature_sample) {
  if (config.architecture == Architecture::kMeanPool) return std::make_unique<MeanPoolBaseline>(config);
  return std::make_unique<VideoGraph>(config, feature_sample);
}

// ---------------------------------------------------------------------------

Tensor init_latent_nodes(InitStrategy strategy, std::size_t nodes, std::size_t channels, std::uint64_t seed,
                         const Tensor* feature_sample) {
  if (nodes < 2) throw ConfigError("at least 2 latent nodes are required");
  std::vector<double> values;
  values.reserve(nodes * channels);
  switch (strategy) {
    case InitStrategy::kRandom: {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(channels)));
      for (std::size_t i = 0; i < nodes * channels; ++i) values.push_back(normal(rng));
      break;
    }
    case InitStrategy::kSobol: {
      SobolSequence sobol(channels);
      for (std::size_t i = 0; i < nodes; ++i)
        for (double p : sobol.next()) values.push_back(2.0 * p - 1.0);
      break;
    }
    case InitStrategy::kKMeans: {
      if (feature_sample == nullptr) throw ConfigError("kmeans node initialization needs a feature sample");
      if (feature_sample->dim() != 2 || feature_sample->size(1) != channels) {
        throw ShapeError("kmeans feature sample must be M x " + std::to_string(channels) + ", got " +
                         shape_to_string(feature_sample->shape()));
      }
      if (feature_sample->size(0) < nodes) {
        throw ConfigError("kmeans initialization needs at least " + std::to_string(nodes) + " sample vectors, got " +
                          std::to_string(feature_sample->size(0)));
      }
      const Tensor centroids = kmeans(*feature_sample, nodes, seed).centroids;
      values.assign(centroids.data().begin(), centroids.data().end());
      break;
    }
  }
  return Tensor({nodes, channels}, std::move(values), true);
}

Tensor fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = u(rng);
  return Tensor(std::move(shape), std::move(values), true);
}

}  // namespace videograph
