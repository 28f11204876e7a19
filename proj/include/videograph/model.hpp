#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "videograph/config.hpp"
#include "videograph/ops.hpp"
#include "videograph/tensor.hpp"

namespace videograph {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct NamedBatchNorm {
  std::string name;
  BatchNormState* state;
};

// ---------------------------------------------------------------------------
// Shape contract

struct StageShape {
  std::string stage;
  Shape shape;
};

/// Symbolic shapes of every stage for a single video, without allocating:
/// input, alpha (per timestep), Z, each embedding layer, classifier input,
/// logits. Throws ShapeError if any stage cannot be formed.
std::vector<StageShape> shape_inference(const VideoGraphConfig& config);

// ---------------------------------------------------------------------------
// Node attention

struct NodeAttentionParams {
  Tensor weight;  // C x C
  Tensor bias;    // C
  AttentionKind kind = AttentionKind::kSigmoid;
};

struct NodeAttentiveFeature {
  Tensor nodes_hat;  // N x C, transformed nodes
  Tensor alpha;      // (..., H, W, N)
  Tensor z;          // (..., N, H, W, C)
};

/// Transformed nodes Y w^T + b, one row per node.
Tensor transform_nodes(const Tensor& nodes, const NodeAttentionParams& params);

/// Attends the nodes with a segment feature x of shape (..., H, W, C):
/// alpha = sigma(x . nodes_hat^T), z[j] = alpha[..., j] * nodes_hat[j].
NodeAttentiveFeature node_attention_forward(const Tensor& x, const Tensor& nodes, const NodeAttentionParams& params);

// ---------------------------------------------------------------------------
// Graph embedding

struct GraphEmbeddingParams {
  GraphEmbeddingParams(std::size_t channels, std::size_t time_kernel, std::size_t node_kernel,
                       std::mt19937_64& rng);

  Tensor time_kernels;    // C x t
  Tensor node_kernels;    // C x n
  Tensor channel_mix;     // C x C (out x in)
  Tensor channel_bias;    // C
  BatchNormState norm;
};

/// Timewise conv -> nodewise conv -> 1x1 channel mix -> batch norm -> ReLU.
/// z is (T, N, H, W, C) or batched (B, T, N, H, W, C).
Tensor graph_embedding_activations(const Tensor& z, GraphEmbeddingParams& params, Mode mode);

/// graph_embedding_activations followed by 3/3 max pooling over time and nodes.
Tensor graph_embedding_forward(const Tensor& z, GraphEmbeddingParams& params, Mode mode);

// ---------------------------------------------------------------------------
// Classifier head shared by VideoGraph and the mean-pool baseline

struct ClassifierHead {
  ClassifierHead(std::size_t input, std::size_t hidden, std::size_t classes, std::mt19937_64& rng);

  Tensor fc1_weight;  // hidden x input
  Tensor fc1_bias;
  BatchNormState norm;
  Tensor fc2_weight;  // classes x hidden
  Tensor fc2_bias;

  /// x is (B, input); returns (B, classes) logits.
  Tensor forward(const Tensor& x, Mode mode);
};

// ---------------------------------------------------------------------------

/// A classifier over batches of segment features (B, T, H, W, C).
class Model {
 public:
  virtual ~Model() = default;

  virtual Tensor logits(const Tensor& segments, Mode mode) = 0;
  virtual std::vector<NamedTensor> parameters() = 0;
  virtual std::vector<NamedBatchNorm> batch_norms() = 0;
  virtual const VideoGraphConfig& config() const = 0;

  /// Softmax (single-label) or sigmoid (multi-label) class scores.
  Tensor scores(const Tensor& segments, Mode mode);
  /// Transformed graph nodes when the model has them.
  virtual std::optional<Tensor> nodes_hat() { return std::nullopt; }

  std::vector<Tensor> parameter_tensors();
};

class VideoGraph final : public Model {
 public:
  /// `feature_sample` (M x C) is required for k-means node initialization.
  explicit VideoGraph(const VideoGraphConfig& config, const Tensor* feature_sample = nullptr);

  Tensor logits(const Tensor& segments, Mode mode) override;
  std::vector<NamedTensor> parameters() override;
  std::vector<NamedBatchNorm> batch_norms() override;
  const VideoGraphConfig& config() const override { return config_; }
  std::optional<Tensor> nodes_hat() override;

  /// Output of the last graph embedding layer averaged over H and W:
  /// (B, T', N', C), the model's native order.
  Tensor embedding_activations(const Tensor& segments, Mode mode);

  Tensor& latent_nodes() { return nodes_; }
  NodeAttentionParams& attention_params() { return attention_; }
  std::vector<GraphEmbeddingParams>& layers() { return layers_; }
  ClassifierHead& head() { return head_; }

 private:
  Tensor embed(const Tensor& segments, Mode mode);

  VideoGraphConfig config_;
  Tensor nodes_;
  NodeAttentionParams attention_;
  std::vector<GraphEmbeddingParams> layers_;
  ClassifierHead head_;
};

/// Orderless baseline: averages segments over T, H and W (summed in sorted
/// order, so any time permutation gives bitwise-identical scores) and feeds
/// the C-vector to the same classifier head.
class MeanPoolBaseline final : public Model {
 public:
  explicit MeanPoolBaseline(const VideoGraphConfig& config);

  Tensor logits(const Tensor& segments, Mode mode) override;
  std::vector<NamedTensor> parameters() override;
  std::vector<NamedBatchNorm> batch_norms() override;
  const VideoGraphConfig& config() const override { return config_; }

  ClassifierHead& head() { return head_; }

 private:
  VideoGraphConfig config_;
  ClassifierHead head_;
};

std::unique_ptr<Model> make_model(const VideoGraphConfig& config, const Tensor* feature_sample = nullptr);

// ---------------------------------------------------------------------------
// Initialization

/// Latent node matrix N x C: i.i.d. normal(0, 1/sqrt(C)); the first N Sobol
/// points mapped from [0,1) to [-1,1); or k-means centroids of the M x C sample.
Tensor init_latent_nodes(InitStrategy strategy, std::size_t nodes, std::size_t channels, std::uint64_t seed,
                         const Tensor* feature_sample = nullptr);

/// Uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)]; used for every weight and bias.
Tensor fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace videograph
