#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "videograph/tensor.hpp"

namespace videograph {

enum class Activation { kRelu, kSigmoid, kTanh };
enum class Mode { kTrain, kEval };

/// How `mean` accumulates. kSorted sums each group in ascending value order,
/// which makes the result bitwise independent of the input ordering.
enum class Summation { kSequential, kSorted };

// c[i,j] = sum_k a[i,k] * b[k,j]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& x, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// Adds a length-C bias along the trailing axis of x.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor sum(const Tensor& x);
/// Averages over `axes`, removing them from the shape.
Tensor mean(const Tensor& x, std::span<const std::size_t> axes,
            Summation summation = Summation::kSequential);

/// Elementwise nonlinearity. The ReLU subgradient at 0 is 0.
Tensor activation(const Tensor& x, Activation kind);
inline Tensor relu(const Tensor& x) { return activation(x, Activation::kRelu); }
inline Tensor sigmoid(const Tensor& x) { return activation(x, Activation::kSigmoid); }
inline Tensor tanh(const Tensor& x) { return activation(x, Activation::kTanh); }

Tensor softmax(const Tensor& x, std::size_t axis);

/// Per-channel 1D cross-correlation along `axis` with zero "same" padding.
/// x carries a trailing channel axis of length C; kernels is C x k, k odd.
Tensor depthwise_conv1d(const Tensor& x, std::size_t axis, const Tensor& kernels);

struct BatchNormState {
  explicit BatchNormState(std::size_t channels);

  Tensor gamma;
  Tensor beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  bool initialized = false;
  double momentum = 0.9;
  double epsilon = 1e-5;

  std::size_t channels() const { return running_mean.size(); }
};

/// Normalizes each channel over every other axis. Train mode uses batch
/// statistics (biased variance) and folds them into the running estimates;
/// the first update adopts the batch statistics outright. Eval mode uses the
/// running estimates and fails if none exist yet.
Tensor batch_norm(const Tensor& x, std::size_t channel_axis, BatchNormState& state, Mode mode);

/// Non-overlapping max over `axes`. Output length per pooled axis is
/// (L - kernel) / stride + 1. Gradient goes to the first maximum in flat order.
Tensor max_pool(const Tensor& x, std::span<const std::size_t> axes, std::size_t kernel = 3,
                std::size_t stride = 3);

/// z[..., j, h, w, c] = alpha[..., h, w, j] * nodes[j, c].
/// alpha is (..., H, W, N); nodes is N x C; the result is (..., N, H, W, C).
Tensor node_attend(const Tensor& alpha, const Tensor& nodes);

/// Mean over the batch of -log softmax(logits)[target], with the probability
/// clamped to [1e-7, 1 - 1e-7].
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);

/// Mean over all entries of the binary cross-entropy of sigmoid(logits)
/// against {0,1} targets, probabilities clamped to [1e-7, 1 - 1e-7].
Tensor binary_cross_entropy(const Tensor& logits, const Tensor& targets);

inline constexpr double kProbabilityClamp = 1e-7;

}  // namespace videograph
