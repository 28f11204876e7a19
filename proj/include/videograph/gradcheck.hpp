#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "videograph/tensor.hpp"

namespace videograph {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

using ScalarFunction = std::function<Tensor(const std::vector<Tensor>&)>;

/// Compares reverse-mode gradients of a scalar function against central
/// differences with step h. Per component the error is
/// |a - n| / max(1e-8, |a| + |n|); the worst component is reported.
/// Each point is treated as a leaf requiring a gradient.
GradCheckResult grad_check(const ScalarFunction& f, std::vector<Tensor> points, double h = 1e-5);

struct GradCheckOptions {
  double h = 1e-5;
  /// When non-zero, only this many components per point are compared,
  /// drawn without replacement from `sample_seed`.
  std::size_t max_components = 0;
  std::uint64_t sample_seed = 0;
};

GradCheckResult grad_check(const ScalarFunction& f, std::vector<Tensor> points, const GradCheckOptions& options);

}  // namespace videograph
