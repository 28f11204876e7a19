#pragma once

#include <cstddef>
#include <vector>

#include "videograph/tensor.hpp"

namespace videograph {

struct SgdConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-5;

  void validate() const;
};

/// SGD with momentum and L2 weight decay:
///   v <- momentum * v + (g + weight_decay * theta)
///   theta <- theta - learning_rate * v
/// Gradients are zeroed after each step.
class Sgd {
 public:
  Sgd(std::vector<Tensor> parameters, SgdConfig config);

  void step();
  void zero_grad();

  const SgdConfig& config() const { return config_; }
  void set_config(const SgdConfig& config);
  const std::vector<Tensor>& parameters() const { return parameters_; }
  const std::vector<std::vector<double>>& velocities() const { return velocities_; }
  std::vector<std::vector<double>>& velocities() { return velocities_; }

 private:
  std::vector<Tensor> parameters_;
  std::vector<std::vector<double>> velocities_;
  SgdConfig config_;
};

}  // namespace videograph
