#include "videograph/optim.hpp"

#include <stdexcept>
#include <string>

#include "videograph/errors.hpp"

namespace videograph {

void SgdConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
}

Sgd::Sgd(std::vector<Tensor> parameters, SgdConfig config)
    : parameters_(std::move(parameters)), config_(config) {
  config_.validate();
  velocities_.reserve(parameters_.size());
  for (const Tensor& p : parameters_) velocities_.emplace_back(p.numel(), 0.0);
}

void Sgd::set_config(const SgdConfig& config) {
  config.validate();
  config_ = config;
}

void Sgd::step() {
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    if (!parameters_[i].has_grad()) {
      throw std::logic_error("sgd step: parameter " + std::to_string(i) + " of shape " +
                             shape_to_string(parameters_[i].shape()) + " has no gradient");
    }
  }
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    Tensor& p = parameters_[i];
    auto theta = p.mutable_data();
    auto grad = p.mutable_grad();
    auto& v = velocities_[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      v[j] = config_.momentum * v[j] + (grad[j] + config_.weight_decay * theta[j]);
      theta[j] -= config_.learning_rate * v[j];
    }
    p.zero_grad();
  }
}

void Sgd::zero_grad() {
  for (Tensor& p : parameters_) p.zero_grad();
}

}  // namespace videograph
