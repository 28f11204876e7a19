#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "videograph/gradcheck.hpp"

namespace videograph {

struct GradSuiteEntry {
  std::string name;
  GradCheckResult result;
  bool passed = false;
};

/// Finite-difference checks of every differentiable op, the node attention
/// block, a graph embedding layer, the classifier head and the full desk-size
/// VideoGraph forward + loss, on inputs drawn from `seed`.
std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed, double tolerance = 1e-4);

}  // namespace videograph
