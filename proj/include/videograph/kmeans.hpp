#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "videograph/tensor.hpp"

namespace videograph {

struct KMeansResult {
  Tensor centroids;                   // k x C
  std::vector<std::size_t> assignment;  // cluster of each point
  std::vector<double> objective;      // sum of squared distances after each iteration
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ (D^2-weighted) seeding and squared
/// Euclidean distance. Stops at an assignment fixpoint or after max_iters.
/// Assignment ties go to the lowest centroid index; an emptied cluster is
/// re-seeded with the point farthest from its current centroid.
KMeansResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed, std::size_t max_iters = 100);

}  // namespace videograph
