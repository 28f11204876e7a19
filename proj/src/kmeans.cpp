#include "videograph/kmeans.hpp"

#include <limits>
#include <random>
#include <string>

#include "videograph/errors.hpp"

namespace videograph {
namespace {

double squared_distance(const double* a, const double* b, std::size_t c) {
  double total = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

}  // namespace

KMeansResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
  if (points.dim() != 2) throw ShapeError("kmeans expects an M x C matrix, got " + shape_to_string(points.shape()));
  const std::size_t m = points.size(0), c = points.size(1);
  if (k == 0 || m < k) {
    throw ShapeError("kmeans: need 1 <= k <= M, got k=" + std::to_string(k) + " M=" + std::to_string(m));
  }
  const auto x = points.data();
  const auto row = [&](std::size_t i) { return &x[i * c]; };

  std::mt19937_64 rng(seed);
  std::vector<double> centroids(k * c);
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());

  std::uniform_int_distribution<std::size_t> pick(0, m - 1);
  std::size_t first = pick(rng);
  std::copy(row(first), row(first) + c, centroids.begin());
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(row(i), &centroids[(j - 1) * c], c));
      total += nearest[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = m - 1;
      for (std::size_t i = 0; i < m; ++i) {
        target -= nearest[i];
        if (target < 0.0 && nearest[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    std::copy(row(chosen), row(chosen) + c, centroids.begin() + static_cast<std::ptrdiff_t>(j * c));
  }

  KMeansResult result;
  result.assignment.assign(m, k);  // k marks "unassigned"
  std::vector<double> dist(m);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(row(i), &centroids[0], c);
      for (std::size_t j = 1; j < k; ++j) {
        const double d = squared_distance(row(i), &centroids[j * c], c);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (result.assignment[i] != best) changed = true;
      result.assignment[i] = best;
      dist[i] = best_d;
    }
    if (!changed) break;

    std::vector<double> sums(k * c, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = result.assignment[i];
      ++counts[j];
      for (std::size_t ch = 0; ch < c; ++ch) sums[j * c + ch] += row(i)[ch];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      for (std::size_t ch = 0; ch < c; ++ch) centroids[j * c + ch] = sums[j * c + ch] / static_cast<double>(counts[j]);
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] != 0) continue;
      // Re-seed with the point farthest from the centroid it is assigned to.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double d = squared_distance(row(i), &centroids[result.assignment[i] * c], c);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      std::copy(row(far), row(far) + c, centroids.begin() + static_cast<std::ptrdiff_t>(j * c));
      result.assignment[far] = j;
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < m; ++i) objective += squared_distance(row(i), &centroids[result.assignment[i] * c], c);
    result.objective.push_back(objective);
    result.iterations = iter + 1;
  }
  if (result.objective.empty()) {
    double objective = 0.0;
    for (std::size_t i = 0; i < m; ++i) objective += dist[i];
    result.objective.push_back(objective);
  }
  result.centroids = Tensor({k, c}, std::move(centroids));
  return result;
}

}  // namespace videograph
