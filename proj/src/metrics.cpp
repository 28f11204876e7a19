#include "videograph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "videograph/errors.hpp"

namespace videograph {

double average_precision(std::span<const double> scores, std::span<const int> positives) {
  if (scores.size() != positives.size()) throw ShapeError("average_precision: scores and labels differ in length");
  const std::size_t total_pos = static_cast<std::size_t>(std::count_if(positives.begin(), positives.end(),
                                                                       [](int p) { return p != 0; }));
  if (total_pos == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (positives[order[rank]] == 0) continue;
    ++hits;
    const double precision = static_cast<double>(hits) / static_cast<double>(rank + 1);
    ap += precision / static_cast<double>(total_pos);  // recall step is 1/total_pos
  }
  return ap;
}

double mean_average_precision(const Tensor& scores, const Tensor& labels) {
  if (scores.dim() != 2 || scores.shape() != labels.shape()) {
    throw ShapeError("mean_average_precision: scores " + shape_to_string(scores.shape()) + " vs labels " +
                     shape_to_string(labels.shape()));
  }
  const std::size_t v = scores.size(0), k = scores.size(1);
  double total = 0.0;
  std::size_t classes = 0;
  std::vector<double> column(v);
  std::vector<int> positives(v);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < v; ++i) {
      column[i] = scores.data()[i * k + c];
      positives[i] = labels.data()[i * k + c] != 0.0 ? 1 : 0;
    }
    const double ap = average_precision(column, positives);
    if (std::isnan(ap)) continue;
    total += ap;
    ++classes;
  }
  if (classes == 0) throw std::invalid_argument("mean_average_precision: no class has a positive label");
  return total / static_cast<double>(classes);
}

std::vector<int> argmax_rows(const Tensor& scores) {
  if (scores.dim() != 2) throw ShapeError("argmax_rows expects a matrix, got " + shape_to_string(scores.shape()));
  const std::size_t rows = scores.size(0), cols = scores.size(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = scores.data().subspan(r * cols, cols);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw ShapeError("accuracy: predictions and labels differ in length");
  if (predictions.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace videograph
