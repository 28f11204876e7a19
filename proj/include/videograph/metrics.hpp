#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "videograph/tensor.hpp"

namespace videograph {

/// Average precision of one class. Samples are ranked by descending score,
/// ties broken by ascending sample index; AP = sum over ranks n of
/// (R_n - R_{n-1}) * P_n. Returns NaN when there are no positives.
double average_precision(std::span<const double> scores, std::span<const int> positives);

/// Mean of per-class AP over classes with at least one positive.
/// scores and labels are V x K; labels hold 0/1. Throws if no class has a positive.
double mean_average_precision(const Tensor& scores, const Tensor& labels);

/// Index of the largest entry of each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor& scores);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

}  // namespace videograph
