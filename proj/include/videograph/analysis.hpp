#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "videograph/tensor.hpp"

namespace videograph {

/// Mean Euclidean distance over all unordered pairs of L2-normalized rows of
/// an N x C matrix. Zero rows stay zero.
double track_node_distances(const Tensor& nodes_hat);

/// ReLU activations of the last graph embedding layer for M videos of one
/// class, stored M x N' x T' x C.
struct ActivationStack {
  Tensor z1;

  /// The model emits (M, T', N', C); this swaps the time and node axes.
  static ActivationStack from_model_order(const Tensor& activations);
};

struct ExtractedGraph {
  int class_id = 0;
  std::size_t num_nodes = 0;
  std::vector<double> node_importance;           // z4, length N'
  std::vector<double> edge_weights;              // N' x N', distances between rows of z3
  std::vector<std::array<double, 2>> positions;  // optional layout

  double edge(std::size_t i, std::size_t j) const { return edge_weights[i * num_nodes + j]; }
};

/// z2 = mean over videos, z3 = mean over time, z4 = channel sum of z3,
/// edges = pairwise distances between rows of z3.
ExtractedGraph extract_activity_graph(const ActivationStack& stack, int class_id = 0);

/// Fruchterman-Reingold layout in a unit area with distance-scaled attraction.
/// Positions start uniformly in [-0.5, 0.5)^2 and the output is centred on the origin.
std::vector<std::array<double, 2>> force_layout(const ExtractedGraph& graph, std::size_t iterations = 500,
                                                std::uint64_t seed = 0);

/// K x K counts indexed (true, predicted).
std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> predictions,
                                                       std::span<const int> labels, std::size_t classes);
std::string confusion_to_csv(const std::vector<std::vector<std::size_t>>& matrix);

enum class GraphFormat { kDot, kJson };

std::string graph_to_dot(const ExtractedGraph& graph);
std::string graph_to_json(const ExtractedGraph& graph);
ExtractedGraph graph_from_json(const std::string& text);

void export_graph(const ExtractedGraph& graph, GraphFormat format, const std::filesystem::path& path);

}  // namespace videograph
