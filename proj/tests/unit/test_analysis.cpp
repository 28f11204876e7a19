#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>

#include "videograph/analysis.hpp"
#include "videograph/errors.hpp"

using namespace videograph;

namespace {

// Oracle stack from tests/oracles/make_fixtures.py, M=2, N'=3, T'=2, C=2.
Tensor oracle_stack() {
  return Tensor({2, 3, 2, 2}, {0.5, 1.0, 1.5, 0.0, 0.0, 2.0, 1.0, 1.0, 3.0, 0.25, 0.75, 0.5,
                               1.5, 0.0, 0.5, 2.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.75, 1.25, 1.5});
}

}  // namespace

TEST(NodeDistance, IdenticalRowsGiveZero) {
  EXPECT_EQ(track_node_distances(Tensor({3, 2}, {1, 2, 1, 2, 1, 2})), 0.0);
}

TEST(NodeDistance, OrthonormalRowsGiveSqrtTwo) {
  EXPECT_NEAR(track_node_distances(Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1})), std::sqrt(2.0), 1e-12);
}

TEST(NodeDistance, HandMatrixMatchesOracle) {
  EXPECT_NEAR(track_node_distances(Tensor({3, 3}, {1, 2, 0, 0, -1, 3, 2, 2, 2})), 1.1333360615592025, 1e-12);
}

TEST(NodeDistance, ZeroRowsStayZero) {
  // Zero row against two orthonormal rows: distances 1, 1, sqrt(2).
  EXPECT_NEAR(track_node_distances(Tensor({3, 2}, {0, 0, 1, 0, 0, 1})), (2.0 + std::sqrt(2.0)) / 3.0, 1e-12);
}

TEST(NodeDistance, ScaleInvariant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  std::vector<double> v(40);
  for (double& x : v) x = d(rng);
  std::vector<double> scaled(v);
  for (double& x : scaled) x *= 37.5;
  EXPECT_NEAR(track_node_distances(Tensor({8, 5}, v)), track_node_distances(Tensor({8, 5}, scaled)), 1e-12);
}

TEST(Extraction, MatchesStepByStepOracle) {
  const auto g = extract_activity_graph(ActivationStack{oracle_stack()}, 2);
  EXPECT_EQ(g.class_id, 2);
  const double z4[] = {1.75, 1.75, 2.0};
  const double edges[3][3] = {{0.0, 0.3535533905932738, 0.25},
                              {0.3535533905932738, 0.0, 0.5590169943749475},
                              {0.25, 0.5590169943749475, 0.0}};
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(g.node_importance[j], z4[j], 1e-12);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(g.edge(i, j), edges[i][j], 1e-12);
  }
}

TEST(Extraction, ConstantActivations) {
  const auto g = extract_activity_graph(ActivationStack{Tensor::full({3, 4, 5, 6}, 0.5)});
  for (double v : g.node_importance) EXPECT_DOUBLE_EQ(v, 3.0);
  for (double e : g.edge_weights) EXPECT_EQ(e, 0.0);
}

TEST(Extraction, PaperShapes) {
  const auto g = extract_activity_graph(ActivationStack{Tensor::full({1, 14, 7, 1024}, 0.01)});
  EXPECT_EQ(g.node_importance.size(), 14u);
  EXPECT_EQ(g.edge_weights.size(), 14u * 14u);
}

TEST(Extraction, ModelOrderIsTransposed) {
  // (M, T', N', C) -> (M, N', T', C)
  const Tensor a({1, 2, 3, 1}, {0, 1, 2, 3, 4, 5});
  const auto s = ActivationStack::from_model_order(a);
  EXPECT_EQ(s.z1.shape(), (Shape{1, 3, 2, 1}));
  EXPECT_EQ(s.z1.at({0, 2, 1, 0}), 5.0);
  EXPECT_EQ(s.z1.at({0, 1, 0, 0}), 1.0);
}

TEST(Extraction, EmptyStackRejected) { EXPECT_THROW(extract_activity_graph(ActivationStack{}), ShapeError); }

TEST(Layout, SingleNodeAtOrigin) {
  ExtractedGraph g;
  g.num_nodes = 1;
  g.node_importance = {1.0};
  g.edge_weights = {0.0};
  const auto p = force_layout(g, 500, 3);
  EXPECT_EQ(p[0][0], 0.0);
  EXPECT_EQ(p[0][1], 0.0);
}

TEST(Layout, TwoBodiesAreSymmetric) {
  ExtractedGraph g;
  g.num_nodes = 2;
  g.node_importance = {1.0, 2.0};
  g.edge_weights = {0.0, 0.7, 0.7, 0.0};
  const auto p = force_layout(g, 500, 4);
  EXPECT_NEAR(p[0][0], -p[1][0], 1e-6);
  EXPECT_NEAR(p[0][1], -p[1][1], 1e-6);
}

TEST(Layout, DeterministicAndFinite) {
  const auto g = extract_activity_graph(ActivationStack{oracle_stack()});
  const auto a = force_layout(g, 500, 9), b = force_layout(g, 500, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_TRUE(std::isfinite(a[i][0]) && std::isfinite(a[i][1]));
  }
}

TEST(Confusion, HandTally) {
  const std::vector<int> pred{0, 1, 1, 2, 0}, truth{0, 1, 2, 2, 1};
  const auto m = confusion_matrix(pred, truth, 3);
  const std::vector<std::vector<std::size_t>> expected{{1, 0, 0}, {1, 1, 0}, {0, 1, 1}};
  EXPECT_EQ(m, expected);
  EXPECT_EQ(confusion_to_csv(m), "true\\predicted,0,1,2\n0,1,0,0\n1,1,1,0\n2,0,1,1\n");
  const std::vector<int> bad{3};
  EXPECT_THROW(confusion_matrix(bad, bad, 3), std::out_of_range);
}

TEST(Export, ThreeNodeDotFixture) {
  const auto g = extract_activity_graph(ActivationStack{oracle_stack()}, 1);
  const std::string expected =
      "graph class_1 {\n"
      "  n0 [size=0.2, importance=1.75];\n"
      "  n1 [size=0.2, importance=1.75];\n"
      "  n2 [size=2, importance=2];\n"
      "  n0 -- n1 [weight=0.353553];\n"
      "  n0 -- n2 [weight=0.25];\n"
      "  n1 -- n2 [weight=0.559017];\n"
      "}\n";
  EXPECT_EQ(graph_to_dot(g), expected);
}

TEST(Export, DotCountsMatchGraph) {
  ExtractedGraph g = extract_activity_graph(ActivationStack{Tensor::full({1, 5, 2, 3}, 1.0)});
  g.positions = force_layout(g, 50, 1);
  const std::string dot = graph_to_dot(g);
  const std::regex node(R"(^  n\d+ \[)"), edge(R"(^  n\d+ -- n\d+ )");
  std::istringstream in(dot);
  std::string line;
  int nodes = 0, edges = 0;
  while (std::getline(in, line)) {
    nodes += std::regex_search(line, node) && !std::regex_search(line, edge);
    edges += std::regex_search(line, edge);
  }
  EXPECT_EQ(nodes, 5);
  EXPECT_EQ(edges, 10);
}

TEST(Export, JsonRoundTrip) {
  ExtractedGraph g = extract_activity_graph(ActivationStack{oracle_stack()}, 3);
  g.positions = force_layout(g, 100, 2);
  const auto path = std::filesystem::temp_directory_path() / "vg_graph.json";
  export_graph(g, GraphFormat::kJson, path);
  std::ifstream in(path);
  const ExtractedGraph back = graph_from_json(std::string(std::istreambuf_iterator<char>(in), {}));
  EXPECT_EQ(back.class_id, 3);
  for (std::size_t i = 0; i < g.edge_weights.size(); ++i) EXPECT_NEAR(back.edge_weights[i], g.edge_weights[i], 1e-12);
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    EXPECT_NEAR(back.node_importance[i], g.node_importance[i], 1e-12);
    EXPECT_NEAR(back.positions[i][0], g.positions[i][0], 1e-12);
  }
  EXPECT_THROW(export_graph(g, GraphFormat::kDot, "/nonexistent-dir/x.dot"), std::runtime_error);
}
