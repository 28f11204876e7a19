#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "videograph/errors.hpp"
#include "videograph/model.hpp"

using namespace videograph;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double stddev = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, stddev);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = d(rng);
  return Tensor(std::move(shape), std::move(v));
}

}  // namespace

TEST(ShapeInference, PaperConfiguration) {
  const auto stages = shape_inference(VideoGraphConfig{});
  ASSERT_EQ(stages.size(), 7u);
  EXPECT_EQ(stages[0].shape, (Shape{64, 7, 7, 1024}));
  EXPECT_EQ(stages[1].shape, (Shape{7, 7, 128}));
  EXPECT_EQ(stages[2].shape, (Shape{64, 128, 7, 7, 1024}));
  EXPECT_EQ(stages[3].shape, (Shape{21, 42, 7, 7, 1024}));
  EXPECT_EQ(stages[4].shape, (Shape{7, 14, 7, 7, 1024}));
  EXPECT_EQ(stages[5].shape, (Shape{100352}));
  EXPECT_EQ(stages[6].shape, (Shape{12}));
}

TEST(ShapeInference, NineByNinePoolsToOne) {
  VideoGraphConfig c;
  c.timesteps = 9;
  c.nodes = 9;
  const auto stages = shape_inference(c);
  EXPECT_EQ(stages[4].shape[0], 1u);
  EXPECT_EQ(stages[4].shape[1], 1u);
}

TEST(ShapeInference, TooShortForSecondLayer) {
  VideoGraphConfig c;
  c.timesteps = 8;
  EXPECT_THROW(shape_inference(c), ShapeError);
}

TEST(ShapeInference, ForwardMatchesStageByStage) {
  VideoGraphConfig c = VideoGraphConfig::desk();
  c.timesteps = 18;
  c.nodes = 9;
  c.height = 2;
  c.width = 1;
  c.channels = 4;
  c.embedding_layers = 2;
  const auto stages = shape_inference(c);
  VideoGraph model(c);
  const Tensor x = random_tensor({1, 18, 2, 1, 4}, 3);
  const auto att = node_attention_forward(x, model.latent_nodes(), model.attention_params());
  EXPECT_EQ(att.z.shape(), (Shape{1, 18, 9, 2, 1, 4}));
  Tensor z = att.z;
  for (std::size_t l = 0; l < 2; ++l) {
    z = graph_embedding_forward(z, model.layers()[l], Mode::kTrain);
    Shape expected{1};
    expected.insert(expected.end(), stages[3 + l].shape.begin(), stages[3 + l].shape.end());
    EXPECT_EQ(z.shape(), expected);
  }
  EXPECT_EQ(model.logits(x, Mode::kTrain).shape(), (Shape{1, c.num_classes}));
}

TEST(NodeAttention, ZeroInputGivesHalfAttention) {
  const Tensor nodes = random_tensor({3, 4}, 1);
  std::mt19937_64 rng(2);
  const NodeAttentionParams params{fan_in_uniform({4, 4}, 4, rng), fan_in_uniform({4}, 4, rng)};
  const auto out = node_attention_forward(Tensor::zeros({2, 2, 4}), nodes, params);
  for (double a : out.alpha.data()) EXPECT_EQ(a, 0.5);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t hw = 0; hw < 4; ++hw)
      for (std::size_t c = 0; c < 4; ++c)
        EXPECT_EQ(out.z.data()[(j * 4 + hw) * 4 + c], 0.5 * out.nodes_hat.data()[j * 4 + c]);
}

TEST(NodeAttention, ZEqualsAlphaTimesNodes) {
  const Tensor x = random_tensor({2, 1, 4}, 4);
  const Tensor nodes = random_tensor({3, 4}, 5);
  std::mt19937_64 rng(6);
  const NodeAttentionParams params{fan_in_uniform({4, 4}, 4, rng), fan_in_uniform({4}, 4, rng)};
  const auto out = node_attention_forward(x, nodes, params);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t h = 0; h < 2; ++h)
      for (std::size_t c = 0; c < 4; ++c)
        EXPECT_EQ(out.z.at({j, h, 0, c}), out.alpha.at({h, 0, j}) * out.nodes_hat.at({j, c}));
}

TEST(NodeAttention, PermutingNodesPermutesOutputExactly) {
  const Tensor x = random_tensor({2, 2, 4}, 7);
  const Tensor nodes = random_tensor({3, 4}, 8);
  std::mt19937_64 rng(9);
  const NodeAttentionParams params{fan_in_uniform({4, 4}, 4, rng), fan_in_uniform({4}, 4, rng)};
  const std::array<std::size_t, 3> perm{2, 0, 1};
  std::vector<double> permuted(12);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t c = 0; c < 4; ++c) permuted[j * 4 + c] = nodes.data()[perm[j] * 4 + c];
  const auto a = node_attention_forward(x, nodes, params);
  const auto b = node_attention_forward(x, Tensor({3, 4}, permuted), params);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(b.z.data()[j * 16 + i], a.z.data()[perm[j] * 16 + i]);
}

TEST(NodeAttention, AttentionRanges) {
  const Tensor x = random_tensor({3, 2, 4}, 10, 3.0);
  const Tensor nodes = random_tensor({5, 4}, 11);
  std::mt19937_64 rng(12);
  NodeAttentionParams params{fan_in_uniform({4, 4}, 4, rng), fan_in_uniform({4}, 4, rng)};
  const Tensor sig = node_attention_forward(x, nodes, params).alpha;
  for (double a : sig.data()) {
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
  }
  params.kind = AttentionKind::kSoftmaxOverNodes;
  const Tensor alpha = node_attention_forward(x, nodes, params).alpha;
  for (std::size_t p = 0; p < 6; ++p) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) s += alpha.data()[p * 5 + j];
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(GraphEmbedding, IdentityConfigurationIsPooledRelu) {
  std::mt19937_64 rng(1);
  GraphEmbeddingParams layer(3, 3, 3, rng);
  std::vector<double> delta(9, 0.0);
  for (std::size_t c = 0; c < 3; ++c) delta[c * 3 + 1] = 1.0;
  layer.time_kernels = Tensor({3, 3}, delta);
  layer.node_kernels = Tensor({3, 3}, delta);
  layer.channel_mix = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  layer.channel_bias = Tensor::zeros({3});
  layer.norm.gamma = Tensor::full({3}, 1.0);
  layer.norm.beta = Tensor::zeros({3});
  layer.norm.running_mean.assign(3, 0.0);
  layer.norm.running_var.assign(3, 1.0 - layer.norm.epsilon);
  layer.norm.initialized = true;

  const Tensor z = random_tensor({6, 6, 1, 2, 3}, 2);
  const Tensor got = graph_embedding_forward(z, layer, Mode::kEval);
  const std::array<std::size_t, 2> axes{0, 1};
  const Tensor expected = max_pool(relu(z), axes);
  ASSERT_EQ(got.shape(), expected.shape());
  for (std::size_t i = 0; i < got.numel(); ++i) EXPECT_NEAR(got.data()[i], expected.data()[i], 1e-12);
}

TEST(GraphEmbedding, DepthwiseConvsAreChannelLocal) {
  std::mt19937_64 rng(3);
  const Tensor kt = fan_in_uniform({3, 3}, 3, rng), kn = fan_in_uniform({3, 3}, 3, rng);
  const Tensor z = random_tensor({5, 4, 1, 1, 3}, 4);
  std::vector<double> bumped(z.data().begin(), z.data().end());
  for (std::size_t i = 1; i < bumped.size(); i += 3) bumped[i] += 0.5;  // channel 1 only
  const Tensor a = depthwise_conv1d(depthwise_conv1d(z, 1, kn), 0, kt);
  const Tensor b = depthwise_conv1d(depthwise_conv1d(Tensor(z.shape(), bumped), 1, kn), 0, kt);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    if (i % 3 == 1) continue;
    EXPECT_EQ(a.data()[i], b.data()[i]) << "element " << i;
  }
}

TEST(VideoGraph, DeskForwardIsFiniteAndDeterministic) {
  VideoGraphConfig c = VideoGraphConfig::desk();
  c.seed = 5;
  VideoGraph a(c), b(c);
  const Tensor x = random_tensor({2, 16, 1, 1, 16}, 6);
  const Tensor la = a.logits(x, Mode::kTrain), lb = b.logits(x, Mode::kTrain);
  ASSERT_EQ(la.shape(), (Shape{2, 4}));
  for (double v : la.data()) EXPECT_TRUE(std::isfinite(v));
  const Tensor ea = a.logits(x, Mode::kEval), eb = b.logits(x, Mode::kEval);
  for (std::size_t i = 0; i < ea.numel(); ++i) EXPECT_EQ(ea.data()[i], eb.data()[i]);
}

TEST(MeanPool, TimePermutationGivesBitwiseScores) {
  VideoGraphConfig c = VideoGraphConfig::desk();
  c.architecture = Architecture::kMeanPool;
  MeanPoolBaseline model(c);
  const Tensor x = random_tensor({3, 16, 1, 1, 16}, 8);
  model.logits(x, Mode::kTrain);
  std::vector<std::size_t> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(9));
  std::vector<double> shuffled(x.numel());
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t t = 0; t < 16; ++t)
      for (std::size_t k = 0; k < 16; ++k) shuffled[(b * 16 + t) * 16 + k] = x.data()[(b * 16 + perm[t]) * 16 + k];
  const Tensor a = model.scores(x, Mode::kEval), b = model.scores(Tensor(x.shape(), shuffled), Mode::kEval);
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_EQ(a.data()[i], b.data()[i]);
}

TEST(InitLatentNodes, SobolOneChannel) {
  const Tensor y = init_latent_nodes(InitStrategy::kSobol, 3, 1, 0);
  EXPECT_EQ(y.data()[0], 0.0);
  EXPECT_EQ(y.data()[1], 0.5);
  EXPECT_EQ(y.data()[2], -0.5);
}

TEST(InitLatentNodes, RandomIsReproducibleAndBounded) {
  const Tensor a = init_latent_nodes(InitStrategy::kRandom, 8, 64, 3), b = init_latent_nodes(InitStrategy::kRandom, 8, 64, 3);
  for (std::size_t i = 0; i < a.numel(); ++i) {
    EXPECT_EQ(a.data()[i], b.data()[i]);
    EXPECT_LT(std::abs(a.data()[i]), 10.0 / 8.0);
  }
}

TEST(InitLatentNodes, KMeansRecoversBlobMeans) {
  std::vector<double> pts;
  for (int i = 0; i < 10; ++i) {
    const double e = 0.01 * (i - 4.5);
    pts.insert(pts.end(), {5.0 + e, 5.0 - e});
    pts.insert(pts.end(), {-5.0 - e, -5.0 + e});
  }
  const Tensor sample({20, 2}, pts);
  const Tensor y = init_latent_nodes(InitStrategy::kKMeans, 2, 2, 1, &sample);
  const bool first_positive = y.data()[0] > 0;
  EXPECT_NEAR(y.at({first_positive ? 0u : 1u, 0}), 5.0, 1e-6);
  EXPECT_NEAR(y.at({first_positive ? 0u : 1u, 1}), 5.0, 1e-6);
  EXPECT_NEAR(y.at({first_positive ? 1u : 0u, 0}), -5.0, 1e-6);
  EXPECT_THROW(init_latent_nodes(InitStrategy::kKMeans, 2, 2, 1), ConfigError);
  EXPECT_THROW(init_latent_nodes(InitStrategy::kKMeans, 30, 2, 1, &sample), ConfigError);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  RunConfig c;
  c.model = VideoGraphConfig::desk();
  c.model.attention = AttentionKind::kTanh;
  c.optimizer.learning_rate = 0.05;
  const nlohmann::json j = c;
  const RunConfig back = j.get<RunConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  nlohmann::json bad = j;
  bad["learning_rte"] = 0.1;
  EXPECT_THROW(bad.get<RunConfig>(), ConfigError);
}
