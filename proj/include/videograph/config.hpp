#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

#include "videograph/optim.hpp"

namespace videograph {

enum class LabelMode { kSingle, kMulti };
enum class AttentionKind { kSigmoid, kSoftmaxOverNodes, kTanh };
enum class InitStrategy { kRandom, kSobol, kKMeans };
enum class Architecture { kVideoGraph, kMeanPool };
enum class Perturbation { kNatural, kReversed, kRandom };
enum class Regime { kMarginalConfound, kDistinctActions };

std::string to_string(LabelMode v);
std::string to_string(AttentionKind v);
std::string to_string(InitStrategy v);
std::string to_string(Architecture v);
std::string to_string(Perturbation v);
std::string to_string(Regime v);

LabelMode parse_label_mode(std::string_view s);
AttentionKind parse_attention_kind(std::string_view s);
InitStrategy parse_init_strategy(std::string_view s);
Architecture parse_architecture(std::string_view s);
Perturbation parse_perturbation(std::string_view s);
Regime parse_regime(std::string_view s);

struct VideoGraphConfig {
  std::size_t timesteps = 64;  // T
  std::size_t nodes = 128;     // N
  std::size_t height = 7;      // H
  std::size_t width = 7;       // W
  std::size_t channels = 1024; // C
  std::size_t time_kernel = 7; // t
  std::size_t node_kernel = 7; // n
  std::size_t embedding_layers = 2;
  std::size_t classifier_hidden = 512;
  std::size_t num_classes = 12;
  LabelMode label_mode = LabelMode::kSingle;
  AttentionKind attention = AttentionKind::kSigmoid;
  InitStrategy init = InitStrategy::kRandom;
  Architecture architecture = Architecture::kVideoGraph;
  std::uint64_t seed = 0;

  /// Checks basic positivity and odd kernels; pooling feasibility is
  /// checked by shape_inference.
  void validate() const;

  /// The desk-scale configuration used throughout the tests.
  static VideoGraphConfig desk();
};

/// Parameters of the synthetic structured-activity generator.
struct SyntheticConfig {
  std::size_t num_actions = 4;  // U
  Regime regime = Regime::kMarginalConfound;
  double noise_sigma = 0.3;
  double mixing = 0.1;  // weight of the uniform component in each transition matrix
  std::size_t train_videos = 100;
  std::size_t val_videos = 100;
};

struct RunConfig {
  VideoGraphConfig model;
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  SgdConfig optimizer;
  std::string train_manifest;
  std::string val_manifest;
  Perturbation eval_perturbation = Perturbation::kNatural;
  std::uint64_t seed = 0;
  SyntheticConfig synthetic;

  void validate() const;
};

void to_json(nlohmann::json& j, const VideoGraphConfig& c);
void from_json(const nlohmann::json& j, VideoGraphConfig& c);
void to_json(nlohmann::json& j, const SyntheticConfig& c);
void from_json(const nlohmann::json& j, SyntheticConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

RunConfig load_run_config(const std::string& path);

}  // namespace videograph
