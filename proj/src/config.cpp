#include "videograph/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <utility>

#include "videograph/errors.hpp"

namespace videograph {
namespace {

template <typename E, std::size_t N>
std::string name_of(E value, const std::array<std::pair<E, const char*>, N>& names) {
  for (const auto& [v, s] : names)
    if (v == value) return s;
  return "unknown";
}

template <typename E, std::size_t N>
E parse_name(std::string_view text, const std::array<std::pair<E, const char*>, N>& names, const char* what) {
  for (const auto& [v, s] : names)
    if (text == s) return v;
  std::string allowed;
  for (const auto& [v, s] : names) allowed += (allowed.empty() ? "" : "|") + std::string(s);
  throw ConfigError(std::string("unknown ") + what + " '" + std::string(text) + "' (expected " + allowed + ")");
}

constexpr std::array<std::pair<LabelMode, const char*>, 2> kLabelModes{{
    {LabelMode::kSingle, "single"}, {LabelMode::kMulti, "multi"}}};
constexpr std::array<std::pair<AttentionKind, const char*>, 3> kAttentionKinds{{
    {AttentionKind::kSigmoid, "sigmoid"},
    {AttentionKind::kSoftmaxOverNodes, "softmax_over_nodes"},
    {AttentionKind::kTanh, "tanh"}}};
constexpr std::array<std::pair<InitStrategy, const char*>, 3> kInitStrategies{{
    {InitStrategy::kRandom, "random"}, {InitStrategy::kSobol, "sobol"}, {InitStrategy::kKMeans, "kmeans"}}};
constexpr std::array<std::pair<Architecture, const char*>, 2> kArchitectures{{
    {Architecture::kVideoGraph, "videograph"}, {Architecture::kMeanPool, "mean_pool"}}};
constexpr std::array<std::pair<Perturbation, const char*>, 3> kPerturbations{{
    {Perturbation::kNatural, "natural"}, {Perturbation::kReversed, "reversed"}, {Perturbation::kRandom, "random"}}};
constexpr std::array<std::pair<Regime, const char*>, 2> kRegimes{{
    {Regime::kMarginalConfound, "marginal_confound"}, {Regime::kDistinctActions, "distinct_actions"}}};

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

std::string to_string(LabelMode v) { return name_of(v, kLabelModes); }
std::string to_string(AttentionKind v) { return name_of(v, kAttentionKinds); }
std::string to_string(InitStrategy v) { return name_of(v, kInitStrategies); }
std::string to_string(Architecture v) { return name_of(v, kArchitectures); }
std::string to_string(Perturbation v) { return name_of(v, kPerturbations); }
std::string to_string(Regime v) { return name_of(v, kRegimes); }

LabelMode parse_label_mode(std::string_view s) { return parse_name(s, kLabelModes, "label_mode"); }
AttentionKind parse_attention_kind(std::string_view s) { return parse_name(s, kAttentionKinds, "sigma_kind"); }
InitStrategy parse_init_strategy(std::string_view s) { return parse_name(s, kInitStrategies, "init_strategy"); }
Architecture parse_architecture(std::string_view s) { return parse_name(s, kArchitectures, "architecture"); }
Perturbation parse_perturbation(std::string_view s) { return parse_name(s, kPerturbations, "perturbation"); }
Regime parse_regime(std::string_view s) { return parse_name(s, kRegimes, "regime"); }

void VideoGraphConfig::validate() const {
  const std::pair<const char*, std::size_t> dims[] = {
      {"T", timesteps}, {"N", nodes}, {"H", height}, {"W", width}, {"C", channels},
      {"t", time_kernel}, {"n", node_kernel}, {"classifier_hidden", classifier_hidden},
      {"num_classes", num_classes}};
  for (const auto& [name, value] : dims)
    if (value == 0) throw ConfigError(std::string(name) + " must be positive");
  if (time_kernel % 2 == 0) throw ConfigError("t must be odd");
  if (node_kernel % 2 == 0) throw ConfigError("n must be odd");
  if (nodes < 2) throw ConfigError("N must be at least 2");
  if (label_mode == LabelMode::kSingle && num_classes < 2) throw ConfigError("single-label needs num_classes >= 2");
}

VideoGraphConfig VideoGraphConfig::desk() {
  VideoGraphConfig c;
  c.timesteps = 16;
  c.nodes = 8;
  c.height = 1;
  c.width = 1;
  c.channels = 16;
  c.embedding_layers = 1;
  c.classifier_hidden = 64;
  c.num_classes = 4;
  return c;
}

void RunConfig::validate() const {
  model.validate();
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  optimizer.validate();
}

void to_json(nlohmann::json& j, const VideoGraphConfig& c) {
  j = nlohmann::json{{"T", c.timesteps},
                     {"N", c.nodes},
                     {"H", c.height},
                     {"W", c.width},
                     {"C", c.channels},
                     {"t", c.time_kernel},
                     {"n", c.node_kernel},
                     {"num_embedding_layers", c.embedding_layers},
                     {"classifier_hidden", c.classifier_hidden},
                     {"num_classes", c.num_classes},
                     {"label_mode", to_string(c.label_mode)},
                     {"sigma_kind", to_string(c.attention)},
                     {"init_strategy", to_string(c.init)},
                     {"architecture", to_string(c.architecture)},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, VideoGraphConfig& c) {
  read_opt(j, "T", c.timesteps);
  read_opt(j, "N", c.nodes);
  read_opt(j, "H", c.height);
  read_opt(j, "W", c.width);
  read_opt(j, "C", c.channels);
  read_opt(j, "t", c.time_kernel);
  read_opt(j, "n", c.node_kernel);
  read_opt(j, "num_embedding_layers", c.embedding_layers);
  read_opt(j, "classifier_hidden", c.classifier_hidden);
  read_opt(j, "num_classes", c.num_classes);
  read_opt(j, "seed", c.seed);
  if (j.contains("label_mode")) c.label_mode = parse_label_mode(j.at("label_mode").get<std::string>());
  if (j.contains("sigma_kind")) c.attention = parse_attention_kind(j.at("sigma_kind").get<std::string>());
  if (j.contains("init_strategy")) c.init = parse_init_strategy(j.at("init_strategy").get<std::string>());
  if (j.contains("architecture")) c.architecture = parse_architecture(j.at("architecture").get<std::string>());
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = nlohmann::json{{"num_actions", c.num_actions},   {"regime", to_string(c.regime)},
                     {"noise_sigma", c.noise_sigma},   {"mixing", c.mixing},
                     {"train_videos", c.train_videos}, {"val_videos", c.val_videos}};
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  read_opt(j, "num_actions", c.num_actions);
  read_opt(j, "noise_sigma", c.noise_sigma);
  read_opt(j, "mixing", c.mixing);
  read_opt(j, "train_videos", c.train_videos);
  read_opt(j, "val_videos", c.val_videos);
  if (j.contains("regime")) c.regime = parse_regime(j.at("regime").get<std::string>());
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"model", c.model},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"learning_rate", c.optimizer.learning_rate},
                     {"momentum", c.optimizer.momentum},
                     {"weight_decay", c.optimizer.weight_decay},
                     {"train_manifest", c.train_manifest},
                     {"val_manifest", c.val_manifest},
                     {"eval_perturbation", to_string(c.eval_perturbation)},
                     {"seed", c.seed},
                     {"synthetic", c.synthetic}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  static const char* const kKnown[] = {"model", "epochs", "batch_size", "learning_rate", "momentum",
                                       "weight_decay", "train_manifest", "val_manifest",
                                       "eval_perturbation", "seed", "synthetic"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ConfigError("unknown run config key '" + key + "'");
    }
  }
  read_opt(j, "model", c.model);
  read_opt(j, "epochs", c.epochs);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "learning_rate", c.optimizer.learning_rate);
  read_opt(j, "momentum", c.optimizer.momentum);
  read_opt(j, "weight_decay", c.optimizer.weight_decay);
  read_opt(j, "train_manifest", c.train_manifest);
  read_opt(j, "val_manifest", c.val_manifest);
  read_opt(j, "seed", c.seed);
  read_opt(j, "synthetic", c.synthetic);
  if (j.contains("eval_perturbation"))
    c.eval_perturbation = parse_perturbation(j.at("eval_perturbation").get<std::string>());
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  RunConfig c;
  try {
    j.get_to(c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace videograph
