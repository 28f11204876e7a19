#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "videograph/config.hpp"
#include "videograph/tensor.hpp"

namespace videograph {

/// U unit-action prototypes in R^C plus the per-component segment noise.
struct UnitActionVocabulary {
  std::vector<std::vector<double>> prototypes;
  double noise_sigma = 0.3;

  std::size_t size() const { return prototypes.size(); }
  std::size_t channels() const { return prototypes.empty() ? 0 : prototypes.front().size(); }

  /// Unit-norm prototypes, mutually orthogonal when U <= C. Throws if the
  /// minimum pairwise distance does not exceed 4 * noise_sigma.
  static UnitActionVocabulary make(std::size_t actions, std::size_t channels, double noise_sigma,
                                   std::uint64_t seed);
};

/// First-order Markov structure over unit-actions.
struct ActivityClass {
  int id = 0;
  std::size_t num_actions = 0;
  std::vector<double> transition;  // U x U, row-stochastic
  std::vector<double> initial;     // length U

  double at(std::size_t from, std::size_t to) const { return transition[from * num_actions + to]; }
};

struct VideoSample {
  Tensor features;                 // T x H x W x C
  int label = 0;                   // single-label class
  std::vector<int> labels;         // multi-label set (single-label: {label})
  std::vector<int> unit_actions;   // ground truth walk, diagnostics only
};

struct Dataset {
  LabelMode label_mode = LabelMode::kSingle;
  std::size_t num_classes = 0;
  std::vector<VideoSample> samples;

  std::size_t size() const { return samples.size(); }
};

/// marginal_confound: every class is (1 - mixing) * P_k + mixing / U with P_k
/// a distinct random U-cycle, so all classes are doubly stochastic with the
/// uniform stationary law. distinct_actions: classes walk disjoint slices of
/// the vocabulary.
std::vector<ActivityClass> make_class_set(std::size_t classes, std::size_t actions, Regime regime,
                                          std::uint64_t seed, double mixing = 0.1);

/// Length-T Markov walk; each segment is its prototype plus i.i.d.
/// normal(0, noise_sigma^2) noise, tiled over H x W.
VideoSample sample_video(const ActivityClass& activity, const UnitActionVocabulary& vocab, std::size_t timesteps,
                         std::size_t height, std::size_t width, std::uint64_t seed);

/// Permutes the time axis only: identity, reversal, or a seeded uniform shuffle.
VideoSample perturb_order(const VideoSample& sample, Perturbation mode, std::uint64_t seed);
std::vector<std::size_t> time_permutation(std::size_t timesteps, Perturbation mode, std::uint64_t seed);

/// Balanced synthetic dataset (class = index mod K). Multi-label videos
/// concatenate two half-length walks from two classes and carry both labels.
Dataset generate_dataset(const VideoGraphConfig& model, const std::vector<ActivityClass>& classes,
                         const UnitActionVocabulary& vocab,
                         std::size_t count, std::uint64_t seed);

/// Per-position C-vectors of every video, stacked as an M x C matrix.
Tensor stack_positions(const Dataset& dataset);

/// Writes one VGFT file per sample under `dir/features/` and a JSON-lines
/// manifest `dir/<name>.jsonl` with paths relative to `dir`.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::string& name,
                                    const Dataset& dataset);

/// Reads a JSON-lines manifest of {"feature_path", "label"} or
/// {"feature_path", "labels"} records. Relative paths resolve against the
/// manifest's directory.
Dataset read_manifest(const std::filesystem::path& manifest, std::size_t num_classes);

}  // namespace videograph
