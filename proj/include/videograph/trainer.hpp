#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "videograph/config.hpp"
#include "videograph/model.hpp"
#include "videograph/optim.hpp"
#include "videograph/synthetic.hpp"

namespace videograph {

struct MetricRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_metric = 0.0;          // accuracy or mAP; NaN without a validation set
  double mean_node_distance = 0.0;  // NaN for models without graph nodes
};

class MetricLog {
 public:
  static constexpr const char* kHeader = "epoch,train_loss,train_acc,val_metric,mean_node_distance";

  /// Rows must arrive in strictly increasing epoch order.
  void append(const MetricRow& row);
  const std::vector<MetricRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  static MetricLog parse_csv(const std::string& text);

 private:
  std::vector<MetricRow> rows_;
};

/// Everything the trainer owns between epochs.
struct TrainingSession {
  RunConfig config;
  std::unique_ptr<Model> model;
  std::unique_ptr<Sgd> optimizer;
  std::size_t epochs_done = 0;
  MetricLog log;
};

/// Builds the model (k-means init draws its sample from `train`) and optimizer.
TrainingSession make_session(const RunConfig& config, const Dataset& train);

/// Stacks samples into a (B, T, H, W, C) batch.
Tensor batch_segments(const Dataset& dataset, std::span<const std::size_t> indices);

/// Batch targets: class ids for single-label, B x K 0/1 matrix for multi-label.
std::vector<int> batch_labels(const Dataset& dataset, std::span<const std::size_t> indices);
Tensor batch_label_matrix(const Dataset& dataset, std::span<const std::size_t> indices);

/// Shuffle order used for `epoch` (1-based), a pure function of seed and epoch.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch);

/// Mean loss over the dataset without touching parameters. kTrain uses batch
/// statistics (and refreshes running statistics), so it works before training.
double evaluate_loss(Model& model, const Dataset& dataset, std::size_t batch_size, Mode mode = Mode::kEval);

/// Runs one epoch of shuffled mini-batch SGD and appends its metric row.
/// A non-finite loss aborts with a NumericError naming the epoch and batch.
const MetricRow& train_epoch(TrainingSession& session, const Dataset& train, const Dataset* val);

using EpochCallback = std::function<void(const TrainingSession&, const MetricRow&)>;

/// Continues `session` until config.epochs epochs are done.
void train(TrainingSession& session, const Dataset& train, const Dataset* val, const EpochCallback& on_epoch = {});

struct Evaluation {
  double metric = 0.0;    // accuracy (single-label) or mAP (multi-label)
  double accuracy = 0.0;  // top-1 hit against the label (set)
  Tensor scores;          // V x K
  std::vector<int> predictions;
  std::vector<int> labels;  // primary label per sample
};

/// Applies the perturbation to each sample's time axis (seeded per sample
/// from `seed`) and scores in eval mode. Samples are spread over up to
/// configured_threads() workers; results do not depend on the thread count.
Evaluation evaluate(Model& model, const Dataset& dataset, Perturbation perturbation, std::uint64_t seed = 0,
                    std::size_t batch_size = 8);

/// Deterministic split by seeded shuffle; the first `train_fraction` goes to train.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed);

}  // namespace videograph
