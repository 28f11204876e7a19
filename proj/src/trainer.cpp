#include "videograph/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "videograph/analysis.hpp"
#include "videograph/errors.hpp"
#include "videograph/metrics.hpp"
#include "videograph/parallel.hpp"

namespace videograph {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

double parse_number(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw FormatError("metric log: bad number '" + s + "'");
  return v;
}

Tensor compute_loss(Model& model, const Dataset& data, std::span<const std::size_t> idx, const Tensor& logits) {
  if (model.config().label_mode == LabelMode::kSingle) {
    const auto labels = batch_labels(data, idx);
    return cross_entropy(logits, labels);
  }
  return binary_cross_entropy(logits, batch_label_matrix(data, idx));
}

void check_label_mode(const Model& model, const Dataset& data) {
  if (model.config().label_mode != data.label_mode) {
    throw ConfigError("label mode mismatch: model is " + to_string(model.config().label_mode) + ", dataset is " +
                      to_string(data.label_mode));
  }
  if (data.num_classes != 0 && data.num_classes != model.config().num_classes) {
    throw ConfigError("dataset has " + std::to_string(data.num_classes) + " classes, model expects " +
                      std::to_string(model.config().num_classes));
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace

// ---------------------------------------------------------------------------

void MetricLog::append(const MetricRow& row) {
  if (!rows_.empty() && row.epoch <= rows_.back().epoch) {
    throw std::logic_error("metric rows must have strictly increasing epochs (" + std::to_string(row.epoch) +
                           " after " + std::to_string(rows_.back().epoch) + ")");
  }
  rows_.push_back(row);
}

std::string MetricLog::to_csv() const {
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : rows_) {
    out += std::to_string(r.epoch) + "," + csv_number(r.train_loss) + "," + csv_number(r.train_acc) + "," +
           csv_number(r.val_metric) + "," + csv_number(r.mean_node_distance) + "\n";
  }
  return out;
}

void MetricLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_csv();
}

MetricLog MetricLog::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw FormatError("metric log: unexpected header");
  MetricLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw FormatError("metric log: expected 5 columns in '" + line + "'");
    MetricRow r;
    r.epoch = static_cast<std::size_t>(std::stoull(cells[0]));
    r.train_loss = parse_number(cells[1]);
    r.train_acc = parse_number(cells[2]);
    r.val_metric = parse_number(cells[3]);
    r.mean_node_distance = parse_number(cells[4]);
    log.append(r);
  }
  return log;
}

// ---------------------------------------------------------------------------

TrainingSession make_session(const RunConfig& config, const Dataset& train) {
  config.validate();
  if (train.size() == 0) throw ConfigError("training set is empty");
  TrainingSession s;
  s.config = config;
  Tensor sample;
  if (config.model.init == InitStrategy::kKMeans) sample = stack_positions(train);
  s.model = make_model(config.model, sample.defined() ? &sample : nullptr);
  check_label_mode(*s.model, train);
  s.optimizer = std::make_unique<Sgd>(s.model->parameter_tensors(), config.optimizer);
  return s;
}

Tensor batch_segments(const Dataset& dataset, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("empty batch");
  const Shape& first = dataset.samples.at(indices[0]).features.shape();
  std::vector<double> values;
  values.reserve(indices.size() * shape_numel(first));
  for (std::size_t i : indices) {
    const Tensor& f = dataset.samples.at(i).features;
    if (f.shape() != first) {
      throw ShapeError("sample " + std::to_string(i) + " has shape " + shape_to_string(f.shape()) + ", expected " +
                       shape_to_string(first));
    }
    values.insert(values.end(), f.data().begin(), f.data().end());
  }
  Shape shape{indices.size()};
  shape.insert(shape.end(), first.begin(), first.end());
  return Tensor(std::move(shape), std::move(values));
}

std::vector<int> batch_labels(const Dataset& dataset, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(dataset.samples.at(i).label);
  return out;
}

Tensor batch_label_matrix(const Dataset& dataset, std::span<const std::size_t> indices) {
  const std::size_t k = dataset.num_classes;
  std::vector<double> m(indices.size() * k, 0.0);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    for (int l : dataset.samples.at(indices[b]).labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= k) throw std::out_of_range("label " + std::to_string(l) + " out of range");
      m[b * k + static_cast<std::size_t>(l)] = 1.0;
    }
  }
  return Tensor({indices.size(), k}, std::move(m));
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x5348, epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

double evaluate_loss(Model& model, const Dataset& dataset, std::size_t batch_size, Mode mode) {
  check_label_mode(model, dataset);
  NoGradGuard guard;
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(dataset.size(), start + batch_size); ++i) idx.push_back(i);
    const Tensor logits = model.logits(batch_segments(dataset, idx), mode);
    total += compute_loss(model, dataset, idx, logits).item() * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(dataset.size());
}

const MetricRow& train_epoch(TrainingSession& session, const Dataset& train, const Dataset* val) {
  Model& model = *session.model;
  check_label_mode(model, train);
  const std::size_t epoch = session.epochs_done + 1;
  const auto order = epoch_order(train.size(), session.config.seed, epoch);
  const std::size_t bs = session.config.batch_size;
  const bool single = model.config().label_mode == LabelMode::kSingle;

  double loss_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t start = 0, batch = 1; start < order.size(); start += bs, ++batch) {
    const std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
    double loss_value = 0.0;
    try {
      const Tensor logits = model.logits(batch_segments(train, idx), Mode::kTrain);
      Tensor loss = compute_loss(model, train, idx, logits);
      loss_value = loss.item();
      if (!std::isfinite(loss_value)) throw NumericError("loss is " + std::to_string(loss_value));
      loss.backward();
      session.optimizer->step();

      const auto labels = batch_labels(train, idx);
      const auto predicted = argmax_rows(logits.detach());
      for (std::size_t b = 0; b < idx.size(); ++b) {
        if (single) {
          hits += predicted[b] == labels[b] ? 1 : 0;
        } else {
          const auto& set = train.samples[idx[b]].labels;
          hits += std::find(set.begin(), set.end(), predicted[b]) != set.end() ? 1 : 0;
        }
      }
    } catch (const NumericError& e) {
      throw NumericError("non-finite value at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                         ": " + e.what());
    }
    loss_sum += loss_value * static_cast<double>(idx.size());
  }

  MetricRow row;
  row.epoch = epoch;
  row.train_loss = loss_sum / static_cast<double>(train.size());
  row.train_acc = static_cast<double>(hits) / static_cast<double>(train.size());
  row.val_metric = val && val->size() > 0 ? evaluate(model, *val, Perturbation::kNatural, session.config.seed, bs).metric
                                          : kNaN;
  const auto nodes = model.nodes_hat();
  row.mean_node_distance = nodes && nodes->size(0) >= 2 ? track_node_distances(*nodes) : kNaN;
  session.epochs_done = epoch;
  session.log.append(row);
  return session.log.rows().back();
}

void train(TrainingSession& session, const Dataset& train, const Dataset* val, const EpochCallback& on_epoch) {
  while (session.epochs_done < session.config.epochs) {
    const MetricRow& row = train_epoch(session, train, val);
    if (on_epoch) on_epoch(session, row);
  }
}

Evaluation evaluate(Model& model, const Dataset& dataset, Perturbation perturbation, std::uint64_t seed,
                    std::size_t batch_size) {
  check_label_mode(model, dataset);
  if (dataset.size() == 0) throw ConfigError("evaluation set is empty");
  if (batch_size == 0) batch_size = 1;
  const std::size_t v = dataset.size(), k = model.config().num_classes;

  // Perturbed copies are made up front so forward passes only read shared state.
  Dataset perturbed{dataset.label_mode, dataset.num_classes, {}};
  perturbed.samples.reserve(v);
  for (std::size_t i = 0; i < v; ++i) {
    perturbed.samples.push_back(perturbation == Perturbation::kNatural
                                    ? dataset.samples[i]
                                    : perturb_order(dataset.samples[i], perturbation, mix_seed(seed, 0x5045, i)));
  }

  std::vector<double> scores(v * k);
  const std::size_t batches = (v + batch_size - 1) / batch_size;
  parallel_chunks(batches, configured_threads(), [&](std::size_t begin, std::size_t end) {
    NoGradGuard guard;
    std::vector<std::size_t> idx;
    for (std::size_t b = begin; b < end; ++b) {
      idx.clear();
      for (std::size_t i = b * batch_size; i < std::min(v, (b + 1) * batch_size); ++i) idx.push_back(i);
      const Tensor s = model.scores(batch_segments(perturbed, idx), Mode::kEval);
      std::copy(s.data().begin(), s.data().end(), scores.begin() + static_cast<std::ptrdiff_t>(idx.front() * k));
    }
  });

  Evaluation ev;
  ev.scores = Tensor({v, k}, std::move(scores));
  ev.predictions = argmax_rows(ev.scores);
  std::vector<std::size_t> all(v);
  std::iota(all.begin(), all.end(), 0);
  ev.labels = batch_labels(dataset, all);
  if (dataset.label_mode == LabelMode::kSingle) {
    ev.accuracy = accuracy(ev.predictions, ev.labels);
    ev.metric = ev.accuracy;
  } else {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < v; ++i) {
      const auto& set = dataset.samples[i].labels;
      hits += std::find(set.begin(), set.end(), ev.predictions[i]) != set.end() ? 1 : 0;
    }
    ev.accuracy = static_cast<double>(hits) / static_cast<double>(v);
    ev.metric = mean_average_precision(ev.scores, batch_label_matrix(dataset, all));
  }
  return ev;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x5350, 0));
  std::shuffle(order.begin(), order.end(), rng);
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(dataset.size())));
  Dataset a{dataset.label_mode, dataset.num_classes, {}}, b{dataset.label_mode, dataset.num_classes, {}};
  for (std::size_t i = 0; i < order.size(); ++i) (i < cut ? a : b).samples.push_back(dataset.samples[order[i]]);
  return {std::move(a), std::move(b)};
}

}  // namespace videograph
