#include "videograph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "json.hpp"
#include "videograph/errors.hpp"
#include "videograph/feature_file.hpp"

namespace videograph {
namespace {

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::size_t draw(const double* probs, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double target = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    target -= probs[i];
    if (target < 0.0) return i;
  }
  // Rounding left a sliver of mass; fall back to the last state with support.
  for (std::size_t i = n; i-- > 0;)
    if (probs[i] > 0.0) return i;
  return n - 1;
}

// Random cyclic order of `states` as a successor table.
std::vector<std::size_t> random_cycle(std::size_t states, std::mt19937_64& rng) {
  std::vector<std::size_t> order(states);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin() + 1, order.end(), rng);
  std::vector<std::size_t> next(states);
  for (std::size_t i = 0; i < states; ++i) next[order[i]] = order[(i + 1) % states];
  return next;
}

double factorial_capped(std::size_t n, double cap) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n && f <= cap; ++i) f *= static_cast<double>(i);
  return f;
}

}  // namespace

UnitActionVocabulary UnitActionVocabulary::make(std::size_t actions, std::size_t channels, double noise_sigma,
                                                std::uint64_t seed) {
  if (actions < 2) throw ConfigError("vocabulary needs at least 2 unit-actions");
  if (channels == 0) throw ConfigError("vocabulary needs at least 1 channel");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  auto rng = seeded(seed, 0x70c4b);
  std::normal_distribution<double> normal(0.0, 1.0);
  UnitActionVocabulary vocab;
  vocab.noise_sigma = noise_sigma;
  for (std::size_t u = 0; u < actions; ++u) {
    std::vector<double> v(channels);
    for (int attempt = 0;; ++attempt) {
      for (double& x : v) x = normal(rng);
      if (u < channels) {
        // Gram-Schmidt against the previous prototypes.
        for (const auto& p : vocab.prototypes) {
          const double dot = std::inner_product(v.begin(), v.end(), p.begin(), 0.0);
          for (std::size_t c = 0; c < channels; ++c) v[c] -= dot * p[c];
        }
      }
      const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
      if (norm > 1e-6 || attempt > 100) {
        for (double& x : v) x /= norm;
        break;
      }
    }
    vocab.prototypes.push_back(std::move(v));
  }
  double min_distance = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < actions; ++a)
    for (std::size_t b = a + 1; b < actions; ++b) {
      double sq = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        const double d = vocab.prototypes[a][c] - vocab.prototypes[b][c];
        sq += d * d;
      }
      min_distance = std::min(min_distance, std::sqrt(sq));
    }
  if (!(min_distance > 4.0 * noise_sigma)) {
    throw ConfigError("unit-action prototypes are not separable: min distance " + std::to_string(min_distance) +
                      " <= 4 * noise_sigma");
  }
  return vocab;
}

std::vector<ActivityClass> make_class_set(std::size_t classes, std::size_t actions, Regime regime,
                                          std::uint64_t seed, double mixing) {
  if (classes < 2) throw ConfigError("need at least 2 activity classes");
  if (actions < 2) throw ConfigError("need at least 2 unit-actions");
  if (!(mixing >= 0.0 && mixing < 1.0)) throw ConfigError("mixing must lie in [0, 1)");
  auto rng = seeded(seed, 0xc1a55);
  std::vector<ActivityClass> out;

  if (regime == Regime::kMarginalConfound) {
    const double available = factorial_capped(actions - 1, static_cast<double>(classes));
    if (static_cast<double>(classes) > available) {
      throw ConfigError("only " + std::to_string(static_cast<long long>(available)) + " distinct " +
                        std::to_string(actions) + "-cycles exist; cannot build " + std::to_string(classes) +
                        " classes");
    }
    std::set<std::vector<std::size_t>> used;
    while (out.size() < classes) {
      auto next = random_cycle(actions, rng);
      if (!used.insert(next).second) continue;
      ActivityClass a;
      a.id = static_cast<int>(out.size());
      a.num_actions = actions;
      a.transition.assign(actions * actions, mixing / static_cast<double>(actions));
      for (std::size_t i = 0; i < actions; ++i) a.transition[i * actions + next[i]] += 1.0 - mixing;
      a.initial.assign(actions, 1.0 / static_cast<double>(actions));
      out.push_back(std::move(a));
    }
    return out;
  }

  const std::size_t per_class = actions / classes;
  if (per_class == 0) {
    throw ConfigError("distinct_actions needs at least one unit-action per class (U=" + std::to_string(actions) +
                      ", K=" + std::to_string(classes) + ")");
  }
  std::vector<std::size_t> pool(actions);
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t k = 0; k < classes; ++k) {
    std::vector<std::size_t> subset(pool.begin() + static_cast<std::ptrdiff_t>(k * per_class),
                                    pool.begin() + static_cast<std::ptrdiff_t>((k + 1) * per_class));
    ActivityClass a;
    a.id = static_cast<int>(k);
    a.num_actions = actions;
    a.transition.assign(actions * actions, 0.0);
    a.initial.assign(actions, 0.0);
    const double share = 1.0 / static_cast<double>(per_class);
    const auto next = random_cycle(per_class, rng);
    for (std::size_t i = 0; i < per_class; ++i) {
      a.initial[subset[i]] = share;
      for (std::size_t j = 0; j < per_class; ++j) a.transition[subset[i] * actions + subset[j]] += mixing * share;
      a.transition[subset[i] * actions + subset[next[i]]] += 1.0 - mixing;
    }
    // States outside the slice are never visited; keep their rows stochastic.
    for (std::size_t s = 0; s < actions; ++s) {
      if (a.initial[s] == 0.0) a.transition[s * actions + s] = 1.0;
    }
    out.push_back(std::move(a));
  }
  return out;
}

VideoSample sample_video(const ActivityClass& activity, const UnitActionVocabulary& vocab, std::size_t timesteps,
                         std::size_t height, std::size_t width, std::uint64_t seed) {
  const std::size_t u = activity.num_actions;
  if (u != vocab.size() || activity.transition.size() != u * u || activity.initial.size() != u) {
    throw ConfigError("activity class does not match the vocabulary of " + std::to_string(vocab.size()) + " actions");
  }
  if (timesteps == 0 || height == 0 || width == 0) throw ConfigError("video dimensions must be positive");
  auto rng = seeded(seed, 0x5a3b1e);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t c = vocab.channels();

  VideoSample sample;
  sample.label = activity.id;
  sample.labels = {activity.id};
  std::size_t state = draw(activity.initial.data(), u, rng);
  std::vector<double> values;
  values.reserve(timesteps * height * width * c);
  for (std::size_t t = 0; t < timesteps; ++t) {
    if (t > 0) state = draw(&activity.transition[state * u], u, rng);
    sample.unit_actions.push_back(static_cast<int>(state));
    std::vector<double> segment(vocab.prototypes[state]);
    if (vocab.noise_sigma > 0.0)
      for (double& x : segment) x += vocab.noise_sigma * noise(rng);
    for (std::size_t p = 0; p < height * width; ++p) values.insert(values.end(), segment.begin(), segment.end());
  }
  sample.features = Tensor({timesteps, height, width, c}, std::move(values));
  return sample;
}

std::vector<std::size_t> time_permutation(std::size_t timesteps, Perturbation mode, std::uint64_t seed) {
  std::vector<std::size_t> order(timesteps);
  std::iota(order.begin(), order.end(), 0);
  if (mode == Perturbation::kReversed) {
    std::reverse(order.begin(), order.end());
  } else if (mode == Perturbation::kRandom) {
    auto rng = seeded(seed, 0x9e7);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

VideoSample perturb_order(const VideoSample& sample, Perturbation mode, std::uint64_t seed) {
  const Shape& shape = sample.features.shape();
  const std::size_t t = shape[0];
  const std::size_t stride = sample.features.numel() / t;
  const auto order = time_permutation(t, mode, seed);
  std::vector<double> values(sample.features.numel());
  const auto src = sample.features.data();
  for (std::size_t i = 0; i < t; ++i)
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(order[i] * stride), stride,
                values.begin() + static_cast<std::ptrdiff_t>(i * stride));
  VideoSample out = sample;
  out.features = Tensor(shape, std::move(values));
  if (!sample.unit_actions.empty()) {
    for (std::size_t i = 0; i < t; ++i) out.unit_actions[i] = sample.unit_actions[order[i]];
  }
  return out;
}

Dataset generate_dataset(const VideoGraphConfig& model, const std::vector<ActivityClass>& classes,
                         const UnitActionVocabulary& vocab,
                         std::size_t count, std::uint64_t seed) {
  Dataset data;
  data.label_mode = model.label_mode;
  data.num_classes = classes.size();
  const std::size_t k = classes.size();
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t video_seed = seed * 1000003ULL + i;
    const auto& primary = classes[i % k];
    if (model.label_mode == LabelMode::kSingle) {
      data.samples.push_back(sample_video(primary, vocab, model.timesteps, model.height, model.width, video_seed));
      continue;
    }
    // Two half-length walks from (possibly) different classes.
    const auto& secondary = classes[(i / k + i) % k];
    const std::size_t first_len = model.timesteps / 2 + model.timesteps % 2;
    VideoSample a = sample_video(primary, vocab, first_len, model.height, model.width, video_seed);
    VideoSample b = sample_video(secondary, vocab, model.timesteps - first_len, model.height, model.width,
                                 video_seed ^ 0xabcdefULL);
    std::vector<double> values(a.features.data().begin(), a.features.data().end());
    values.insert(values.end(), b.features.data().begin(), b.features.data().end());
    VideoSample s;
    s.features = Tensor({model.timesteps, model.height, model.width, vocab.channels()}, std::move(values));
    s.label = primary.id;
    s.labels = {primary.id};
    if (secondary.id != primary.id) s.labels.push_back(secondary.id);
    std::sort(s.labels.begin(), s.labels.end());
    s.unit_actions = a.unit_actions;
    s.unit_actions.insert(s.unit_actions.end(), b.unit_actions.begin(), b.unit_actions.end());
    data.samples.push_back(std::move(s));
  }
  return data;
}

Tensor stack_positions(const Dataset& dataset) {
  if (dataset.samples.empty()) throw ConfigError("cannot stack positions of an empty dataset");
  const std::size_t c = dataset.samples.front().features.shape().back();
  std::vector<double> values;
  for (const auto& s : dataset.samples) values.insert(values.end(), s.features.data().begin(), s.features.data().end());
  const std::size_t rows = values.size() / c;
  return Tensor({rows, c}, std::move(values));
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, const std::string& name,
                                    const Dataset& dataset) {
  std::filesystem::create_directories(dir / "features");
  const auto manifest = dir / (name + ".jsonl");
  std::ofstream os(manifest, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest " + manifest.string());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    char file[64];
    std::snprintf(file, sizeof(file), "%s_%05zu.vgft", name.c_str(), i);
    const auto rel = std::filesystem::path("features") / file;
    write_feature_file(dir / rel, s.features);
    nlohmann::json record{{"feature_path", rel.generic_string()}};
    if (dataset.label_mode == LabelMode::kSingle) {
      record["label"] = s.label;
    } else {
      record["labels"] = s.labels;
    }
    os << record.dump() << '\n';
  }
  return manifest;
}

Dataset read_manifest(const std::filesystem::path& manifest, std::size_t num_classes) {
  std::ifstream is(manifest);
  if (!is) throw std::runtime_error("cannot open manifest " + manifest.string());
  Dataset data;
  data.num_classes = num_classes;
  bool mode_known = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = manifest.string() + ":" + std::to_string(line_no);
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + ": " + e.what());
    }
    if (!record.contains("feature_path")) throw FormatError(where + ": missing feature_path");
    const bool multi = record.contains("labels");
    if (!multi && !record.contains("label")) throw FormatError(where + ": missing label or labels");
    const LabelMode mode = multi ? LabelMode::kMulti : LabelMode::kSingle;
    if (mode_known && mode != data.label_mode) throw FormatError(where + ": mixes single- and multi-label records");
    data.label_mode = mode;
    mode_known = true;

    VideoSample s;
    std::filesystem::path path = record.at("feature_path").get<std::string>();
    if (path.is_relative()) path = manifest.parent_path() / path;
    s.features = read_feature_file(path);
    if (multi) {
      s.labels = record.at("labels").get<std::vector<int>>();
      std::sort(s.labels.begin(), s.labels.end());
      s.label = s.labels.empty() ? 0 : s.labels.front();
    } else {
      s.label = record.at("label").get<int>();
      s.labels = {s.label};
    }
    for (int l : s.labels) {
      if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
        throw FormatError(where + ": label " + std::to_string(l) + " outside [0," + std::to_string(num_classes) + ")");
      }
    }
    data.samples.push_back(std::move(s));
  }
  return data;
}

}  // namespace videograph
