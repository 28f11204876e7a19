// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "videograph/analysis.hpp"
#include "videograph/checkpoint.hpp"
#include "videograph/errors.hpp"
#include "videograph/feature_file.hpp"
#include "videograph/gradient_suite.hpp"
#include "videograph/metrics.hpp"
#include "videograph/sobol.hpp"
#include "videograph/trainer.hpp"

using namespace videograph;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::uint64_t kSeeds[] = {1, 2, 3};

int failures = 0;
std::map<int, std::string> summary;

void report(int id, const char* name, bool ok, const std::string& detail) {
  char line[128];
  std::snprintf(line, sizeof line, "criterion %2d %-30s %s", id, name, ok ? "PASS" : "FAIL");
  std::printf("%s  %s\n", line, detail.c_str());
  std::fflush(stdout);
  summary[id] = line;
  failures += !ok;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& s) { std::printf("             %s\n", s.c_str()); }

// ---- 1 ---------------------------------------------------------------------

void gradient_suite() {
  const auto t0 = Clock::now();
  double worst = 0;
  std::string worst_name;
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (const auto& e : run_gradient_suite(seed, 1e-4)) {
      ok = ok && e.passed;
      if (!(e.result.max_relative_error <= worst)) {
        worst = e.result.max_relative_error;
        worst_name = e.name + " seed " + std::to_string(seed);
      }
    }
  const double t = seconds_since(t0);
  report(1, "gradient suite", ok && worst <= 1e-4 && t < 120,
         fmt("10 seeds, worst rel err %.2e (%s), %.1fs", worst, worst_name.c_str(), t));
}

// ---- 2 ---------------------------------------------------------------------

void shape_contract() {
  const auto stages = shape_inference(VideoGraphConfig{});
  auto find = [&](std::size_t i) { return i < stages.size() ? stages[i].shape : Shape{}; };
  const bool ok = find(2) == Shape{64, 128, 7, 7, 1024} && find(3) == Shape{21, 42, 7, 7, 1024} &&
                  find(4) == Shape{7, 14, 7, 7, 1024};
  report(2, "shape contract", ok,
         "Z " + shape_to_string(find(2)) + ", layers " + shape_to_string(find(3)) + " " + shape_to_string(find(4)));
}

// ---- 3 and 6 ---------------------------------------------------------------

RunConfig desk_run(std::size_t classes, std::uint64_t seed, Architecture arch = Architecture::kVideoGraph) {
  RunConfig rc;
  rc.model = VideoGraphConfig::desk();
  rc.model.num_classes = classes;
  rc.model.architecture = arch;
  rc.model.seed = seed;
  rc.seed = seed;
  rc.epochs = 200;
  rc.batch_size = 8;
  return rc;
}

struct DataPair {
  Dataset train, val;
};

DataPair make_data(std::size_t classes, std::size_t actions, std::size_t train_count, std::size_t val_count,
                   std::uint64_t seed) {
  const VideoGraphConfig m = desk_run(classes, seed).model;
  const auto vocab = UnitActionVocabulary::make(actions, m.channels, 0.3, seed);
  const auto cls = make_class_set(classes, actions, Regime::kMarginalConfound, seed, 0.1);
  return {generate_dataset(m, cls, vocab, train_count, 2 * seed + 1),
          val_count ? generate_dataset(m, cls, vocab, val_count, 2 * seed + 2) : Dataset{}};
}

void overfit_and_node_distance() {
  int overfit_ok = 0, growth_ok = 0;
  double worst_time = 0;
  std::vector<std::string> acc_notes, growth_notes;
  for (std::uint64_t seed : kSeeds) {
    const DataPair d = make_data(2, 16, 32, 0, seed);
    const auto t0 = Clock::now();
    TrainingSession s = make_session(desk_run(2, seed), d.train);
    const double d0 = track_node_distances(*s.model->nodes_hat());
    double d_quarter = std::nan("");
    train(s, d.train, nullptr, [&](const TrainingSession& sess, const MetricRow& row) {
      if (row.epoch == sess.config.epochs / 4) d_quarter = row.mean_node_distance;
    });
    worst_time = std::max(worst_time, seconds_since(t0));
    const double acc = s.log.rows().back().train_acc;
    overfit_ok += acc >= 0.95;
    growth_ok += d_quarter >= 1.05 * d0;
    acc_notes.push_back(fmt("seed %llu: train acc %.3f", static_cast<unsigned long long>(seed), acc));
    growth_notes.push_back(fmt("seed %llu: d0 %.4f, epoch 50 %.4f (x%.3f)", static_cast<unsigned long long>(seed), d0,
                               d_quarter, d_quarter / d0));
  }
  report(3, "overfit 2x16", overfit_ok >= 2 && worst_time < 300,
         fmt("%d/3 seeds >= 0.95, slowest run %.1fs", overfit_ok, worst_time));
  for (const auto& n : acc_notes) note(n);
  report(6, "node-distance growth", growth_ok >= 2, fmt("%d/3 seeds grow >= 5%% by 25%% of training", growth_ok));
  for (const auto& n : growth_notes) note(n);
}

// ---- 4 and 5 ---------------------------------------------------------------

void temporal_structure() {
  int separation_ok = 0, drop_ok = 0;
  double total_time = 0;
  std::vector<std::string> notes4, notes5;
  for (std::uint64_t seed : kSeeds) {
    const auto t0 = Clock::now();
    const DataPair d = make_data(4, 4, 100, 100, seed);
    TrainingSession vg = make_session(desk_run(4, seed), d.train);
    train(vg, d.train, nullptr);
    TrainingSession mp = make_session(desk_run(4, seed, Architecture::kMeanPool), d.train);
    train(mp, d.train, nullptr);
    total_time += seconds_since(t0);

    const Evaluation vg_nat = evaluate(*vg.model, d.val, Perturbation::kNatural, seed);
    const Evaluation vg_rnd = evaluate(*vg.model, d.val, Perturbation::kRandom, seed);
    const Evaluation mp_nat = evaluate(*mp.model, d.val, Perturbation::kNatural, seed);
    const Evaluation mp_rnd = evaluate(*mp.model, d.val, Perturbation::kRandom, seed);

    separation_ok += vg_nat.accuracy >= 0.55 && mp_nat.accuracy <= 0.35;
    const double vg_drop = 100.0 * (vg_nat.accuracy - vg_rnd.accuracy);
    const bool mp_bitwise = std::equal(mp_nat.scores.data().begin(), mp_nat.scores.data().end(),
                                       mp_rnd.scores.data().begin(), mp_rnd.scores.data().end());
    drop_ok += vg_drop >= 15.0 && mp_bitwise && mp_nat.accuracy == mp_rnd.accuracy;
    const auto s = static_cast<unsigned long long>(seed);
    notes4.push_back(fmt("seed %llu: videograph %.3f, mean-pool %.3f", s, vg_nat.accuracy, mp_nat.accuracy));
    notes5.push_back(fmt("seed %llu: videograph drop %.1f points, mean-pool drop %.1f (scores bitwise equal: %s)", s,
                         vg_drop, 100.0 * (mp_nat.accuracy - mp_rnd.accuracy), mp_bitwise ? "yes" : "no"));
  }
  report(4, "temporal-structure separation", separation_ok >= 2 && total_time < 900,
         fmt("%d/3 seeds, %.1fs", separation_ok, total_time));
  for (const auto& n : notes4) note(n);
  report(5, "order-perturbation drop", drop_ok >= 2, fmt("%d/3 seeds", drop_ok));
  for (const auto& n : notes5) note(n);
}

// ---- 7 ---------------------------------------------------------------------

// Enumerates the ranking directly: for each positive, precision among all
// items ranked at or above it. Ties broken by lower index first.
double brute_force_ap(const std::vector<double>& s, const std::vector<int>& pos) {
  const std::size_t n = s.size();
  auto above = [&](std::size_t a, std::size_t b) { return s[a] > s[b] || (s[a] == s[b] && a < b); };
  double sum = 0;
  int positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!pos[i]) continue;
    ++positives;
    int rank = 1, hits = 1;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && above(j, i)) {
        ++rank;
        hits += pos[j];
      }
    sum += static_cast<double>(hits) / rank;
  }
  return sum / positives;
}

void map_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0;
  int checked = 0;
  while (checked < 100) {
    const std::size_t v = 2 + rng() % 15, k = 1 + rng() % 4;
    std::vector<double> scores(v * k), labels(v * k);
    for (auto& x : scores) x = static_cast<double>(rng() % 10) / 10.0;
    for (auto& x : labels) x = static_cast<double>(rng() % 3 == 0);
    double total = 0;
    int classes = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> col(v);
      std::vector<int> pos(v);
      for (std::size_t i = 0; i < v; ++i) {
        col[i] = scores[i * k + c];
        pos[i] = labels[i * k + c] != 0;
      }
      if (std::count(pos.begin(), pos.end(), 1) == 0) continue;
      total += brute_force_ap(col, pos);
      ++classes;
    }
    if (classes == 0) continue;
    const double got = mean_average_precision(Tensor({v, k}, scores), Tensor({v, k}, labels));
    worst = std::max(worst, std::abs(got - total / classes));
    ++checked;
  }
  report(7, "mAP oracle", worst <= 1e-9, fmt("100 instances, max |diff| %.2e", worst));
}

// ---- 8 ---------------------------------------------------------------------

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

void persistence() {
  const fs::path dir = fs::temp_directory_path() / "videograph_acceptance_ckpt";
  fs::remove_all(dir);
  const DataPair d = make_data(4, 4, 40, 0, 7);
  RunConfig rc = desk_run(4, 7);
  rc.epochs = 3;

  TrainingSession uninterrupted = make_session(rc, d.train);
  train_epoch(uninterrupted, d.train, nullptr);
  train_epoch(uninterrupted, d.train, nullptr);
  save_checkpoint(uninterrupted, dir, PayloadType::kFloat64);
  TrainingSession resumed = load_checkpoint(dir);

  bool bitwise = resumed.epochs_done == 2;
  const auto pa = uninterrupted.model->parameters(), pb = resumed.model->parameters();
  bitwise = bitwise && pa.size() == pb.size();
  for (std::size_t i = 0; bitwise && i < pa.size(); ++i) bitwise = same_bits(values(pa[i].tensor), values(pb[i].tensor));
  const auto& va = uninterrupted.optimizer->velocities();
  const auto& vb = resumed.optimizer->velocities();
  bitwise = bitwise && va.size() == vb.size();
  for (std::size_t i = 0; bitwise && i < va.size(); ++i) bitwise = same_bits(va[i], vb[i]);
  const auto ba = uninterrupted.model->batch_norms(), bb = resumed.model->batch_norms();
  for (std::size_t i = 0; bitwise && i < ba.size(); ++i)
    bitwise = same_bits(ba[i].state->running_mean, bb[i].state->running_mean) &&
              same_bits(ba[i].state->running_var, bb[i].state->running_var);

  const double loss_a = train_epoch(uninterrupted, d.train, nullptr).train_loss;
  const double loss_b = train_epoch(resumed, d.train, nullptr).train_loss;
  const double resume_diff = std::abs(loss_a - loss_b);

  // Checkpoint payload corruption.
  bool ckpt_crc = false;
  {
    std::fstream w(dir / "weights.bin", std::ios::in | std::ios::out | std::ios::binary);
    w.seekg(100);
    const char c = static_cast<char>(w.get());
    w.seekp(100);
    w.put(static_cast<char>(c ^ 0x01));
  }
  try {
    load_checkpoint(dir);
  } catch (const FormatError&) {
    ckpt_crc = true;
  }

  // VGFT: binary32 payload, so draw float-representable values.
  std::mt19937_64 rng(8);
  std::normal_distribution<float> nd;
  std::vector<double> feat(16 * 2 * 3 * 5);
  for (auto& x : feat) x = nd(rng);
  const Tensor features({16, 2, 3, 5}, feat);
  const fs::path vgft = dir / "clip.vgft";
  write_feature_file(vgft, features);
  const bool vgft_bitwise = same_bits(values(read_feature_file(vgft)), feat);

  // Every single-byte corruption of the encoded file is rejected.
  const auto bytes = encode_feature_file(features);
  std::size_t detected = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x5a;
    try {
      decode_feature_file(bad);
    } catch (const FormatError&) {
      ++detected;
    }
  }
  fs::remove_all(dir);

  const bool ok = bitwise && resume_diff <= 1e-6 && ckpt_crc && vgft_bitwise && detected == bytes.size();
  report(8, "persistence", ok,
         fmt("params/velocities/buffers bitwise: %s, resume |dloss| %.2e, checkpoint crc: %s, VGFT bitwise: %s, "
             "%zu/%zu corruptions caught",
             bitwise ? "yes" : "no", resume_diff, ckpt_crc ? "yes" : "no", vgft_bitwise ? "yes" : "no", detected,
             bytes.size()));
}

// ---- 9 ---------------------------------------------------------------------

void sobol_reference() {
  // Gray-code construction with v_k = 2^-k in dimension one.
  const double expected[8] = {0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125, 0.1875};
  SobolSequence one(1);
  bool exact = true;
  for (double e : expected) exact = exact && one.next()[0] == e;
  bool in_range = true;
  SobolSequence many(SobolSequence::max_dimensions() < 64 ? SobolSequence::max_dimensions() : 64);
  for (int i = 0; i < 4096; ++i)
    for (double v : many.next()) in_range = in_range && v >= 0.0 && v < 1.0;
  report(9, "Sobol reference", exact && in_range,
         fmt("first 8 exact: %s, 4096 points x %zu dims in [0,1): %s", exact ? "yes" : "no", many.dimensions(),
             in_range ? "yes" : "no"));
}

// ---- 10 --------------------------------------------------------------------

void extraction_oracle() {
  const Tensor z1({2, 3, 2, 2}, {0.5, 1.0, 1.5, 0.0, 0.0, 2.0, 1.0, 1.0, 3.0, 0.25, 0.75, 0.5,
                                 1.5, 0.0, 0.5, 2.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.75, 1.25, 1.5});
  const double z4[3] = {1.75, 1.75, 2.0};
  const double edges[3][3] = {{0.0, 0.3535533905932738, 0.25},
                              {0.3535533905932738, 0.0, 0.5590169943749475},
                              {0.25, 0.5590169943749475, 0.0}};
  const auto g = extract_activity_graph(ActivationStack{z1});
  double worst = 0;
  for (int i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(g.node_importance[i] - z4[i]));
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(g.edge(i, j) - edges[i][j]));
  }

  auto permuted = [](const Tensor& z, const std::vector<std::size_t>& perm) {
    const auto& s = z.shape();
    std::vector<double> out(z.numel());
    const std::size_t block = s[2] * s[3];
    for (std::size_t m = 0; m < s[0]; ++m)
      for (std::size_t n = 0; n < s[1]; ++n)
        std::copy_n(z.data().begin() + (m * s[1] + perm[n]) * block, block, out.begin() + (m * s[1] + n) * block);
    return Tensor(s, out);
  };
  bool equivariant = true;
  auto check = [&](const Tensor& z, const std::vector<std::size_t>& perm) {
    const auto a = extract_activity_graph(ActivationStack{z});
    const auto b = extract_activity_graph(ActivationStack{permuted(z, perm)});
    const std::size_t n = perm.size();
    for (std::size_t i = 0; i < n; ++i) {
      equivariant = equivariant && b.node_importance[i] == a.node_importance[perm[i]];
      for (std::size_t j = 0; j < n; ++j) equivariant = equivariant && b.edge(i, j) == a.edge(perm[i], perm[j]);
    }
  };
  std::vector<std::size_t> perm{0, 1, 2};
  do check(z1, perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> big(3 * 9 * 4 * 5);
  for (auto& x : big) x = u(rng);
  std::vector<std::size_t> p9(9);
  std::iota(p9.begin(), p9.end(), 0);
  for (int t = 0; t < 20; ++t) {
    std::shuffle(p9.begin(), p9.end(), rng);
    check(Tensor({3, 9, 4, 5}, big), p9);
  }
  report(10, "extraction oracle", worst <= 1e-12 && equivariant,
         fmt("max |diff| %.2e, exact equivariance over 26 permutations: %s", worst, equivariant ? "yes" : "no"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  gradient_suite();
  shape_contract();
  overfit_and_node_distance();
  temporal_structure();
  map_oracle();
  persistence();
  sobol_reference();
  extraction_oracle();
  std::printf("\nsummary\n");
  for (const auto& [id, line] : summary) std::printf("%s\n", line.c_str());
  std::printf("%d criteria failed, %.1fs total\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
