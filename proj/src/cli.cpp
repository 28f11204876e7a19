#include "videograph/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "videograph/analysis.hpp"
#include "videograph/checkpoint.hpp"
#include "videograph/errors.hpp"
#include "videograph/gradient_suite.hpp"
#include "videograph/model.hpp"
#include "videograph/synthetic.hpp"
#include "videograph/trainer.hpp"

namespace videograph {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> perturb;
};

// Raised for problems the user fixes by changing the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(const std::string& value, const char* flag, const char* command) {
  if (value.empty()) throw UsageError(std::string(command) + ": " + flag + " is required");
}

// Flags override the file, which overrides built-in defaults.
RunConfig resolve_config(const Flags& f, const char* command) {
  require(f.config, "--config", command);
  if (!fs::exists(f.config)) throw UsageError(std::string(command) + ": --config file not found: " + f.config);
  RunConfig c = load_run_config(f.config);
  if (f.seed) {
    c.seed = *f.seed;
    c.model.seed = *f.seed;
  }
  if (!f.data.empty()) {
    c.train_manifest = (fs::path(f.data) / "train.jsonl").string();
    const fs::path val = fs::path(f.data) / "val.jsonl";
    c.val_manifest = fs::exists(val) ? val.string() : std::string();
  }
  if (f.perturb) c.eval_perturbation = parse_perturbation(*f.perturb);
  c.validate();
  return c;
}

std::string fmt(double v, int precision = 4) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
}

// Evaluation data for a trained session: --data/val.jsonl, else the
// configured validation manifest, else the held-out 20% of the training set.
Dataset evaluation_set(const TrainingSession& s, const Flags& f) {
  const std::size_t k = s.config.model.num_classes;
  if (!f.data.empty()) {
    const fs::path dir(f.data);
    if (fs::exists(dir / "val.jsonl")) return read_manifest(dir / "val.jsonl", k);
    return split_dataset(read_manifest(dir / "train.jsonl", k), 0.8, s.config.seed).second;
  }
  if (!s.config.val_manifest.empty()) return read_manifest(s.config.val_manifest, k);
  if (!s.config.train_manifest.empty()) {
    return split_dataset(read_manifest(s.config.train_manifest, k), 0.8, s.config.seed).second;
  }
  throw UsageError("no evaluation data: pass --data");
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Flags& f, std::ostream& out) {
  RunConfig c = resolve_config(f, "gen-data");
  require(f.out, "--out", "gen-data");
  const SyntheticConfig& sc = c.synthetic;
  const auto vocab = UnitActionVocabulary::make(sc.num_actions, c.model.channels, sc.noise_sigma, c.seed);
  const auto classes = make_class_set(c.model.num_classes, sc.num_actions, sc.regime, c.seed, sc.mixing);
  const Dataset train = generate_dataset(c.model, classes, vocab, sc.train_videos, 2 * c.seed + 1);
  const Dataset val = generate_dataset(c.model, classes, vocab, sc.val_videos, 2 * c.seed + 2);
  const fs::path dir(f.out);
  out << "wrote " << write_dataset(dir, "train", train).string() << " (" << train.size() << " videos)\n";
  if (val.size() > 0) out << "wrote " << write_dataset(dir, "val", val).string() << " (" << val.size() << " videos)\n";
  return kExitOk;
}

int cmd_train(const Flags& f, std::ostream& out) {
  RunConfig c = resolve_config(f, "train");
  require(f.out, "--out", "train");
  if (c.train_manifest.empty()) throw UsageError("train: no training data (pass --data or set train_manifest)");
  Dataset train = read_manifest(c.train_manifest, c.model.num_classes);
  Dataset val;
  if (!c.val_manifest.empty()) {
    val = read_manifest(c.val_manifest, c.model.num_classes);
  } else {
    auto [a, b] = split_dataset(train, 0.8, c.seed);
    train = std::move(a);
    val = std::move(b);
  }

  TrainingSession session;
  if (!f.checkpoint.empty()) {
    session = load_checkpoint(f.checkpoint);
    session.config.epochs = c.epochs;
    out << "resuming from epoch " << session.epochs_done << "\n";
  } else {
    session = make_session(c, train);
  }
  const fs::path dir(f.out);
  fs::create_directories(dir);
  videograph::train(session, train, &val, [&](const TrainingSession&, const MetricRow& r) {
    out << "epoch " << r.epoch << " loss " << fmt(r.train_loss) << " acc " << fmt(r.train_acc) << " val "
        << fmt(r.val_metric) << " node_dist " << fmt(r.mean_node_distance) << "\n";
  });
  session.log.write_csv(dir / "metrics.csv");
  save_checkpoint(session, dir / "checkpoint");
  out << "wrote " << (dir / "checkpoint").string() << " and " << (dir / "metrics.csv").string() << "\n";
  return kExitOk;
}

int cmd_eval(const Flags& f, std::ostream& out) {
  require(f.checkpoint, "--checkpoint", "eval");
  TrainingSession s = load_checkpoint(f.checkpoint);
  if (f.seed) s.config.seed = *f.seed;
  const Perturbation mode = f.perturb ? parse_perturbation(*f.perturb) : s.config.eval_perturbation;
  const Dataset data = evaluation_set(s, f);
  const Evaluation ev = evaluate(*s.model, data, mode, s.config.seed, s.config.batch_size);
  const bool single = data.label_mode == LabelMode::kSingle;
  out << "perturbation " << to_string(mode) << " videos " << data.size() << " " << (single ? "accuracy" : "mAP") << " "
      << fmt(ev.metric) << "\n";
  const std::string csv = confusion_to_csv(confusion_matrix(ev.predictions, ev.labels, s.config.model.num_classes));
  out << csv;
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    write_text(fs::path(f.out) / ("confusion_" + to_string(mode) + ".csv"), csv);
  }
  return kExitOk;
}

int cmd_gradcheck(const Flags& f, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = f.seed.value_or(0);
  const auto entries = run_gradient_suite(seed);
  const GradSuiteEntry* worst = nullptr;
  for (const auto& e : entries) {
    out << std::left << std::setw(36) << e.name << " max_rel_err " << std::scientific << std::setprecision(3)
        << e.result.max_relative_error << std::defaultfloat << (e.passed ? "  ok" : "  FAIL") << "\n";
    if (!worst || e.result.max_relative_error > worst->result.max_relative_error) worst = &e;
  }
  if (worst && !worst->passed) {
    err << "gradcheck failed: worst op " << worst->name << " input " << worst->result.worst_input << " component "
        << worst->result.worst_index << " analytic " << worst->result.analytic << " numeric " << worst->result.numeric
        << " relative error " << worst->result.max_relative_error << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_shapes(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve_config(f, "shapes");
  for (const auto& stage : shape_inference(c.model)) out << stage.stage << " " << shape_to_string(stage.shape) << "\n";
  return kExitOk;
}

int cmd_extract_graph(const Flags& f, std::ostream& out) {
  require(f.checkpoint, "--checkpoint", "extract-graph");
  require(f.out, "--out", "extract-graph");
  TrainingSession s = load_checkpoint(f.checkpoint);
  auto* model = dynamic_cast<VideoGraph*>(s.model.get());
  if (!model) throw ConfigError("extract-graph needs a videograph checkpoint, not " + to_string(s.config.model.architecture));
  const Dataset data = evaluation_set(s, f);
  const std::uint64_t seed = f.seed.value_or(s.config.seed);
  fs::create_directories(f.out);
  for (std::size_t k = 0; k < s.config.model.num_classes; ++k) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& labels = data.samples[i].labels;
      if (std::find(labels.begin(), labels.end(), static_cast<int>(k)) != labels.end()) members.push_back(i);
    }
    if (members.empty()) {
      out << "class " << k << ": no videos, skipped\n";
      continue;
    }
    Tensor activations;
    {
      NoGradGuard guard;
      activations = model->embedding_activations(batch_segments(data, members), Mode::kEval);
    }
    ExtractedGraph g = extract_activity_graph(ActivationStack::from_model_order(activations), static_cast<int>(k));
    g.positions = force_layout(g, 500, seed);
    const fs::path base = fs::path(f.out) / ("class_" + std::to_string(k));
    export_graph(g, GraphFormat::kDot, base.string() + ".dot");
    export_graph(g, GraphFormat::kJson, base.string() + ".json");
    out << "class " << k << ": " << members.size() << " videos, " << g.num_nodes << " nodes -> " << base.string()
        << ".{dot,json}\n";
  }
  return kExitOk;
}

int cmd_report(const Flags& f, std::ostream& out) {
  require(f.checkpoint, "--checkpoint", "report");
  TrainingSession s = load_checkpoint(f.checkpoint);
  if (f.seed) s.config.seed = *f.seed;
  const Dataset data = evaluation_set(s, f);
  const char* metric = data.label_mode == LabelMode::kSingle ? "accuracy" : "mAP";
  std::ostringstream csv;
  csv << "perturbation," << metric << ",drop_points,drop_percent\n";
  out << std::left << std::setw(12) << "order" << std::setw(12) << metric << std::setw(14) << "drop (pts)"
      << "drop (%)\n";
  double natural = 0.0;
  for (Perturbation p : {Perturbation::kNatural, Perturbation::kReversed, Perturbation::kRandom}) {
    const double m = evaluate(*s.model, data, p, s.config.seed, s.config.batch_size).metric;
    if (p == Perturbation::kNatural) natural = m;
    const double points = 100.0 * (natural - m);
    const double percent = natural > 0.0 ? 100.0 * (natural - m) / natural : 0.0;
    out << std::setw(12) << to_string(p) << std::setw(12) << fmt(100.0 * m, 2) << std::setw(14) << fmt(points, 2)
        << fmt(percent, 2) << "\n";
    csv << to_string(p) << "," << fmt(m, 6) << "," << fmt(points, 4) << "," << fmt(percent, 4) << "\n";
  }
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    write_text(fs::path(f.out) / "order_report.csv", csv.str());
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"VideoGraph: graph-based temporal modeling of long-range activities", "videograph"};
  app.require_subcommand(1);
  Flags f;
  std::string perturb;
  std::uint64_t seed = 0;

  auto add_config = [&](CLI::App* c) { c->add_option("--config", f.config, "run configuration (JSON)"); };
  auto add_data = [&](CLI::App* c) { c->add_option("--data", f.data, "dataset directory (train.jsonl, val.jsonl)"); };
  auto add_checkpoint = [&](CLI::App* c) { c->add_option("--checkpoint", f.checkpoint, "checkpoint directory"); };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", f.out, "output directory"); };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "random seed (overrides the config)"); };
  auto add_perturb = [&](CLI::App* c) {
    c->add_option("--perturb", perturb, "time-order perturbation")
        ->check(CLI::IsMember({"natural", "reversed", "random"}));
  };

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  add_config(gen), add_out(gen), add_seed(gen);
  auto* tr = app.add_subcommand("train", "train a model; writes a checkpoint and metrics.csv");
  add_config(tr), add_data(tr), add_checkpoint(tr), add_out(tr), add_seed(tr);
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_data(ev), add_checkpoint(ev), add_out(ev), add_seed(ev), add_perturb(ev);
  auto* gc = app.add_subcommand("gradcheck", "run the finite-difference gradient suite");
  add_seed(gc);
  auto* sh = app.add_subcommand("shapes", "print per-stage tensor shapes for a config");
  add_config(sh);
  auto* ex = app.add_subcommand("extract-graph", "write per-class activity graphs (DOT and JSON)");
  add_data(ex), add_checkpoint(ex), add_out(ex), add_seed(ex);
  auto* rp = app.add_subcommand("report", "accuracy under natural, reversed and random order");
  add_data(rp), add_checkpoint(rp), add_out(rp), add_seed(rp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  auto given = [cmd](const char* flag) {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--seed")) f.seed = seed;
  if (given("--perturb")) f.perturb = perturb;

  try {
    const std::string name = cmd->get_name();
    if (name == "gen-data") return cmd_gen_data(f, out);
    if (name == "train") return cmd_train(f, out);
    if (name == "eval") return cmd_eval(f, out);
    if (name == "gradcheck") return cmd_gradcheck(f, out, err);
    if (name == "shapes") return cmd_shapes(f, out);
    if (name == "extract-graph") return cmd_extract_graph(f, out);
    if (name == "report") return cmd_report(f, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << cmd->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace videograph
