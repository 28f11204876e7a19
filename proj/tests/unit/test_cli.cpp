#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "videograph/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "videograph");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = videograph::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string config(const std::string& name) { return std::string(VG_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, ShapesOnPaperConfig) {
  const Result r = run({"shapes", "--config", config("paper.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("(64,128,7,7,1024)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("(21,42,7,7,1024)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("(7,14,7,7,1024)"), std::string::npos) << r.out;
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const Result r = run({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run({}).code, 2); }

TEST(Cli, MissingConfigNamesTheFlag) {
  const Result r = run({"shapes"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--config"), std::string::npos) << r.err;
}

TEST(Cli, UnknownFlagRejected) {
  EXPECT_EQ(run({"shapes", "--config", config("paper.json"), "--colour", "red"}).code, 2);
}

TEST(Cli, BadPerturbationRejected) {
  EXPECT_EQ(run({"eval", "--checkpoint", "x", "--perturb", "sideways"}).code, 2);
}

TEST(Cli, MissingConfigFileIsUsageError) {
  EXPECT_EQ(run({"shapes", "--config", "/nonexistent/config.json"}).code, 2);
}

TEST(Cli, GradcheckPasses) {
  const Result r = run({"gradcheck", "--seed", "7"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
}

TEST(Cli, GenDataIsIdempotent) {
  const fs::path a = fs::temp_directory_path() / "vg_cli_gen_a", b = fs::temp_directory_path() / "vg_cli_gen_b";
  fs::remove_all(a);
  fs::remove_all(b);
  ASSERT_EQ(run({"gen-data", "--config", config("desk.json"), "--out", a.string(), "--seed", "3"}).code, 0);
  ASSERT_EQ(run({"gen-data", "--config", config("desk.json"), "--out", b.string(), "--seed", "3"}).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b / fs::relative(e.path(), a))) << e.path();
  }
  EXPECT_GT(files, 2u);
}

TEST(Cli, TrainEvalReportRoundTrip) {
  const fs::path root = fs::temp_directory_path() / "vg_cli_e2e";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "tiny.json");
    cfg << R"({"model": {"T": 16, "N": 8, "H": 1, "W": 1, "C": 16, "num_embedding_layers": 1,
                          "classifier_hidden": 16, "num_classes": 2},
               "epochs": 2, "batch_size": 8,
               "synthetic": {"num_actions": 4, "train_videos": 16, "val_videos": 8}})";
  }
  const std::string cfg = (root / "tiny.json").string(), data = (root / "data").string();
  ASSERT_EQ(run({"gen-data", "--config", cfg, "--out", data}).code, 0);
  const Result t = run({"train", "--config", cfg, "--data", data, "--out", (root / "run").string()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(fs::exists(root / "run" / "metrics.csv"));
  const std::string ckpt = (root / "run" / "checkpoint").string();
  const Result e = run({"eval", "--checkpoint", ckpt, "--data", data, "--perturb", "reversed"});
  EXPECT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("true\\predicted"), std::string::npos);
  const Result r = run({"report", "--checkpoint", ckpt, "--data", data, "--out", (root / "rep").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(root / "rep" / "order_report.csv"));
  const Result g = run({"extract-graph", "--checkpoint", ckpt, "--data", data, "--out", (root / "graphs").string()});
  EXPECT_EQ(g.code, 0) << g.err;
  EXPECT_TRUE(fs::exists(root / "graphs" / "class_0.dot"));
  EXPECT_TRUE(fs::exists(root / "graphs" / "class_1.json"));
}
