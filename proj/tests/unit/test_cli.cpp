#include <gtest/gtest.h>

#include <sstream>

#include "hybil/cli/commands.hpp"
#include "support/files.hpp"

namespace hybil {
namespace {

using testing::contains;
using testing::error_of;
using testing::scratch_dir;
using testing::slurp;

RunConfig parse(const std::string& text) { return parse_run_config(nlohmann::json::parse(text)); }

// Small enough to cross-validate in a second or two.
RunConfig tiny_config(const std::filesystem::path& out) {
  auto cfg = parse(R"({
    "schema": "synth3", "models": ["cnn", "bcnn"],
    "dims": {"cnn_filters1": 2, "cnn_filters2": 4, "lstm_hidden1": 2, "feature_dim": 4},
    "train": {"max_epochs_base": 3, "max_epochs_head": 2, "max_epochs_finetune": 2, "patience": 2},
    "synth": {"classes": 3, "events_per_class": 5}})");
  cfg.output = out;
  return cfg;
}

// ---- configuration --------------------------------------------------------------

TEST(RunConfig, EmptyDocumentGivesDefaults) {
  const auto c = parse("{}");
  EXPECT_EQ(c, RunConfig{});
  EXPECT_EQ(c.train.batch_size, 32u);
  EXPECT_EQ(c.train.patience, 10u);
  EXPECT_EQ(c.synth.classes, 8u);
  EXPECT_EQ(c.folds, 5u);
}

TEST(RunConfig, SerializedFormParsesBack) {
  auto c = parse(R"({"seed": 9, "models": ["CNN", "hybrid"], "strata": "window",
                     "synth": {"bands": [{"center": 8, "bandwidth": 2, "amplitude": 1.5},
                                         {"center": 30}], "classes": 2}})");
  c.output = "somewhere";
  EXPECT_EQ(parse(to_json(c).dump()), c);
  EXPECT_EQ(c.synth.bands[1].bandwidth, 4.0);
  EXPECT_EQ(c.models, (std::vector<ModelKind>{ModelKind::cnn, ModelKind::hybrid}));
}

TEST(RunConfig, UnknownKeysNamedByPath) {
  EXPECT_EQ(error_of<ConfigError>([] { parse(R"({"sed": 1})"); }), "config error: unknown key 'sed'");
  EXPECT_EQ(error_of<ConfigError>([] { parse(R"({"train": {"learnig_rate": 1}})"); }),
            "config error: unknown key 'train.learnig_rate'");
  EXPECT_EQ(error_of<ConfigError>([] { parse(R"({"synth": {"bands": [{"centre": 5}]}})"); }),
            "config error: unknown key 'synth.bands[0].centre'");
}

TEST(RunConfig, TypeAndValueErrors) {
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse(R"({"train": {"batch_size": -1}})"); }),
                       "train.batch_size must be a non-negative integer"));
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse(R"({"strata": "session"})"); }), "strata:"));
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse(R"({"models": ["svm"]})"); }), "models:"));
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse(R"({"schema": "tuh9"})"); }), "tuh9"));
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse(R"({"stft": {"frames": 10}})"); }), "stft"));
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse(R"({"train": {"patience": 500}})"); }), "patience"));
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse(R"({"dims": {"feature_dim": 0}})"); }), "dims"));
  EXPECT_TRUE(contains(error_of<ConfigError>([] { parse("[]"); }), "must be an object"));
}

// ---- synth and preprocess -----------------------------------------------------------

TEST(Commands, SynthDefaultListsEightClassesAndRepeats) {
  RunConfig cfg;
  cfg.synth.events_per_class = 2;
  cfg.output = scratch_dir("cli_synth_a");
  std::ostringstream log_a, log_b;
  const auto a = cmd_synth(cfg, log_a);
  EXPECT_EQ(a.summary.size(), 8u);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_TRUE(contains(log_a.str(), "C" + std::to_string(k) + " ")) << k;
  const auto first = slurp(cfg.output / "summary.json");
  cfg.output = scratch_dir("cli_synth_b");
  cmd_synth(cfg, log_b);
  EXPECT_EQ(slurp(cfg.output / "summary.json"), first);
  EXPECT_TRUE(std::filesystem::exists(cfg.output / "config.json"));
  EXPECT_EQ(load_run_config(cfg.output / "config.json"), cfg);
}

TEST(Commands, SynthInvalidBandNamesClass) {
  RunConfig cfg;
  cfg.synth.classes = 2;
  cfg.synth.bands = {{10.0, 4.0, 1.0}, {124.0, 4.0, 1.0}};
  EXPECT_TRUE(contains(error_of<ConfigError>([&] { cfg.validate(); }), "class C1"));
  EXPECT_TRUE(contains(
      error_of<ConfigError>([] { parse(R"({"synth": {"classes": 2, "bands": [{"center": 10}, {"center": 124}]}})"); }),
      "class C1"));
}

TEST(Commands, PreprocessCountsAndShapeLine) {
  const auto root = scratch_dir("cli_pre");
  RunConfig cfg = tiny_config(root / "corpus");
  std::ostringstream log;
  cmd_synth(cfg, log);
  cfg.output = root / "ds";
  const auto r = cmd_preprocess(cfg, root / "corpus" / "manifest.csv", log);
  // 4 s events at 1 s per window: 4 windows per event, 5 events per class.
  EXPECT_EQ(r.report.samples_per_class, (std::vector<std::size_t>{20, 20, 20}));
  EXPECT_TRUE(contains(log.str(), "(32, 9, 19)"));
  EXPECT_EQ(read_dataset(cfg.output).size(), 60u);
}

TEST(Commands, PreprocessEmptyManifestFails) {
  const auto root = scratch_dir("cli_empty");
  std::ofstream(root / "manifest.csv") << "file,sample_rate,channels,annotations,patient_id,event_id\n";
  RunConfig cfg;
  cfg.output = root / "out";
  std::ostringstream log;
  EXPECT_TRUE(contains(error_of<IngestionError>([&] { cmd_preprocess(cfg, root / "manifest.csv", log); }),
                       "no samples"));
  EXPECT_FALSE(std::filesystem::exists(cfg.output / "dataset.json"));
}

// ---- crossval and evaluate ------------------------------------------------------------

class CrossvalCommand : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = scratch_dir("cli_cv");
    RunConfig cfg = tiny_config(root_ / "corpus");
    std::ostringstream log;
    cmd_synth(cfg, log);
    cfg.output = root_ / "ds";
    cmd_preprocess(cfg, root_ / "corpus" / "manifest.csv", log);
    cfg.output = root_ / "cv";
    cmd_crossval(cfg, root_ / "ds", log);
  }
  static inline std::filesystem::path root_;
};

TEST_F(CrossvalCommand, ResultsHoldFiveFoldsAndComparisons) {
  const auto j = nlohmann::json::parse(slurp(root_ / "cv" / "results.json"));
  ASSERT_EQ(j["models"].size(), 2u);
  for (const auto& m : j["models"]) {
    ASSERT_EQ(m["fold_f1"].size(), 5u);
    double mean = 0.0;
    for (double f : m["fold_f1"]) mean += f / 5.0;
    EXPECT_NEAR(m["mean_f1"].get<double>(), mean, 1e-12);
    for (const auto& f : m["folds"]) {
      EXPECT_EQ(f["report"]["confusion"].size(), 3u);
      EXPECT_EQ(f["report"]["per_class"].size(), 3u);
      EXPECT_FALSE(f["stages"].empty());
    }
  }
  ASSERT_EQ(j["comparisons"].size(), 1u);
  EXPECT_TRUE(j["comparisons"][0].contains("u"));
  EXPECT_TRUE(j["comparisons"][0].contains("p"));
  EXPECT_TRUE(std::filesystem::exists(root_ / "cv" / "confusion" / "bcnn_fold4.csv"));
  EXPECT_TRUE(std::filesystem::exists(root_ / "cv" / "meta.json"));
  const auto summary = slurp(root_ / "cv" / "summary.txt");
  EXPECT_TRUE(contains(summary, "B-CNN"));
  EXPECT_TRUE(contains(summary, "synth3"));
}

TEST_F(CrossvalCommand, RerunIsByteIdentical) {
  RunConfig cfg = tiny_config(root_ / "cv2");
  cfg.jobs = 2;
  std::ostringstream log;
  cmd_crossval(cfg, root_ / "ds", log);
  EXPECT_EQ(slurp(root_ / "cv2" / "results.json"), slurp(root_ / "cv" / "results.json"));
  EXPECT_EQ(slurp(root_ / "cv2" / "summary.txt"), slurp(root_ / "cv" / "summary.txt"));
}

TEST_F(CrossvalCommand, EvaluateReproducesStoredFoldScore) {
  const auto j = nlohmann::json::parse(slurp(root_ / "cv" / "results.json"));
  RunConfig cfg = tiny_config(root_ / "eval");
  std::ostringstream log;
  for (std::size_t fold : {0u, 3u}) {
    const auto r = cmd_evaluate(cfg, root_ / "cv" / "checkpoints" / "bcnn" / ("fold" + std::to_string(fold)),
                                root_ / "ds", fold, log);
    EXPECT_EQ(r.report.weighted_f1, j["models"][1]["fold_f1"][fold].get<double>());
    EXPECT_GT(r.latency_ms, 0.0);
  }
  const auto meta = nlohmann::json::parse(slurp(root_ / "eval" / "meta.json"));
  EXPECT_GT(meta["latency_ms_per_sample"].get<double>(), 0.0);
  EXPECT_TRUE(std::filesystem::exists(root_ / "eval" / "report.json"));
}

TEST_F(CrossvalCommand, EvaluateRejectsMismatchedSchema) {
  Model other(ModelKind::cnn, 4, tiny_config("x").dims, 1);
  save_checkpoint(root_ / "k4", other, synthetic_schema(4));
  RunConfig cfg = tiny_config(root_ / "eval_bad");
  std::ostringstream log;
  EXPECT_TRUE(contains(error_of<SchemaError>([&] { cmd_evaluate(cfg, root_ / "k4", root_ / "ds", {}, log); }),
                       "does not match"));
}

TEST_F(CrossvalCommand, CrossvalRejectsSchemaOtherThanConfigured) {
  RunConfig cfg = tiny_config(root_ / "cv_bad");
  cfg.schema = "synth4";
  std::ostringstream log;
  EXPECT_THROW(cmd_crossval(cfg, root_ / "ds", log), SchemaError);
}

}  // namespace
}  // namespace hybil
