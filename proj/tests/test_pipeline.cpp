#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "msteeg/pipeline.hpp"
#include "test_util.hpp"

#ifndef MSTEEG_CLI
#error "MSTEEG_CLI must name the msteeg executable"
#endif

using namespace msteeg;
using testutil::error_kind;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MSTEEG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& s) { write_file_atomic(p, s); }

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const PipelineConfig cfg = parse_config(nlohmann::json::parse(
      R"({"inputs": ["a.edf"], "fit": {"k": 8, "mode": "weighted"}, "stft": {"overlap": 0.5},
          "bands": [{"name": "alpha", "low": 8, "high": 12}], "seed": 3})"));
  EXPECT_EQ(cfg.fit.k, 8u);
  EXPECT_EQ(cfg.fit.mode, FitMode::kWeighted);
  EXPECT_EQ(cfg.fit.batch_size, 50u);
  EXPECT_EQ(cfg.fit.seed, 3u);
  EXPECT_EQ(cfg.stft.overlap, 0.5);
  EXPECT_EQ(cfg.bands.size(), 1u);
  EXPECT_EQ(cfg.channels, default_leads());
  EXPECT_EQ(cfg.window_s, 300.0);
  EXPECT_NO_THROW(cfg.validate());
  // The serialized form parses back to the same settings.
  const PipelineConfig again = parse_config(config_to_json(cfg));
  EXPECT_EQ(config_to_json(again), config_to_json(cfg));
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
  EXPECT_EQ(error_kind([] { parse_config(nlohmann::json::parse(R"({"inptus": []})")); }), ErrorKind::kConfig);
  EXPECT_EQ(error_kind([] { parse_config(nlohmann::json::parse(R"({"fit": {"kk": 3}})")); }), ErrorKind::kConfig);
  EXPECT_EQ(error_kind([] { parse_config(nlohmann::json::parse(R"({"bands": [{"name": "a", "lo": 1}]})")); }),
            ErrorKind::kConfig);
  EXPECT_EQ(error_kind([] { parse_config(nlohmann::json::parse(R"({"fit": {"mode": "fast"}})")); }),
            ErrorKind::kConfig);
  EXPECT_EQ(error_kind([] { parse_config(nlohmann::json::parse(R"({"window_s": "long"})")); }), ErrorKind::kConfig);
}

TEST(Config, ValidationBeforeWork) {
  PipelineConfig cfg;
  cfg.fit.k = 1;
  EXPECT_EQ(error_kind([&] { cfg.validate(); }), ErrorKind::kConfig);
  cfg = PipelineConfig{};
  cfg.stft.overlap = 1.0;
  EXPECT_EQ(error_kind([&] { cfg.validate(); }), ErrorKind::kConfig);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code(ErrorKind::kIo), 2);
  EXPECT_EQ(exit_code(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code(ErrorKind::kTruncation), 2);
  EXPECT_EQ(exit_code(ErrorKind::kContract), 3);
  EXPECT_EQ(exit_code(ErrorKind::kLookup), 3);
  EXPECT_EQ(exit_code(ErrorKind::kInsufficientData), 3);
  EXPECT_EQ(exit_code(ErrorKind::kInternal), 4);
}

TEST(Inputs, Discovery) {
  testutil::TempDir dir("discover");
  write_text(dir.path() / "b.msr", "x");
  write_text(dir.path() / "a.edf", "x");
  write_text(dir.path() / "notes.txt", "x");
  const auto all = discover_inputs({dir.path().string()});
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].filename(), "a.edf");
  EXPECT_EQ(discover_inputs({(dir.path() / "*.msr").string()}).size(), 1u);
  EXPECT_EQ(error_kind([&] { discover_inputs({(dir.path() / "*.csv").string()}); }), ErrorKind::kIo);
  EXPECT_EQ(error_kind([&] { discover_inputs({(dir.path() / "missing.edf").string()}); }), ErrorKind::kIo);
  EXPECT_EQ(error_kind([&] { discover_inputs({(dir.path() / "notes.txt").string()}); }), ErrorKind::kFormat);
}

class SmallCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testutil::TempDir("corpus");
    SynthCorpusSpec spec;
    spec.n_wake = 3;
    spec.n_deep = 3;
    spec.duration_s = 120;
    spec.seed = 5;
    cmd_synth(spec, dir_->path() / "corpus");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  PipelineConfig config(const std::string& out) const {
    PipelineConfig cfg;
    cfg.inputs = {(dir_->path() / "corpus" / "*.msr").string()};
    cfg.fit.k = 6;
    cfg.window_s = 60;
    cfg.out = (dir_->path() / out).string();
    cfg.seed = 2;
    cfg.fit.seed = 2;
    return cfg;
  }

  static testutil::TempDir* dir_;
};

testutil::TempDir* SmallCorpus::dir_ = nullptr;

TEST_F(SmallCorpus, FitIsDeterministicAndReadable) {
  const PipelineConfig a = config("fit_a");
  const PipelineConfig b = config("fit_b");
  cmd_fit(a);
  cmd_fit(b);
  const std::string bytes_a = read_file(fs::path(a.out) / "codebook.mstcb");
  EXPECT_EQ(bytes_a, read_file(fs::path(b.out) / "codebook.mstcb"));
  const Codebook cb = read_codebook(fs::path(a.out) / "codebook.mstcb");
  EXPECT_EQ(cb.k(), 6u);
  EXPECT_EQ(cb.channel_names(), default_leads());
  EXPECT_EQ(cb.meta().fit_fs, 100.0);
  const auto report = nlohmann::json::parse(read_file(fs::path(a.out) / "fit_report.json"));
  EXPECT_EQ(report["iterations"].get<std::size_t>(), report["batch_inertia"].size());
  EXPECT_TRUE(report.contains("final_shift"));
}

TEST_F(SmallCorpus, ThreadCountDoesNotChangeOutput) {
  PipelineConfig one = config("thr1");
  PipelineConfig three = config("thr3");
  three.threads = 3;
  cmd_fit(one);
  cmd_fit(three);
  EXPECT_EQ(read_file(fs::path(one.out) / "codebook.mstcb"), read_file(fs::path(three.out) / "codebook.mstcb"));
}

TEST_F(SmallCorpus, TokenizeEvalStats) {
  const PipelineConfig cfg = config("full");
  cmd_fit(cfg);
  cmd_tokenize(cfg, fs::path(cfg.out) / "codebook.mstcb");
  const fs::path tokens = fs::path(cfg.out) / "tokens";
  const DatasetIndex idx = parse_index(read_file(tokens / "index.tsv"));
  ASSERT_EQ(idx.entries.size(), 6u);
  for (const auto& e : idx.entries) {
    const TokenDataset ds = parse_token_dataset(read_file(tokens / e.file));
    EXPECT_EQ(ds.windows.size(), 2u);
    for (const auto& w : ds.windows) {
      EXPECT_EQ(w.tokens.size(), 6000u);
      EXPECT_EQ(w.labels.size(), 2u);
      for (TokenId t : w.tokens) EXPECT_LT(t, 6u);
    }
  }
  const std::string tables = cmd_stats(cfg, tokens);
  EXPECT_NE(tables.find("W (label 0)"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(cfg.out) / "rank_tables.txt"));
}

TEST_F(SmallCorpus, FeaturesShapes) {
  PipelineConfig cfg = config("feat");
  cmd_features(cfg);
  const fs::path dir = fs::path(cfg.out) / "features";
  const DatasetIndex idx = parse_index(read_file(dir / "index.tsv"));
  ASSERT_EQ(idx.kind, "features");
  const FeatureDataset ds = parse_feature_dataset(read_file(dir / idx.entries[0].file));
  ASSERT_EQ(ds.windows.size(), 2u);
  EXPECT_EQ(ds.windows[0].features.rows(), 6u);
  EXPECT_EQ(ds.windows[0].features.cols(), 6u * 60u);
  EXPECT_EQ(ds.frames, 60u);
}

TEST_F(SmallCorpus, TokenizeRejectsRateMismatch) {
  PipelineConfig cfg = config("rate");
  cmd_fit(cfg);
  cfg.resample.target_fs = 50;
  EXPECT_EQ(error_kind([&] { cmd_tokenize(cfg, fs::path(cfg.out) / "codebook.mstcb"); }), ErrorKind::kContract);
}

TEST(Pipeline, NineHundredSecondRecordingGivesThreeWindows) {
  testutil::TempDir dir("900s");
  SynthCorpusSpec spec;
  spec.n_wake = 2;
  spec.n_deep = 1;
  spec.duration_s = 900;
  cmd_synth(spec, dir.path() / "in");
  PipelineConfig cfg;
  cfg.inputs = {(dir.path() / "in").string()};
  cfg.fit.k = 4;
  cfg.out = (dir.path() / "out").string();
  cmd_fit(cfg);
  cmd_tokenize(cfg, fs::path(cfg.out) / "codebook.mstcb");
  const TokenDataset ds = parse_token_dataset(read_file(fs::path(cfg.out) / "tokens" / "synth_N3_000.mstok"));
  ASSERT_EQ(ds.windows.size(), 3u);
  for (const auto& w : ds.windows) {
    EXPECT_EQ(w.tokens.size(), 30000u);
    EXPECT_EQ(w.labels, std::vector<int>(10, kStageN3));
  }
}

TEST(Pipeline, PerfectlySeparableEvalGivesKappaOne) {
  testutil::TempDir dir("kappa");
  const fs::path ds_dir = dir.path() / "tokens";
  DatasetIndex idx{"tokens", {}};
  for (int r = 0; r < 20; ++r) {
    TokenDataset ds;
    ds.recording = "r" + std::to_string(r);
    ds.group = ds.recording;
    ds.k = 2;
    ds.fs = 1;
    ds.label_rate = 0.1;
    ds.window_s = 20;
    const int label = r % 2 == 0 ? kStageW : kStageN3;
    ds.windows.push_back({std::vector<TokenId>(20, static_cast<TokenId>(r % 2)), {label, label}, 0, ds.group});
    write_file_atomic(ds_dir / (ds.recording + ".mstok"), serialize_token_dataset(ds));
    idx.entries.push_back({ds.recording, ds.group, ds.recording + ".mstok", 1});
  }
  write_file_atomic(ds_dir / "index.tsv", serialize_index(idx));
  PipelineConfig cfg;
  cfg.out = (dir.path() / "eval").string();
  const EvalReport rep = cmd_eval(cfg, ds_dir);
  EXPECT_EQ(rep.test.accuracy, 1.0);
  EXPECT_EQ(rep.test.kappa, 1.0);
  EXPECT_EQ(rep.classes, (std::vector<int>{kStageW, kStageN3}));
  EXPECT_TRUE(fs::exists(fs::path(cfg.out) / "metrics.json"));
}

TEST(Cli, ExitCodes) {
  testutil::TempDir dir("cli");
  const std::string d = dir.path().string();
  EXPECT_EQ(run_cli("fit -i " + d + "/missing.edf -o " + d + "/out"), 2);
  fs::create_directories(dir.path() / "empty");
  EXPECT_EQ(run_cli("tokenize -i " + d + "/empty -o " + d + "/out --codebook " + d + "/none.mstcb"), 2);
  EXPECT_EQ(run_cli("fit -i " + d + "/empty -o " + d + "/out"), 2);
  write_text(dir.path() / "bad.json", R"({"unknown": 1})");
  EXPECT_EQ(run_cli("fit -c " + d + "/bad.json"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);

  EXPECT_EQ(run_cli("synth --out " + d + "/corpus --n-wake 2 --n-deep 2 --duration 60 --format edf"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "corpus" / "synth_W_000.edf"));
  EXPECT_TRUE(fs::exists(dir.path() / "corpus" / "synth_W_000.labels"));
  // Too few GFP peaks for k: a data-contract failure.
  EXPECT_EQ(run_cli("fit -i " + d + "/corpus -o " + d + "/out -k 100000"), 3);
  EXPECT_EQ(run_cli("fit -i " + d + "/corpus -o " + d + "/out -k 5 --mode weighted --batch-size 20 --seed 4"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "codebook.mstcb"));
  EXPECT_EQ(read_codebook(dir.path() / "out" / "codebook.mstcb").meta().mode, FitMode::kWeighted);
  // Channel missing from the inputs.
  write_text(dir.path() / "pz.json", R"({"channels": ["F3", "Pz"]})");
  EXPECT_EQ(run_cli("fit -c " + d + "/pz.json -i " + d + "/corpus -o " + d + "/out2"), 3);
}
