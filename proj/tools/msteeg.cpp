// msteeg: microstate tokenization pipeline for multichannel EEG.
//
//   msteeg fit       --config run.json            -> codebook.mstcb, fit_report.json
//   msteeg tokenize  --config run.json            -> tokens/*.mstok, tokens/index.tsv
//   msteeg features  --config run.json            -> features/*.msfeat, features/index.tsv
//   msteeg eval      --config run.json --dataset out/tokens   -> metrics.json
//   msteeg stats     --config run.json --dataset out/tokens   -> rank_tables.txt
//   msteeg synth     --out corpus --n-wake 30 --n-deep 30
//
// Exit status: 0 ok, 2 input or config error, 3 data contract violation,
// 4 internal error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "msteeg/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<std::size_t> batch_size;
  std::optional<std::string> mode;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "JSON pipeline config");
  cmd->add_option("-i,--input", o.inputs, "input file, directory or glob (repeatable; replaces config inputs)");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads across recordings (0 = all cores)");
}

void add_fit_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-k,--k", o.k, "number of microstates");
  cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
  cmd->add_option("--mode", o.mode, "literal|weighted")->check(CLI::IsMember({"literal", "weighted"}));
}

msteeg::PipelineConfig resolve(const Overrides& o) {
  msteeg::PipelineConfig cfg = o.config.empty() ? msteeg::PipelineConfig{} : msteeg::load_config(o.config);
  if (!o.inputs.empty()) cfg.inputs = o.inputs;
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.k) cfg.fit.k = *o.k;
  if (o.batch_size) cfg.fit.batch_size = *o.batch_size;
  if (o.mode) cfg.fit.mode = msteeg::parse_fit_mode(*o.mode);
  if (o.threads) cfg.threads = *o.threads;
  cfg.fit.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microstate tokenization of multichannel EEG"};
  app.require_subcommand(1);

  Overrides o;
  std::string codebook;
  std::string dataset;
  msteeg::SynthCorpusSpec synth;
  std::string synth_out = "synth";

  auto* fit = app.add_subcommand("fit", "fit a microstate codebook on GFP peak maps");
  add_common(fit, o);
  add_fit_flags(fit, o);

  auto* tok = app.add_subcommand("tokenize", "map recordings to windowed microstate token datasets");
  add_common(tok, o);
  tok->add_option("--codebook", codebook, "codebook file (default <out>/codebook.mstcb)");

  auto* feat = app.add_subcommand("features", "compute windowed STFT band-power features");
  add_common(feat, o);

  auto* eval = app.add_subcommand("eval", "train and score a softmax classifier on a dataset");
  add_common(eval, o);
  eval->add_option("--dataset", dataset, "dataset directory (default <out>/tokens)");

  auto* stats = app.add_subcommand("stats", "rank microstate frequencies per group and label");
  add_common(stats, o);
  stats->add_option("--dataset", dataset, "token dataset directory (default <out>/tokens)");

  auto* syn = app.add_subcommand("synth", "write a synthetic W-like / N3-like corpus");
  syn->add_option("-o,--out", synth_out, "output directory");
  syn->add_option("--seed", synth.seed, "random seed");
  syn->add_option("--n-wake", synth.n_wake, "W-like recordings");
  syn->add_option("--n-deep", synth.n_deep, "N3-like recordings");
  syn->add_option("--duration", synth.duration_s, "seconds per recording");
  syn->add_option("--fs", synth.fs, "sampling rate, Hz");
  syn->add_option("--channels", synth.channels, "channel count");
  syn->add_option("--format", synth.format, "msr|csv|edf");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (syn->parsed()) {
      const auto files = msteeg::cmd_synth(synth, synth_out);
      std::printf("wrote %zu recordings to %s\n", files.size(), synth_out.c_str());
      return 0;
    }
    const msteeg::PipelineConfig cfg = resolve(o);
    const std::filesystem::path out(cfg.out);
    if (fit->parsed()) {
      msteeg::cmd_fit(cfg);
      std::printf("codebook written to %s\n", (out / "codebook.mstcb").c_str());
    } else if (tok->parsed()) {
      msteeg::cmd_tokenize(cfg, codebook.empty() ? out / "codebook.mstcb" : std::filesystem::path(codebook));
      std::printf("tokens written to %s\n", (out / "tokens").c_str());
    } else if (feat->parsed()) {
      msteeg::cmd_features(cfg);
      std::printf("features written to %s\n", (out / "features").c_str());
    } else if (eval->parsed()) {
      const auto rep = msteeg::cmd_eval(cfg, dataset.empty() ? out / "tokens" : std::filesystem::path(dataset));
      std::printf("test accuracy %.4f  kappa %.4f  (n=%zu)\n", rep.test.accuracy, rep.test.kappa, rep.test.n);
    } else if (stats->parsed()) {
      std::fputs(msteeg::cmd_stats(cfg, dataset.empty() ? out / "tokens" : std::filesystem::path(dataset)).c_str(),
                 stdout);
    }
    return 0;
  } catch (const msteeg::Error& e) {
    std::fprintf(stderr, "msteeg: %s\n", e.what());
    return msteeg::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "msteeg: io error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "msteeg: internal error: %s\n", e.what());
    return 4;
  }
}
