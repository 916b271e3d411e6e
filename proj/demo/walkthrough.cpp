// Library walkthrough: synthesize two recordings, fit a small codebook on GFP
// peak maps, tokenize both and print their microstate histograms.

#include <cstdio>

#include "msteeg/msteeg.hpp"

using namespace msteeg;

int main() {
  SynthSpec wake, deep;
  wake.duration_s = deep.duration_s = 60;
  wake.seed = 1;
  deep.seed = 2;
  deep.stage = SynthStage::kDeepSleep;

  std::vector<MultichannelSignal> signals;
  MatrixD peaks;
  for (const SynthSpec& s : {wake, deep}) {
    MultichannelSignal sig = bandpass(select_channels(generate(s)));
    const auto idx = gfp_peaks(gfp_series(sig));
    const MatrixD maps = extract_peak_maps(sig, idx);
    for (std::size_t r = 0; r < maps.rows(); ++r) peaks.append_row(maps.row(r));
    signals.push_back(std::move(sig));
  }
  std::printf("%zu GFP peak maps\n", peaks.rows());

  FitConfig cfg;
  cfg.k = 4;
  cfg.seed = 3;
  MatrixBatchSource source(peaks, cfg.batch_size, 5, cfg.seed);
  const FitResult fit = streaming_fit(source, cfg);
  const Codebook codebook = to_codebook(fit, cfg, signals[0].channel_names);
  std::printf("fit: %zu iterations, final shift %.3g\n", fit.iterations, fit.final_shift);

  const char* names[] = {"wake", "deep"};
  for (std::size_t i = 0; i < signals.size(); ++i) {
    const auto tokens = tokenize(codebook, signals[i]).tokens;
    const auto hist = microstate_histogram(tokens, codebook.k());
    std::printf("%-5s", names[i]);
    for (double h : hist) std::printf(" %.3f", h);
    std::printf("\n");
  }
}
