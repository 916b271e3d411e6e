#pragma once

// Deterministic stage-like test signals. A W-like recording is a sum of alpha
// sinusoids at low amplitude; an N3-like recording is a sum of delta
// sinusoids at high amplitude. Both carry white noise and a constant label.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "msteeg/core.hpp"
#include "msteeg/prep.hpp"
#include "msteeg/recording.hpp"

namespace msteeg {

enum class SynthStage { kWake, kDeepSleep };

struct SynthSpec {
  SynthStage stage = SynthStage::kWake;
  double duration_s = 300.0;
  double fs = 100.0;
  std::size_t channels = 6;
  std::uint64_t seed = 0;
  double label_rate = 1.0 / 30.0;
};

struct SynthProfile {
  double f_low;         // component frequencies are drawn from [f_low, f_high]
  double f_high;
  double rms;           // of the oscillatory part, microvolts
  int label;
};

// Components are drawn from the middle of each band so that Hann leakage of
// a 1 s STFT frame stays inside the band.
inline SynthProfile synth_profile(SynthStage stage) {
  if (stage == SynthStage::kWake) return {9.0, 11.0, 5.0, kStageW};
  return {1.0, 3.0, 40.0, kStageN3};
}

inline constexpr int kSynthComponents = 3;
inline constexpr double kSynthNoiseSd = 2.0;

inline Recording generate(const SynthSpec& spec) {
  if (!(spec.duration_s > 0.0) || !(spec.fs > 0.0)) {
    fail(ErrorKind::kParameter, "synthetic duration and sampling rate must be positive");
  }
  if (spec.channels < 2) fail(ErrorKind::kParameter, "synthetic recordings need at least 2 channels");
  const SynthProfile prof = synth_profile(spec.stage);
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fs));

  Recording rec;
  rec.fs = spec.fs;
  rec.label_rate = spec.label_rate;
  for (std::size_t c = 0; c < spec.channels; ++c) {
    rec.channel_names.push_back(c < default_leads().size() ? default_leads()[c] : "CH" + std::to_string(c + 1));
  }
  rec.data = MatrixD(spec.channels, n);

  // Stream 0: frequencies and phases. Streams 100+c: noise for channel c.
  CounterRng params(spec.seed, 0);
  double freqs[kSynthComponents];
  for (double& f : freqs) f = params.uniform(prof.f_low, prof.f_high);
  const double amp = prof.rms * std::sqrt(2.0 / kSynthComponents);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < spec.channels; ++c) {
    double phases[kSynthComponents];
    for (double& p : phases) p = params.uniform(0.0, two_pi);
    CounterRng noise(spec.seed, 100 + c);
    auto row = rec.data.row(c);
    for (std::size_t s = 0; s < n; ++s) {
      const double t = static_cast<double>(s) / spec.fs;
      double v = 0.0;
      for (int j = 0; j < kSynthComponents; ++j) v += amp * std::sin(two_pi * freqs[j] * t + phases[j]);
      row[s] = v + kSynthNoiseSd * noise.normal();
    }
  }
  const auto n_labels = static_cast<std::size_t>(std::floor(spec.duration_s * spec.label_rate + 1e-9));
  rec.labels.assign(n_labels, prof.label);
  return rec;
}

}  // namespace msteeg
