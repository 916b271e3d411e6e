#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "msteeg/dataset.hpp"
#include "msteeg/spectral.hpp"
#include "msteeg/synth.hpp"
#include "test_util.hpp"

using namespace msteeg;
using testutil::error_kind;

namespace {

double rms(const Recording& r) {
  double ss = 0.0;
  for (double v : r.data.values()) ss += v * v;
  return std::sqrt(ss / static_cast<double>(r.data.size()));
}

}  // namespace

TEST(Synth, Deterministic) {
  SynthSpec s;
  s.duration_s = 30;
  s.seed = 8;
  EXPECT_EQ(generate(s).data, generate(s).data);
  SynthSpec t = s;
  t.seed = 9;
  EXPECT_NE(generate(s).data, generate(t).data);
}

TEST(Synth, ShapeAndLabels) {
  SynthSpec s;
  s.stage = SynthStage::kDeepSleep;
  const Recording r = generate(s);
  EXPECT_EQ(r.n_channels(), 6u);
  EXPECT_EQ(r.n_samples(), 30000u);
  EXPECT_EQ(r.channel_names, default_leads());
  EXPECT_EQ(r.labels, std::vector<int>(10, kStageN3));
}

TEST(Synth, RmsRatio) {
  // Expected RMS: sqrt(rms_osc^2 + noise^2) = sqrt(25 + 4) for W, sqrt(1600 + 4) for N3.
  SynthSpec w, n3;
  w.seed = n3.seed = 1;
  n3.stage = SynthStage::kDeepSleep;
  const double rw = rms(generate(w)), rn = rms(generate(n3));
  EXPECT_NEAR(rw, std::sqrt(29.0), 0.3);
  EXPECT_NEAR(rn, std::sqrt(1604.0), 3.0);
  EXPECT_GT(rn, 5.0 * rw);
}

TEST(Synth, WakeAlphaDominates) {
  SynthSpec w;
  w.duration_s = 60;
  w.seed = 3;
  const Recording r = generate(w);
  const auto bp = band_power(stft_power(r.data.row(0), r.fs));
  std::vector<double> means(bp.power.rows());
  for (std::size_t b = 0; b < means.size(); ++b) {
    const auto row = bp.power.row(b);
    means[b] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
  }
  for (std::size_t b = 0; b < means.size(); ++b) {
    if (b == 2) continue;
    EXPECT_GT(means[2], 3.0 * means[b]) << bp.bands[b].name;
  }
}

TEST(TokenFile, RunLengthRoundtrip) {
  const std::vector<TokenId> t = {3, 3, 3, 1, 2, 2, 7};
  EXPECT_EQ(encode_tokens(t), "3*3,1,2*2,7");
  EXPECT_EQ(decode_tokens("3*3,1,2*2,7"), t);
  EXPECT_TRUE(decode_tokens("").empty());
  EXPECT_EQ(error_kind([] { decode_tokens("3*x"); }), ErrorKind::kParse);
}

TEST(TokenFile, DatasetRoundtripAndValidation) {
  TokenDataset ds;
  ds.recording = "rec1";
  ds.group = "g";
  ds.k = 4;
  ds.fs = 100;
  ds.label_rate = 1.0 / 30.0;
  ds.window_s = 60;
  ds.windows.push_back({{0, 0, 1, 4, 4}, {2, 2}, 0, "g"});
  ds.windows.push_back({{3}, {}, 5, "g"});
  const TokenDataset back = parse_token_dataset(serialize_token_dataset(ds));
  EXPECT_EQ(back.recording, "rec1");
  EXPECT_EQ(back.k, 4u);
  EXPECT_EQ(back.label_rate, ds.label_rate);
  ASSERT_EQ(back.windows.size(), 2u);
  EXPECT_EQ(back.windows[0].tokens, ds.windows[0].tokens);
  EXPECT_EQ(back.windows[0].labels, ds.windows[0].labels);
  EXPECT_EQ(back.windows[1].window_index, 5u);
  EXPECT_NO_THROW(validate_token_dataset(back));
  ds.windows[1].tokens = {5};
  EXPECT_EQ(error_kind([&] { validate_token_dataset(ds); }), ErrorKind::kRange);
  EXPECT_EQ(error_kind([] { parse_token_dataset("#msfeat 1\n{}\n"); }), ErrorKind::kFormat);
}

TEST(FeatureFile, Roundtrip) {
  FeatureDataset ds;
  ds.recording = "r";
  ds.group = "r";
  ds.bands = {"delta", "alpha"};
  ds.frames = 2;
  ds.fs = 100;
  FeatureWindow w;
  w.window_index = 1;
  w.labels = {0};
  w.features = MatrixD(3, 4);
  for (std::size_t i = 0; i < 12; ++i) w.features.values()[i] = 1.0 / (1.0 + static_cast<double>(i));
  ds.windows.push_back(w);
  const FeatureDataset back = parse_feature_dataset(serialize_feature_dataset(ds));
  ASSERT_EQ(back.windows.size(), 1u);
  EXPECT_EQ(back.windows[0].features, w.features);
  EXPECT_EQ(back.bands, ds.bands);
  std::string text = serialize_feature_dataset(ds);
  text.erase(text.rfind(','));
  text += "\n";
  EXPECT_EQ(error_kind([&] { parse_feature_dataset(text); }), ErrorKind::kTruncation);
}

TEST(Index, Roundtrip) {
  DatasetIndex idx{"tokens", {{"a", "g0", "a.mstok", 3}, {"b", "g1", "b.mstok", 0}}};
  const DatasetIndex back = parse_index(serialize_index(idx));
  EXPECT_EQ(back.kind, "tokens");
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[1].group, "g1");
  EXPECT_EQ(back.entries[0].windows, 3u);
  EXPECT_EQ(error_kind([] { parse_index("#msidx 1 images\n"); }), ErrorKind::kFormat);
}
