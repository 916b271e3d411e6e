#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "msteeg/tokenize.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace msteeg;
using testutil::error_kind;

namespace {

Codebook random_codebook(std::size_t k, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 20.0);
  MatrixD c(k, 6);
  for (double& v : c.values()) v = nd(gen);
  return Codebook(c, default_leads());
}

MultichannelSignal random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 20.0);
  MultichannelSignal sig;
  sig.fs = 100;
  sig.channel_names = default_leads();
  sig.data = MatrixD(6, n);
  for (double& v : sig.data.values()) v = nd(gen);
  return sig;
}

}  // namespace

TEST(Tokenize, ColumnsEqualToCentroid) {
  const Codebook cb = random_codebook(8, 1);
  MultichannelSignal sig = random_signal(20, 2);
  for (std::size_t s = 0; s < 20; ++s)
    for (std::size_t c = 0; c < 6; ++c) sig.data(c, s) = cb.centroids()(3, c);
  const auto seq = tokenize(cb, sig);
  EXPECT_EQ(seq.tokens, std::vector<TokenId>(20, 3));
  EXPECT_EQ(seq.fs, 100.0);
}

TEST(Tokenize, EmptySignal) {
  EXPECT_TRUE(tokenize(random_codebook(4, 1), random_signal(0, 2)).tokens.empty());
}

TEST(Tokenize, RandomMatchesBruteForce) {
  const Codebook cb = random_codebook(10, 3);
  const MultichannelSignal sig = random_signal(500, 4);
  const auto tokens = tokenize(cb, sig).tokens;
  std::vector<std::vector<double>> cs;
  for (std::size_t r = 0; r < cb.k(); ++r) cs.emplace_back(cb.centroids().row(r).begin(), cb.centroids().row(r).end());
  for (std::size_t s = 0; s < 500; ++s) {
    std::vector<double> col;
    for (std::size_t c = 0; c < 6; ++c) col.push_back(sig.data(c, s));
    EXPECT_EQ(tokens[s], oracle::nearest(cs, col));
  }
}

TEST(Tokenize, ChannelContract) {
  const Codebook cb = random_codebook(4, 1);
  MultichannelSignal sig = random_signal(10, 2);
  sig.channel_names[0] = "EEG F3-M2";  // same lead, different spelling
  EXPECT_NO_THROW(tokenize(cb, sig));
  sig.channel_names[0] = "Fz";
  EXPECT_EQ(error_kind([&] { tokenize(cb, sig); }), ErrorKind::kContract);
  MultichannelSignal five = random_signal(10, 2);
  five.data = MatrixD(5, 10);
  five.channel_names.pop_back();
  EXPECT_EQ(error_kind([&] { tokenize(cb, five); }), ErrorKind::kContract);
}

TEST(Windows, NineHundredSecondsAtDefaults) {
  const std::vector<TokenId> tokens(90000, 1);
  const std::vector<int> labels(30, 2);
  const auto w = slice_windows(tokens, labels, 100.0, 1.0 / 30.0, 300.0, "s1");
  ASSERT_EQ(w.size(), 3u);
  for (const auto& win : w) {
    EXPECT_EQ(win.tokens.size(), 30000u);
    EXPECT_EQ(win.labels.size(), 10u);
    EXPECT_EQ(win.subject_id, "s1");
  }
}

TEST(Windows, PartialWindowDropped) {
  EXPECT_TRUE(slice_windows(std::vector<TokenId>(29900, 0), std::vector<int>(9, 0), 100.0, 1.0 / 30.0, 300.0).empty());
}

TEST(Windows, BoundariesFollowIndexArithmetic) {
  std::vector<TokenId> tokens(1000);
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = static_cast<TokenId>(i);
  const auto w = slice_windows(tokens, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 10.0, 0.1, 30.0);
  // fs * T_w = 300 tokens per window; token i belongs to window i / 300.
  ASSERT_EQ(w.size(), 3u);
  for (const auto& win : w) {
    EXPECT_EQ(win.labels, (std::vector<int>{static_cast<int>(3 * win.window_index),
                                            static_cast<int>(3 * win.window_index + 1),
                                            static_cast<int>(3 * win.window_index + 2)}));
    for (TokenId t : win.tokens) EXPECT_EQ(t / 300, win.window_index);
  }
}

TEST(Windows, UnscoredEpochDropsWindow) {
  std::vector<int> labels(30, 0);
  labels[15] = kUnscored;
  const auto w = slice_windows(std::vector<TokenId>(90000, 0), labels, 100.0, 1.0 / 30.0, 300.0);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].window_index, 0u);
  EXPECT_EQ(w[1].window_index, 2u);
}

TEST(Windows, Errors) {
  EXPECT_EQ(error_kind([] { slice_windows(std::vector<TokenId>(90000, 0), std::vector<int>(29, 0), 100.0, 1.0 / 30.0, 300.0); }),
            ErrorKind::kAlignment);
  EXPECT_EQ(error_kind([] { slice_windows(std::vector<TokenId>(100, 0), {0}, 100.0, 1.0 / 30.0, 0.333); }),
            ErrorKind::kParameter);
}

TEST(Windows, UnlabeledRecordingKeepsAllWindows) {
  const auto spans = plan_windows(1000, {}, 10.0, 0.0, 30.0);
  ASSERT_EQ(spans.size(), 3u);
  EXPECT_TRUE(spans[2].labels.empty());
  EXPECT_EQ(spans[2].start, 600u);
  EXPECT_EQ(spans[2].stop, 900u);
}

TEST(Events, SliceByTrial) {
  std::vector<TokenId> tokens(100);
  for (std::size_t i = 0; i < 100; ++i) tokens[i] = static_cast<TokenId>(i);
  const auto w = slice_events(tokens, {{10, 20, 1}, {50, 54, 2}});
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[1].tokens, (std::vector<TokenId>{50, 51, 52, 53}));
  EXPECT_EQ(w[1].labels, std::vector<int>{2});
  EXPECT_EQ(error_kind([&] { slice_events(tokens, {{90, 101, 0}}); }), ErrorKind::kBounds);
}

TEST(Pad, Cases) {
  EXPECT_EQ(pad_tokens({1, 2, 3, 4, 5}, 5, 9), (std::vector<TokenId>{1, 2, 3, 4, 5}));
  EXPECT_EQ(pad_tokens({1, 2}, 4, 1000), (std::vector<TokenId>{1, 2, 1000, 1000}));
  // 200 Hz over a 265 s window.
  const std::size_t target = static_cast<std::size_t>(200 * 265);
  EXPECT_EQ(target, 53000u);
  const auto padded = pad_tokens(std::vector<TokenId>(40000, 3), target, 1000);
  EXPECT_EQ(padded.size(), 53000u);
  EXPECT_EQ(padded.back(), 1000u);
  EXPECT_EQ(error_kind([] { pad_tokens({1, 2, 3}, 2, 0); }), ErrorKind::kParameter);
}
