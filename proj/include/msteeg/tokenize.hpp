#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "msteeg/cluster.hpp"
#include "msteeg/codebook.hpp"
#include "msteeg/core.hpp"
#include "msteeg/prep.hpp"
#include "msteeg/recording.hpp"

namespace msteeg {

using TokenId = std::uint32_t;

struct TokenSequence {
  std::vector<TokenId> tokens;
  double fs = 0.0;
};

// Maps every sample of the signal to its nearest codebook centroid.
inline TokenSequence tokenize(const Codebook& codebook, const MultichannelSignal& sig) {
  if (sig.data.rows() != codebook.n_channels()) {
    fail(ErrorKind::kContract, "signal has " + std::to_string(sig.data.rows()) +
                                   " channels, codebook expects " + std::to_string(codebook.n_channels()));
  }
  for (std::size_t c = 0; c < codebook.n_channels(); ++c) {
    if (canonical_lead(sig.channel_names.at(c)) != canonical_lead(codebook.channel_names()[c])) {
      fail(ErrorKind::kContract, "channel " + std::to_string(c) + " is '" + sig.channel_names[c] +
                                     "' but the codebook expects '" + codebook.channel_names()[c] + "'");
    }
  }
  TokenSequence out;
  out.fs = sig.fs;
  if (sig.data.cols() == 0) return out;
  out.tokens = assign(codebook.centroids(), sig.data.transposed()).labels;
  return out;
}

struct LabeledWindow {
  std::vector<TokenId> tokens;
  std::vector<int> labels;
  std::size_t window_index = 0;
  std::string subject_id;
};

namespace detail {

inline std::size_t integral_count(double x, const char* what) {
  const double r = std::round(x);
  if (!(r >= 0.0) || std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) {
    fail(ErrorKind::kParameter, std::string(what) + " = " + std::to_string(x) + " is not integral");
  }
  return static_cast<std::size_t>(r);
}

}  // namespace detail

// One analysis window: samples [start, stop) of the sample-rate stream and
// the labels covering it.
struct WindowSpan {
  std::size_t window_index = 0;
  std::size_t start = 0;
  std::size_t stop = 0;
  std::vector<int> labels;
};

// Consecutive non-overlapping windows of window_s seconds; samples and labels
// are anchored at sample 0. A trailing partial window is dropped, and so is
// any window that contains an unscored (negative) label. With no labels at
// all every full window is kept with an empty label list.
inline std::vector<WindowSpan> plan_windows(std::size_t n_samples, const std::vector<int>& labels, double fs,
                                            double label_rate, double window_s) {
  const std::size_t per_window = detail::integral_count(fs * window_s, "fs * window");
  if (per_window == 0) fail(ErrorKind::kParameter, "window holds no samples");
  const std::size_t n_windows = n_samples / per_window;
  std::size_t labels_per = 0;
  if (!labels.empty()) {
    labels_per = detail::integral_count(label_rate * window_s, "label_rate * window");
    if (labels.size() < n_windows * labels_per) {
      fail(ErrorKind::kAlignment, std::to_string(n_windows) + " windows need " +
                                      std::to_string(n_windows * labels_per) + " labels, got " +
                                      std::to_string(labels.size()));
    }
  }
  std::vector<WindowSpan> out;
  for (std::size_t w = 0; w < n_windows; ++w) {
    WindowSpan span;
    span.window_index = w;
    span.start = w * per_window;
    span.stop = (w + 1) * per_window;
    span.labels.assign(labels.begin() + static_cast<long>(std::min(labels.size(), w * labels_per)),
                       labels.begin() + static_cast<long>(std::min(labels.size(), (w + 1) * labels_per)));
    if (std::any_of(span.labels.begin(), span.labels.end(), [](int l) { return l < 0; })) continue;
    out.push_back(std::move(span));
  }
  return out;
}

inline std::vector<LabeledWindow> slice_windows(const std::vector<TokenId>& tokens,
                                                const std::vector<int>& labels, double fs,
                                                double label_rate, double window_s,
                                                const std::string& subject_id = {}) {
  std::vector<LabeledWindow> out;
  for (auto& span : plan_windows(tokens.size(), labels, fs, label_rate, window_s)) {
    LabeledWindow win;
    win.window_index = span.window_index;
    win.subject_id = subject_id;
    win.labels = std::move(span.labels);
    win.tokens.assign(tokens.begin() + static_cast<long>(span.start), tokens.begin() + static_cast<long>(span.stop));
    out.push_back(std::move(win));
  }
  return out;
}

// A labeled span [start, stop) in samples, e.g. one motor-imagery trial.
struct Event {
  std::size_t start = 0;
  std::size_t stop = 0;
  int label = 0;
};

inline std::vector<LabeledWindow> slice_events(const std::vector<TokenId>& tokens,
                                               const std::vector<Event>& events,
                                               const std::string& subject_id = {}) {
  std::vector<LabeledWindow> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (e.start > e.stop || e.stop > tokens.size()) {
      fail(ErrorKind::kBounds, "event " + std::to_string(i) + " [" + std::to_string(e.start) + ", " +
                                   std::to_string(e.stop) + ") outside " + std::to_string(tokens.size()) +
                                   " tokens");
    }
    LabeledWindow win;
    win.window_index = i;
    win.subject_id = subject_id;
    win.labels = {e.label};
    win.tokens.assign(tokens.begin() + static_cast<long>(e.start), tokens.begin() + static_cast<long>(e.stop));
    out.push_back(std::move(win));
  }
  return out;
}

inline std::vector<TokenId> pad_tokens(std::vector<TokenId> seq, std::size_t target_len, TokenId pad_id) {
  if (target_len < seq.size()) {
    fail(ErrorKind::kParameter, "pad target " + std::to_string(target_len) + " is shorter than sequence of " +
                                    std::to_string(seq.size()));
  }
  seq.resize(target_len, pad_id);
  return seq;
}

}  // namespace msteeg
