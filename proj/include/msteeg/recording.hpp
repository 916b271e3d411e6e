#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "msteeg/core.hpp"

namespace msteeg {

// Sleep-stage label ids used by the synthetic generator and the rank tables.
// kUnscored marks epochs without a usable score.
enum SleepStage : int {
  kUnscored = -1,
  kStageW = 0,
  kStageN1 = 1,
  kStageN2 = 2,
  kStageN3 = 3,
  kStageR = 4,
};

inline std::string stage_name(int label) {
  switch (label) {
    case kStageW: return "W";
    case kStageN1: return "N1";
    case kStageN2: return "N2";
    case kStageN3: return "N3";
    case kStageR: return "R";
    default: return "L" + std::to_string(label);
  }
}

// Multichannel recording in microvolts. Rows of `data` are channels.
// Labels are optional and run at their own rate (e.g. 1/30 Hz sleep epochs).
struct Recording {
  std::vector<std::string> channel_names;
  double fs = 0.0;
  MatrixD data;
  std::vector<int> labels;
  double label_rate = 0.0;

  std::size_t n_channels() const { return data.rows(); }
  std::size_t n_samples() const { return data.cols(); }
  double duration_s() const { return fs > 0.0 ? static_cast<double>(n_samples()) / fs : 0.0; }
  bool has_labels() const { return !labels.empty(); }
};

// The preprocessing stages operate on the same layout; the name marks a
// recording that has been reduced to the clustering channels.
using MultichannelSignal = Recording;

inline void validate(const Recording& rec) {
  if (rec.data.rows() != rec.channel_names.size()) {
    fail(ErrorKind::kShape, "recording has " + std::to_string(rec.data.rows()) +
                                " data rows but " + std::to_string(rec.channel_names.size()) +
                                " channel names");
  }
  if (!(rec.fs > 0.0) || !std::isfinite(rec.fs)) {
    fail(ErrorKind::kParameter, "sampling rate must be positive");
  }
  if (rec.has_labels()) {
    if (!(rec.label_rate > 0.0) || !std::isfinite(rec.label_rate)) {
      fail(ErrorKind::kParameter, "label rate must be positive when labels are present");
    }
    // One trailing partial label period is tolerated.
    const double label_span = static_cast<double>(rec.labels.size()) * rec.fs / rec.label_rate;
    const double allowed = static_cast<double>(rec.n_samples()) + rec.fs / rec.label_rate;
    if (label_span > allowed + 1e-6) {
      fail(ErrorKind::kAlignment, "label stream of " + std::to_string(rec.labels.size()) +
                                      " labels exceeds the signal span");
    }
  }
}

inline void require_finite(const Recording& rec) {
  for (std::size_t c = 0; c < rec.data.rows(); ++c) {
    for (double v : rec.data.row(c)) {
      if (!std::isfinite(v)) {
        fail(ErrorKind::kValue, "non-finite sample in channel " + rec.channel_names.at(c));
      }
    }
  }
}

}  // namespace msteeg
