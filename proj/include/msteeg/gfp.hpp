#pragma once

#include <cmath>
#include <vector>

#include "msteeg/core.hpp"
#include "msteeg/recording.hpp"

namespace msteeg {

struct GfpSeries {
  std::vector<double> values;
  double fs = 0.0;
};

// Global field power: population standard deviation across channels at
// every sample.
inline GfpSeries gfp_series(const MultichannelSignal& sig) {
  const std::size_t n_ch = sig.data.rows();
  if (n_ch < 2) fail(ErrorKind::kParameter, "GFP needs at least two channels");
  GfpSeries out;
  out.fs = sig.fs;
  out.values.resize(sig.data.cols());
  const double inv_n = 1.0 / static_cast<double>(n_ch);
  for (std::size_t s = 0; s < sig.data.cols(); ++s) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n_ch; ++c) mean += sig.data(c, s);
    mean *= inv_n;
    double var = 0.0;
    for (std::size_t c = 0; c < n_ch; ++c) {
      const double d = sig.data(c, s) - mean;
      var += d * d;
    }
    out.values[s] = std::sqrt(var * inv_n);
  }
  return out;
}

// Strict local maxima. A flat-topped maximum reports its first sample; the
// first and last samples are never peaks.
inline std::vector<std::size_t> gfp_peaks(std::span<const double> v) {
  std::vector<std::size_t> peaks;
  const std::size_t n = v.size();
  std::size_t i = 1;
  while (i + 1 < n) {
    if (v[i - 1] < v[i]) {
      std::size_t j = i + 1;
      while (j < n && v[j] == v[i]) ++j;
      if (j < n && v[j] < v[i]) peaks.push_back(i);
      i = j;
    } else {
      ++i;
    }
  }
  return peaks;
}

inline std::vector<std::size_t> gfp_peaks(const GfpSeries& series) { return gfp_peaks(series.values); }

// Topographies at the given samples, one row per peak.
inline MatrixD extract_peak_maps(const MultichannelSignal& sig, std::span<const std::size_t> peaks) {
  MatrixD maps(peaks.size(), sig.data.rows());
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    if (peaks[j] >= sig.data.cols()) {
      fail(ErrorKind::kBounds, "peak index " + std::to_string(peaks[j]) + " outside signal of " +
                                   std::to_string(sig.data.cols()) + " samples");
    }
    for (std::size_t c = 0; c < sig.data.rows(); ++c) maps(j, c) = sig.data(c, peaks[j]);
  }
  return maps;
}

}  // namespace msteeg
