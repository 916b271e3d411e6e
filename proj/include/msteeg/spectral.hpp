#pragma once

// Frequency-domain baseline features: Hann-window STFT power, band
// integration with Simpson's rule, and per-channel flatten-and-stack.

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "msteeg/core.hpp"
#include "msteeg/recording.hpp"

namespace msteeg {

// kAngular: |X|^2 / (2*pi) per bin, one-sided (non-DC, non-Nyquist bins
// doubled). kDensity: the conventional one-sided periodogram density
// 2|X|^2 / (fs * sum(w^2)).
enum class PowerScaling { kAngular, kDensity };

struct Spectrogram {
  MatrixD power;              // frequency bins x frames
  std::vector<double> freqs;  // Hz, uniform spacing 1/t_w
  std::vector<double> times;  // frame centers, s
  double df = 0.0;
};

struct Band {
  std::string name;
  double low = 0.0;
  double high = 0.0;
};

// delta, theta, alpha, sigma, beta, gamma.
inline std::vector<Band> default_bands() {
  return {{"delta", 0.5, 4.0}, {"theta", 4.0, 8.0},   {"alpha", 8.0, 12.0},
          {"sigma", 12.0, 16.0}, {"beta", 16.0, 30.0}, {"gamma", 30.0, 40.0}};
}

struct StftGeometry {
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  std::size_t pad_front = 0;
  std::size_t n_frames = 0;
};

// Frames are centered on consecutive hop-length cells of the signal; with
// overlap the first and last frames reach (frame_len - hop)/2 samples past
// the ends, which are read as zeros. The frame count is therefore
// floor(n / hop) == T / ((1 - r_o) * t_w) for integral products, and any
// partial trailing cell is discarded.
inline StftGeometry stft_geometry(std::size_t n, double fs, double t_w, double r_o) {
  if (!(r_o >= 0.0 && r_o < 1.0)) fail(ErrorKind::kParameter, "overlap ratio must be in [0, 1)");
  if (!(t_w > 0.0)) fail(ErrorKind::kParameter, "STFT window must be positive");
  const double len_f = fs * t_w;
  const double len_r = std::round(len_f);
  if (len_r < 2.0 || std::abs(len_f - len_r) > 1e-9 * len_f) {
    fail(ErrorKind::kParameter, "fs * t_w = " + std::to_string(len_f) + " is not an integral frame length");
  }
  const double hop_f = (1.0 - r_o) * len_r;
  const double hop_r = std::round(hop_f);
  if (hop_r < 1.0 || std::abs(hop_f - hop_r) > 1e-9 * len_r) {
    fail(ErrorKind::kParameter, "(1 - r_o) * fs * t_w = " + std::to_string(hop_f) + " is not an integral hop");
  }
  StftGeometry g;
  g.frame_len = static_cast<std::size_t>(len_r);
  g.hop = static_cast<std::size_t>(hop_r);
  g.pad_front = (g.frame_len - g.hop) / 2;
  g.n_frames = n / g.hop;
  return g;
}

inline Spectrogram stft_power(std::span<const double> x, double fs, double t_w = 1.0, double r_o = 0.0,
                              PowerScaling scaling = PowerScaling::kAngular) {
  const StftGeometry g = stft_geometry(x.size(), fs, t_w, r_o);
  if (x.size() < g.frame_len) {
    fail(ErrorKind::kParameter, "signal of " + std::to_string(x.size()) + " samples is shorter than one " +
                                    std::to_string(g.frame_len) + "-sample window");
  }
  const std::size_t len = g.frame_len;
  const std::size_t n_bins = len / 2 + 1;
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<double> window(len);
  double window_energy = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    // Periodic Hann.
    window[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) / static_cast<double>(len)));
    window_energy += window[i] * window[i];
  }
  std::vector<double> cos_table(len), sin_table(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double a = two_pi * static_cast<double>(i) / static_cast<double>(len);
    cos_table[i] = std::cos(a);
    sin_table[i] = std::sin(a);
  }

  Spectrogram sp;
  sp.df = fs / static_cast<double>(len);
  sp.power = MatrixD(n_bins, g.n_frames);
  for (std::size_t b = 0; b < n_bins; ++b) sp.freqs.push_back(static_cast<double>(b) * sp.df);

  std::vector<double> frame(len);
  for (std::size_t m = 0; m < g.n_frames; ++m) {
    const auto start = static_cast<std::ptrdiff_t>(m * g.hop) - static_cast<std::ptrdiff_t>(g.pad_front);
    for (std::size_t i = 0; i < len; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      const double v = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.size())) ? x[static_cast<std::size_t>(idx)] : 0.0;
      frame[i] = v * window[i];
    }
    sp.times.push_back((static_cast<double>(start) + static_cast<double>(len) / 2.0) / fs);
    for (std::size_t b = 0; b < n_bins; ++b) {
      double re = 0.0, im = 0.0;
      std::size_t phase = 0;
      for (std::size_t i = 0; i < len; ++i) {
        re += frame[i] * cos_table[phase];
        im -= frame[i] * sin_table[phase];
        phase += b;
        if (phase >= len) phase -= len;
      }
      const double mag2 = re * re + im * im;
      const bool edge_bin = b == 0 || (len % 2 == 0 && b == len / 2);
      const double fold = edge_bin ? 1.0 : 2.0;
      sp.power(b, m) = scaling == PowerScaling::kAngular
                           ? fold * mag2 / two_pi
                           : fold * mag2 / (fs * window_energy);
    }
  }
  return sp;
}

// Composite Simpson over equally spaced samples. With an even sample count
// the final interval is integrated by the trapezoid rule.
inline double simpson(std::span<const double> y, double dx) {
  const std::size_t n = y.size();
  if (n < 2) fail(ErrorKind::kParameter, "Simpson integration needs at least 2 points");
  if (n == 2) return 0.5 * dx * (y[0] + y[1]);
  const std::size_t odd_end = (n % 2 == 1) ? n : n - 1;
  double acc = y[0] + y[odd_end - 1];
  for (std::size_t i = 1; i + 1 < odd_end; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * y[i];
  double total = acc * dx / 3.0;
  if (odd_end != n) total += 0.5 * dx * (y[n - 2] + y[n - 1]);
  return total;
}

struct BandPowerMatrix {
  MatrixD power;  // bands x frames
  std::vector<Band> bands;
};

// Bin indices owned by each band: low <= f < high, except the last band,
// which also keeps f == high.
inline std::vector<std::vector<std::size_t>> band_bins(const std::vector<double>& freqs,
                                                       const std::vector<Band>& bands) {
  std::vector<std::vector<std::size_t>> out(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    const bool last = b + 1 == bands.size();
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      const double f = freqs[i];
      if (f >= bands[b].low && (f < bands[b].high || (last && f == bands[b].high))) out[b].push_back(i);
    }
    if (out[b].empty()) {
      fail(ErrorKind::kParameter, "band '" + bands[b].name + "' contains no frequency bins");
    }
  }
  return out;
}

inline BandPowerMatrix band_power(const Spectrogram& sp, const std::vector<Band>& bands = default_bands()) {
  const auto bins = band_bins(sp.freqs, bands);
  BandPowerMatrix out;
  out.bands = bands;
  out.power = MatrixD(bands.size(), sp.power.cols());
  std::vector<double> column;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    for (std::size_t m = 0; m < sp.power.cols(); ++m) {
      column.clear();
      for (std::size_t i : bins[b]) column.push_back(sp.power(i, m));
      out.power(b, m) = column.size() == 1 ? column[0] * sp.df : simpson(column, sp.df);
    }
  }
  return out;
}

// Rows are channels; each row is that channel's band-power matrix flattened
// band-major (all frames of band 0, then band 1, ...).
inline MatrixD frequency_features(const MultichannelSignal& sig, double t_w = 1.0, double r_o = 0.0,
                                  const std::vector<Band>& bands = default_bands(),
                                  PowerScaling scaling = PowerScaling::kAngular) {
  const StftGeometry g = stft_geometry(sig.data.cols(), sig.fs, t_w, r_o);
  MatrixD out(sig.data.rows(), bands.size() * g.n_frames);
  for (std::size_t c = 0; c < sig.data.rows(); ++c) {
    const BandPowerMatrix bp = band_power(stft_power(sig.data.row(c), sig.fs, t_w, r_o, scaling), bands);
    std::copy(bp.power.values().begin(), bp.power.values().end(), out.row(c).begin());
  }
  return out;
}

}  // namespace msteeg
