#pragma once

// Channel extraction, zero-phase Butterworth bandpass and rational
// polyphase resampling.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "msteeg/core.hpp"
#include "msteeg/recording.hpp"

namespace msteeg {

// The six clustering leads.
inline const std::vector<std::string>& default_leads() {
  static const std::vector<std::string> leads = {"F3", "F4", "C3", "C4", "O1", "O2"};
  return leads;
}

// Lead-name normalization: case-insensitive, an "EEG " prefix and one of the
// reference suffixes below are stripped. Anything else must match verbatim.
inline constexpr std::array<std::string_view, 4> kReferenceSuffixes = {"-m1", "-m2", "-a1", "-a2"};

inline std::string canonical_lead(std::string_view name) {
  std::string s = lowercase(trim(name));
  if (s.rfind("eeg ", 0) == 0) s = trim(s.substr(4));
  for (auto suffix : kReferenceSuffixes) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      s.resize(s.size() - suffix.size());
      break;
    }
  }
  return s;
}

inline MultichannelSignal select_channels(const Recording& rec,
                                          const std::vector<std::string>& wanted = default_leads()) {
  validate(rec);
  MultichannelSignal out;
  out.fs = rec.fs;
  out.labels = rec.labels;
  out.label_rate = rec.label_rate;
  out.data = MatrixD(wanted.size(), rec.n_samples());
  for (std::size_t w = 0; w < wanted.size(); ++w) {
    const std::string key = canonical_lead(wanted[w]);
    std::size_t found = rec.n_channels();
    for (std::size_t c = 0; c < rec.n_channels(); ++c) {
      if (canonical_lead(rec.channel_names[c]) != key) continue;
      if (found != rec.n_channels()) {
        fail(ErrorKind::kLookup, "lead '" + wanted[w] + "' is ambiguous ('" +
                                     rec.channel_names[found] + "' and '" + rec.channel_names[c] + "')");
      }
      found = c;
    }
    if (found == rec.n_channels()) {
      fail(ErrorKind::kLookup, "lead '" + wanted[w] + "' not found in recording");
    }
    std::copy(rec.data.row(found).begin(), rec.data.row(found).end(), out.data.row(w).begin());
    out.channel_names.push_back(wanted[w]);
  }
  return out;
}

// Subtracts the across-channel mean at every sample.
inline MultichannelSignal average_reference(MultichannelSignal sig) {
  const std::size_t n_ch = sig.data.rows();
  if (n_ch == 0) return sig;
  for (std::size_t s = 0; s < sig.data.cols(); ++s) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n_ch; ++c) mean += sig.data(c, s);
    mean /= static_cast<double>(n_ch);
    for (std::size_t c = 0; c < n_ch; ++c) sig.data(c, s) -= mean;
  }
  return sig;
}

// ---------------------------------------------------------------------------
// Butterworth bandpass

// One second-order section, a0 normalized to 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

using SosFilter = std::vector<Biquad>;

// Digital Butterworth bandpass of the given prototype order (the cascade has
// `order` sections, 2*order poles). Analog prototype, lowpass-to-bandpass
// transform with prewarped edges, bilinear transform, unity gain at the
// center frequency.
inline SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs) {
  if (order < 1) fail(ErrorKind::kParameter, "filter order must be >= 1");
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0)) {
    fail(ErrorKind::kParameter, "bandpass edges must satisfy 0 < low < high < fs/2 (low=" +
                                    std::to_string(low_hz) + ", high=" + std::to_string(high_hz) +
                                    ", fs=" + std::to_string(fs) + ")");
  }
  using cd = std::complex<double>;
  const double pi = std::numbers::pi;
  const double two_fs = 2.0 * fs;
  const double w_low = two_fs * std::tan(pi * low_hz / fs);
  const double w_high = two_fs * std::tan(pi * high_hz / fs);
  const double bw = w_high - w_low;
  const double w0_sq = w_low * w_high;

  std::vector<cd> complex_poles;
  std::vector<double> real_poles;
  for (int k = 0; k < order; ++k) {
    const double theta = pi * (2.0 * k + order + 1) / (2.0 * order);
    const cd half = std::polar(1.0, theta) * (bw / 2.0);
    const cd root = std::sqrt(half * half - w0_sq);
    for (const cd s_pole : {half + root, half - root}) {
      const cd p = (two_fs + s_pole) / (two_fs - s_pole);
      if (std::abs(p.imag()) <= 1e-12 * std::abs(p)) {
        real_poles.push_back(p.real());
      } else if (p.imag() > 0.0) {
        complex_poles.push_back(p);
      }
    }
  }
  // Every section gets one zero at z=1 and one at z=-1.
  SosFilter sos;
  for (const cd& p : complex_poles) sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double p1 = real_poles[i], p2 = real_poles[i + 1];
    sos.push_back({1.0, 0.0, -1.0, -(p1 + p2), p1 * p2});
  }
  if (sos.size() != static_cast<std::size_t>(order)) {
    fail(ErrorKind::kInternal, "bandpass design produced an unexpected pole layout");
  }

  // Normalize to unity gain at the digital image of the geometric center.
  const double w_center = 2.0 * std::atan(std::sqrt(w0_sq) / two_fs);
  const cd z1 = std::polar(1.0, -w_center);
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const auto& q : sos) h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  const double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(order));
  for (auto& q : sos) {
    q.b0 *= g;
    q.b1 *= g;
    q.b2 *= g;
  }
  return sos;
}

// Magnitude response at frequency f (Hz).
inline double sos_gain(const SosFilter& sos, double f_hz, double fs) {
  using cd = std::complex<double>;
  const cd z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  const cd z2 = z1 * z1;
  cd h = 1.0;
  for (const auto& q : sos) h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
  return std::abs(h);
}

namespace detail {

// Transposed direct form II state that reproduces a constant unit input in
// steady state, per section.
inline std::vector<std::array<double, 2>> sos_step_state(const SosFilter& sos) {
  std::vector<std::array<double, 2>> zi(sos.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const auto& q = sos[i];
    const double gain = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
    const double z2 = q.b2 - q.a2 * gain;
    const double z1 = q.b1 - q.a1 * gain + z2;
    zi[i] = {z1 * scale, z2 * scale};
    scale *= gain;
  }
  return zi;
}

inline void sos_run(const SosFilter& sos, std::vector<std::array<double, 2>> state,
                    std::vector<double>& x) {
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const auto& q = sos[i];
    double z1 = state[i][0], z2 = state[i][1];
    for (double& v : x) {
      const double y = q.b0 * v + z1;
      z1 = q.b1 * v - q.a1 * y + z2;
      z2 = q.b2 * v - q.a2 * y;
      v = y;
    }
  }
}

}  // namespace detail

// Forward-backward filtering. The input is extended at both ends by odd
// reflection of `pad` samples and each pass starts from the steady state for
// the first extended sample.
inline std::vector<double> sos_filtfilt(const SosFilter& sos, std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad = std::min(pad, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const auto zi = detail::sos_step_state(sos);
  auto scaled = [&](double v) {
    auto z = zi;
    for (auto& s : z) {
      s[0] *= v;
      s[1] *= v;
    }
    return z;
  };
  detail::sos_run(sos, scaled(ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  detail::sos_run(sos, scaled(ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<long>(pad), ext.begin() + static_cast<long>(pad + n)};
}

inline constexpr int kBandpassOrder = 4;

// Zero-phase 4th-order Butterworth bandpass applied to every channel.
// Edge padding covers three periods of the low cutoff.
inline MultichannelSignal bandpass(MultichannelSignal sig, double low_hz = 1.0, double high_hz = 40.0) {
  validate(sig);
  const SosFilter sos = butterworth_bandpass(kBandpassOrder, low_hz, high_hz, sig.fs);
  const auto pad = static_cast<std::size_t>(std::ceil(3.0 * sig.fs / low_hz));
  for (std::size_t c = 0; c < sig.data.rows(); ++c) {
    auto row = sig.data.row(c);
    const auto y = sos_filtfilt(sos, row, pad);
    std::copy(y.begin(), y.end(), row.begin());
  }
  return sig;
}

// ---------------------------------------------------------------------------
// Resampling

inline constexpr double kKaiserBeta = 8.6;
inline constexpr std::size_t kTapsPerPhase = 64;
inline constexpr std::int64_t kMaxRatioDenominator = 10000;

inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Polyphase decomposition of a Kaiser-windowed sinc lowpass for rate change
// up/down. The prototype spans kTapsPerPhase samples of the slower of the two
// rates; its cutoff is placed so the stopband begins at that rate's Nyquist
// frequency. Each phase is normalized to unit DC gain.
class PolyphaseResampler {
 public:
  PolyphaseResampler(std::int64_t up, std::int64_t down) : up_(up), down_(down) {
    const std::int64_t r = std::max(up, down);
    half_ = static_cast<std::int64_t>(kTapsPerPhase / 2) * r;
    // Kaiser transition width (fraction of the upsampled rate) for the
    // attenuation implied by beta.
    const double atten_db = kKaiserBeta / 0.1102 + 8.7;
    const double n_taps = static_cast<double>(2 * half_);
    const double transition = (atten_db - 7.95) / (2.285 * 2.0 * std::numbers::pi * n_taps);
    cutoff_ = 0.5 / static_cast<double>(r) - transition / 2.0;  // cycles per upsampled sample

    phases_.resize(static_cast<std::size_t>(up));
    const double i0_beta = bessel_i0(kKaiserBeta);
    for (std::int64_t phase = 0; phase < up; ++phase) {
      auto& taps = phases_[static_cast<std::size_t>(phase)];
      // Tap for input i0 - m sits at prototype offset t = phase + m*up.
      const std::int64_t m_lo = ceil_div(-half_ - phase, up);
      const std::int64_t m_hi = floor_div(half_ - phase, up);
      taps.first_m = m_lo;
      double sum = 0.0;
      for (std::int64_t m = m_lo; m <= m_hi; ++m) {
        const double t = static_cast<double>(phase + m * up);
        const double u = t / static_cast<double>(half_);
        const double window = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
        const double arg = 2.0 * cutoff_ * t;
        const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
        const double w = sinc * window;
        taps.weights.push_back(w);
        sum += w;
      }
      for (double& w : taps.weights) w /= sum;
    }
  }

  std::int64_t up() const { return up_; }
  std::int64_t down() const { return down_; }
  // Passband edge as a fraction of the slower rate.
  double cutoff_fraction() const { return cutoff_ * static_cast<double>(std::max(up_, down_)); }

  std::size_t output_length(std::size_t n) const {
    const auto num = static_cast<std::int64_t>(n) * up_;
    return static_cast<std::size_t>((2 * num + down_) / (2 * down_));
  }

  // Output sample j sits at input time j*down/up. Out-of-range inputs come
  // from odd reflection about the end samples, which keeps constants exact.
  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n_out = output_length(x.size());
    std::vector<double> y(n_out, 0.0);
    if (x.empty()) return y;
    const auto n = static_cast<std::int64_t>(x.size());
    auto sample = [&](std::int64_t i) {
      if (n == 1) return x[0];
      if (i < 0) {
        const std::int64_t j = std::min(-i, n - 1);
        return 2.0 * x[0] - x[static_cast<std::size_t>(j)];
      }
      if (i >= n) {
        const std::int64_t j = std::max(2 * (n - 1) - i, std::int64_t{0});
        return 2.0 * x[static_cast<std::size_t>(n - 1)] - x[static_cast<std::size_t>(j)];
      }
      return x[static_cast<std::size_t>(i)];
    };
    for (std::size_t j = 0; j < n_out; ++j) {
      const std::int64_t u = static_cast<std::int64_t>(j) * down_;
      const std::int64_t phase = u % up_;
      const std::int64_t i0 = u / up_;
      const auto& taps = phases_[static_cast<std::size_t>(phase)];
      double acc = 0.0;
      std::int64_t m = taps.first_m;
      for (double w : taps.weights) {
        acc += w * sample(i0 - m);
        ++m;
      }
      y[j] = acc;
    }
    return y;
  }

 private:
  struct Phase {
    std::int64_t first_m = 0;
    std::vector<double> weights;
  };

  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }
  static std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

  std::int64_t up_;
  std::int64_t down_;
  std::int64_t half_ = 0;
  double cutoff_ = 0.0;
  std::vector<Phase> phases_;
};

inline Ratio resample_ratio(double fs, double target_fs) {
  if (!(target_fs > 0.0) || !std::isfinite(target_fs)) {
    fail(ErrorKind::kParameter, "target sampling rate must be positive");
  }
  const Ratio r = rational_approx(target_fs / fs, kMaxRatioDenominator);
  if (r.den == 0 || r.num > kMaxRatioDenominator * 64) {
    fail(ErrorKind::kParameter, "rate ratio " + std::to_string(target_fs) + "/" + std::to_string(fs) +
                                    " has no rational form with denominator <= " +
                                    std::to_string(kMaxRatioDenominator));
  }
  return r;
}

inline MultichannelSignal resample(MultichannelSignal sig, double target_fs = 100.0) {
  validate(sig);
  if (target_fs == sig.fs) return sig;
  const Ratio r = resample_ratio(sig.fs, target_fs);
  const PolyphaseResampler rs(r.num, r.den);
  MatrixD out(sig.data.rows(), rs.output_length(sig.data.cols()));
  for (std::size_t c = 0; c < sig.data.rows(); ++c) {
    const auto y = rs.apply(sig.data.row(c));
    std::copy(y.begin(), y.end(), out.row(c).begin());
  }
  sig.data = std::move(out);
  sig.fs = target_fs;
  return sig;
}

}  // namespace msteeg
