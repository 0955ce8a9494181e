// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Duration-preserving pitch shift: phase-vocoder time stretch by about
// r = 2^(s/12), then windowed-sinc resampling by exactly r. The resampler
// alone fixes the pitch ratio; the stretch only has to get the length close,
// and the result is trimmed or zero-padded to the input length.

#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "drumsep/audio.hpp"

namespace drumsep::augment {

struct PitchShiftConfig {
  index_t window = 2048;
  index_t synthesis_hop = 256;
  int sinc_half_width = 16;  // zero crossings each side at unit cutoff
};

namespace detail {

inline double wrap_phase(double x) {
  return x - 2 * std::numbers::pi * std::nearbyint(x / (2 * std::numbers::pi));
}

/// Stretch by synthesis_hop / analysis_hop.
inline std::vector<double> time_stretch(const std::vector<double>& x, index_t analysis_hop,
                                        const PitchShiftConfig& cfg) {
  const index_t n = cfg.window, hs = cfg.synthesis_hop, ha = analysis_hop;
  const index_t len = static_cast<index_t>(x.size());
  const index_t frames = (len + ha - 1) / ha + 1;  // frame m centered at m * ha
  const index_t out_len = (frames - 1) * hs;
  const index_t bins = n / 2 + 1;

  std::vector<double> w(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / n);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(n)), synth;
  std::vector<std::complex<double>> spec, prev(static_cast<std::size_t>(bins));
  std::vector<double> phase(static_cast<std::size_t>(bins));
  std::vector<double> y(static_cast<std::size_t>(out_len + n), 0.0), norm(y.size(), 0.0);

  for (index_t m = 0; m < frames; ++m) {
    const index_t start = m * ha - n / 2;
    for (index_t i = 0; i < n; ++i) {
      const index_t p = start + i;
      frame[i] = (p >= 0 && p < len ? x[p] : 0.0) * w[i];
    }
    fft.fwd(spec, frame);
    for (index_t k = 0; k < bins; ++k) {
      const double ph = std::arg(spec[k]);
      if (m == 0) {
        phase[k] = ph;
      } else {
        const double omega = 2 * std::numbers::pi * k / n;
        const double dev = wrap_phase(ph - std::arg(prev[k]) - ha * omega);
        phase[k] += hs * (omega + dev / ha);
      }
      prev[k] = spec[k];
      spec[k] = std::polar(std::abs(spec[k]), phase[k]);
    }
    fft.inv(synth, spec);
    const index_t out_start = m * hs;  // shifted by n/2 relative to the centered frame
    for (index_t i = 0; i < n; ++i) {
      y[out_start + i] += synth[i] * w[i];
      norm[out_start + i] += w[i] * w[i];
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_len));
  for (index_t i = 0; i < out_len; ++i) {
    const double d = norm[i + n / 2];
    out[i] = d > 1e-8 ? y[i + n / 2] / d : 0.0;
  }
  return out;
}

/// Reads x at positions t * ratio through a Blackman-windowed sinc,
/// low-passed at min(1, 1/ratio) of Nyquist. The kernel is tabulated finely
/// and interpolated linearly.
inline std::vector<double> resample(const std::vector<double>& x, double ratio, index_t out_len,
                                    int half_width) {
  constexpr int kSteps = 1024;  // table entries per input sample
  const double cutoff = std::min(1.0, 1.0 / ratio);
  const double reach = half_width / cutoff;
  const index_t table_len = static_cast<index_t>(std::ceil(reach * kSteps)) + 2;
  std::vector<double> kernel(static_cast<std::size_t>(table_len), 0.0);
  for (index_t i = 0; i < table_len; ++i) {
    const double d = double(i) / kSteps;
    if (d >= reach) break;
    const double arg = std::numbers::pi * cutoff * d;
    const double sinc = d == 0 ? 1.0 : std::sin(arg) / arg;
    const double blackman = 0.42 + 0.5 * std::cos(std::numbers::pi * d / reach) +
                            0.08 * std::cos(2 * std::numbers::pi * d / reach);
    kernel[i] = cutoff * sinc * blackman;
  }
  auto k = [&](double d) {
    const double a = std::abs(d) * kSteps;
    const index_t i = static_cast<index_t>(a);
    if (i + 1 >= table_len) return 0.0;
    const double f = a - double(i);
    return kernel[i] + f * (kernel[i + 1] - kernel[i]);
  };

  const index_t len = static_cast<index_t>(x.size());
  std::vector<double> y(static_cast<std::size_t>(out_len), 0.0);
  for (index_t t = 0; t < out_len; ++t) {
    const double pos = t * ratio;
    if (ratio == 1.0) {  // integer positions: the kernel is a unit impulse
      y[t] = t < len ? x[t] : 0.0;
      continue;
    }
    const index_t lo = std::max<index_t>(static_cast<index_t>(std::ceil(pos - reach)), 0);
    const index_t hi = std::min(static_cast<index_t>(std::floor(pos + reach)), len - 1);
    double acc = 0;
    for (index_t j = lo; j <= hi; ++j) acc += k(j - pos) * x[j];
    y[t] = acc;
  }
  return y;
}

}  // namespace detail

/// Shifts by `semitones`, keeping the clip length. |semitones| must not exceed
/// `max_semitones`.
inline AudioClip pitch_shift(const AudioClip& clip, int semitones, int max_semitones = 3,
                             const PitchShiftConfig& cfg = {}) {
  if (std::abs(semitones) > max_semitones)
    throw ConfigError("pitch shift of " + std::to_string(semitones) +
                      " semitones is outside +-" + std::to_string(max_semitones));
  if (clip.empty()) return clip;
  const double ratio = std::pow(2.0, semitones / 12.0);
  const index_t ha = std::max<index_t>(1, std::llround(cfg.synthesis_hop / ratio));
  AudioClip out(clip.channels(), clip.length(), clip.sample_rate);
  for (index_t c = 0; c < clip.channels(); ++c) {
    std::vector<double> x(clip.samples.row(c).begin(), clip.samples.row(c).end());
    const auto stretched = detail::time_stretch(x, ha, cfg);
    const auto y = detail::resample(stretched, ratio, clip.length(), cfg.sinc_half_width);
    for (index_t i = 0; i < clip.length(); ++i) out.samples(c, i) = y[i];
  }
  return out;
}

}  // namespace drumsep::augment
