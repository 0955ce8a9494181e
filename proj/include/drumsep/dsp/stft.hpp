// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <numbers>
#include <unsupported/Eigen/FFT>
#include <utility>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/common.hpp"

namespace drumsep::dsp {

using ComplexMatrix = Eigen::MatrixXcd;  // bins x frames
using RealMatrix = Eigen::MatrixXd;      // bins x frames

enum class WindowKind { PeriodicHann };

struct StftConfig {
  index_t window_length = 4096;
  index_t hop = 1024;
  WindowKind window = WindowKind::PeriodicHann;
  bool centered = true;

  static StftConfig paper() { return {}; }
  static StftConfig desk() { return {1024, 256}; }

  index_t num_bins() const { return window_length / 2 + 1; }

  void validate() const {
    if (window_length < 2 || (window_length & (window_length - 1)) != 0)
      throw ConfigError("STFT window length must be a power of two, got " +
                        std::to_string(window_length));
    if (hop < 1 || hop > window_length)
      throw ConfigError("STFT hop must be in [1, window_length], got " +
                        std::to_string(hop));
    // periodic Hann overlap-adds to a constant for hop = N/k, k >= 2
    if (window_length % hop != 0 || window_length / hop < 2)
      throw ConfigError("STFT hop " + std::to_string(hop) +
                        " does not satisfy COLA for a periodic Hann window of " +
                        std::to_string(window_length));
  }

  /// Frames produced for a signal of `length` samples.
  index_t frames_for_length(index_t length) const {
    if (centered) return 1 + length / hop;
    if (length <= window_length) return 1;
    return 1 + (length - window_length + hop - 1) / hop;
  }

  /// Signal length whose analysis yields exactly `frames` frames.
  index_t length_for_frames(index_t frames) const {
    if (centered) return (frames - 1) * hop;
    return window_length + (frames - 1) * hop;
  }

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

inline std::vector<double> periodic_hann(index_t n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

struct Spectrogram {
  std::vector<ComplexMatrix> bins;  // one (num_bins x num_frames) per channel
  StftConfig config;
  index_t signal_length = 0;

  index_t channels() const { return static_cast<index_t>(bins.size()); }
  index_t num_bins() const { return bins.empty() ? 0 : bins[0].rows(); }
  index_t num_frames() const { return bins.empty() ? 0 : bins[0].cols(); }
};

namespace detail {

inline index_t reflect_index(index_t i, index_t n) {
  if (n == 1) return 0;
  const index_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace detail

inline Spectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  if (clip.empty()) throw EmptyInputError("stft: empty input clip");

  const index_t n = cfg.window_length;
  const index_t len = clip.length();
  const index_t frames = cfg.frames_for_length(len);
  const index_t offset = cfg.centered ? n / 2 : 0;
  const auto window = periodic_hann(n);

  Spectrogram spec;
  spec.config = cfg;
  spec.signal_length = len;
  spec.bins.assign(static_cast<std::size_t>(clip.channels()),
                   ComplexMatrix(cfg.num_bins(), frames));

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> out;

  for (index_t c = 0; c < clip.channels(); ++c) {
    const auto row = clip.samples.row(c);
    for (index_t m = 0; m < frames; ++m) {
      const index_t start = m * cfg.hop - offset;
      for (index_t i = 0; i < n; ++i) {
        const index_t p = start + i;
        double v = 0.0;
        if (cfg.centered)
          v = row(detail::reflect_index(p, len));
        else if (p < len)
          v = row(p);
        frame[i] = v * window[i];
      }
      fft.fwd(out, frame);
      for (index_t k = 0; k < cfg.num_bins(); ++k) spec.bins[c](k, m) = out[k];
    }
  }
  return spec;
}

/// Weighted overlap-add inverse, normalized by the summed squared window.
inline AudioClip istft(const Spectrogram& spec) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.channels() == 0 || spec.num_frames() == 0)
    throw EmptyInputError("istft: spectrogram has no frames");
  if (spec.num_bins() != cfg.num_bins())
    throw ShapeError("istft: spectrogram has " +
                     std::to_string(spec.num_bins()) + " bins, config expects " +
                     std::to_string(cfg.num_bins()));

  const index_t n = cfg.window_length;
  const index_t frames = spec.num_frames();
  const index_t offset = cfg.centered ? n / 2 : 0;
  const index_t span = (frames - 1) * cfg.hop + n;
  const index_t out_len = spec.signal_length > 0
                              ? spec.signal_length
                              : cfg.length_for_frames(frames);
  const auto window = periodic_hann(n);
  constexpr double kFloor = 1e-12;

  std::vector<double> wsum(static_cast<std::size_t>(span), 0.0);
  for (index_t m = 0; m < frames; ++m)
    for (index_t i = 0; i < n; ++i)
      wsum[m * cfg.hop + i] += window[i] * window[i];

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> half(static_cast<std::size_t>(cfg.num_bins()));
  std::vector<double> frame;

  AudioClip out(spec.channels(), out_len);
  std::vector<double> acc(static_cast<std::size_t>(span));
  for (index_t c = 0; c < spec.channels(); ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (index_t m = 0; m < frames; ++m) {
      for (index_t k = 0; k < cfg.num_bins(); ++k) half[k] = spec.bins[c](k, m);
      fft.inv(frame, half, n);
      for (index_t i = 0; i < n; ++i) acc[m * cfg.hop + i] += frame[i] * window[i];
    }
    for (index_t t = 0; t < out_len; ++t) {
      const index_t p = t + offset;
      out.samples(c, t) = p < span ? acc[p] / std::max(wsum[p], kFloor) : 0.0;
    }
  }
  return out;
}

struct MagPhase {
  std::vector<RealMatrix> magnitude;
  std::vector<RealMatrix> phase;
};

/// Polar split; a zero bin gets phase 0.
inline MagPhase split_mag_phase(const Spectrogram& spec) {
  MagPhase mp;
  for (const auto& b : spec.bins) {
    RealMatrix mag(b.rows(), b.cols()), ph(b.rows(), b.cols());
    for (index_t j = 0; j < b.cols(); ++j)
      for (index_t i = 0; i < b.rows(); ++i) {
        const auto z = b(i, j);
        mag(i, j) = std::abs(z);
        ph(i, j) = (z.real() == 0.0 && z.imag() == 0.0) ? 0.0 : std::arg(z);
      }
    mp.magnitude.push_back(std::move(mag));
    mp.phase.push_back(std::move(ph));
  }
  return mp;
}

inline std::vector<RealMatrix> magnitude(const Spectrogram& spec) {
  std::vector<RealMatrix> out;
  out.reserve(spec.bins.size());
  for (const auto& b : spec.bins) out.push_back(b.cwiseAbs());
  return out;
}

/// Magnitudes recombined with the given phases into a spectrogram that
/// shares `like`'s framing.
inline Spectrogram combine_mag_phase(const std::vector<RealMatrix>& mag,
                                     const std::vector<RealMatrix>& phase,
                                     const Spectrogram& like) {
  if (mag.size() != phase.size())
    throw ShapeError("combine_mag_phase: channel count mismatch");
  Spectrogram out;
  out.config = like.config;
  out.signal_length = like.signal_length;
  for (std::size_t c = 0; c < mag.size(); ++c) {
    if (mag[c].rows() != phase[c].rows() || mag[c].cols() != phase[c].cols())
      throw ShapeError("combine_mag_phase: magnitude/phase shape mismatch");
    ComplexMatrix z(mag[c].rows(), mag[c].cols());
    for (index_t j = 0; j < z.cols(); ++j)
      for (index_t i = 0; i < z.rows(); ++i)
        z(i, j) = std::polar(mag[c](i, j), phase[c](i, j));
    out.bins.push_back(std::move(z));
  }
  return out;
}

/// Applies a real gain per bin to the complex mixture spectrogram. This keeps
/// the mixture phase exactly, including at bins where the magnitude is zero.
inline Spectrogram apply_gain(const Spectrogram& mixture,
                              const std::vector<RealMatrix>& gain) {
  if (gain.size() != mixture.bins.size())
    throw ShapeError("apply_gain: channel count mismatch");
  Spectrogram out;
  out.config = mixture.config;
  out.signal_length = mixture.signal_length;
  for (std::size_t c = 0; c < gain.size(); ++c) {
    if (gain[c].rows() != mixture.bins[c].rows() ||
        gain[c].cols() != mixture.bins[c].cols())
      throw ShapeError("apply_gain: gain shape mismatch");
    out.bins.push_back(mixture.bins[c].cwiseProduct(gain[c].cast<std::complex<double>>()));
  }
  return out;
}

}  // namespace drumsep::dsp
