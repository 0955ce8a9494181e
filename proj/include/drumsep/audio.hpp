// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "drumsep/common.hpp"

namespace drumsep {

inline constexpr int kSampleRate = 44100;

// Channel-major sample storage: row c holds channel c.
using SampleMatrix =
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Time-domain signal. Samples are not clamped; only WAV writing quantizes.
struct AudioClip {
  SampleMatrix samples;
  int sample_rate = kSampleRate;

  AudioClip() = default;
  AudioClip(index_t channels, index_t length, int rate = kSampleRate)
      : samples(SampleMatrix::Zero(channels, length)), sample_rate(rate) {
    if (channels < 1 || channels > 2)
      throw ConfigError("channel count must be 1 or 2, got " +
                        std::to_string(channels));
  }
  AudioClip(SampleMatrix s, int rate = kSampleRate)
      : samples(std::move(s)), sample_rate(rate) {
    if (samples.rows() < 1 || samples.rows() > 2)
      throw ConfigError("channel count must be 1 or 2, got " +
                        std::to_string(samples.rows()));
  }

  index_t channels() const { return samples.rows(); }
  index_t length() const { return samples.cols(); }
  bool empty() const { return samples.cols() == 0; }
  double duration_seconds() const {
    return static_cast<double>(length()) / sample_rate;
  }

  double energy() const { return samples.square().sum(); }
  double peak() const {
    return samples.size() == 0 ? 0.0 : samples.abs().maxCoeff();
  }
  bool is_silent() const {
    return samples.size() == 0 || (samples == 0.0).all();
  }

  static AudioClip silence(index_t channels, index_t length,
                           int rate = kSampleRate) {
    return AudioClip(channels, length, rate);
  }
};

inline void require_same_layout(const AudioClip& a, const AudioClip& b,
                                const char* what) {
  if (a.channels() != b.channels() || a.length() != b.length())
    throw AlignmentError(std::string(what) + ": clips differ in shape (" +
                         std::to_string(a.channels()) + "x" +
                         std::to_string(a.length()) + " vs " +
                         std::to_string(b.channels()) + "x" +
                         std::to_string(b.length()) + ")");
}

/// Window [start, start+length) with zero fill past the end of the clip.
inline AudioClip slice(const AudioClip& clip, index_t start, index_t length) {
  AudioClip out(clip.channels(), length, clip.sample_rate);
  const index_t avail = std::clamp<index_t>(clip.length() - start, 0, length);
  if (avail > 0)
    out.samples.leftCols(avail) = clip.samples.middleCols(start, avail);
  return out;
}

}  // namespace drumsep
