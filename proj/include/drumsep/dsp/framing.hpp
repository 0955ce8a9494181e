// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "drumsep/common.hpp"
#include "drumsep/dsp/stft.hpp"

namespace drumsep::dsp {

/// Nonnegative (channels x bands x frames) patch, row-major.
struct SpectroPatch {
  index_t channels = 0;
  index_t bands = 0;
  index_t frames = 0;
  std::vector<double> values;

  SpectroPatch() = default;
  SpectroPatch(index_t c, index_t f, index_t t)
      : channels(c), bands(f), frames(t),
        values(static_cast<std::size_t>(c * f * t), 0.0) {}

  double& operator()(index_t c, index_t f, index_t t) {
    return values[static_cast<std::size_t>((c * bands + f) * frames + t)];
  }
  double operator()(index_t c, index_t f, index_t t) const {
    return values[static_cast<std::size_t>((c * bands + f) * frames + t)];
  }
};

struct FramingRecord {
  index_t channels = 0;
  index_t num_bins = 0;
  index_t num_frames = 0;
  index_t bands = 0;   // F
  index_t frames = 0;  // T

  index_t num_patches() const { return (num_frames + frames - 1) / frames; }
};

struct ChunkedSpectrogram {
  std::vector<SpectroPatch> patches;
  FramingRecord framing;
};

/// Keeps the lowest `bands` bins and cuts time into `frames`-long patches,
/// zero-padding the last one.
inline ChunkedSpectrogram crop_and_chunk(const std::vector<RealMatrix>& mag,
                                         index_t bands, index_t frames) {
  if (mag.empty()) throw EmptyInputError("crop_and_chunk: no channels");
  const index_t num_bins = mag[0].rows();
  const index_t num_frames = mag[0].cols();
  if (bands < 1 || bands > num_bins)
    throw ConfigError("crop_and_chunk: F=" + std::to_string(bands) +
                      " exceeds the " + std::to_string(num_bins) +
                      " available bins");
  if (frames < 1) throw ConfigError("crop_and_chunk: T must be >= 1");
  if (num_frames < 1) throw EmptyInputError("crop_and_chunk: no frames");

  ChunkedSpectrogram out;
  out.framing = {static_cast<index_t>(mag.size()), num_bins, num_frames, bands,
                 frames};
  const index_t count = out.framing.num_patches();
  for (index_t p = 0; p < count; ++p) {
    SpectroPatch patch(out.framing.channels, bands, frames);
    const index_t t0 = p * frames;
    const index_t valid = std::min(frames, num_frames - t0);
    for (index_t c = 0; c < out.framing.channels; ++c) {
      if (mag[c].rows() != num_bins || mag[c].cols() != num_frames)
        throw ShapeError("crop_and_chunk: channels differ in shape");
      for (index_t f = 0; f < bands; ++f)
        for (index_t t = 0; t < valid; ++t) patch(c, f, t) = mag[c](f, t0 + t);
    }
    out.patches.push_back(std::move(patch));
  }
  return out;
}

inline ChunkedSpectrogram crop_and_chunk(const Spectrogram& spec, index_t bands,
                                         index_t frames) {
  return crop_and_chunk(magnitude(spec), bands, frames);
}

/// Inverse of crop_and_chunk: drops temporal padding, zero-fills bands >= F.
inline std::vector<RealMatrix> unchunk_and_pad(
    const std::vector<SpectroPatch>& patches, const FramingRecord& framing) {
  if (static_cast<index_t>(patches.size()) != framing.num_patches())
    throw InconsistencyError(
        "unchunk_and_pad: got " + std::to_string(patches.size()) +
        " patches, framing record expects " +
        std::to_string(framing.num_patches()));
  std::vector<RealMatrix> out(
      static_cast<std::size_t>(framing.channels),
      RealMatrix::Zero(framing.num_bins, framing.num_frames));
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const auto& patch = patches[p];
    if (patch.channels != framing.channels || patch.bands != framing.bands ||
        patch.frames != framing.frames)
      throw InconsistencyError("unchunk_and_pad: patch " + std::to_string(p) +
                               " has the wrong shape");
    const index_t t0 = static_cast<index_t>(p) * framing.frames;
    const index_t valid = std::min(framing.frames, framing.num_frames - t0);
    for (index_t c = 0; c < framing.channels; ++c)
      for (index_t f = 0; f < framing.bands; ++f)
        for (index_t t = 0; t < valid; ++t) out[c](f, t0 + t) = patch(c, f, t);
  }
  return out;
}

}  // namespace drumsep::dsp
