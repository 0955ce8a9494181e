// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Stem-level augmentations: kit swap, doubling, saturation, channel swap and
// remix. Pitch shifting lives in pitch_shift.hpp.

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/augment/rng.hpp"

namespace drumsep::augment {

using StemClips = std::array<AudioClip, kNumStems>;

struct KitAssignment {
  std::array<int, kNumStems> kits{};
  bool identity = false;  // fewer than two kits were available
};

/// Independent uniform kit per stem.
inline KitAssignment kit_swap(std::span<const int> kits, RngStream& rng) {
  if (kits.empty()) throw ConfigError("kit swap: no kits available");
  KitAssignment a;
  if (kits.size() < 2) {
    a.kits.fill(kits[0]);
    a.identity = true;
    return a;
  }
  for (auto& k : a.kits) k = kits[rng.uniform_int(0, static_cast<int>(kits.size()) - 1)];
  return a;
}

/// Uniform kit among `kits` other than `current`; -1 if there is none.
inline int other_kit(std::span<const int> kits, int current, RngStream& rng) {
  std::vector<int> others;
  for (int k : kits)
    if (k != current) others.push_back(k);
  if (others.empty()) return -1;
  return others[rng.uniform_int(0, static_cast<int>(others.size()) - 1)];
}

/// Average of the same stem from two kits.
inline AudioClip doubling(const AudioClip& a, const AudioClip& b) {
  require_same_layout(a, b, "doubling");
  AudioClip out = a;
  out.samples = (a.samples + b.samples) * 0.5;
  return out;
}

inline constexpr double kBetaMin = 1.0, kBetaMax = 5.0;

/// tanh(beta x), kept strictly inside (-1, 1).
inline AudioClip saturate(const AudioClip& clip, double beta) {
  if (!(beta >= kBetaMin && beta <= kBetaMax))
    throw ConfigError("saturation beta must be in [1, 5], got " + std::to_string(beta));
  constexpr double lim = 1.0 - 0x1.0p-53;
  AudioClip out = clip;
  out.samples = (clip.samples * beta).tanh().max(-lim).min(lim);
  return out;
}

inline AudioClip channel_swap(const AudioClip& clip) {
  if (clip.channels() != 2)
    throw ShapeError("channel swap needs a stereo clip, got " + std::to_string(clip.channels()) +
                     " channel(s)");
  AudioClip out = clip;
  out.samples.row(0) = clip.samples.row(1);
  out.samples.row(1) = clip.samples.row(0);
  return out;
}

inline constexpr double kGammaMin = 0.1, kGammaMax = 1.0;

inline StemClips remix(const StemClips& stems, const std::array<double, kNumStems>& gammas) {
  StemClips out;
  for (int i = 0; i < kNumStems; ++i) {
    if (!(gammas[i] >= kGammaMin && gammas[i] <= kGammaMax))
      throw ConfigError("remix gain must be in [0.1, 1], got " + std::to_string(gammas[i]));
    out[i] = stems[i];
    out[i].samples *= gammas[i];
  }
  return out;
}

inline AudioClip mix(const StemClips& stems) {
  AudioClip out = stems[0];
  for (int i = 1; i < kNumStems; ++i) {
    require_same_layout(out, stems[i], "mix");
    out.samples += stems[i].samples;
  }
  return out;
}

}  // namespace drumsep::augment
