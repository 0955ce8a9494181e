// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Stem rendering, 9 -> 5 grouping and training-segment extraction.

#include <array>
#include <cmath>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/dataset/midi.hpp"
#include "drumsep/dataset/notes.hpp"
#include "drumsep/dataset/sampler.hpp"

namespace drumsep::dataset {

using StemClips = std::array<AudioClip, kNumStems>;

struct StemSet {
  std::array<AudioClip, kNumInstruments> stems;
  AudioClip mixture;
  MidiScore score;
  int kit = 0;
  std::array<bool, kNumInstruments> nonzero{};  // at least one note for the instrument

  index_t length() const { return mixture.length(); }
};

struct GroupedStems {
  StemClips stems;
  AudioClip mixture;
  std::array<bool, kNumStems> nonzero{};
  int kit = 0;
};

inline AudioClip sum_clips(const AudioClip* first, std::size_t count) {
  AudioClip out = first[0];
  for (std::size_t i = 1; i < count; ++i) {
    require_same_layout(out, first[i], "sum");
    out.samples += first[i].samples;
  }
  return out;
}

/// Renders a canonical score. The clip lasts until the end of the score or
/// the last one-shot tail, whichever is later.
inline StemSet render_stems(const MidiScore& score, const DrumKitSampler& sampler) {
  score.validate();
  const int rate = sampler.sample_rate();
  auto start_of = [&](const NoteEvent& e) {
    return static_cast<index_t>(std::llround(e.onset * rate));
  };
  index_t length = static_cast<index_t>(std::llround(score.duration * rate));
  for (const auto& e : score.events) {
    const auto inst = instrument_from_pitch(e.pitch);
    if (!inst)
      throw ConfigError("render: pitch " + std::to_string(e.pitch) +
                        " is not a canonical instrument; map the score first");
    length = std::max(length, start_of(e) + sampler.one_shot_length(*inst));
  }

  StemSet set;
  set.score = score;
  set.kit = sampler.kit();
  for (auto& s : set.stems) s = AudioClip(2, length, rate);
  for (const auto& e : score.events) {
    const Instrument inst = *instrument_from_pitch(e.pitch);
    const AudioClip h = sampler.hit(inst, e.velocity);
    set.stems[instrument_index(inst)].samples.middleCols(start_of(e), h.length()) += h.samples;
    set.nonzero[instrument_index(inst)] = true;
  }
  set.mixture = sum_clips(set.stems.data(), set.stems.size());
  return set;
}

/// KD, SD, TT = high + low-mid + high floor tom, HH = closed + open,
/// CY = crash + ride. Flags are the OR of their members.
inline GroupedStems group_to_five(const StemSet& set) {
  GroupedStems g;
  g.kit = set.kit;
  g.mixture = set.mixture;
  for (Stem s : kAllStems) {
    AudioClip acc(2, set.length(), set.mixture.sample_rate);
    for (Instrument i : kAllInstruments) {
      if (stem_of(i) != s) continue;
      acc.samples += set.stems[instrument_index(i)].samples;
      g.nonzero[stem_index(s)] = g.nonzero[stem_index(s)] || set.nonzero[instrument_index(i)];
    }
    g.stems[stem_index(s)] = std::move(acc);
  }
  return g;
}

/// Five grouped stems of [start, start + length) without rendering the whole
/// score. Equal, bit for bit, to slicing the grouped full render.
inline StemClips render_window(const MidiScore& score, const DrumKitSampler& sampler,
                               index_t start, index_t length) {
  if (length <= 0) throw ConfigError("render window must have positive length");
  const int rate = sampler.sample_rate();
  StemClips out;
  for (auto& c : out) c = AudioClip(2, length, rate);
  for (const auto& e : score.events) {
    const auto inst = instrument_from_pitch(e.pitch);
    if (!inst)
      throw ConfigError("render: pitch " + std::to_string(e.pitch) +
                        " is not a canonical instrument; map the score first");
    const index_t on = static_cast<index_t>(std::llround(e.onset * rate));
    const index_t len = sampler.one_shot_length(*inst);
    const index_t lo = std::max(on, start), hi = std::min(on + len, start + length);
    if (lo >= hi) continue;
    const AudioClip h = sampler.hit(*inst, e.velocity);
    out[stem_index(stem_of(*inst))].samples.middleCols(lo - start, hi - lo) +=
        h.samples.middleCols(lo - on, hi - lo);
  }
  return out;
}

struct Segment {
  index_t start = 0;
  bool padded = false;  // clip was shorter than the segment
  AudioClip mixture;
  StemClips stems;
};

/// Number of windows: floor((len - seg) / stride) + 1, or 1 for short clips.
inline index_t segment_count(index_t clip_length, index_t segment, index_t stride) {
  if (stride <= 0) throw ConfigError("segment stride must be positive");
  if (segment <= 0) throw ConfigError("segment length must be positive");
  if (clip_length <= segment) return 1;
  return (clip_length - segment) / stride + 1;
}

inline Segment segment_at(const GroupedStems& g, index_t segment, index_t stride, index_t k) {
  const index_t n = segment_count(g.mixture.length(), segment, stride);
  if (k < 0 || k >= n) throw ConfigError("segment index out of range");
  Segment s;
  s.start = k * stride;
  s.padded = g.mixture.length() < segment;
  s.mixture = slice(g.mixture, s.start, segment);
  for (int i = 0; i < kNumStems; ++i) s.stems[i] = slice(g.stems[i], s.start, segment);
  return s;
}

inline std::vector<Segment> segment_pairs(const GroupedStems& g, index_t segment, index_t stride) {
  const index_t n = segment_count(g.mixture.length(), segment, stride);
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k) out.push_back(segment_at(g, segment, stride, k));
  return out;
}

/// Isolated hits of every instrument at `velocities`, labelled with the
/// five-stem class, for template extraction.
inline std::vector<std::pair<Instrument, AudioClip>> isolated_hits(const DrumKitSampler& sampler,
                                                                   int velocity) {
  std::vector<std::pair<Instrument, AudioClip>> out;
  for (Instrument i : kAllInstruments) out.emplace_back(i, sampler.hit(i, velocity));
  return out;
}

}  // namespace drumsep::dataset
