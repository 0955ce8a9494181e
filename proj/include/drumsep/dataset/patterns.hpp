// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Procedural drum patterns used when no MIDI corpus is at hand. Notes use the
// TD-11 pitch layout (rims, edges, pedal), so scores go through map_notes
// like recorded performances do.

#include <random>
#include <string>

#include "drumsep/dataset/midi.hpp"

namespace drumsep::dataset {

struct PatternStyle {
  double bpm = 100;
  bool toms = true;
  bool hihat = true;
  bool ride = false;   // ride instead of hi-hat as timekeeper
  bool crash = true;
  bool snare = true;
  int sixteenth_kicks = 0;  // extra syncopated kicks per bar
};

/// Style of pattern `id`; several leave some stems silent.
inline PatternStyle pattern_style(int id) {
  if (id < 0) throw ConfigError("pattern id must be non-negative");
  PatternStyle s;
  s.bpm = 84 + 9 * (id % 10);
  s.toms = id % 3 != 0;
  s.crash = id % 4 != 1;
  s.ride = id % 5 == 2;
  s.hihat = !(id % 7 == 6) && !s.ride;
  s.snare = id % 10 != 8;
  s.sixteenth_kicks = id % 3;
  return s;
}

/// `seconds` of pattern `id`. Deterministic given (id, seconds, variation).
inline MidiScore make_pattern(int id, double seconds, std::uint64_t variation = 0) {
  if (!(seconds > 0)) throw ConfigError("pattern duration must be positive");
  const PatternStyle st = pattern_style(id);
  std::mt19937_64 rng(0x70617474ULL ^ (static_cast<std::uint64_t>(id) * 1000003 + variation));
  std::uniform_int_distribution<int> vel(70, 120), ghost(25, 50), coin(0, 99);
  const double step = 60.0 / st.bpm / 4;  // sixteenth note
  MidiScore score;
  score.duration = seconds;
  score.ticks_per_quarter = 480;
  score.tempo_map.push_back({0, 0.0, static_cast<std::uint32_t>(std::lround(60e6 / st.bpm))});
  auto add = [&](double t, int pitch, int v) {
    if (t < seconds) score.events.push_back({t, pitch, std::clamp(v, 1, 127)});
  };
  const int steps = static_cast<int>(std::ceil(seconds / step));
  for (int k = 0; k < steps; ++k) {
    const double t = k * step;
    const int pos = k % 16;
    const int bar = k / 16;
    if (pos == 0 || pos == 8) add(t, 36, vel(rng));
    else if (st.sixteenth_kicks > 0 && (pos == 10 || (st.sixteenth_kicks > 1 && pos == 3)) &&
             coin(rng) < 70)
      add(t, 36, vel(rng) - 15);
    if (st.snare) {
      if (pos == 4 || pos == 12) add(t, coin(rng) < 85 ? 38 : 40, vel(rng));
      else if (pos % 2 == 1 && coin(rng) < 12) add(t, 38, ghost(rng));
      else if (pos == 14 && coin(rng) < 10) add(t, 37, ghost(rng) + 20);
    }
    if (st.hihat && pos % 2 == 0) {
      const bool open = pos == 14 && coin(rng) < 40;
      const int pitch = open ? (coin(rng) < 70 ? 46 : 26) : (coin(rng) < 80 ? 42 : 22);
      add(t, pitch, vel(rng) - (pos % 4 ? 25 : 0));
    }
    if (st.hihat && pos == 6 && coin(rng) < 20) add(t, 44, ghost(rng));
    if (st.ride && pos % 2 == 0) {
      const int r = coin(rng);
      add(t, pos % 8 == 0 && r < 30 ? 53 : (r < 85 ? 51 : 59), vel(rng) - 10);
    }
    if (st.crash && pos == 0 && bar % 2 == 0) add(t, bar % 4 == 0 ? 49 : 57, vel(rng));
    if (st.crash && pos == 0 && bar % 4 == 2 && coin(rng) < 50) add(t, 55, vel(rng) - 10);
    if (st.toms && bar % 2 == 0 && pos >= 12) {
      static constexpr int fill[] = {48, 45, 43, 58};
      const int idx = pos - 12;
      add(t, fill[idx] == 58 && coin(rng) < 50 ? 43 : fill[idx], vel(rng));
      if (idx == 1 && coin(rng) < 50) add(t + step / 2, 47, vel(rng) - 20);
    }
  }
  score.sort();
  return score;
}

}  // namespace drumsep::dataset
