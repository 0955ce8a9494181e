// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// The nine canonical drum instruments and the 22-row pitch reduction from
// the Roland TD-11 note layout.

#include <array>
#include <optional>
#include <string_view>

#include "drumsep/common.hpp"
#include "drumsep/dataset/midi.hpp"

namespace drumsep::dataset {

enum class Instrument : int {
  Kick = 0,
  Snare,
  HighTom,
  LowMidTom,
  HighFloorTom,
  ClosedHiHat,
  OpenHiHat,
  Crash,
  Ride,
};

inline constexpr int kNumInstruments = 9;

inline constexpr std::array<Instrument, kNumInstruments> kAllInstruments = {
    Instrument::Kick,        Instrument::Snare,     Instrument::HighTom,
    Instrument::LowMidTom,   Instrument::HighFloorTom, Instrument::ClosedHiHat,
    Instrument::OpenHiHat,   Instrument::Crash,     Instrument::Ride};

inline constexpr int instrument_index(Instrument i) { return static_cast<int>(i); }

/// General MIDI note number of the canonical instrument.
inline constexpr int canonical_pitch(Instrument i) {
  constexpr int pitches[] = {36, 38, 50, 47, 43, 42, 46, 49, 51};
  return pitches[instrument_index(i)];
}

/// File stem used in the dataset layout.
inline constexpr std::string_view instrument_file_name(Instrument i) {
  constexpr std::string_view names[] = {"kick",         "snare",    "hightom",
                                        "lowmidtom",    "highfloortom", "closedhh",
                                        "openhh",       "crash",    "ride"};
  return names[instrument_index(i)];
}

inline std::optional<Instrument> instrument_from_pitch(int pitch) {
  for (Instrument i : kAllInstruments)
    if (canonical_pitch(i) == pitch) return i;
  return std::nullopt;
}

inline constexpr Stem stem_of(Instrument i) {
  switch (i) {
    case Instrument::Kick: return Stem::Kick;
    case Instrument::Snare: return Stem::Snare;
    case Instrument::HighTom:
    case Instrument::LowMidTom:
    case Instrument::HighFloorTom: return Stem::Toms;
    case Instrument::ClosedHiHat:
    case Instrument::OpenHiHat: return Stem::HiHat;
    case Instrument::Crash:
    case Instrument::Ride: return Stem::Cymbals;
  }
  return Stem::Kick;
}

struct NoteMapRow {
  int original;
  std::string_view roland;
  Instrument instrument;
};

inline constexpr std::array<NoteMapRow, 22> kNoteMap = {{
    {36, "Kick", Instrument::Kick},
    {38, "Snare (Head)", Instrument::Snare},
    {40, "Snare (Rim)", Instrument::Snare},
    {37, "Snare X-Stick", Instrument::Snare},
    {48, "Tom 1", Instrument::HighTom},
    {50, "Tom 1 (Rim)", Instrument::HighTom},
    {45, "Tom 2", Instrument::LowMidTom},
    {47, "Tom 2 (Rim)", Instrument::LowMidTom},
    {43, "Tom 3 (Head)", Instrument::HighFloorTom},
    {58, "Tom 3 (Rim)", Instrument::HighFloorTom},
    {46, "HH Open (Bow)", Instrument::OpenHiHat},
    {26, "HH Open (Edge)", Instrument::OpenHiHat},
    {42, "HH Closed (Bow)", Instrument::ClosedHiHat},
    {22, "HH Closed (Edge)", Instrument::ClosedHiHat},
    {44, "HH Pedal", Instrument::ClosedHiHat},
    {49, "Crash 1 (Bow)", Instrument::Crash},
    {55, "Crash 1 (Edge)", Instrument::Crash},
    {57, "Crash 2 (Bow)", Instrument::Crash},
    {52, "Crash 2 (Edge)", Instrument::Crash},
    {51, "Ride (Bow)", Instrument::Ride},
    {59, "Ride (Edge)", Instrument::Ride},
    {53, "Ride (Bell)", Instrument::Ride},
}};

inline std::optional<Instrument> map_pitch(int original) {
  for (const auto& row : kNoteMap)
    if (row.original == original) return row.instrument;
  return std::nullopt;
}

struct MapReport {
  std::size_t mapped = 0;
  std::size_t skipped = 0;
  std::array<std::size_t, 128> skipped_by_pitch{};
};

/// Re-pitches every event to its canonical pitch; pitches outside the table
/// are dropped and counted.
inline MidiScore map_notes(const MidiScore& score, MapReport* report = nullptr) {
  MidiScore out = score;
  out.events.clear();
  MapReport rep;
  for (const auto& e : score.events) {
    if (const auto inst = map_pitch(e.pitch)) {
      out.events.push_back({e.onset, canonical_pitch(*inst), e.velocity});
      ++rep.mapped;
    } else {
      ++rep.skipped;
      if (e.pitch >= 0 && e.pitch < 128) ++rep.skipped_by_pitch[static_cast<std::size_t>(e.pitch)];
    }
  }
  if (report) *report = rep;
  return out;
}

}  // namespace drumsep::dataset
