// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Standard MIDI File (format 0/1) reader that keeps note-on events only, with
// onset times resolved through the tempo map.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "drumsep/common.hpp"
#include "drumsep/io/bytes.hpp"
#include "drumsep/io/wav.hpp"

namespace drumsep::dataset {

struct NoteEvent {
  double onset = 0;  // seconds
  int pitch = 0;
  int velocity = 0;

  bool operator==(const NoteEvent&) const = default;
};

struct TempoChange {
  std::uint64_t tick = 0;
  double seconds = 0;
  std::uint32_t us_per_quarter = 500000;
};

struct MidiScore {
  std::vector<NoteEvent> events;  // sorted by onset, stable
  double duration = 0;            // seconds, end of the last track
  int ticks_per_quarter = 0;      // 0 for SMPTE timing
  std::vector<TempoChange> tempo_map;

  void sort() {
    std::stable_sort(events.begin(), events.end(),
                     [](const NoteEvent& a, const NoteEvent& b) { return a.onset < b.onset; });
  }
  void validate() const {
    double last = 0;
    for (const auto& e : events) {
      if (!(e.onset >= 0) || e.onset < last)
        throw DomainError("score: onsets must be non-negative and sorted");
      if (e.velocity < 1 || e.velocity > 127) throw DomainError("score: velocity outside 1..127");
      if (e.pitch < 0 || e.pitch > 127) throw DomainError("score: pitch outside 0..127");
      last = e.onset;
    }
  }
};

namespace detail {

struct RawEvent {
  std::uint64_t tick;
  int order;  // file order, for stable sorting across tracks
  int kind;   // 0 note-on, 1 tempo, 2 end of track
  int pitch = 0;
  int velocity = 0;
  std::uint32_t tempo = 0;
};

inline std::uint32_t read_varlen(io::ByteReader& r) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const std::uint8_t b = r.u8();
    v = (v << 7) | (b & 0x7F);
    if (!(b & 0x80)) return v;
  }
  throw ParseError("midi: variable-length quantity longer than 4 bytes", r.pos());
}

inline int data_bytes(std::uint8_t status) {
  switch (status & 0xF0) {
    case 0xC0:
    case 0xD0: return 1;
    default: return 2;
  }
}

inline void parse_track(io::ByteReader& r, std::size_t end, int& order,
                        std::vector<RawEvent>& out) {
  std::uint64_t tick = 0;
  std::uint8_t running = 0;
  while (r.pos() < end) {
    tick += read_varlen(r);
    const std::size_t at = r.pos();
    std::uint8_t status = r.u8();
    if (status == 0xFF) {
      const std::uint8_t type = r.u8();
      const std::uint32_t len = read_varlen(r);
      if (r.pos() + len > end) throw ParseError("midi: meta event runs past the track end", at);
      if (type == 0x51) {
        if (len != 3) throw ParseError("midi: tempo event must have 3 data bytes", at);
        const std::uint32_t t = (std::uint32_t(r.u8()) << 16) | (std::uint32_t(r.u8()) << 8) | r.u8();
        if (t == 0) throw ParseError("midi: zero tempo", at);
        out.push_back({tick, order++, 1, 0, 0, t});
      } else {
        r.seek(r.pos() + len);
        if (type == 0x2F) {
          out.push_back({tick, order++, 2});
          r.seek(end);
          return;
        }
      }
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      const std::uint32_t len = read_varlen(r);
      if (r.pos() + len > end) throw ParseError("midi: sysex runs past the track end", at);
      r.seek(r.pos() + len);
      running = 0;
      continue;
    }
    std::uint8_t first;
    if (status & 0x80) {
      if (status >= 0xF0) throw ParseError("midi: unexpected system message", at);
      running = status;
      first = r.u8();
    } else {
      if (!running) throw ParseError("midi: data byte without running status", at);
      first = status;
      status = running;
    }
    const std::uint8_t second = data_bytes(status) == 2 ? r.u8() : 0;
    if ((first | second) & 0x80) throw ParseError("midi: data byte has the high bit set", at);
    if ((status & 0xF0) == 0x90 && second > 0)
      out.push_back({tick, order++, 0, first, second});
  }
  // track without an end-of-track meta: its length still counts
  out.push_back({tick, order++, 2});
}

}  // namespace detail

inline MidiScore parse_midi(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes.data(), bytes.size());
  MidiScore score;
  std::vector<detail::RawEvent> raw;
  int order = 0;
  try {
    std::uint32_t id = r.u32be();
    if (id != 0x4D546864) throw ParseError("midi: missing MThd header", 0);  // "MThd"
    const std::uint32_t hlen = r.u32be();
    if (hlen < 6) throw ParseError("midi: header chunk shorter than 6 bytes", 4);
    const std::size_t hstart = r.pos();
    const std::uint16_t format = r.u16be();
    const std::uint16_t ntracks = r.u16be();
    const std::uint16_t division = r.u16be();
    r.seek(hstart + hlen);
    if (format > 1)
      throw ParseError("midi: SMF format " + std::to_string(format) + " is not supported", 8);
    if (format == 0 && ntracks != 1)
      throw ParseError("midi: format 0 file must have exactly one track", 10);
    if (division == 0) throw ParseError("midi: zero time division", 12);

    double smpte_tick_seconds = 0;
    if (division & 0x8000) {
      const int fps = -static_cast<std::int8_t>(division >> 8);
      const int per_frame = division & 0xFF;
      if (fps <= 0 || per_frame == 0) throw ParseError("midi: invalid SMPTE division", 12);
      smpte_tick_seconds = (fps == 29 ? 1.0 / 29.97 : 1.0 / fps) / per_frame;
    } else {
      score.ticks_per_quarter = division;
    }

    for (int t = 0; t < ntracks; ++t) {
      const std::size_t at = r.pos();
      const std::uint32_t cid = r.u32be();
      const std::uint32_t len = r.u32be();
      const std::size_t end = r.pos() + len;
      if (end > bytes.size()) throw ParseError("midi: track chunk runs past the end of file", at);
      if (cid != 0x4D54726B) {  // "MTrk"; other chunk types are skipped
        r.seek(end);
        --t;
        if (r.at_end()) throw ParseError("midi: fewer track chunks than the header declares", at);
        continue;
      }
      detail::parse_track(r, end, order, raw);
      r.seek(end);
    }

    std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
      return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
    });

    // tick -> seconds through the tempo map
    std::uint64_t last_tick = 0;
    double last_sec = 0;
    std::uint32_t tempo = 500000;
    score.tempo_map.push_back({0, 0.0, tempo});
    auto to_seconds = [&](std::uint64_t tick) {
      if (smpte_tick_seconds > 0) return double(tick) * smpte_tick_seconds;
      return last_sec + double(tick - last_tick) * tempo * 1e-6 / score.ticks_per_quarter;
    };
    for (const auto& e : raw) {
      const double sec = to_seconds(e.tick);
      if (e.kind == 1) {
        last_sec = sec;
        last_tick = e.tick;
        tempo = e.tempo;
        if (score.tempo_map.back().tick == e.tick) score.tempo_map.pop_back();
        score.tempo_map.push_back({e.tick, sec, tempo});
      } else if (e.kind == 0) {
        score.events.push_back({sec, e.pitch, e.velocity});
      }
      score.duration = std::max(score.duration, sec);
    }
  } catch (const io::ByteReader::Truncated& t) {
    throw ParseError("midi: unexpected end of file", t.offset);
  }
  score.sort();
  return score;
}

inline MidiScore read_midi(const std::filesystem::path& path) {
  const auto bytes = io::read_file_bytes(path);
  try {
    return parse_midi(bytes);
  } catch (const ParseError& e) {
    throw e.in_file(path.string());
  }
}

}  // namespace drumsep::dataset
