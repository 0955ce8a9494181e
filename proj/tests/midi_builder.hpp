// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Hand assembly of Standard MIDI Files for parser tests.

#include <cstdint>
#include <vector>

namespace midi_builder {

using Bytes = std::vector<std::uint8_t>;

inline void be(Bytes& b, std::uint32_t v, int n) {
  for (int i = n - 1; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void varlen(Bytes& b, std::uint32_t v) {
  std::uint8_t tmp[4];
  int n = 0;
  tmp[n++] = v & 0x7F;
  while (v >>= 7) tmp[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
  while (n--) b.push_back(tmp[n]);
}

struct Track {
  Bytes data;

  Track& note_on(std::uint32_t delta, int pitch, int vel, int channel = 9) {
    varlen(data, delta);
    data.push_back(static_cast<std::uint8_t>(0x90 | channel));
    data.push_back(static_cast<std::uint8_t>(pitch));
    data.push_back(static_cast<std::uint8_t>(vel));
    return *this;
  }
  Track& note_off(std::uint32_t delta, int pitch, int channel = 9) {
    varlen(data, delta);
    data.push_back(static_cast<std::uint8_t>(0x80 | channel));
    data.push_back(static_cast<std::uint8_t>(pitch));
    data.push_back(64);
    return *this;
  }
  // Data bytes only, relying on running status.
  Track& running(std::uint32_t delta, int a, int b) {
    varlen(data, delta);
    data.push_back(static_cast<std::uint8_t>(a));
    data.push_back(static_cast<std::uint8_t>(b));
    return *this;
  }
  Track& tempo(std::uint32_t delta, std::uint32_t us_per_quarter) {
    varlen(data, delta);
    data.insert(data.end(), {0xFF, 0x51, 0x03});
    be(data, us_per_quarter, 3);
    return *this;
  }
  Track& end(std::uint32_t delta = 0) {
    varlen(data, delta);
    data.insert(data.end(), {0xFF, 0x2F, 0x00});
    return *this;
  }
};

inline Bytes file(int format, std::uint16_t division, const std::vector<Track>& tracks,
                  int declared_tracks = -1) {
  Bytes b = {'M', 'T', 'h', 'd'};
  be(b, 6, 4);
  be(b, static_cast<std::uint32_t>(format), 2);
  be(b, static_cast<std::uint32_t>(declared_tracks < 0 ? tracks.size() : declared_tracks), 2);
  be(b, division, 2);
  for (const auto& t : tracks) {
    b.insert(b.end(), {'M', 'T', 'r', 'k'});
    be(b, static_cast<std::uint32_t>(t.data.size()), 4);
    b.insert(b.end(), t.data.begin(), t.data.end());
  }
  return b;
}

}  // namespace midi_builder
