// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Real-time ratio: separation compute time over audio duration. Only the
// separator call is timed; loading models and reading files happen outside.

#include <array>
#include <chrono>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "drumsep/audio.hpp"

namespace drumsep::eval {

struct RtrReport {
  double audio_seconds = 0;
  double compute_seconds = 0;
  double rtr = 0;
  std::string hardware;
};

/// Seconds on a monotonic clock.
using Clock = std::function<double()>;

inline double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

inline std::string hardware_note() {
  std::string model = "unknown CPU";
  std::ifstream f("/proc/cpuinfo");
  for (std::string line; std::getline(f, line);)
    if (line.rfind("model name", 0) == 0) {
      const auto p = line.find(':');
      if (p != std::string::npos) model = line.substr(line.find_first_not_of(' ', p + 1));
      break;
    }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) +
         " hardware threads";
}

using Separator = std::function<std::array<AudioClip, kNumStems>(const AudioClip&)>;

inline RtrReport measure_rtr(const Separator& separate, const std::vector<AudioClip>& clips,
                             const Clock& clock = steady_seconds,
                             std::string hardware = hardware_note()) {
  RtrReport r;
  r.hardware = std::move(hardware);
  for (const auto& c : clips) r.audio_seconds += c.duration_seconds();
  if (clips.empty() || !(r.audio_seconds > 0))
    throw ConfigError("rtr: input audio has zero duration");
  for (const auto& c : clips) {
    const double t0 = clock();
    const auto stems = separate(c);
    const double t1 = clock();
    if (stems[0].length() != c.length())
      throw InconsistencyError("rtr: separator changed the clip length");
    r.compute_seconds += t1 - t0;
  }
  if (!(r.compute_seconds > 0))
    throw NumericError("rtr: measured compute time is not positive");
  r.rtr = r.compute_seconds / r.audio_seconds;
  return r;
}

}  // namespace drumsep::eval
