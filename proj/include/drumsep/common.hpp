// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace drumsep {

using index_t = std::ptrdiff_t;

// Exception hierarchy. The CLI maps these onto exit codes (see tools/).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};
class ShapeError : public Error {
 public:
  using Error::Error;
};
class EmptyInputError : public Error {
 public:
  using Error::Error;
};
class DomainError : public Error {
 public:
  using Error::Error;
};
class AlignmentError : public Error {
 public:
  using Error::Error;
};
class StateError : public Error {
 public:
  using Error::Error;
};
class InconsistencyError : public Error {
 public:
  using Error::Error;
};
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};
class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : IoError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

  /// Same error, message prefixed with the file it came from.
  ParseError in_file(const std::string& file) const {
    return ParseError(file + ": " + what(), offset_, Preformatted{});
  }

 private:
  struct Preformatted {};
  ParseError(const std::string& full, std::size_t offset, Preformatted)
      : IoError(full), offset_(offset) {}

  std::size_t offset_;
};
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// The five separation targets.
enum class Stem : int { Kick = 0, Snare = 1, Toms = 2, HiHat = 3, Cymbals = 4 };

inline constexpr int kNumStems = 5;
inline constexpr std::array<Stem, kNumStems> kAllStems = {
    Stem::Kick, Stem::Snare, Stem::Toms, Stem::HiHat, Stem::Cymbals};

inline constexpr std::string_view stem_code(Stem s) {
  constexpr std::array<std::string_view, kNumStems> codes = {"KD", "SD", "TT",
                                                             "HH", "CY"};
  return codes[static_cast<int>(s)];
}

// Used for output file names: <input>_{kick,snare,toms,hihat,cymbals}.wav
inline constexpr std::string_view stem_name(Stem s) {
  constexpr std::array<std::string_view, kNumStems> names = {
      "kick", "snare", "toms", "hihat", "cymbals"};
  return names[static_cast<int>(s)];
}

inline Stem stem_from_name(std::string_view name) {
  for (Stem s : kAllStems)
    if (name == stem_name(s) || name == stem_code(s)) return s;
  throw ConfigError("unknown stem name: " + std::string(name));
}

inline constexpr int stem_index(Stem s) { return static_cast<int>(s); }

}  // namespace drumsep
