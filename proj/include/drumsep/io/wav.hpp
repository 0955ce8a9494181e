// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/io/bytes.hpp"

namespace drumsep::io {

enum class WavEncoding { Pcm16, Float32 };

/// Value a sample takes after a round trip through 16-bit PCM.
inline double quantize_pcm16(double x) {
  const double q = std::clamp(std::nearbyint(x * 32768.0), -32768.0, 32767.0);
  return q / 32768.0;
}

inline AudioClip quantized_pcm16(const AudioClip& clip) {
  AudioClip out = clip;
  out.samples = out.samples.unaryExpr([](double x) { return quantize_pcm16(x); });
  return out;
}

inline std::vector<std::uint8_t> encode_wav(const AudioClip& clip,
                                            WavEncoding enc) {
  const std::uint16_t channels = static_cast<std::uint16_t>(clip.channels());
  const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t format = enc == WavEncoding::Pcm16 ? 1 : 3;
  const std::uint32_t block = channels * bits / 8;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.length()) * block;

  ByteWriter w;
  w.raw("RIFF");
  w.u32(36 + data_bytes);
  w.raw("WAVE");
  w.raw("fmt ");
  w.u32(16);
  w.u16(format);
  w.u16(channels);
  w.u32(static_cast<std::uint32_t>(clip.sample_rate));
  w.u32(static_cast<std::uint32_t>(clip.sample_rate) * block);
  w.u16(static_cast<std::uint16_t>(block));
  w.u16(bits);
  w.raw("data");
  w.u32(data_bytes);
  for (index_t t = 0; t < clip.length(); ++t)
    for (index_t c = 0; c < clip.channels(); ++c) {
      const double x = clip.samples(c, t);
      if (enc == WavEncoding::Pcm16)
        w.i16(static_cast<std::int16_t>(
            std::clamp(std::nearbyint(x * 32768.0), -32768.0, 32767.0)));
      else
        w.f32(static_cast<float>(x));
    }
  return w.take();
}

inline AudioClip decode_wav(const std::vector<std::uint8_t>& bytes,
                            const std::string& name = "<memory>") {
  ByteReader r(bytes);
  try {
    if (r.raw(4) != "RIFF") throw ParseError(name + ": not a RIFF file", 0);
    r.u32();
    if (r.raw(4) != "WAVE") throw ParseError(name + ": not a WAVE file", 8);

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    while (!r.at_end()) {
      const std::size_t chunk_at = r.pos();
      const std::string id = r.raw(4);
      const std::uint32_t size = r.u32();
      if (id == "fmt ") {
        if (size < 16) throw ParseError(name + ": fmt chunk too short", chunk_at);
        const std::size_t body = r.pos();
        format = r.u16();
        channels = r.u16();
        rate = r.u32();
        r.u32();
        r.u16();
        bits = r.u16();
        if (format == 0xFFFE && size >= 40) {
          r.u16();  // cbSize
          r.u16();  // valid bits
          r.u32();  // channel mask
          format = r.u16();  // first two bytes of the subformat GUID
        }
        r.seek(body + size + (size & 1));
        have_fmt = true;
      } else if (id == "data") {
        if (!have_fmt)
          throw ParseError(name + ": data chunk before fmt chunk", chunk_at);
        if (rate != static_cast<std::uint32_t>(kSampleRate))
          throw IoError(name + ": unsupported sample rate " +
                        std::to_string(rate) + " Hz (only 44100 Hz is accepted)");
        if (channels < 1 || channels > 2)
          throw IoError(name + ": unsupported channel count " +
                        std::to_string(channels));
        const bool pcm16 = format == 1 && bits == 16;
        const bool f32 = format == 3 && bits == 32;
        if (!pcm16 && !f32)
          throw IoError(name + ": unsupported encoding (format " +
                        std::to_string(format) + ", " + std::to_string(bits) +
                        " bits); expected 16-bit PCM or 32-bit float");
        const std::uint32_t block = channels * bits / 8;
        const index_t frames = size / block;
        AudioClip clip(channels, frames, static_cast<int>(rate));
        for (index_t t = 0; t < frames; ++t)
          for (index_t c = 0; c < channels; ++c)
            clip.samples(c, t) = pcm16 ? r.i16() / 32768.0 : double(r.f32());
        return clip;
      } else {
        r.seek(r.pos() + size + (size & 1));
      }
    }
  } catch (const ByteReader::Truncated& e) {
    throw ParseError(name + ": truncated file", e.offset);
  }
  throw ParseError(name + ": no data chunk", bytes.size());
}

inline std::vector<std::uint8_t> read_file_bytes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline AudioClip read_wav(const std::filesystem::path& path) {
  return decode_wav(read_file_bytes(path), path.string());
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip,
                      WavEncoding enc = WavEncoding::Pcm16) {
  write_file_bytes(path, encode_wav(clip, enc));
}

}  // namespace drumsep::io
