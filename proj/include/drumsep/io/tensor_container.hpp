// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Versioned tensor container used for model checkpoints and NMF template
// dictionaries.
//
//   offset  size  field
//   0       8     magic "DRUMSEPT"
//   8       4     format version, u32 little-endian (currently 1)
//   12      4     reserved, zero
//   16      8     manifest length M in bytes, u64 little-endian
//   24      M     manifest, UTF-8 JSON (see below)
//   24+M    ...   payload: raw tensor data
//
// Manifest:
//   { "version": 1,
//     "metadata": { ...free-form... },
//     "tensors": [ { "name": str, "dtype": "f32"|"f64",
//                    "shape": [int...], "offset": int, "nbytes": int } ] }
//
// "offset" is relative to the first payload byte. Tensor values are stored
// row-major as little-endian IEEE-754 values of the stated dtype.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drumsep/common.hpp"
#include "drumsep/io/bytes.hpp"
#include "drumsep/io/wav.hpp"

namespace drumsep::io {

enum class DType { F32, F64 };

inline std::string dtype_name(DType d) { return d == DType::F32 ? "f32" : "f64"; }
inline std::size_t dtype_size(DType d) { return d == DType::F32 ? 4 : 8; }

struct TensorEntry {
  std::string name;
  DType dtype = DType::F32;
  std::vector<index_t> shape;
  std::vector<double> values;

  index_t numel() const {
    return std::accumulate(shape.begin(), shape.end(), index_t{1},
                           std::multiplies<>());
  }
};

class TensorContainer {
 public:
  static constexpr std::uint32_t kVersion = 1;
  static constexpr const char* kMagic = "DRUMSEPT";

  nlohmann::json metadata = nlohmann::json::object();

  template <typename T>
  void add(std::string name, std::vector<index_t> shape, std::span<const T> values,
           DType dtype = DType::F32) {
    TensorEntry e{std::move(name), dtype, std::move(shape), {}};
    if (e.numel() != static_cast<index_t>(values.size()))
      throw ShapeError("tensor '" + e.name + "': shape does not match value count");
    if (find(e.name)) throw ConfigError("duplicate tensor name '" + e.name + "'");
    e.values.assign(values.begin(), values.end());
    entries_.push_back(std::move(e));
  }

  const TensorEntry* find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return &e;
    return nullptr;
  }
  const TensorEntry& at(const std::string& name) const {
    if (const auto* e = find(name)) return *e;
    throw IoError("tensor container has no tensor named '" + name + "'");
  }
  const std::vector<TensorEntry>& entries() const { return entries_; }

  std::vector<std::uint8_t> encode() const {
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["metadata"] = metadata;
    manifest["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& e : entries_) {
      const std::uint64_t nbytes = e.values.size() * dtype_size(e.dtype);
      manifest["tensors"].push_back({{"name", e.name},
                                     {"dtype", dtype_name(e.dtype)},
                                     {"shape", e.shape},
                                     {"offset", offset},
                                     {"nbytes", nbytes}});
      offset += nbytes;
    }
    const std::string text = manifest.dump(1);
    ByteWriter w;
    w.raw(kMagic);
    w.u32(kVersion);
    w.u32(0);
    w.u64(text.size());
    w.raw(text);
    for (const auto& e : entries_)
      for (double v : e.values) {
        if (e.dtype == DType::F32)
          w.f32(static_cast<float>(v));
        else
          w.f64(v);
      }
    return w.take();
  }

  static TensorContainer decode(const std::vector<std::uint8_t>& bytes,
                                const std::string& name = "<memory>") {
    ByteReader r(bytes);
    TensorContainer out;
    try {
      if (r.raw(8) != kMagic) throw ParseError(name + ": bad container magic", 0);
      const std::uint32_t version = r.u32();
      if (version != kVersion)
        throw ParseError(name + ": unsupported container version " +
                             std::to_string(version),
                         8);
      r.u32();
      const std::uint64_t mlen = r.u64();
      const std::string text = r.raw(static_cast<std::size_t>(mlen));
      const std::size_t payload = r.pos();
      nlohmann::json manifest;
      try {
        manifest = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(name + ": manifest is not valid JSON: " + e.what(), 24);
      }
      out.metadata = manifest.value("metadata", nlohmann::json::object());
      for (const auto& t : manifest.at("tensors")) {
        TensorEntry e;
        e.name = t.at("name").get<std::string>();
        const std::string dt = t.at("dtype").get<std::string>();
        if (dt == "f32")
          e.dtype = DType::F32;
        else if (dt == "f64")
          e.dtype = DType::F64;
        else
          throw ParseError(name + ": unknown dtype '" + dt + "'", 24);
        e.shape = t.at("shape").get<std::vector<index_t>>();
        const auto off = t.at("offset").get<std::uint64_t>();
        const auto nbytes = t.at("nbytes").get<std::uint64_t>();
        if (nbytes != static_cast<std::uint64_t>(e.numel()) * dtype_size(e.dtype))
          throw ParseError(name + ": tensor '" + e.name + "' byte count mismatch",
                           24);
        r.seek(payload + off);
        e.values.resize(static_cast<std::size_t>(e.numel()));
        for (auto& v : e.values) v = e.dtype == DType::F32 ? double(r.f32()) : r.f64();
        out.entries_.push_back(std::move(e));
      }
    } catch (const ByteReader::Truncated& t) {
      throw ParseError(name + ": truncated container", t.offset);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(name + ": malformed manifest: " + e.what(), 24);
    }
    return out;
  }

  void save(const std::filesystem::path& path) const {
    write_file_bytes(path, encode());
  }
  static TensorContainer load(const std::filesystem::path& path) {
    return decode(read_file_bytes(path), path.string());
  }

 private:
  std::vector<TensorEntry> entries_;
};

}  // namespace drumsep::io
