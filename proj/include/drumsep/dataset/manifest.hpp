// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Dataset directory layout and JSON manifest.
//
//   <root>/manifest.json
//   <root>/<kit-id>/<clip-id>/{kick,snare,hightom,lowmidtom,highfloortom,
//                              closedhh,openhh,crash,ride,mixture}.wav
//
// Manifest fields:
//   format        "drumsep-dataset"
//   version       1
//   sample_rate   Hz
//   encoding      "float32" (exact for the sampler's amplitude grid) or "pcm16"
//   clips[]       one object per rendered (clip, kit):
//     id          clip id, unique within its split
//     kit         kit id (integer); the directory is "kit<id>"
//     split       "train" | "validation" | "test"
//     duration    seconds
//     samples     length in samples
//     source      MIDI path or "pattern:<n>"
//     skipped_notes   notes outside the TD-11 table
//     files       instrument or "mixture" -> path relative to the root
//     nonzero     instrument -> bool, at least one note present
//     stems_nonzero   five-stem name -> bool (OR over members)

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "drumsep/dataset/render.hpp"
#include "drumsep/io/wav.hpp"

namespace drumsep::dataset {

inline const std::set<std::string>& known_splits() {
  static const std::set<std::string> s = {"train", "validation", "test"};
  return s;
}

struct ClipEntry {
  std::string id;
  int kit = 0;
  std::string split = "train";
  double duration = 0;
  index_t samples = 0;
  std::string source;
  std::size_t skipped_notes = 0;
  std::map<std::string, std::string> files;
  std::array<bool, kNumInstruments> nonzero{};
  std::array<bool, kNumStems> stems_nonzero{};

  std::string key() const { return split + "/" + id; }
};

inline std::string kit_dir(int kit) { return "kit" + std::to_string(kit); }

struct DatasetManifest {
  int sample_rate = kSampleRate;
  io::WavEncoding encoding = io::WavEncoding::Float32;
  std::vector<ClipEntry> clips;

  /// Splits must be disjoint: a clip id may appear under one split only.
  void validate(const std::filesystem::path* root = nullptr) const {
    std::map<std::string, std::string> split_of;
    std::set<std::pair<std::string, int>> seen;
    for (const auto& c : clips) {
      if (!known_splits().count(c.split))
        throw ConfigError("manifest: clip '" + c.id + "' has unknown split '" + c.split + "'");
      auto [it, fresh] = split_of.emplace(c.id, c.split);
      if (!fresh && it->second != c.split)
        throw InconsistencyError("manifest: clip '" + c.id + "' appears in splits " +
                                 it->second + " and " + c.split);
      if (!seen.emplace(c.id, c.kit).second)
        throw InconsistencyError("manifest: clip '" + c.id + "' listed twice for kit " +
                                 std::to_string(c.kit));
      if (root)
        for (const auto& [name, rel] : c.files)
          if (!std::filesystem::exists(*root / rel))
            throw IoError("manifest: missing file " + (*root / rel).string());
    }
  }

  std::vector<const ClipEntry*> select(const std::string& split, int kit = -1) const {
    std::vector<const ClipEntry*> out;
    for (const auto& c : clips)
      if (c.split == split && (kit < 0 || c.kit == kit)) out.push_back(&c);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "drumsep-dataset";
    j["version"] = 1;
    j["sample_rate"] = sample_rate;
    j["encoding"] = encoding == io::WavEncoding::Float32 ? "float32" : "pcm16";
    auto& list = j["clips"] = nlohmann::json::array();
    for (const auto& c : clips) {
      nlohmann::json e{{"id", c.id},         {"kit", c.kit},
                       {"split", c.split},   {"duration", c.duration},
                       {"samples", c.samples}, {"source", c.source},
                       {"skipped_notes", c.skipped_notes}, {"files", c.files}};
      for (Instrument i : kAllInstruments)
        e["nonzero"][std::string(instrument_file_name(i))] = c.nonzero[instrument_index(i)];
      for (Stem s : kAllStems)
        e["stems_nonzero"][std::string(stem_name(s))] = c.stems_nonzero[stem_index(s)];
      list.push_back(std::move(e));
    }
    return j;
  }

  static DatasetManifest from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != "drumsep-dataset")
      throw IoError("manifest: not a drumsep dataset manifest");
    if (j.value("version", 0) != 1) throw IoError("manifest: unsupported version");
    DatasetManifest m;
    m.sample_rate = j.at("sample_rate").get<int>();
    const auto enc = j.at("encoding").get<std::string>();
    if (enc != "float32" && enc != "pcm16") throw IoError("manifest: unknown encoding " + enc);
    m.encoding = enc == "float32" ? io::WavEncoding::Float32 : io::WavEncoding::Pcm16;
    for (const auto& e : j.at("clips")) {
      ClipEntry c;
      c.id = e.at("id").get<std::string>();
      c.kit = e.at("kit").get<int>();
      c.split = e.at("split").get<std::string>();
      c.duration = e.at("duration").get<double>();
      c.samples = e.at("samples").get<index_t>();
      c.source = e.value("source", std::string());
      c.skipped_notes = e.value("skipped_notes", std::size_t{0});
      c.files = e.at("files").get<std::map<std::string, std::string>>();
      for (Instrument i : kAllInstruments)
        c.nonzero[instrument_index(i)] =
            e.at("nonzero").at(std::string(instrument_file_name(i))).get<bool>();
      for (Stem s : kAllStems)
        c.stems_nonzero[stem_index(s)] =
            e.at("stems_nonzero").at(std::string(stem_name(s))).get<bool>();
      m.clips.push_back(std::move(c));
    }
    m.validate();
    return m;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << to_json().dump(2) << '\n';
    if (!f) throw IoError("write failed: " + path.string());
  }

  static DatasetManifest load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path.string());
    try {
      return from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }
};

/// Writes the ten WAV files of a rendered clip and returns its manifest entry.
inline ClipEntry write_clip(const std::filesystem::path& root, const std::string& id,
                            const std::string& split, const StemSet& set, const std::string& source,
                            std::size_t skipped, io::WavEncoding enc = io::WavEncoding::Float32) {
  if (enc == io::WavEncoding::Float32 && set.mixture.peak() >= 8.0)
    throw NumericError("dataset: clip " + id + " exceeds the exactly representable range");
  ClipEntry c;
  c.id = id;
  c.kit = set.kit;
  c.split = split;
  c.samples = set.length();
  c.duration = set.mixture.duration_seconds();
  c.source = source;
  c.skipped_notes = skipped;
  c.nonzero = set.nonzero;
  const auto g = group_to_five(set);
  c.stems_nonzero = g.nonzero;
  const std::string dir = kit_dir(set.kit) + "/" + id;
  std::filesystem::create_directories(root / dir);
  for (Instrument i : kAllInstruments) {
    const std::string rel = dir + "/" + std::string(instrument_file_name(i)) + ".wav";
    io::write_wav(root / rel, set.stems[instrument_index(i)], enc);
    c.files[std::string(instrument_file_name(i))] = rel;
  }
  const std::string rel = dir + "/mixture.wav";
  io::write_wav(root / rel, set.mixture, enc);
  c.files["mixture"] = rel;
  return c;
}

/// Reads a clip back into five grouped stems plus the mixture.
inline GroupedStems load_grouped(const std::filesystem::path& root, const ClipEntry& c) {
  StemSet set;
  set.kit = c.kit;
  set.nonzero = c.nonzero;
  for (Instrument i : kAllInstruments) {
    const auto it = c.files.find(std::string(instrument_file_name(i)));
    if (it == c.files.end())
      throw IoError("clip " + c.key() + ": no file for stem " +
                    std::string(instrument_file_name(i)));
    set.stems[instrument_index(i)] = io::read_wav(root / it->second);
  }
  const auto it = c.files.find("mixture");
  if (it == c.files.end()) throw IoError("clip " + c.key() + ": no mixture file");
  set.mixture = io::read_wav(root / it->second);
  for (const auto& s : set.stems) require_same_layout(s, set.mixture, "dataset clip");
  auto g = group_to_five(set);
  g.nonzero = c.stems_nonzero;
  return g;
}

}  // namespace drumsep::dataset
