// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Per-stem nSDR rows and the kit x stem tables built from them.
//
// Every score is stored as a row (method, clip, kit, stem, energy class,
// value). The summary is a pure function of the rows, so a report loaded
// from JSON recomputes exactly the means it was saved with.
//
// JSON schema:
//   { "epsilon": 1e-7,
//     "rows": [ {"method", "clip", "kit", "stem": "KD", "energy": "nonzero"|"zero",
//                "nsdr"} ... ],
//     "population": { "KD": {"nonzero", "zero", "nonzero_pct", "zero_pct"}, ... },
//     "summary": { <method>: { "nonzero"|"zero": {
//         "kits": { "<kit>": { "KD": {"mean", "count"}, ..., "All": {...} } },
//         "All":  { "KD": {"clip_weighted", "kit_mean", "count"}, ..., "All": {...} } } } } }
//
// Two readings of the "All" column are kept: the mean over every row
// (clip_weighted) and the mean of the per-kit means (kit_mean). Cells with
// no rows are null.

#include <array>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/eval/nsdr.hpp"

namespace drumsep::eval {

using StemClips = std::array<AudioClip, kNumStems>;
using json = nlohmann::json;

struct ScoreRow {
  std::string method;
  std::string clip;
  int kit = 0;
  Stem stem = Stem::Kick;
  bool nonzero = true;
  double nsdr = 0;
};

/// Ground truth of one evaluation clip. An empty annotation means the
/// dataset did not say whether the stem has any notes.
struct EvalClip {
  std::string id;
  int kit = 0;
  StemClips truth;
  std::array<std::optional<bool>, kNumStems> nonzero;
};

/// One estimate set per clip, in the order of the clip list.
struct MethodEstimates {
  std::string method;
  std::vector<StemClips> estimates;
};

struct Cell {
  double sum = 0;
  std::size_t count = 0;
  void add(double v) { sum += v, ++count; }
  std::optional<double> mean() const {
    return count ? std::optional<double>(sum / double(count)) : std::nullopt;
  }
};

/// Mean over every row plus mean over the per-kit means.
struct AllCell {
  Cell rows;
  Cell kit_means;
};

struct ClassTable {
  std::map<int, std::array<Cell, kNumStems>> kits;
  std::map<int, Cell> kit_all;
  std::array<AllCell, kNumStems> stem_all;
  AllCell all;
};

struct PopulationCount {
  std::size_t nonzero = 0, zero = 0;
  double nonzero_pct() const { return total() ? 100.0 * double(nonzero) / double(total()) : 0; }
  double zero_pct() const { return total() ? 100.0 * double(zero) / double(total()) : 0; }
  std::size_t total() const { return nonzero + zero; }
};

class EvalReport {
 public:
  double epsilon = 1e-7;
  std::vector<ScoreRow> rows;

  void add(ScoreRow r) { rows.push_back(std::move(r)); }

  std::vector<std::string> methods() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (std::find(out.begin(), out.end(), r.method) == out.end()) out.push_back(r.method);
    return out;
  }

  /// Table for one method and one energy class.
  ClassTable table(const std::string& method, bool nonzero) const {
    ClassTable t;
    for (const auto& r : rows) {
      if (r.method != method || r.nonzero != nonzero) continue;
      auto& cells = t.kits[r.kit];
      cells[stem_index(r.stem)].add(r.nsdr);
      t.kit_all[r.kit].add(r.nsdr);
      t.stem_all[stem_index(r.stem)].rows.add(r.nsdr);
      t.all.rows.add(r.nsdr);
    }
    for (const auto& [kit, cells] : t.kits) {
      for (int s = 0; s < kNumStems; ++s)
        if (auto m = cells[s].mean()) t.stem_all[s].kit_means.add(*m);
      if (auto m = t.kit_all.at(kit).mean()) t.all.kit_means.add(*m);
    }
    return t;
  }

  /// Stem population by energy class, counting each (clip, kit, stem) once.
  std::array<PopulationCount, kNumStems> population() const {
    std::set<std::tuple<std::string, int, int>> seen;
    std::array<PopulationCount, kNumStems> out{};
    for (const auto& r : rows) {
      if (!seen.emplace(r.clip, r.kit, stem_index(r.stem)).second) continue;
      auto& p = out[stem_index(r.stem)];
      (r.nonzero ? p.nonzero : p.zero)++;
    }
    return out;
  }

  json to_json() const {
    json j;
    j["epsilon"] = epsilon;
    j["rows"] = json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"method", r.method},
                           {"clip", r.clip},
                           {"kit", r.kit},
                           {"stem", std::string(stem_code(r.stem))},
                           {"energy", r.nonzero ? "nonzero" : "zero"},
                           {"nsdr", r.nsdr}});
    const auto pop = population();
    for (Stem s : kAllStems) {
      const auto& p = pop[stem_index(s)];
      j["population"][std::string(stem_code(s))] = {{"nonzero", p.nonzero},
                                                    {"zero", p.zero},
                                                    {"nonzero_pct", p.nonzero_pct()},
                                                    {"zero_pct", p.zero_pct()}};
    }
    j["summary"] = summary_json();
    return j;
  }

  json summary_json() const {
    json out = json::object();
    auto val = [](const Cell& c) { return c.count ? json(*c.mean()) : json(nullptr); };
    for (const auto& m : methods()) {
      for (bool nz : {true, false}) {
        const auto t = table(m, nz);
        json cls;
        cls["kits"] = json::object();
        for (const auto& [kit, cells] : t.kits) {
          json k;
          for (Stem s : kAllStems)
            k[std::string(stem_code(s))] = {{"mean", val(cells[stem_index(s)])},
                                            {"count", cells[stem_index(s)].count}};
          k["All"] = {{"mean", val(t.kit_all.at(kit))}, {"count", t.kit_all.at(kit).count}};
          cls["kits"][std::to_string(kit)] = k;
        }
        auto all_cell = [&](const AllCell& a) {
          return json{{"clip_weighted", val(a.rows)},
                      {"kit_mean", val(a.kit_means)},
                      {"count", a.rows.count}};
        };
        for (Stem s : kAllStems)
          cls["All"][std::string(stem_code(s))] = all_cell(t.stem_all[stem_index(s)]);
        cls["All"]["All"] = all_cell(t.all);
        out[m][nz ? "nonzero" : "zero"] = cls;
      }
    }
    return out;
  }

  static EvalReport from_json(const json& j) {
    EvalReport r;
    try {
      r.epsilon = j.at("epsilon").get<double>();
      for (const auto& row : j.at("rows")) {
        const std::string energy = row.at("energy").get<std::string>();
        if (energy != "nonzero" && energy != "zero")
          throw ParseError("eval report: energy must be nonzero or zero, got " + energy, 0);
        r.add({row.at("method").get<std::string>(), row.at("clip").get<std::string>(),
               row.at("kit").get<int>(), stem_from_name(row.at("stem").get<std::string>()),
               energy == "nonzero", row.at("nsdr").get<double>()});
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("eval report: ") + e.what(), 0);
    }
    return r;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << to_json().dump(2) << "\n";
    if (!f) throw IoError("write failed: " + path.string());
  }

  static EvalReport load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path.string());
    json j;
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
    return from_json(j);
  }

  /// Kit rows by stem columns, one table per method and energy class.
  std::string to_text() const {
    std::ostringstream os;
    auto fmt = [](std::optional<double> v) {
      char buf[32];
      if (v)
        std::snprintf(buf, sizeof buf, "%9.2f", *v);
      else
        std::snprintf(buf, sizeof buf, "%9s", "-");
      return std::string(buf);
    };
    auto header = [&] {
      os << "  kit      ";
      for (Stem s : kAllStems) os << "       " << stem_code(s);
      os << "      All\n";
    };
    for (const auto& m : methods()) {
      for (bool nz : {true, false}) {
        const auto t = table(m, nz);
        os << m << " / " << (nz ? "nonzero" : "zero") << "-energy stems (nSDR, dB)\n";
        header();
        for (const auto& [kit, cells] : t.kits) {
          char buf[16];
          std::snprintf(buf, sizeof buf, "  %-9d", kit);
          os << buf;
          for (const auto& c : cells) os << fmt(c.mean());
          os << fmt(t.kit_all.at(kit).mean()) << "\n";
        }
        os << "  All      ";
        for (const auto& a : t.stem_all) os << fmt(a.rows.mean());
        os << fmt(t.all.rows.mean()) << "\n";
        os << "  All(kits)";
        for (const auto& a : t.stem_all) os << fmt(a.kit_means.mean());
        os << fmt(t.all.kit_means.mean()) << "\n\n";
      }
    }
    const auto pop = population();
    os << "stems     ";
    for (Stem s : kAllStems) os << "       " << stem_code(s);
    os << "\n  nonzero ";
    for (const auto& p : pop) os << "  " << fmt(p.nonzero_pct()).substr(2) << "%";
    os << "\n  zero    ";
    for (const auto& p : pop) os << "  " << fmt(p.zero_pct()).substr(2) << "%";
    os << "\n";
    return os.str();
  }
};

/// Scores one clip's estimates. Throws EvaluationError if an annotation is
/// missing.
inline void score_clip(EvalReport& report, const std::string& method, const EvalClip& clip,
                       const StemClips& estimate, const EvalConfig& cfg = {}) {
  for (Stem s : kAllStems) {
    const int i = stem_index(s);
    if (!clip.nonzero[i])
      throw EvaluationError("eval: clip '" + clip.id + "' (kit " + std::to_string(clip.kit) +
                            ") has no energy annotation for stem " + std::string(stem_code(s)));
    double v;
    try {
      v = nsdr_stem(clip.truth[i], estimate[i], cfg);
    } catch (const AlignmentError& e) {
      throw AlignmentError("eval: clip '" + clip.id + "' stem " + std::string(stem_code(s)) +
                           ": " + e.what());
    }
    report.add({method, clip.id, clip.kit, s, *clip.nonzero[i], v});
  }
}

inline EvalReport nsdr_aggregate(const std::vector<EvalClip>& clips,
                                 const std::vector<MethodEstimates>& methods,
                                 const EvalConfig& cfg = {}) {
  cfg.validate();
  if (cfg.stems != kNumStems)
    throw ConfigError("eval: reports cover exactly " + std::to_string(kNumStems) + " stems");
  for (const auto& c : clips)
    for (Stem s : kAllStems)
      if (!c.nonzero[stem_index(s)])
        throw EvaluationError("eval: clip '" + c.id + "' (kit " + std::to_string(c.kit) +
                              ") has no energy annotation for stem " +
                              std::string(stem_code(s)));
  EvalReport report;
  report.epsilon = cfg.epsilon;
  for (const auto& m : methods) {
    if (m.estimates.size() != clips.size())
      throw EvaluationError("eval: method '" + m.method + "' has " +
                            std::to_string(m.estimates.size()) + " estimates for " +
                            std::to_string(clips.size()) + " clips");
    for (std::size_t k = 0; k < clips.size(); ++k)
      score_clip(report, m.method, clips[k], m.estimates[k], cfg);
  }
  return report;
}

}  // namespace drumsep::eval
