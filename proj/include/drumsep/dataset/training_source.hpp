// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Training examples drawn from a corpus of patterns rendered with several
// kits. Example `index` picks a pattern, a base kit and a segment window
// from its own random stream, then runs the augmentation pipeline over the
// five stems of that window. The same index always yields the same example.

#include <Eigen/Core>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <vector>

#include "drumsep/augment/pipeline.hpp"
#include "drumsep/dataset/manifest.hpp"
#include "drumsep/dataset/render.hpp"
#include "drumsep/model/larsnet.hpp"

namespace drumsep::dataset {

/// Grouped stems of pattern `p` with kit `k` over [start, start + length).
using StemWindow = std::function<StemClips(int p, int k, index_t start, index_t length)>;

struct TrainingCorpus {
  std::vector<index_t> lengths;  // samples, per pattern
  std::vector<int> kits;
  StemWindow window;

  int patterns() const { return static_cast<int>(lengths.size()); }
};

/// Renders windows straight from canonical scores; nothing is cached but
/// the one-shots.
inline TrainingCorpus score_corpus(std::vector<MidiScore> scores, std::vector<int> kits,
                                   int rate = kSampleRate) {
  if (scores.empty()) throw ConfigError("training corpus: no patterns");
  if (kits.empty()) throw ConfigError("training corpus: no kits");
  auto samplers = std::make_shared<std::map<int, DrumKitSampler>>();
  for (int k : kits) samplers->emplace(k, DrumKitSampler(k, 1.6, rate));
  auto shared = std::make_shared<std::vector<MidiScore>>(std::move(scores));
  TrainingCorpus c;
  for (const auto& s : *shared) {
    s.validate();
    c.lengths.push_back(static_cast<index_t>(std::llround(s.duration * rate)));
  }
  c.kits = std::move(kits);
  c.window = [shared, samplers](int p, int k, index_t start, index_t length) {
    return render_window((*shared)[p], samplers->at(k), start, length);
  };
  return c;
}

/// Loads every clip of `split` into memory as float (exact for grid-valued
/// audio), optionally only for `kits`. Every pattern must be present with
/// every kit.
inline TrainingCorpus clip_corpus(const std::filesystem::path& root,
                                  const DatasetManifest& manifest,
                                  const std::string& split = "train",
                                  const std::vector<int>& kits = {}) {
  using Stems32 = std::array<Eigen::ArrayXXf, kNumStems>;
  std::vector<const ClipEntry*> entries;
  for (const auto* e : manifest.select(split))
    if (kits.empty() || std::find(kits.begin(), kits.end(), e->kit) != kits.end())
      entries.push_back(e);
  if (entries.empty())
    throw EmptyInputError("training corpus: no clips in split '" + split + "' for these kits");
  std::map<std::string, int> ids;
  std::set<int> kitset;
  for (const auto* e : entries) {
    ids.emplace(e->id, static_cast<int>(ids.size()));
    kitset.insert(e->kit);
  }
  auto store = std::make_shared<std::map<std::pair<int, int>, Stems32>>();
  std::vector<index_t> lengths(ids.size(), 0);
  int rate = manifest.sample_rate;
  for (const auto* e : entries) {
    const auto g = load_grouped(root, *e);
    const int p = ids.at(e->id);
    lengths[p] = lengths[p] ? std::min(lengths[p], g.mixture.length()) : g.mixture.length();
    Stems32 s;
    for (int i = 0; i < kNumStems; ++i) s[i] = g.stems[i].samples.cast<float>();
    store->emplace(std::make_pair(p, e->kit), std::move(s));
  }
  for (const auto& [id, p] : ids)
    for (int k : kitset)
      if (!store->count({p, k}))
        throw InconsistencyError("training corpus: clip '" + id + "' is missing kit " +
                                 std::to_string(k) + "; every pattern needs every kit");
  TrainingCorpus c;
  c.lengths = std::move(lengths);
  c.kits.assign(kitset.begin(), kitset.end());
  c.window = [store, rate](int p, int k, index_t start, index_t length) {
    const auto& s = store->at({p, k});
    StemClips out;
    for (int i = 0; i < kNumStems; ++i) {
      out[i] = AudioClip(2, length, rate);
      const index_t avail = std::clamp<index_t>(s[i].cols() - start, 0, length);
      if (avail > 0) out[i].samples.leftCols(avail) = s[i].middleCols(start, avail).cast<double>();
    }
    return out;
  };
  return c;
}

inline model::ExampleSource training_source(const TrainingCorpus& corpus, index_t segment,
                                            const augment::AugmentConfig& cfg,
                                            std::uint64_t seed) {
  cfg.validate();
  if (corpus.lengths.empty() || corpus.kits.empty() || !corpus.window)
    throw ConfigError("training source: empty corpus");
  if (segment <= 0) throw ConfigError("training source: segment must be positive");
  return [corpus, segment, cfg, seed](std::uint64_t index) {
    auto rng = augment::RngStream::for_stream(seed, index);
    const int p = rng.uniform_int(0, corpus.patterns() - 1);
    const int base = corpus.kits[rng.uniform_int(0, static_cast<int>(corpus.kits.size()) - 1)];
    const index_t room = std::max<index_t>(0, corpus.lengths[p] - segment);
    const index_t start = rng.uniform_int(0, static_cast<int>(room));
    augment::PatternSource src = [&](int kit) { return corpus.window(p, kit, start, segment); };
    auto a = augment::augment_pipeline(src, corpus.kits, base, cfg, rng);
    return model::TrainingExample{std::move(a.mixture), std::move(a.stems)};
  };
}

}  // namespace drumsep::dataset
