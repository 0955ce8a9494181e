// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Templates from the procedural kits: one isolated hit per instrument, kit
// and velocity.

#include <vector>

#include "drumsep/dataset/render.hpp"
#include "drumsep/nmf/templates.hpp"

namespace drumsep::nmf {

inline std::vector<IsolatedHit> kit_hits(const std::vector<int>& kits,
                                         const std::vector<int>& velocities,
                                         int rate = kSampleRate) {
  if (kits.empty() || velocities.empty())
    throw ConfigError("templates: need at least one kit and one velocity");
  std::vector<IsolatedHit> hits;
  for (int k : kits) {
    const dataset::DrumKitSampler sampler(k, 1.6, rate);
    for (int v : velocities)
      for (auto& [inst, clip] : dataset::isolated_hits(sampler, v))
        hits.push_back({dataset::stem_of(inst),
                        std::string(dataset::instrument_file_name(inst)) + "@kit" +
                            std::to_string(k),
                        v, std::move(clip)});
  }
  return hits;
}

inline TemplateDictionary kit_templates(const std::vector<int>& kits,
                                        const std::vector<int>& velocities,
                                        const dsp::StftConfig& stft, index_t length) {
  return build_templates(kit_hits(kits, velocities), stft, length);
}

}  // namespace drumsep::nmf
