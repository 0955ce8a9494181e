// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Renders one procedural groove with a kit the templates never saw, separates
// it with NMFD and SAB-NMF, and prints the nSDR of every stem.
//
//   nmfd_demo [pattern] [kit]

#include <cstdio>
#include <cstdlib>

#include "drumsep/dataset/notes.hpp"
#include "drumsep/dataset/patterns.hpp"
#include "drumsep/dataset/render.hpp"
#include "drumsep/eval/nsdr.hpp"
#include "drumsep/nmf/baseline.hpp"
#include "drumsep/nmf/kit_templates.hpp"

using namespace drumsep;

int main(int argc, char** argv) {
  const int pattern = argc > 1 ? std::atoi(argv[1]) : 0;
  const int kit = argc > 2 ? std::atoi(argv[2]) : 9;
  try {
    const auto score = dataset::map_notes(dataset::make_pattern(pattern, 6.0));
    const auto g = dataset::group_to_five(dataset::render_stems(score, dataset::DrumKitSampler(kit)));

    std::vector<int> others;
    for (int k = 0; k < dataset::kNumKits; ++k)
      if (k != kit) others.push_back(k);
    const auto dict = nmf::kit_templates(others, {100}, dsp::StftConfig::desk(), 8);
    std::printf("pattern %d, kit %d, %.1f s; %lld templates from %zu other kits\n", pattern, kit,
                g.mixture.duration_seconds(), static_cast<long long>(dict.size()), others.size());

    std::printf("%-8s", "method");
    for (Stem s : kAllStems) std::printf("%9s", std::string(stem_code(s)).c_str());
    std::printf("\n");
    for (auto m : {nmf::Method::Nmfd, nmf::Method::SabNmf}) {
      const auto est = nmf::baseline_separate(g.mixture, dict, nmf::BaselineConfig::for_method(m));
      std::printf("%-8s", std::string(nmf::method_name(m)).c_str());
      for (int i = 0; i < kNumStems; ++i)
        std::printf("%9.2f", eval::nsdr_stem(g.stems[i], est[i]));
      std::printf("\n");
    }
    std::printf("(stems without hits score at most 0 dB)\n");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
