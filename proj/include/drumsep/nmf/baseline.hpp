// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Template-based baseline separators. Each stereo channel is factorized on its
// own; stem magnitudes are Wiener-refined against the mixture and given the
// mixture phase.

#include <array>

#include "drumsep/audio.hpp"
#include "drumsep/dsp/stft.hpp"
#include "drumsep/nmf/nmfd.hpp"

namespace drumsep::nmf {

enum class Method { Nmfd, SabNmf };

inline std::string_view method_name(Method m) { return m == Method::Nmfd ? "nmfd" : "sab-nmf"; }

inline Method method_from_name(std::string_view s) {
  if (s == "nmfd") return Method::Nmfd;
  if (s == "sab-nmf" || s == "sabnmf") return Method::SabNmf;
  throw ConfigError("unknown baseline method '" + std::string(s) + "' (nmfd | sab-nmf)");
}

struct BaselineConfig {
  Method method = Method::Nmfd;
  NmfdConfig nmf;  // mode defaults: nmfd fixed, sab-nmf semi-adaptive
  dsp::StftConfig stft{1024, 256};
  model::WienerConfig wiener{1.0, 1e-7, true};

  static BaselineConfig for_method(Method m) {
    BaselineConfig c;
    c.method = m;
    c.nmf.mode = m == Method::Nmfd ? BasesMode::Fixed : BasesMode::SemiAdaptive;
    return c;
  }
};

inline std::array<AudioClip, kNumStems> baseline_separate(const AudioClip& mixture,
                                                          const TemplateDictionary& dict,
                                                          const BaselineConfig& cfg) {
  dict.validate();
  if (dict.num_bins != cfg.stft.num_bins())
    throw ConfigError("baseline: dictionary has " + std::to_string(dict.num_bins) +
                      " bins, STFT gives " + std::to_string(cfg.stft.num_bins()));
  const auto spec = dsp::stft(mixture, cfg.stft);
  const auto mag = dsp::magnitude(spec);
  bool any = false;
  for (const auto& m : mag) any = any || m.sum() > 0;
  if (!any) throw DegenerateInputError("baseline: mixture is silent");

  std::array<std::vector<RealMatrix>, kNumStems> gains;
  for (std::size_t c = 0; c < mag.size(); ++c) {
    if (!(mag[c].sum() > 0)) {
      for (auto& g : gains) g.push_back(RealMatrix::Zero(mag[c].rows(), mag[c].cols()));
      continue;
    }
    NmfdConfig nc = cfg.nmf;
    nc.seed = cfg.nmf.seed + c;
    const auto res = cfg.method == Method::Nmfd ? nmfd_decompose(mag[c], dict, nc)
                                                : sabnmf_decompose(mag[c], dict, nc);
    model::StemMagnitudes est;
    for (const auto& s : res.stems) est.push_back({s});
    auto masks = model::wiener_masks(est, cfg.wiener);
    for (std::size_t i = 0; i < kNumStems; ++i) gains[i].push_back(std::move(masks[i][0]));
  }
  std::array<AudioClip, kNumStems> out;
  for (std::size_t i = 0; i < kNumStems; ++i) {
    out[i] = dsp::istft(dsp::apply_gain(spec, gains[i]));
    out[i].sample_rate = mixture.sample_rate;
  }
  return out;
}

}  // namespace drumsep::nmf
