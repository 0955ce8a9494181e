// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Stochastic composition of the six augmentations. A plan is drawn first and
// then applied, so the random choices of a run can be inspected and replayed:
//
//   master disable?  -> pass-through
//   kit swap (once per mixture), remix (once per mixture)
//   per stem: doubling, pitch shift, saturation, channel swap
//
// Application order per stem is KS, DB, PS, ST, CS, RX, and the mixture is
// recomputed as the sum of the augmented stems.

#include <array>
#include <functional>
#include <map>
#include <span>

#include "drumsep/augment/ops.hpp"
#include "drumsep/augment/pitch_shift.hpp"
#include "drumsep/augment/rng.hpp"

namespace drumsep::augment {

struct AugmentConfig {
  double p_ks = 0.5;
  double p_cs = 0.5;
  double p_db = 0.3;
  double p_ps = 0.3;
  double p_st = 0.3;
  double p_rx = 0.3;
  double p_disable_all = 0.5;
  double beta_min = 1.0, beta_max = 5.0;
  double gamma_min = 0.1, gamma_max = 1.0;
  int semitone_min = -3, semitone_max = 3;
  std::uint64_t seed = 0;

  void validate() const {
    for (double p : {p_ks, p_cs, p_db, p_ps, p_st, p_rx, p_disable_all})
      if (!(p >= 0 && p <= 1)) throw ConfigError("augment: probabilities must lie in [0, 1]");
    if (!(beta_min >= kBetaMin && beta_min <= beta_max && beta_max <= kBetaMax))
      throw ConfigError("augment: beta range must be ordered within [1, 5]");
    if (!(gamma_min >= kGammaMin && gamma_min <= gamma_max && gamma_max <= kGammaMax))
      throw ConfigError("augment: gamma range must be ordered within [0.1, 1]");
    if (semitone_min > semitone_max || semitone_min < -3 || semitone_max > 3)
      throw ConfigError("augment: semitone range must be ordered within [-3, 3]");
  }

  /// Every probability zero: the pipeline is a pass-through.
  static AugmentConfig none() {
    AugmentConfig c;
    c.p_ks = c.p_cs = c.p_db = c.p_ps = c.p_st = c.p_rx = c.p_disable_all = 0;
    return c;
  }
};

struct StemPlan {
  int kit = 0;
  int double_kit = -1;  // second kit for doubling, -1 when not doubled
  bool shift = false;
  int semitones = 0;
  bool saturate = false;
  double beta = 1.0;
  bool swap = false;
  double gamma = 1.0;
};

struct AugmentPlan {
  bool disabled = false;
  bool kit_swap = false;
  bool remix = false;
  std::array<StemPlan, kNumStems> stems{};
};

/// The five grouped stems of the current pattern rendered with a given kit.
using PatternSource = std::function<StemClips(int kit)>;

struct AugmentResult {
  AudioClip mixture;
  StemClips stems;
  AugmentPlan plan;
};

inline AugmentPlan draw_plan(const AugmentConfig& cfg, std::span<const int> kits, int base_kit,
                             RngStream& rng) {
  cfg.validate();
  AugmentPlan plan;
  for (auto& s : plan.stems) s.kit = base_kit;
  plan.disabled = rng.bernoulli(cfg.p_disable_all);
  if (plan.disabled) return plan;

  plan.kit_swap = rng.bernoulli(cfg.p_ks);
  if (plan.kit_swap) {
    const auto a = kit_swap(kits, rng);
    for (int i = 0; i < kNumStems; ++i) plan.stems[i].kit = a.kits[i];
  }
  plan.remix = rng.bernoulli(cfg.p_rx);
  if (plan.remix)
    for (auto& s : plan.stems) s.gamma = rng.uniform(cfg.gamma_min, cfg.gamma_max);
  for (auto& s : plan.stems) {
    if (rng.bernoulli(cfg.p_db)) s.double_kit = other_kit(kits, s.kit, rng);
    s.shift = rng.bernoulli(cfg.p_ps);
    if (s.shift) s.semitones = rng.uniform_int(cfg.semitone_min, cfg.semitone_max);
    s.saturate = rng.bernoulli(cfg.p_st);
    if (s.saturate) s.beta = rng.uniform(cfg.beta_min, cfg.beta_max);
    s.swap = rng.bernoulli(cfg.p_cs);
  }
  return plan;
}

inline AugmentResult apply_plan(const AugmentPlan& plan, const PatternSource& source) {
  std::map<int, StemClips> cache;
  auto stems_of = [&](int kit) -> const StemClips& {
    auto it = cache.find(kit);
    if (it == cache.end()) it = cache.emplace(kit, source(kit)).first;
    return it->second;
  };
  AugmentResult r;
  r.plan = plan;
  for (int i = 0; i < kNumStems; ++i) {
    const StemPlan& s = plan.stems[i];
    AudioClip x = stems_of(s.kit)[i];
    if (!plan.disabled) {
      if (s.double_kit >= 0) x = doubling(x, stems_of(s.double_kit)[i]);
      if (s.shift && s.semitones != 0) x = pitch_shift(x, s.semitones);
      if (s.saturate) x = saturate(x, s.beta);
      if (s.swap) x = channel_swap(x);
    }
    r.stems[i] = std::move(x);
  }
  if (!plan.disabled && plan.remix) {
    std::array<double, kNumStems> gammas;
    for (int i = 0; i < kNumStems; ++i) gammas[i] = plan.stems[i].gamma;
    r.stems = remix(r.stems, gammas);
  }
  r.mixture = mix(r.stems);
  return r;
}

inline AugmentResult augment_pipeline(const PatternSource& source, std::span<const int> kits,
                                      int base_kit, const AugmentConfig& cfg, RngStream& rng) {
  return apply_plan(draw_plan(cfg, kits, base_kit, rng), source);
}

}  // namespace drumsep::augment
