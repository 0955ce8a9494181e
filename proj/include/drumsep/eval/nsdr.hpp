// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <span>
#include <string>

#include "drumsep/audio.hpp"

namespace drumsep::eval {

struct EvalConfig {
  double epsilon = 1e-7;
  int stems = kNumStems;

  void validate() const {
    if (!(epsilon > 0) || !std::isfinite(epsilon))
      throw ConfigError("eval: epsilon must be positive, got " + std::to_string(epsilon));
    if (stems < 1) throw ConfigError("eval: stem count must be >= 1");
  }
};

/// 10 log10((sum |x|^2 + eps) / (sum |x - xhat|^2 + eps)) over all samples
/// and channels. A silent estimate scores exactly 0 dB, as does silence
/// against silence.
inline double nsdr_stem(const AudioClip& truth, const AudioClip& estimate,
                        const EvalConfig& cfg = {}) {
  cfg.validate();
  require_same_layout(truth, estimate, "nsdr");
  const double signal = truth.samples.square().sum();
  const double distortion = (truth.samples - estimate.samples).square().sum();
  if (!std::isfinite(signal) || !std::isfinite(distortion))
    throw NumericError("nsdr: non-finite energy");
  return 10.0 * std::log10((signal + cfg.epsilon) / (distortion + cfg.epsilon));
}

/// Mean over stems of a single clip.
inline double nsdr_mean(std::span<const double> per_stem) {
  if (per_stem.empty()) throw EmptyInputError("nsdr: no stems to average");
  double s = 0;
  for (double v : per_stem) s += v;
  return s / static_cast<double>(per_stem.size());
}

}  // namespace drumsep::eval
