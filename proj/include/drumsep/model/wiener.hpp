// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Alpha-Wiener refinement of per-stem magnitude estimates. Each estimate is
// raised to the power alpha and renormalized against the sum over all stems:
//
//   M~_i = Xhat_i^alpha / (sum_j Xhat_j^alpha + eps),   Xhat~_i = M~_i * X

#include <cmath>
#include <string>
#include <vector>

#include "drumsep/common.hpp"
#include "drumsep/dsp/stft.hpp"

namespace drumsep::model {

struct WienerConfig {
  double alpha = 1.0;
  double epsilon = 1e-7;
  bool enabled = false;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0))
      throw ConfigError("wiener: alpha must be in (0, 2], got " + std::to_string(alpha));
    if (!(epsilon > 0.0)) throw ConfigError("wiener: epsilon must be > 0");
  }
};

/// One estimate per source, each a list of per-channel (bins x frames)
/// magnitudes.
using StemMagnitudes = std::vector<std::vector<dsp::RealMatrix>>;

namespace detail {

inline void check_estimates(const StemMagnitudes& est) {
  if (est.empty()) throw EmptyInputError("wiener: no estimates");
  const auto& ref = est.front();
  for (std::size_t s = 0; s < est.size(); ++s) {
    if (est[s].size() != ref.size())
      throw ShapeError("wiener: estimate " + std::to_string(s) + " has a different channel count");
    for (std::size_t c = 0; c < ref.size(); ++c) {
      if (est[s][c].rows() != ref[c].rows() || est[s][c].cols() != ref[c].cols())
        throw ShapeError("wiener: estimate " + std::to_string(s) + " has a different shape");
      if ((est[s][c].array() < 0.0).any() || !est[s][c].allFinite())
        throw DomainError("wiener: estimate " + std::to_string(s) +
                          " has negative or non-finite entries");
    }
  }
}

}  // namespace detail

/// Soft masks M~_i.
inline StemMagnitudes wiener_masks(const StemMagnitudes& estimates, const WienerConfig& cfg) {
  cfg.validate();
  detail::check_estimates(estimates);
  const std::size_t n = estimates.size();
  StemMagnitudes masks(n);
  for (std::size_t c = 0; c < estimates[0].size(); ++c) {
    const auto rows = estimates[0][c].rows(), cols = estimates[0][c].cols();
    std::vector<dsp::RealMatrix> powered;
    powered.reserve(n);
    dsp::RealMatrix denom = dsp::RealMatrix::Constant(rows, cols, cfg.epsilon);
    for (std::size_t s = 0; s < n; ++s) {
      powered.push_back(cfg.alpha == 1.0 ? estimates[s][c]
                                         : dsp::RealMatrix(estimates[s][c].array().pow(cfg.alpha)));
      denom += powered.back();
    }
    for (std::size_t s = 0; s < n; ++s)
      masks[s].push_back(powered[s].cwiseQuotient(denom));
  }
  return masks;
}

/// Refined magnitudes M~_i * X.
inline StemMagnitudes wiener_combine(const StemMagnitudes& estimates,
                                     const std::vector<dsp::RealMatrix>& mixture,
                                     const WienerConfig& cfg) {
  auto masks = wiener_masks(estimates, cfg);
  if (mixture.size() != estimates[0].size())
    throw ShapeError("wiener: mixture channel count differs from the estimates");
  for (std::size_t c = 0; c < mixture.size(); ++c) {
    if (mixture[c].rows() != estimates[0][c].rows() || mixture[c].cols() != estimates[0][c].cols())
      throw ShapeError("wiener: mixture shape differs from the estimates");
    if ((mixture[c].array() < 0.0).any()) throw DomainError("wiener: negative mixture magnitude");
  }
  for (auto& m : masks)
    for (std::size_t c = 0; c < m.size(); ++c) m[c] = m[c].cwiseProduct(mixture[c]);
  return masks;
}

}  // namespace drumsep::model
