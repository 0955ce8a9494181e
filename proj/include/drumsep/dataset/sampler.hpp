// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Procedural drum-kit sampler. Ten kits are seeded perturbations of one
// nominal recipe set; every one-shot is synthesized once per kit and cached.
//
// Rendered hits are rounded to multiples of 2^-20. Sums of such values are
// exact in double precision (and in float32 below magnitude 8), so mixtures
// built from stems do not depend on summation order.

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/common.hpp"
#include "drumsep/dataset/notes.hpp"

namespace drumsep::dataset {

inline constexpr double kAmplitudeGrid = 1.0 / 1048576.0;  // 2^-20
inline constexpr int kNumKits = 10;

inline double to_grid(double x) { return std::nearbyint(x / kAmplitudeGrid) * kAmplitudeGrid; }

/// RBJ cookbook biquad, direct form I.
class Biquad {
 public:
  enum class Kind { LowPass, HighPass, BandPass };

  Biquad(Kind kind, double freq, double q, double rate) {
    const double w = 2 * std::numbers::pi * std::min(freq, 0.49 * rate) / rate;
    const double alpha = std::sin(w) / (2 * q), c = std::cos(w);
    double b0, b1, b2;
    switch (kind) {
      case Kind::LowPass: b0 = (1 - c) / 2, b1 = 1 - c, b2 = (1 - c) / 2; break;
      case Kind::HighPass: b0 = (1 + c) / 2, b1 = -(1 + c), b2 = (1 + c) / 2; break;
      default: b0 = alpha, b1 = 0, b2 = -alpha; break;
    }
    const double a0 = 1 + alpha;
    b_ = {b0 / a0, b1 / a0, b2 / a0};
    a_ = {-2 * c / a0, (1 - alpha) / a0};
  }

  double operator()(double x) {
    const double y = b_[0] * x + b_[1] * x1_ + b_[2] * x2_ - a_[0] * y1_ - a_[1] * y2_;
    x2_ = x1_, x1_ = x, y2_ = y1_, y1_ = y;
    return y;
  }

 private:
  std::array<double, 3> b_{};
  std::array<double, 2> a_{};
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

/// Synthesis parameters of one instrument.
struct Recipe {
  double tone_start = 0;  // Hz; 0 disables the tonal part
  double tone_end = 0;    // sweep target
  double sweep_tau = 0.03;
  double tone_tau = 0.2;  // amplitude decay constants, seconds
  double tone_level = 1;
  double noise_tau = 0;   // 0 disables the noise part
  double noise_level = 0;
  Biquad::Kind noise_filter = Biquad::Kind::HighPass;
  double filter_freq = 5000;
  double filter_q = 0.7;
  double tilt = 0;        // one-pole low-pass blend applied to the noise, 0..1
  double peak = 0.35;     // peak amplitude at full velocity
  double pan = 0;         // -1 left .. +1 right
};

inline std::array<Recipe, kNumInstruments> nominal_recipes() {
  using K = Biquad::Kind;
  std::array<Recipe, kNumInstruments> r;
  // kick: sine sweeping ~60 -> 45 Hz plus a short click
  r[0] = {60, 45, 0.04, 0.18, 1.0, 0.004, 0.3, K::LowPass, 3000, 0.7, 0, 0.45, 0};
  // snare: 190 Hz body with band-passed noise
  r[1] = {190, 180, 0.02, 0.07, 0.6, 0.14, 1.0, K::BandPass, 3500, 0.8, 0, 0.35, 0.05};
  // toms at three distinct pitches
  r[2] = {210, 190, 0.05, 0.25, 1.0, 0.02, 0.1, K::BandPass, 1200, 1.0, 0, 0.3, -0.35};
  r[3] = {145, 130, 0.05, 0.3, 1.0, 0.02, 0.1, K::BandPass, 900, 1.0, 0, 0.3, 0.1};
  r[4] = {95, 85, 0.06, 0.38, 1.0, 0.02, 0.1, K::BandPass, 700, 1.0, 0, 0.32, 0.4};
  // hi-hats: high-passed noise, short and long
  r[5] = {0, 0, 0, 0, 0, 0.035, 1.0, K::HighPass, 7500, 0.7, 0, 0.2, -0.5};
  r[6] = {0, 0, 0, 0, 0, 0.3, 1.0, K::HighPass, 6500, 0.7, 0, 0.2, -0.5};
  // cymbals: long shaped noise, bright crash and darker ride with a bell partial
  r[7] = {0, 0, 0, 0, 0, 0.75, 1.0, K::HighPass, 3000, 0.5, 0.1, 0.25, -0.6};
  r[8] = {3200, 3200, 1, 0.5, 0.15, 0.65, 1.0, K::BandPass, 5200, 0.9, 0.45, 0.2, 0.6};
  return r;
}

/// Kit k's recipes: nominal values scaled by factors drawn from seed k.
inline std::array<Recipe, kNumInstruments> kit_recipes(int kit) {
  if (kit < 0) throw ConfigError("kit id must be non-negative");
  auto r = nominal_recipes();
  std::mt19937_64 rng(0x6b697473ULL + static_cast<std::uint64_t>(kit) * 7919);
  std::uniform_real_distribution<double> pitch(0.85, 1.18), decay(0.75, 1.3), filt(0.8, 1.25),
      level(0.75, 1.0), pan(-0.15, 0.15);
  for (auto& x : r) {
    const double p = pitch(rng);
    x.tone_start *= p;
    x.tone_end *= p;
    x.tone_tau *= decay(rng);
    x.noise_tau *= decay(rng);
    x.filter_freq *= filt(rng);
    x.peak *= level(rng);
    x.pan = std::clamp(x.pan + pan(rng), -1.0, 1.0);
  }
  return r;
}

/// Mono one-shot of a recipe, peak-normalized to recipe.peak and truncated at
/// -80 dB of the peak. The first sample is nonzero.
inline std::vector<double> synthesize(const Recipe& rc, std::uint64_t noise_seed, int rate) {
  const double longest = std::max(rc.tone_start > 0 ? rc.tone_tau : 0.0, rc.noise_tau);
  const index_t n = static_cast<index_t>(std::ceil(9.3 * longest * rate)) + 1;
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  if (rc.tone_start > 0) {
    double phase = 0;
    for (index_t i = 0; i < n; ++i) {
      const double t = double(i) / rate;
      const double f = rc.tone_end + (rc.tone_start - rc.tone_end) * std::exp(-t / rc.sweep_tau);
      y[i] += rc.tone_level * std::cos(phase) * std::exp(-t / rc.tone_tau);
      phase += 2 * std::numbers::pi * f / rate;
    }
  }
  if (rc.noise_tau > 0) {
    std::mt19937_64 rng(noise_seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Biquad bq(rc.noise_filter, rc.filter_freq, rc.filter_q, rate);
    double lp = 0;
    for (index_t i = 0; i < n; ++i) {
      double s = bq(u(rng));
      lp += 0.2 * (s - lp);
      s = (1 - rc.tilt) * s + rc.tilt * lp;
      y[i] += rc.noise_level * s * std::exp(-double(i) / rate / rc.noise_tau);
    }
  }
  double peak = 0;
  for (double v : y) peak = std::max(peak, std::abs(v));
  if (!(peak > 0)) throw NumericError("sampler: recipe produced silence");
  index_t last = 0;
  for (index_t i = 0; i < n; ++i)
    if (std::abs(y[i]) >= 1e-4 * peak) last = i;
  y.resize(static_cast<std::size_t>(last + 1));
  for (double& v : y) v *= rc.peak / peak;
  if (y[0] == 0) y[0] = rc.peak * 1e-3;
  return y;
}

class DrumKitSampler {
 public:
  explicit DrumKitSampler(int kit, double velocity_exponent = 1.6, int rate = kSampleRate)
      : kit_(kit), exponent_(velocity_exponent), rate_(rate), recipes_(kit_recipes(kit)) {
    if (!(velocity_exponent > 0)) throw ConfigError("sampler: velocity exponent must be > 0");
    for (int i = 0; i < kNumInstruments; ++i)
      shots_[i] = synthesize(recipes_[i], (static_cast<std::uint64_t>(kit) << 8) + i + 1, rate);
  }

  int kit() const { return kit_; }
  int sample_rate() const { return rate_; }
  double velocity_exponent() const { return exponent_; }
  const Recipe& recipe(Instrument i) const { return recipes_[instrument_index(i)]; }
  const std::vector<double>& one_shot(Instrument i) const { return shots_[instrument_index(i)]; }
  index_t one_shot_length(Instrument i) const {
    return static_cast<index_t>(one_shot(i).size());
  }

  double velocity_gain(int velocity) const {
    if (velocity < 1 || velocity > 127) throw DomainError("sampler: velocity outside 1..127");
    return std::pow(velocity / 127.0, exponent_);
  }

  /// Constant-power pan gains (left, right).
  std::array<double, 2> pan_gains(Instrument i) const {
    const double th = (recipe(i).pan + 1) * std::numbers::pi / 4;
    return {std::cos(th) * std::numbers::sqrt2, std::sin(th) * std::numbers::sqrt2};
  }

  /// Stereo hit on the amplitude grid.
  AudioClip hit(Instrument i, int velocity) const {
    const auto& s = one_shot(i);
    const double g = velocity_gain(velocity);
    const auto pan = pan_gains(i);
    AudioClip out(2, static_cast<index_t>(s.size()), rate_);
    for (int c = 0; c < 2; ++c)
      for (std::size_t n = 0; n < s.size(); ++n)
        out.samples(c, static_cast<index_t>(n)) = to_grid(g * pan[c] * s[n]);
    return out;
  }

 private:
  int kit_;
  double exponent_;
  int rate_;
  std::array<Recipe, kNumInstruments> recipes_;
  std::array<std::vector<double>, kNumInstruments> shots_;
};

}  // namespace drumsep::dataset
