// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <map>
#include <numbers>

#include "drumsep/augment/ops.hpp"
#include "drumsep/augment/pipeline.hpp"
#include "drumsep/augment/pitch_shift.hpp"
#include "drumsep/augment/rng.hpp"
#include "drumsep/dataset/patterns.hpp"
#include "drumsep/dataset/render.hpp"
#include "oracles.hpp"

using namespace drumsep;
using namespace drumsep::augment;

namespace {

bool bit_equal(const AudioClip& a, const AudioClip& b) {
  return a.channels() == b.channels() && a.length() == b.length() &&
         (a.samples == b.samples).all();
}

AudioClip tone(double hz, index_t len, double amp = 0.5) {
  AudioClip c(2, len);
  for (index_t n = 0; n < len; ++n)
    c.samples.col(n).setConstant(amp * std::sin(2 * std::numbers::pi * hz * n / kSampleRate));
  return c;
}

AudioClip noise(index_t len, std::uint64_t seed, double amp = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amp);
  AudioClip c(2, len);
  for (index_t i = 0; i < c.samples.size(); ++i) c.samples.data()[i] = g(rng);
  return c;
}

// Peak frequency and the share of energy within +-`band` Hz of it, from a
// Hann-windowed naive DFT of `n` samples starting at `start`.
std::pair<double, double> spectral_peak(const AudioClip& c, index_t start, std::size_t n,
                                        double band) {
  const auto w = oracle::hann(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = w[i] * c.samples(0, start + index_t(i));
  const auto X = oracle::naive_dft(x);
  std::size_t best = 0;
  double total = 0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    total += std::norm(X[k]);
    if (std::abs(X[k]) > std::abs(X[best])) best = k;
  }
  const double hz_per_bin = double(kSampleRate) / double(n);
  double near = 0;
  for (std::size_t k = 0; k < X.size(); ++k)
    if (std::abs(double(k) - double(best)) * hz_per_bin <= band) near += std::norm(X[k]);
  return {best * hz_per_bin, near / total};
}

const dataset::DrumKitSampler& sampler(int k) {
  static std::map<int, dataset::DrumKitSampler> cache;
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, dataset::DrumKitSampler(k)).first;
  return it->second;
}

// One-second window of pattern 2 for any kit.
PatternSource pattern_source() {
  return [](int kit) {
    static std::map<int, dataset::GroupedStems> cache;
    auto it = cache.find(kit);
    if (it == cache.end()) {
      const auto sc = dataset::map_notes(dataset::make_pattern(2, 1.0));
      it = cache.emplace(kit, dataset::group_to_five(dataset::render_stems(sc, sampler(kit)))).first;
    }
    StemClips out;
    for (int i = 0; i < kNumStems; ++i) out[i] = slice(it->second.stems[i], 0, kSampleRate);
    return out;
  };
}

}  // namespace

// ---- RNG ---------------------------------------------------------------------

TEST(Rng, SeededStreamsRepeatAndCountDraws) {
  RngStream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    (void)c.next();
  }
  EXPECT_EQ(a.draws(), 100u);
  EXPECT_NE(RngStream(42).next(), RngStream(43).next());
  EXPECT_NE(RngStream::for_stream(7, 0).next(), RngStream::for_stream(7, 1).next());
  EXPECT_EQ(RngStream::for_stream(7, 3).next(), RngStream::for_stream(7, 3).next());
  RngStream r(1);
  for (int i = 0; i < 1000; ++i) {
    const int v = r.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

// ---- kit swap and doubling ---------------------------------------------------

TEST(KitSwap, SingleKitIsIdentity) {
  RngStream rng(1);
  const std::vector<int> one = {4};
  const auto a = kit_swap(one, rng);
  EXPECT_TRUE(a.identity);
  for (int k : a.kits) EXPECT_EQ(k, 4);
  EXPECT_THROW(kit_swap(std::vector<int>{}, rng), ConfigError);
}

TEST(KitSwap, ReproducibleAndUniform) {
  const std::vector<int> kits = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  RngStream a(5), b(5);
  EXPECT_EQ(kit_swap(kits, a).kits, kit_swap(kits, b).kits);

  const int trials = 10000;
  std::array<std::array<int, 10>, kNumStems> counts{};
  RngStream rng(2024);
  for (int t = 0; t < trials; ++t) {
    const auto s = kit_swap(kits, rng);
    for (int i = 0; i < kNumStems; ++i) ++counts[i][s.kits[i]];
  }
  // per stem: chi-square goodness of fit against the uniform distribution
  std::array<int, 10> pooled{};
  for (int i = 0; i < kNumStems; ++i) {
    double chi2 = 0;
    for (int k = 0; k < 10; ++k) {
      chi2 += std::pow(counts[i][k] - trials / 10.0, 2) / (trials / 10.0);
      pooled[k] += counts[i][k];
    }
    EXPECT_LT(chi2, 27.88) << "stem " << i;  // 9 dof, p = 0.001
  }
  // each kit within 5% (relative) of 10% over the pooled assignments
  for (int k = 0; k < 10; ++k)
    EXPECT_NEAR(double(pooled[k]) / (kNumStems * trials), 0.10, 0.05 * 0.10) << "kit " << k;
}

TEST(Doubling, AverageProperties) {
  const AudioClip x = noise(2000, 1), y = noise(2000, 2, 0.8);
  EXPECT_TRUE(bit_equal(doubling(x, x), x));
  const AudioClip half = doubling(x, AudioClip(2, 2000));
  EXPECT_TRUE(((half.samples - x.samples * 0.5).abs() == 0).all());
  EXPECT_LE(doubling(x, y).peak(), std::max(x.peak(), y.peak()));
  EXPECT_THROW(doubling(x, noise(1999, 3)), AlignmentError);
  RngStream rng(3);
  const std::vector<int> kits = {2, 5};
  for (int i = 0; i < 20; ++i) EXPECT_EQ(other_kit(kits, 2, rng), 5);
  EXPECT_EQ(other_kit(std::vector<int>{2}, 2, rng), -1);
}

// ---- pitch shift -------------------------------------------------------------

TEST(PitchShift, ZeroShiftIsNearIdentity) {
  const AudioClip x = noise(30000, 4);
  const AudioClip y = pitch_shift(x, 0);
  ASSERT_EQ(y.length(), x.length());
  const double rel = std::sqrt((y.samples - x.samples).square().sum() / x.samples.square().sum());
  EXPECT_LT(rel, 1e-3);
}

TEST(PitchShift, OctaveUpMovesTheSpectralPeak) {
  const AudioClip x = tone(440.0, 44100);
  const AudioClip y = pitch_shift(x, 12, 12);
  EXPECT_EQ(y.length(), x.length());
  const auto [hz, share] = spectral_peak(y, 16384, 8192, 30.0);
  EXPECT_NEAR(hz, 880.0, 44100.0 / 8192);
  EXPECT_GT(share, 0.99);
}

TEST(PitchShift, SemitoneStepsScaleFrequencyWithLowArtifacts) {
  for (int s : {-3, -1, 2, 3}) {
    const AudioClip y = pitch_shift(tone(1000.0, 40000), s);
    const auto [hz, share] = spectral_peak(y, 12000, 8192, 30.0);
    EXPECT_NEAR(hz, 1000.0 * std::pow(2.0, s / 12.0), 44100.0 / 8192) << s;
    // energy away from the shifted tone stays below -40 dB
    EXPECT_LT(10 * std::log10(std::max(1e-30, 1 - share)), -40.0) << s;
  }
}

TEST(PitchShift, LengthRangeAndDeterminism) {
  const AudioClip x = noise(12345, 5);
  for (int s = -3; s <= 3; ++s) EXPECT_EQ(pitch_shift(x, s).length(), x.length());
  EXPECT_TRUE(bit_equal(pitch_shift(x, 2), pitch_shift(x, 2)));
  EXPECT_THROW(pitch_shift(x, 4), ConfigError);
  EXPECT_THROW(pitch_shift(x, -4), ConfigError);
}

// ---- saturation, channel swap, remix -----------------------------------------

TEST(Saturate, TanhProperties) {
  AudioClip z(2, 10);
  EXPECT_TRUE(saturate(z, 3.0).is_silent());
  AudioClip small(2, 100);
  for (index_t n = 0; n < 100; ++n) small.samples.col(n).setConstant((n - 50) * 2e-4 / 5.0);
  const AudioClip s = saturate(small, 5.0);
  EXPECT_LT((s.samples - small.samples * 5.0).abs().maxCoeff(), 1e-6);
  AudioClip big = noise(1000, 6, 50.0);
  big.samples(0, 0) = 1e6;
  EXPECT_LT(saturate(big, 5.0).peak(), 1.0);
  EXPECT_THROW(saturate(z, 0.5), ConfigError);
}

TEST(ChannelSwap, InvolutionAndInvariants) {
  const AudioClip x = noise(500, 7);
  const AudioClip y = channel_swap(x);
  EXPECT_TRUE(bit_equal(channel_swap(y), x));
  EXPECT_TRUE((y.samples.row(0) == x.samples.row(1)).all());
  EXPECT_NEAR(y.energy(), x.energy(), 1e-12 * x.energy());
  AudioClip sym = noise(500, 8);
  sym.samples.row(1) = sym.samples.row(0);
  EXPECT_TRUE(bit_equal(channel_swap(sym), sym));
  EXPECT_THROW(channel_swap(AudioClip(1, 10)), ShapeError);
}

TEST(Remix, GainsAndLinearity) {
  StemClips st;
  for (int i = 0; i < kNumStems; ++i) st[i] = noise(800, 10 + i);
  const auto same = remix(st, {1, 1, 1, 1, 1});
  for (int i = 0; i < kNumStems; ++i) EXPECT_TRUE(bit_equal(same[i], st[i]));
  const std::array<double, kNumStems> g = {0.1, 0.5, 1.0, 0.25, 0.75};
  const auto r = remix(st, g);
  const double rms_db = 10 * std::log10(r[0].energy() / st[0].energy());
  EXPECT_NEAR(rms_db, -20.0, 1e-6);
  AudioClip want(2, 800);
  for (int i = 0; i < kNumStems; ++i) want.samples += g[i] * st[i].samples;
  EXPECT_LT((mix(r).samples - want.samples).abs().maxCoeff(), 1e-15);
  EXPECT_THROW(remix(st, {0.05, 1, 1, 1, 1}), ConfigError);
  EXPECT_THROW(remix(st, {1, 1, 1, 1, 1.5}), ConfigError);
}

// ---- pipeline ------------------------------------------------------------------

TEST(Pipeline, AllZeroProbabilitiesPassThrough) {
  const auto src = pattern_source();
  const std::vector<int> kits = {0, 1, 2};
  RngStream rng(1);
  const auto r = augment_pipeline(src, kits, 1, AugmentConfig::none(), rng);
  const auto orig = src(1);
  for (int i = 0; i < kNumStems; ++i) EXPECT_TRUE(bit_equal(r.stems[i], orig[i]));
  // the dataset mixture is the exact sum of its stems
  const auto sc = dataset::map_notes(dataset::make_pattern(2, 1.0));
  const auto full = dataset::render_stems(sc, sampler(1)).mixture;
  EXPECT_TRUE(bit_equal(r.mixture, slice(full, 0, kSampleRate)));
}

TEST(Pipeline, MatchesHandComposition) {
  const auto src = pattern_source();
  const std::vector<int> kits = {0, 1, 2, 3};
  AugmentConfig cfg;
  cfg.p_ks = cfg.p_cs = cfg.p_db = cfg.p_ps = cfg.p_st = cfg.p_rx = 1;
  cfg.p_disable_all = 0;
  cfg.gamma_min = cfg.gamma_max = 1.0;
  RngStream rng(99);
  const auto r = augment_pipeline(src, kits, 0, cfg, rng);
  EXPECT_TRUE(r.plan.kit_swap && r.plan.remix && !r.plan.disabled);
  AudioClip sum(2, kSampleRate);
  for (int i = 0; i < kNumStems; ++i) {
    const auto& p = r.plan.stems[i];
    ASSERT_GE(p.double_kit, 0);
    ASSERT_NE(p.double_kit, p.kit);
    EXPECT_TRUE(p.shift && p.saturate && p.swap);
    EXPECT_GE(p.beta, 1.0);
    EXPECT_LE(p.beta, 5.0);
    AudioClip x = src(p.kit)[i];
    x.samples = (x.samples + src(p.double_kit)[i].samples) * 0.5;
    if (p.semitones != 0) x = pitch_shift(x, p.semitones);
    x.samples = (x.samples * p.beta).tanh();
    x.samples.row(0).swap(x.samples.row(1));
    EXPECT_LT((x.samples - r.stems[i].samples).abs().maxCoeff(), 1e-15) << i;
    sum.samples += r.stems[i].samples;
  }
  EXPECT_TRUE(bit_equal(sum, r.mixture));
}

TEST(Pipeline, SuperpositionAndSaturationBoundOver100Runs) {
  const auto src = pattern_source();
  const std::vector<int> kits = {0, 1, 2};
  AugmentConfig cfg;
  int saturated = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng = RngStream::for_stream(11, seed);
    const auto r = augment_pipeline(src, kits, static_cast<int>(seed % 3), cfg, rng);
    AudioClip sum = r.stems[0];
    for (int i = 1; i < kNumStems; ++i) sum.samples += r.stems[i].samples;
    ASSERT_TRUE(bit_equal(sum, r.mixture)) << seed;
    for (int i = 0; i < kNumStems; ++i)
      if (!r.plan.disabled && r.plan.stems[i].saturate) {
        ++saturated;
        EXPECT_LT(r.stems[i].peak(), 1.0);
      }
  }
  EXPECT_GT(saturated, 10);
}

TEST(Pipeline, DeterministicGivenSeed) {
  const auto src = pattern_source();
  const std::vector<int> kits = {0, 1, 2};
  AugmentConfig cfg;
  cfg.p_disable_all = 0;
  RngStream a(5), b(5);
  const auto x = augment_pipeline(src, kits, 0, cfg, a);
  const auto y = augment_pipeline(src, kits, 0, cfg, b);
  EXPECT_TRUE(bit_equal(x.mixture, y.mixture));
  EXPECT_EQ(a.draws(), b.draws());
}

TEST(Pipeline, EmpiricalRatesMatchConfiguredProbabilities) {
  const std::vector<int> kits = {0, 1, 2, 3, 4, 5};
  AugmentConfig cfg;
  RngStream rng(77);
  const int trials = 10000;
  int disabled = 0, enabled = 0, ks = 0, rx = 0, db = 0, ps = 0, st = 0, cs = 0;
  for (int t = 0; t < trials; ++t) {
    const auto p = draw_plan(cfg, kits, 0, rng);
    if (p.disabled) {
      ++disabled;
      continue;
    }
    ++enabled;
    ks += p.kit_swap;
    rx += p.remix;
    for (const auto& s : p.stems) {
      db += s.double_kit >= 0;
      ps += s.shift;
      st += s.saturate;
      cs += s.swap;
    }
  }
  const double n = enabled, ns = 5.0 * enabled;
  EXPECT_NEAR(disabled / double(trials), cfg.p_disable_all, 0.02);
  EXPECT_NEAR(ks / n, cfg.p_ks, 0.02);
  EXPECT_NEAR(rx / n, cfg.p_rx, 0.02);
  EXPECT_NEAR(db / ns, cfg.p_db, 0.02);
  EXPECT_NEAR(ps / ns, cfg.p_ps, 0.02);
  EXPECT_NEAR(st / ns, cfg.p_st, 0.02);
  EXPECT_NEAR(cs / ns, cfg.p_cs, 0.02);
}

TEST(Pipeline, ConfigValidation) {
  AugmentConfig c;
  c.p_ps = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.gamma_min = 0.05;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.beta_min = 4, c.beta_max = 2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.semitone_max = 5;
  EXPECT_THROW(c.validate(), ConfigError);
}
