// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>
#include <random>

#include "drumsep/dataset/render.hpp"
#include "drumsep/dataset/sampler.hpp"
#include "drumsep/nmf/baseline.hpp"
#include "drumsep/nmf/nmfd.hpp"
#include "drumsep/nmf/templates.hpp"
#include "oracles.hpp"

using namespace drumsep;
using namespace drumsep::nmf;

namespace {

std::vector<RealMatrix> random_bases(index_t bins, index_t r, index_t L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RealMatrix> w(static_cast<std::size_t>(L), RealMatrix(bins, r));
  for (auto& m : w)
    for (index_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return w;
}

RealMatrix sparse_activations(index_t r, index_t n, std::mt19937_64& rng, double density = 0.1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMatrix h = RealMatrix::Zero(r, n);
  for (index_t i = 0; i < h.size(); ++i)
    if (u(rng) < density) h.data()[i] = 0.2 + u(rng);
  return h;
}

// Triple loop over (bin, frame, lag).
RealMatrix naive_convolve(const std::vector<RealMatrix>& w, const RealMatrix& h) {
  const index_t bins = w[0].rows(), n = h.cols();
  RealMatrix v = RealMatrix::Zero(bins, n);
  for (index_t f = 0; f < bins; ++f)
    for (index_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < w.size(); ++t)
        for (index_t r = 0; r < h.rows(); ++r)
          if (j - index_t(t) >= 0) v(f, j) += w[t](f, r) * h(r, j - index_t(t));
  return v;
}

RealMatrix uniform(index_t r, index_t c, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  RealMatrix m(r, c);
  for (index_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

std::vector<double> flat(const RealMatrix& m) { return {m.data(), m.data() + m.size()}; }

std::vector<Stem> one_label_each() {
  return {Stem::Kick, Stem::Snare, Stem::Toms, Stem::HiHat, Stem::Cymbals};
}

// Dictionary whose components live on disjoint frequency bands.
TemplateDictionary banded_dictionary(index_t bins, index_t L, std::mt19937_64& rng) {
  auto w = random_bases(bins, kNumStems, L, rng);
  const index_t band = bins / kNumStems;
  for (auto& m : w)
    for (index_t r = 0; r < kNumStems; ++r)
      for (index_t f = 0; f < bins; ++f)
        if (f / band != r) m(f, r) = 0;
  return TemplateDictionary::from_bases(w, one_label_each());
}

bool non_increasing(const std::vector<double>& d) {
  for (std::size_t k = 1; k < d.size(); ++k)
    if (d[k] > d[k - 1] + 1e-9 * std::max(1.0, d[k - 1])) return false;
  return true;
}

const dataset::DrumKitSampler& sampler(int k) {
  static std::map<int, dataset::DrumKitSampler> cache;
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, dataset::DrumKitSampler(k)).first;
  return it->second;
}

TemplateDictionary kit_dictionary(std::initializer_list<int> kits, const dsp::StftConfig& stft) {
  std::vector<IsolatedHit> hits;
  for (int k : kits)
    for (int v : {40, 90, 127})
      for (auto& [inst, clip] : dataset::isolated_hits(sampler(k), v))
        hits.push_back({dataset::stem_of(inst), std::string(dataset::instrument_file_name(inst)),
                        v, std::move(clip)});
  return build_templates(hits, stft, 8);
}

}  // namespace

// ---- divergence and the convolutive model ------------------------------------

TEST(Kl, MatchesScalarOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  RealMatrix v(17, 9), l(17, 9);
  for (index_t i = 0; i < v.size(); ++i) v.data()[i] = u(rng), l.data()[i] = u(rng) + 0.01;
  v(3, 3) = 0;
  EXPECT_NEAR(kl_divergence(v, l), oracle::kl(flat(v), flat(l)), 1e-10);
  // the zero entry meets the model floor
  EXPECT_NEAR(kl_divergence(v, v), 1e-12, 1e-15);
}

TEST(Nmfd, ConvolveMatchesTripleLoop) {
  std::mt19937_64 rng(2);
  const auto w = random_bases(11, 3, 4, rng);
  const RealMatrix h = sparse_activations(3, 13, rng, 0.5);
  EXPECT_LT((detail::convolve(w, h) - naive_convolve(w, h)).cwiseAbs().maxCoeff(), 1e-12);
  // shorter signal than the templates
  const RealMatrix h2 = sparse_activations(3, 2, rng, 1.0);
  EXPECT_LT((detail::convolve(w, h2) - naive_convolve(w, h2)).cwiseAbs().maxCoeff(), 1e-12);
  // components add up to the model
  RealMatrix sum = RealMatrix::Zero(11, 13);
  for (index_t r = 0; r < 3; ++r) sum += component_reconstruction(w, h, r);
  EXPECT_LT((sum - naive_convolve(w, h)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Nmfd, DivergenceNeverIncreasesAcrossSeedsAndModes) {
  for (BasesMode mode : {BasesMode::Fixed, BasesMode::Adaptive, BasesMode::SemiAdaptive})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(100 + seed);
      const auto truth = random_bases(64, 5, 5, rng);
      const RealMatrix v = naive_convolve(truth, sparse_activations(5, 128, rng));
      // start from perturbed templates so the bases have something to learn
      auto start = truth;
      for (auto& m : start) m = m.cwiseProduct(uniform(64, 5, 0.5, 1.5, rng));
      const auto dict = TemplateDictionary::from_bases(start, one_label_each());
      NmfdConfig cfg;
      cfg.mode = mode;
      cfg.iterations = 60;
      cfg.seed = seed;
      const auto res = nmfd_decompose(v, dict, cfg);
      ASSERT_EQ(res.divergence.size(), 60u);
      EXPECT_TRUE(non_increasing(res.divergence)) << bases_mode_name(mode) << " seed " << seed;
      EXPECT_LT(res.divergence.back(), res.divergence.front());
      EXPECT_NEAR(res.divergence.back(), kl_divergence(v, res.model), 1e-9 * v.sum());
      EXPECT_TRUE((res.H.array() >= 0).all());
    }
}

TEST(Nmfd, DisjointTemplatesSeparateExactly) {
  std::mt19937_64 rng(3);
  const auto dict = banded_dictionary(60, 4, rng);
  const RealMatrix h = sparse_activations(kNumStems, 80, rng, 0.15);
  const auto w = dict.convolutive_bases();
  const RealMatrix v = naive_convolve(w, h) + RealMatrix::Constant(60, 80, 1e-9);
  NmfdConfig cfg;
  cfg.iterations = 400;
  const auto res = nmfd_decompose(v, dict, cfg);
  for (index_t r = 0; r < kNumStems; ++r) {
    const RealMatrix want = component_reconstruction(w, h, r);
    EXPECT_LT((res.stems[r] - want).cwiseAbs().sum(), 1e-2 * std::max(want.sum(), 1e-9)) << r;
  }
  EXPECT_LT(res.divergence.back(), 1e-4 * v.sum());
}

TEST(Nmfd, SemiAdaptiveScheduleStartsAtTheTemplates) {
  NmfdConfig cfg;
  cfg.mode = BasesMode::SemiAdaptive;
  cfg.iterations = 10;
  EXPECT_DOUBLE_EQ(cfg.lambda(0), 0.0);
  EXPECT_DOUBLE_EQ(cfg.lambda(5), 0.25);
  EXPECT_DOUBLE_EQ(cfg.lambda(10), 1.0);
  cfg.mode = BasesMode::Fixed;
  EXPECT_DOUBLE_EQ(cfg.lambda(10), 0.0);
}

TEST(Nmfd, FixedModeKeepsTheBases) {
  std::mt19937_64 rng(4);
  const auto dict = banded_dictionary(40, 3, rng);
  const RealMatrix v = naive_convolve(dict.convolutive_bases(), sparse_activations(5, 30, rng, 0.3));
  const auto res = nmfd_decompose(v, dict, {});
  const auto w = dict.convolutive_bases();
  for (std::size_t t = 0; t < w.size(); ++t) EXPECT_EQ(res.W[t], w[t]);
}

TEST(Nmfd, RejectsBadInput) {
  std::mt19937_64 rng(5);
  const auto dict = banded_dictionary(20, 2, rng);
  EXPECT_THROW(nmfd_decompose(RealMatrix::Zero(20, 5), dict, {}), DegenerateInputError);
  RealMatrix neg = RealMatrix::Ones(20, 5);
  neg(2, 2) = -1;
  EXPECT_THROW(nmfd_decompose(neg, dict, {}), DomainError);
  EXPECT_THROW(nmfd_decompose(RealMatrix::Ones(21, 5), dict, {}), ShapeError);
  EXPECT_THROW(TemplateDictionary::from_bases(dict.convolutive_bases(), {Stem::Kick}), ConfigError);
  NmfdConfig bad;
  bad.iterations = 0;
  EXPECT_THROW(nmfd_decompose(RealMatrix::Ones(20, 5), dict, bad), ConfigError);
}

// ---- SAB-NMF -------------------------------------------------------------------

TEST(SabNmf, SilentFramesGetZeroActivations) {
  std::mt19937_64 rng(6);
  const auto dict = banded_dictionary(30, 1, rng);
  RealMatrix v = dict.frame_bases() * sparse_activations(5, 12, rng, 0.6);
  v.col(3).setZero();
  v.col(0).array() += 0.1;
  NmfdConfig cfg;
  cfg.mode = BasesMode::SemiAdaptive;
  const auto res = sabnmf_decompose(v, dict, cfg);
  EXPECT_TRUE(res.H.col(3).isZero());
  for (const auto& s : res.stems) EXPECT_TRUE(s.col(3).isZero());
  EXPECT_TRUE(non_increasing(res.divergence));
}

TEST(SabNmf, FixedBasesRecoverExactActivations) {
  std::mt19937_64 rng(7);
  const auto dict = banded_dictionary(50, 1, rng);
  const RealMatrix h = sparse_activations(5, 20, rng, 0.7) + RealMatrix::Constant(5, 20, 0.05);
  const RealMatrix v = dict.frame_bases() * h;
  NmfdConfig cfg;
  cfg.mode = BasesMode::Fixed;
  const auto res = sabnmf_decompose(v, dict, cfg);
  // disjoint supports: one step of the update already lands on the optimum
  EXPECT_LT((res.H - h).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(res.divergence.back(), 1e-9);
}

TEST(SabNmf, AdaptiveBasesFitBetterThanFixed) {
  std::mt19937_64 rng(8);
  auto dict = banded_dictionary(40, 1, rng);
  const RealMatrix v = (dict.frame_bases() * sparse_activations(5, 16, rng, 0.8)).cwiseProduct(
                           uniform(40, 16, 0.5, 1.5, rng)) +
                       RealMatrix::Constant(40, 16, 1e-3);
  NmfdConfig fixed, semi;
  semi.mode = BasesMode::SemiAdaptive;
  const double df = sabnmf_decompose(v, dict, fixed).divergence.back();
  const double ds = sabnmf_decompose(v, dict, semi).divergence.back();
  EXPECT_LT(ds, df);
}

// ---- grouping and Wiener refinement --------------------------------------------

TEST(Components, WienerStemsSumToTheMixture) {
  std::mt19937_64 rng(9);
  const auto dict = banded_dictionary(40, 3, rng);
  const RealMatrix v = naive_convolve(dict.convolutive_bases(), sparse_activations(5, 50, rng, 0.3)) +
                       RealMatrix::Constant(40, 50, 1e-3);
  const auto res = nmfd_decompose(v, dict, {});
  const auto stems = components_to_stems(res, v);
  ASSERT_EQ(stems.size(), std::size_t(kNumStems));
  RealMatrix sum = RealMatrix::Zero(40, 50);
  for (const auto& s : stems) sum += s;
  EXPECT_LT((sum - v).cwiseAbs().maxCoeff(), 1e-6 * v.maxCoeff());
  EXPECT_TRUE((sum.array() <= v.array() + 1e-15).all());
}

TEST(Components, LabelsGroupSeveralTemplatesIntoOneStem) {
  std::mt19937_64 rng(10);
  const auto w = random_bases(12, 7, 2, rng);
  const RealMatrix h = sparse_activations(7, 20, rng, 0.5);
  const std::vector<Stem> labels = {Stem::Kick,  Stem::Kick,    Stem::Snare, Stem::Toms,
                                    Stem::HiHat, Stem::Cymbals, Stem::Kick};
  const auto g = group_components(w, h, labels);
  const RealMatrix kick = component_reconstruction(w, h, 0) + component_reconstruction(w, h, 1) +
                          component_reconstruction(w, h, 6);
  EXPECT_LT((g[0] - kick).cwiseAbs().maxCoeff(), 1e-12);
}

// ---- templates -----------------------------------------------------------------

TEST(Templates, ToneColumnPeaksAtTheOracleBin) {
  const dsp::StftConfig stft{1024, 256};
  AudioClip tone(2, 8192);
  for (index_t n = 0; n < tone.length(); ++n)
    tone.samples.col(n).setConstant(0.5 * std::sin(2 * std::numbers::pi * 100.0 * n / kSampleRate));
  const auto t = make_template({Stem::Kick, "tone", 100, tone}, stft, 4);
  // oracle: Hann-windowed naive DFT of a frame inside the clip
  const auto w = oracle::hann(1024);
  std::vector<double> frame(1024);
  for (std::size_t i = 0; i < 1024; ++i) frame[i] = w[i] * tone.samples(0, 2048 + index_t(i));
  const auto X = oracle::naive_dft(frame);
  std::size_t best = 0;
  for (std::size_t k = 1; k < X.size(); ++k)
    if (std::abs(X[k]) > std::abs(X[best])) best = k;
  index_t got;
  t.column.maxCoeff(&got);
  EXPECT_EQ(static_cast<std::size_t>(got), best);
  EXPECT_DOUBLE_EQ(t.patch.maxCoeff(), 1.0);
  EXPECT_DOUBLE_EQ(t.column.maxCoeff(), 1.0);
  EXPECT_TRUE((t.patch.array() >= 0).all());
}

TEST(Templates, OnsetAlignedAndSilenceRejected) {
  const dsp::StftConfig stft{1024, 256};
  const AudioClip hit = sampler(0).hit(dataset::Instrument::Snare, 100);
  // leading silence of two and nine hops keeps the reflected padding out of view
  AudioClip early(2, hit.length() + 256 * 2), late(2, hit.length() + 256 * 9);
  early.samples.rightCols(hit.length()) = hit.samples;
  late.samples.rightCols(hit.length()) = hit.samples;
  const auto a = make_template({Stem::Snare, "sd", 100, early}, stft, 6);
  const auto b = make_template({Stem::Snare, "sd", 100, late}, stft, 6);
  EXPECT_LT((a.patch - b.patch).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_THROW(make_template({Stem::Snare, "sd", 1, AudioClip(2, 4096)}, stft, 6),
               DegenerateInputError);
}

TEST(Templates, DictionaryRoundTrip) {
  const dsp::StftConfig stft{1024, 256};
  const auto d = kit_dictionary({0}, stft);
  EXPECT_EQ(d.size(), 27);
  const auto dir = std::filesystem::temp_directory_path() / "drumsep_templates";
  std::filesystem::create_directories(dir);
  d.save(dir / "dict.dst");
  const auto back = TemplateDictionary::load(dir / "dict.dst");
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.labels(), d.labels());
  for (index_t r = 0; r < d.size(); ++r) {
    EXPECT_EQ(back.templates[r].instrument, d.templates[r].instrument);
    EXPECT_EQ(back.templates[r].velocity, d.templates[r].velocity);
    // stored as float32
    EXPECT_LT((back.templates[r].patch - d.templates[r].patch).cwiseAbs().maxCoeff(), 1e-7);
    EXPECT_LT((back.templates[r].column - d.templates[r].column).cwiseAbs().maxCoeff(), 1e-7);
  }
  TemplateDictionary missing = d;
  std::erase_if(missing.templates, [](const Template& t) { return t.stem == Stem::Cymbals; });
  EXPECT_THROW(missing.validate(), ConfigError);
}

// ---- baselines -----------------------------------------------------------------

TEST(Baseline, KickOnlyMixtureLandsInTheKickStem) {
  const auto cfg = BaselineConfig::for_method(Method::Nmfd);
  const auto dict = kit_dictionary({0}, cfg.stft);
  dataset::MidiScore sc;
  sc.events = {{0.1, 36, 110}, {0.6, 36, 80}, {1.1, 36, 127}};
  sc.duration = 1.5;
  const auto set = dataset::render_stems(sc, sampler(0));
  for (Method m : {Method::Nmfd, Method::SabNmf}) {
    const auto out = baseline_separate(set.mixture, dict, BaselineConfig::for_method(m));
    double total = 0;
    for (const auto& s : out) total += s.energy();
    EXPECT_GE(out[stem_index(Stem::Kick)].energy(), 0.9 * total) << method_name(m);
    for (const auto& s : out) EXPECT_EQ(s.length(), set.mixture.length());
  }
}

TEST(Baseline, SilentChannelStaysSilent) {
  const auto cfg = BaselineConfig::for_method(Method::SabNmf);
  const auto dict = kit_dictionary({1}, cfg.stft);
  dataset::MidiScore sc;
  sc.events = {{0.05, 38, 100}, {0.3, 42, 90}};
  sc.duration = 0.8;
  auto mix = dataset::render_stems(sc, sampler(1)).mixture;
  mix.samples.row(1).setZero();
  const auto out = baseline_separate(mix, dict, cfg);
  for (const auto& s : out) EXPECT_TRUE((s.samples.row(1) == 0).all());
  EXPECT_THROW(baseline_separate(AudioClip(2, 20000), dict, cfg), DegenerateInputError);
  EXPECT_EQ(method_from_name("sab-nmf"), Method::SabNmf);
  EXPECT_THROW(method_from_name("ica"), ConfigError);
}
