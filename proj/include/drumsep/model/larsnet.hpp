// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Five independent per-stem U-Nets behind one STFT front end. Separation
// masks the mixture magnitude, optionally refines the masks with alpha-Wiener
// filtering, reattaches the mixture phase, and inverts the STFT.

#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <sstream>
#include <thread>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/common.hpp"
#include "drumsep/dsp/framing.hpp"
#include "drumsep/dsp/stft.hpp"
#include "drumsep/io/keyvalue.hpp"
#include "drumsep/io/tensor_container.hpp"
#include "drumsep/model/unet.hpp"
#include "drumsep/model/wiener.hpp"
#include "drumsep/nn/adam.hpp"
#include "drumsep/nn/loss.hpp"

namespace drumsep::model {

using Net = UNet<float>;
using Patch4 = nn::Tensor4<float>;

struct StemModel {
  Stem stem;
  Net net;
  nn::AdamState<float> adam;

  StemModel(Stem s, const UNetConfig& cfg, std::uint64_t seed) : stem(s), net(cfg, seed) {}
};

struct TrainConfig {
  double lr = 1e-4;
  index_t batch = 24;
  index_t iterations = 100000;
  index_t checkpoint_every = 1000;
  index_t segment_stride = 2 * kSampleRate;  // samples
  std::uint64_t seed = 0;
  int threads = 1;

  void validate(index_t segment_length) const {
    if (batch < 1) throw ConfigError("train: batch must be >= 1");
    if (iterations < 0) throw ConfigError("train: iterations must be >= 0");
    if (checkpoint_every < 1) throw ConfigError("train: checkpoint_every must be >= 1");
    if (!(lr > 0)) throw ConfigError("train: lr must be > 0");
    if (segment_stride < 1 || segment_stride > segment_length)
      throw ConfigError("train: segment stride must be in [1, segment length]");
    if (threads < 1) throw ConfigError("train: threads must be >= 1");
  }
};

class LarsNetBundle {
 public:
  UNetConfig unet;
  dsp::StftConfig stft;
  WienerConfig wiener;
  long long step = 0;  // completed training iterations

  LarsNetBundle(const UNetConfig& u, const dsp::StftConfig& s, const WienerConfig& w = {})
      : unet(u), stft(s), wiener(w) {
    validate();
  }

  /// All five models, freshly initialized from `seed`.
  static LarsNetBundle create(const UNetConfig& u, const dsp::StftConfig& s,
                              const WienerConfig& w, std::uint64_t seed) {
    LarsNetBundle b(u, s, w);
    for (Stem st : kAllStems)
      b.models_[stem_index(st)] =
          std::make_unique<StemModel>(st, u, seed * 1000003ULL + stem_index(st) + 1);
    return b;
  }

  void validate() const {
    unet.validate();
    stft.validate();
    wiener.validate();
    if (unet.in_channels != 2) throw ConfigError("bundle: models must take stereo input");
    if (stft.num_bins() < unet.bands)
      throw ConfigError("bundle: F=" + std::to_string(unet.bands) + " exceeds the " +
                        std::to_string(stft.num_bins()) + " STFT bins");
  }

  /// Sample count of a training segment spanning exactly T frames.
  index_t segment_length() const { return stft.length_for_frames(unet.frames); }

  bool has(Stem s) const { return models_[stem_index(s)] != nullptr; }
  StemModel& model(Stem s) {
    if (!has(s)) throw StateError("bundle: no model for " + std::string(stem_name(s)));
    return *models_[stem_index(s)];
  }
  const StemModel& model(Stem s) const {
    if (!has(s)) throw StateError("bundle: no model for " + std::string(stem_name(s)));
    return *models_[stem_index(s)];
  }
  void set_model(std::unique_ptr<StemModel> m) {
    if (!(m->net.config().bands == unet.bands && m->net.config().frames == unet.frames))
      throw ConfigError("bundle: model shape differs from the bundle's F, T");
    const auto i = stem_index(m->stem);
    models_[i] = std::move(m);
  }
  void remove(Stem s) { models_[stem_index(s)].reset(); }

 private:
  std::array<std::unique_ptr<StemModel>, kNumStems> models_;
};

// ------------------------------------------------------------ patches

inline Patch4 to_tensor(const std::vector<dsp::SpectroPatch>& patches) {
  if (patches.empty()) throw EmptyInputError("to_tensor: no patches");
  const auto& p0 = patches[0];
  Patch4 t(static_cast<index_t>(patches.size()), p0.channels, p0.bands, p0.frames);
  const index_t per = p0.channels * p0.bands * p0.frames;
  for (std::size_t n = 0; n < patches.size(); ++n) {
    if (static_cast<index_t>(patches[n].values.size()) != per)
      throw ShapeError("to_tensor: patches differ in shape");
    std::transform(patches[n].values.begin(), patches[n].values.end(),
                   t.vec().begin() + static_cast<std::ptrdiff_t>(n) * per,
                   [](double v) { return static_cast<float>(v); });
  }
  return t;
}

inline dsp::SpectroPatch from_tensor(const Patch4& t, index_t n) {
  const auto& s = t.shape();
  dsp::SpectroPatch p(s.c, s.h, s.w);
  std::copy_n(t.sample(n), s.sample(), p.values.begin());
  return p;
}

/// Magnitude of the first T frames of `clip`, lowest F bins.
inline dsp::SpectroPatch magnitude_patch(const AudioClip& clip, const dsp::StftConfig& stft,
                                         index_t bands, index_t frames) {
  const auto seg = slice(clip, 0, stft.length_for_frames(frames));
  auto chunks = dsp::crop_and_chunk(dsp::stft(seg, stft), bands, frames);
  return std::move(chunks.patches.front());
}

/// Soft mask for one (2, F, T) patch, entries in (0, 1).
inline dsp::SpectroPatch infer_mask(const StemModel& m, const dsp::SpectroPatch& patch) {
  const auto& c = m.net.config();
  if (patch.channels != c.in_channels || patch.bands != c.bands || patch.frames != c.frames)
    throw ShapeError("infer_mask: patch (" + std::to_string(patch.channels) + ", " +
                     std::to_string(patch.bands) + ", " + std::to_string(patch.frames) +
                     ") does not match model input (" + std::to_string(c.in_channels) + ", " +
                     std::to_string(c.bands) + ", " + std::to_string(c.frames) + ")");
  return from_tensor(m.net.infer(to_tensor({patch})), 0);
}

// ---------------------------------------------------------- separation

struct SeparateOptions {
  bool force_unit_masks = false;  // test hook: every mask is 1
  index_t batch = 8;              // patches per forward pass
};

using StemClips = std::array<AudioClip, kNumStems>;

/// Full-resolution gains (bins x frames per channel) for every stem, zero
/// above band F. Missing models contribute zero gain.
inline std::array<std::vector<dsp::RealMatrix>, kNumStems> stem_gains(
    const LarsNetBundle& b, const std::vector<dsp::RealMatrix>& mixture_mag,
    const SeparateOptions& opt = {}) {
  const auto chunks = dsp::crop_and_chunk(mixture_mag, b.unet.bands, b.unet.frames);
  const auto& fr = chunks.framing;
  std::array<std::vector<dsp::RealMatrix>, kNumStems> gains;
  for (Stem s : kAllStems) {
    std::vector<dsp::SpectroPatch> masks;
    masks.reserve(chunks.patches.size());
    if (opt.force_unit_masks || !b.has(s)) {
      dsp::SpectroPatch p(fr.channels, fr.bands, fr.frames);
      std::fill(p.values.begin(), p.values.end(), opt.force_unit_masks ? 1.0 : 0.0);
      masks.assign(chunks.patches.size(), p);
    } else {
      const auto& net = b.model(s).net;
      for (std::size_t i = 0; i < chunks.patches.size(); i += static_cast<std::size_t>(opt.batch)) {
        const auto end = std::min(chunks.patches.size(), i + static_cast<std::size_t>(opt.batch));
        const auto m = net.infer(to_tensor({chunks.patches.begin() + static_cast<std::ptrdiff_t>(i),
                                            chunks.patches.begin() + static_cast<std::ptrdiff_t>(end)}));
        for (index_t n = 0; n < m.shape().n; ++n) masks.push_back(from_tensor(m, n));
      }
    }
    gains[stem_index(s)] = dsp::unchunk_and_pad(masks, fr);
  }
  if (b.wiener.enabled) {
    StemMagnitudes est;
    for (const auto& g : gains) {
      std::vector<dsp::RealMatrix> e;
      for (std::size_t c = 0; c < g.size(); ++c) e.push_back(g[c].cwiseProduct(mixture_mag[c]));
      est.push_back(std::move(e));
    }
    auto refined = wiener_masks(est, b.wiener);
    for (std::size_t i = 0; i < kNumStems; ++i) gains[i] = std::move(refined[i]);
  }
  return gains;
}

/// Five stem estimates, each as long as the mixture.
inline StemClips separate(const LarsNetBundle& b, const AudioClip& mixture,
                          const SeparateOptions& opt = {}) {
  if (mixture.channels() != b.unet.in_channels)
    throw ShapeError("separate: expected a stereo mixture, got " +
                     std::to_string(mixture.channels()) + " channel(s)");
  const auto spec = dsp::stft(mixture, b.stft);
  const auto gains = stem_gains(b, dsp::magnitude(spec), opt);
  StemClips out;
  for (std::size_t i = 0; i < kNumStems; ++i) {
    out[i] = dsp::istft(dsp::apply_gain(spec, gains[i]));
    out[i].sample_rate = mixture.sample_rate;
  }
  return out;
}

// ------------------------------------------------------------ training

struct TrainingExample {
  AudioClip mixture;
  StemClips stems;
};

/// Deterministic example generator: the same index always yields the same
/// example.
using ExampleSource = std::function<TrainingExample(std::uint64_t index)>;

struct LossRecord {
  long long iteration;  // 1-based
  Stem stem;
  double loss;
};

struct TrainHooks {
  std::function<void(const LarsNetBundle&)> checkpoint;
  std::function<void(const LossRecord&)> on_loss;
};

/// One Adam step on the summed L1 loss ||X_i - M_i * X||_1.
inline double train_step(StemModel& m, const Patch4& mixture, const Patch4& target) {
  if (mixture.shape() != target.shape())
    throw ShapeError("train_step: mixture " + mixture.shape().str() + " vs target " +
                     target.shape().str());
  m.net.zero_grad();
  const auto mask = m.net.forward(mixture, nn::Mode::Train);
  Patch4 dmask;
  const double loss = nn::masked_l1(mask, mixture, target, &dmask);
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "train_step: non-finite loss for " << stem_name(m.stem) << " at optimizer step "
       << m.adam.step + 1;
    throw NumericError(os.str());
  }
  m.net.backward(dmask);
  nn::adam_step(m.net.params(), m.adam);
  return loss;
}

struct Batch {
  Patch4 mixture;
  std::array<Patch4, kNumStems> targets;
};

inline Batch make_batch(const LarsNetBundle& b, const ExampleSource& source,
                        std::uint64_t first_index, index_t batch) {
  std::vector<dsp::SpectroPatch> mix;
  std::array<std::vector<dsp::SpectroPatch>, kNumStems> tgt;
  for (index_t k = 0; k < batch; ++k) {
    const auto ex = source(first_index + static_cast<std::uint64_t>(k));
    mix.push_back(magnitude_patch(ex.mixture, b.stft, b.unet.bands, b.unet.frames));
    for (std::size_t i = 0; i < kNumStems; ++i)
      tgt[i].push_back(magnitude_patch(ex.stems[i], b.stft, b.unet.bands, b.unet.frames));
  }
  Batch out{to_tensor(mix), {}};
  for (std::size_t i = 0; i < kNumStems; ++i) out.targets[i] = to_tensor(tgt[i]);
  return out;
}

/// Trains every present model until `cfg.iterations` total iterations have
/// been completed, continuing from `b.step`.
inline std::vector<LossRecord> train(LarsNetBundle& b, const ExampleSource& source,
                                     const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  cfg.validate(b.segment_length());
  if (!source) throw ConfigError("train: empty dataset");
  std::vector<Stem> present;
  for (Stem s : kAllStems)
    if (b.has(s)) {
      present.push_back(s);
      b.model(s).adam.lr = cfg.lr;
    }
  if (present.empty()) throw ConfigError("train: bundle has no models");

  std::vector<LossRecord> log;
  bool saved_last = true;
  while (b.step < cfg.iterations) {
    const auto it = b.step;
    const auto batch = make_batch(b, source, static_cast<std::uint64_t>(it * cfg.batch), cfg.batch);
    std::vector<double> losses(present.size());
    auto run = [&](std::size_t k) {
      const auto s = present[k];
      losses[k] = train_step(b.model(s), batch.mixture, batch.targets[stem_index(s)]);
    };
    if (cfg.threads > 1 && present.size() > 1) {
      std::vector<std::exception_ptr> errs(present.size());
      std::vector<std::thread> pool;
      const std::size_t width = std::min<std::size_t>(present.size(), std::size_t(cfg.threads));
      for (std::size_t w = 0; w < width; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t k = w; k < present.size(); k += width) {
            try {
              run(k);
            } catch (...) {
              errs[k] = std::current_exception();
            }
          }
        });
      for (auto& t : pool) t.join();
      for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    } else {
      for (std::size_t k = 0; k < present.size(); ++k) run(k);
    }
    ++b.step;
    for (std::size_t k = 0; k < present.size(); ++k) {
      log.push_back({b.step, present[k], losses[k]});
      if (hooks.on_loss) hooks.on_loss(log.back());
    }
    saved_last = false;
    if (hooks.checkpoint && b.step % cfg.checkpoint_every == 0) {
      hooks.checkpoint(b);
      saved_last = true;
    }
  }
  if (hooks.checkpoint && !saved_last) hooks.checkpoint(b);
  return log;
}

// --------------------------------------------------------- persistence

using Widths = decltype(UNetConfig{}.widths);

inline std::string widths_str(const Widths& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

inline Widths parse_widths(const std::string& s) {
  std::vector<index_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoll(tok));
    } catch (const std::exception&) {
      throw ConfigError("widths: '" + s + "' is not a comma-separated integer list");
    }
  }
  Widths w{};
  if (out.size() != w.size())
    throw ConfigError("widths: expected " + std::to_string(w.size()) + " values, got '" + s + "'");
  std::copy(out.begin(), out.end(), w.begin());
  return w;
}

/// Checkpoint of one stem model; the optimizer moments are included when
/// `with_optimizer` is set so training can resume exactly.
inline io::TensorContainer checkpoint_of(StemModel& m, bool with_optimizer) {
  io::TensorContainer c;
  const auto& u = m.net.config();
  c.metadata["stem"] = std::string(stem_name(m.stem));
  c.metadata["bands"] = u.bands;
  c.metadata["frames"] = u.frames;
  c.metadata["widths"] = u.widths;
  c.metadata["input_freq_bn"] = u.input_freq_bn;
  c.metadata["adam_step"] = m.adam.step;
  m.net.save(c);
  if (with_optimizer && !m.adam.m.empty()) {
    const auto params = m.net.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      c.add<float>("adam.m." + params[k]->name, params[k]->shape, m.adam.m[k]);
      c.add<float>("adam.v." + params[k]->name, params[k]->shape, m.adam.v[k]);
    }
  }
  return c;
}

inline std::unique_ptr<StemModel> model_from_checkpoint(const io::TensorContainer& c,
                                                        const UNetConfig& expect) {
  const auto& md = c.metadata;
  if (!md.contains("stem")) throw IoError("checkpoint: missing 'stem' metadata");
  const Stem s = stem_from_name(md["stem"].get<std::string>());
  UNetConfig u = expect;
  if (md.contains("widths")) u.widths = md["widths"].get<Widths>();
  if (md.value("bands", u.bands) != u.bands || md.value("frames", u.frames) != u.frames)
    throw ConfigError("checkpoint for " + std::string(stem_name(s)) +
                      " has a different F/T than the bundle manifest");
  auto m = std::make_unique<StemModel>(s, u, 0);
  m->net.load(c);
  m->adam.step = md.value("adam_step", 0LL);
  const auto params = m->net.params();
  if (c.find("adam.m." + params.front()->name)) {
    for (auto* p : params) {
      const auto& em = c.at("adam.m." + p->name);
      const auto& ev = c.at("adam.v." + p->name);
      m->adam.m.emplace_back(em.values.begin(), em.values.end());
      m->adam.v.emplace_back(ev.values.begin(), ev.values.end());
    }
  }
  return m;
}

inline std::string checkpoint_file_name(Stem s) { return std::string(stem_name(s)) + ".ckpt"; }

// Bundle manifest keys (key = value, '#' comments):
//   format          always "drumsep-bundle"
//   version         1
//   step            completed training iterations
//   bands, frames   F and T
//   widths          comma-separated encoder widths
//   input_freq_bn   true | false
//   stft.window     window length (power of two)
//   stft.hop        hop size
//   wiener.enabled  true | false
//   wiener.alpha    in (0, 2]
//   wiener.epsilon  > 0
//   model.<stem>    checkpoint path relative to the manifest, one per stem
inline const std::set<std::string>& bundle_manifest_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {"format", "version", "step", "bands", "frames",
                               "widths", "input_freq_bn", "stft.window", "stft.hop",
                               "wiener.enabled", "wiener.alpha", "wiener.epsilon"};
    for (Stem s : kAllStems) k.insert("model." + std::string(stem_name(s)));
    return k;
  }();
  return keys;
}

inline void save_bundle(LarsNetBundle& b, const std::filesystem::path& manifest,
                        bool with_optimizer = true) {
  io::KeyValueFile kv;
  kv.set("format", "drumsep-bundle");
  kv.set("version", "1");
  kv.set("step", std::to_string(b.step));
  kv.set("bands", std::to_string(b.unet.bands));
  kv.set("frames", std::to_string(b.unet.frames));
  kv.set("widths", widths_str(b.unet.widths));
  kv.set("input_freq_bn", b.unet.input_freq_bn ? "true" : "false");
  kv.set("stft.window", std::to_string(b.stft.window_length));
  kv.set("stft.hop", std::to_string(b.stft.hop));
  kv.set("wiener.enabled", b.wiener.enabled ? "true" : "false");
  {
    std::ostringstream a, e;
    a.precision(17);
    e.precision(17);
    a << b.wiener.alpha;
    e << b.wiener.epsilon;
    kv.set("wiener.alpha", a.str());
    kv.set("wiener.epsilon", e.str());
  }
  const auto dir = manifest.parent_path();
  for (Stem s : kAllStems) {
    if (!b.has(s)) continue;
    const auto file = checkpoint_file_name(s);
    checkpoint_of(b.model(s), with_optimizer).save(dir / file);
    kv.set("model." + std::string(stem_name(s)), file);
  }
  kv.save(manifest);
}

inline LarsNetBundle load_bundle(const std::filesystem::path& manifest) {
  const auto kv = io::KeyValueFile::load(manifest);
  kv.reject_unknown(bundle_manifest_keys());
  if (kv.get("format") != "drumsep-bundle")
    throw IoError(manifest.string() + ": not a drumsep bundle manifest");
  if (kv.get_int("version") != 1)
    throw IoError(manifest.string() + ": unsupported bundle version " + kv.get("version"));
  UNetConfig u;
  u.bands = kv.get_int("bands");
  u.frames = kv.get_int("frames");
  u.widths = parse_widths(kv.get("widths"));
  u.input_freq_bn = kv.get_bool_or("input_freq_bn", true);
  dsp::StftConfig s;
  s.window_length = kv.get_int("stft.window");
  s.hop = kv.get_int("stft.hop");
  WienerConfig w;
  w.enabled = kv.get_bool_or("wiener.enabled", false);
  w.alpha = kv.get_double_or("wiener.alpha", 1.0);
  w.epsilon = kv.get_double_or("wiener.epsilon", 1e-7);
  LarsNetBundle b(u, s, w);
  b.step = kv.get_int_or("step", 0);
  const auto dir = manifest.parent_path();
  for (Stem st : kAllStems) {
    const auto key = "model." + std::string(stem_name(st));
    if (!kv.has(key)) continue;
    auto m = model_from_checkpoint(io::TensorContainer::load(dir / kv.get(key)), u);
    if (m->stem != st)
      throw ConfigError("bundle: '" + key + "' points at a checkpoint for " + std::string(stem_name(m->stem)));
    b.set_model(std::move(m));
  }
  return b;
}

}  // namespace drumsep::model
