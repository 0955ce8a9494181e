// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// The drumsep command-line tool. `run` parses arguments and dispatches to one
// subcommand; errors become exit codes:
//
//   0  success
//   1  internal error
//   2  usage: bad flags, unknown or invalid settings
//   3  input: unreadable, malformed or inconsistent files
//   4  numeric failure (non-finite loss, degenerate factorization)

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drumsep/augment/pipeline.hpp"
#include "drumsep/cli/config.hpp"
#include "drumsep/dataset/manifest.hpp"
#include "drumsep/dataset/midi.hpp"
#include "drumsep/dataset/notes.hpp"
#include "drumsep/dataset/patterns.hpp"
#include "drumsep/dataset/render.hpp"
#include "drumsep/dataset/training_source.hpp"
#include "drumsep/eval/report.hpp"
#include "drumsep/eval/rtr.hpp"
#include "drumsep/io/wav.hpp"
#include "drumsep/model/larsnet.hpp"
#include "drumsep/nmf/baseline.hpp"
#include "drumsep/nmf/kit_templates.hpp"

namespace drumsep::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kInput = 3, kNumeric = 4 };

inline constexpr const char* kBundleFile = "bundle.txt";
inline constexpr const char* kManifestFile = "manifest.json";

struct Io {
  std::ostream& out;
  std::ostream& err;
};

// ------------------------------------------------------------- helpers

inline model::UNetConfig unet_for(const RunConfig& rc) {
  return rc.get("preset") == "paper" ? model::UNetConfig::paper() : model::UNetConfig::desk();
}

inline dsp::StftConfig stft_for(const RunConfig& rc) {
  return rc.get("preset") == "paper" ? dsp::StftConfig::paper() : dsp::StftConfig::desk();
}

inline std::uint64_t seed_of(const RunConfig& rc) {
  const auto s = rc.get_int("seed");
  if (s < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

/// A separator for `method`, with any model or templates loaded up front.
struct SeparatorSpec {
  std::string method = "larsnet";
  std::optional<fs::path> bundle;
  std::optional<fs::path> templates;
};

inline std::function<model::StemClips(const AudioClip&)> make_separator(const SeparatorSpec& spec,
                                                                        const RunConfig& rc) {
  model::WienerConfig wiener{rc.get_double("separate.alpha"), 1e-7,
                             rc.get_bool("separate.wiener")};
  wiener.validate();
  if (spec.method == "larsnet") {
    if (!spec.bundle) throw ConfigError("method larsnet needs --bundle");
    auto b = std::make_shared<model::LarsNetBundle>(model::load_bundle(*spec.bundle));
    b->wiener = wiener;
    return [b](const AudioClip& x) { return model::separate(*b, x); };
  }
  const auto method = nmf::method_from_name(spec.method);
  if (!spec.templates) throw ConfigError("method " + spec.method + " needs --templates");
  auto dict = std::make_shared<nmf::TemplateDictionary>(nmf::TemplateDictionary::load(*spec.templates));
  auto cfg = nmf::BaselineConfig::for_method(method);
  cfg.nmf.iterations = static_cast<int>(rc.get_int("separate.iterations"));
  cfg.nmf.seed = seed_of(rc);
  cfg.stft = dsp::StftConfig{(dict->num_bins - 1) * 2, (dict->num_bins - 1) / 2};
  return [dict, cfg](const AudioClip& x) {
    if (x.is_silent()) {  // nothing to factorize; every stem is silent
      model::StemClips out;
      for (auto& s : out) s = AudioClip::silence(x.channels(), x.length(), x.sample_rate);
      return out;
    }
    return nmf::baseline_separate(x, *dict, cfg);
  };
}

inline AudioClip read_stereo(const fs::path& p) {
  auto x = io::read_wav(p);
  if (x.sample_rate != kSampleRate)
    throw IoError(p.string() + ": sample rate " + std::to_string(x.sample_rate) + " Hz, expected " +
                  std::to_string(kSampleRate));
  if (x.channels() != 2)
    throw IoError(p.string() + ": expected a stereo file, got " + std::to_string(x.channels()) +
                  " channel(s)");
  return x;
}

// ------------------------------------------------------------- commands

struct SynthArgs {
  std::optional<fs::path> midi_dir;
  fs::path out;
};

inline int cmd_synth(const RunConfig& rc, const SynthArgs& a, Io io) {
  const auto kits = rc.get_ints("synth.kits");
  if (kits.empty()) throw ConfigError("synth.kits is empty");
  for (int k : kits)
    if (k < 0 || k >= dataset::kNumKits)
      throw ConfigError("kit " + std::to_string(k) + " is outside 0.." +
                        std::to_string(dataset::kNumKits - 1));
  const auto enc_name = rc.get("synth.encoding");
  if (enc_name != "float32" && enc_name != "pcm16")
    throw ConfigError("synth.encoding must be float32 or pcm16");
  const auto enc = enc_name == "pcm16" ? io::WavEncoding::Pcm16 : io::WavEncoding::Float32;
  const auto validation = rc.get_list("synth.validation"), test = rc.get_list("synth.test");
  auto split_of = [&](const std::string& id) {
    if (std::find(test.begin(), test.end(), id) != test.end()) return std::string("test");
    if (std::find(validation.begin(), validation.end(), id) != validation.end())
      return std::string("validation");
    return std::string("train");
  };

  struct Item {
    std::string id, source;
    dataset::MidiScore score;
    std::size_t skipped = 0;
  };
  std::vector<Item> items;
  if (a.midi_dir) {
    if (!fs::is_directory(*a.midi_dir))
      throw IoError("MIDI directory not found: " + a.midi_dir->string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(*a.midi_dir)) {
      const auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".mid" || ext == ".midi")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      dataset::MapReport rep;
      auto score = dataset::map_notes(dataset::read_midi(f), &rep);
      items.push_back({f.stem().string(), f.filename().string(), std::move(score), rep.skipped});
    }
    if (files.empty()) io.err << "warning: no MIDI files in " << a.midi_dir->string() << "\n";
  } else {
    const auto n = rc.get_int("synth.patterns");
    const double secs = rc.get_double("synth.pattern_seconds");
    if (n < 0) throw ConfigError("synth.patterns must be >= 0");
    for (int p = 0; p < n; ++p) {
      char id[32];
      std::snprintf(id, sizeof id, "pattern%02d", p);
      items.push_back({id, "procedural:" + std::to_string(p),
                       dataset::map_notes(dataset::make_pattern(p, secs, seed_of(rc))), 0});
    }
  }

  dataset::DatasetManifest manifest;
  manifest.encoding = enc;
  fs::create_directories(a.out);
  for (int k : kits) {
    const dataset::DrumKitSampler sampler(k);
    for (const auto& it : items) {
      const auto set = dataset::render_stems(it.score, sampler);
      manifest.clips.push_back(
          dataset::write_clip(a.out, it.id, split_of(it.id), set, it.source, it.skipped, enc));
    }
  }
  manifest.validate(&a.out);
  manifest.save(a.out / kManifestFile);
  io.out << "wrote " << manifest.clips.size() << " clips (" << items.size() << " scores x "
         << kits.size() << " kits) to " << a.out.string() << "\n";
  return kOk;
}

struct TrainArgs {
  fs::path dataset;
  fs::path out;
  bool resume = false;
  std::vector<int> kits;
};

inline int cmd_train(const RunConfig& rc, const TrainArgs& a, Io io) {
  const auto manifest = dataset::DatasetManifest::load(a.dataset / kManifestFile);
  manifest.validate(&a.dataset);
  model::TrainConfig tc;
  tc.iterations = rc.get_int("train.iterations");
  tc.batch = rc.get_int("train.batch");
  tc.lr = rc.get_double("train.lr");
  tc.checkpoint_every = rc.get_int("train.checkpoint_every");
  tc.threads = static_cast<int>(rc.get_int("train.threads"));
  tc.seed = seed_of(rc);

  fs::create_directories(a.out);
  const auto bundle_path = a.out / kBundleFile;
  const auto log_path = a.out / "loss.log";
  std::optional<model::LarsNetBundle> bundle;
  if (a.resume) {
    if (!fs::exists(bundle_path)) throw IoError("nothing to resume: " + bundle_path.string() + " not found");
    bundle.emplace(model::load_bundle(bundle_path));
  } else {
    bundle.emplace(model::LarsNetBundle::create(unet_for(rc), stft_for(rc), {}, tc.seed));
    std::ofstream(log_path, std::ios::trunc) << "# iteration\tstem\tloss\n";
  }
  tc.segment_stride = bundle->segment_length();
  tc.validate(bundle->segment_length());

  const auto corpus = dataset::clip_corpus(a.dataset, manifest, rc.get("train.split"), a.kits);
  const auto aug =
      rc.get_bool("train.augment") ? augment::AugmentConfig{} : augment::AugmentConfig::none();
  const auto source = dataset::training_source(corpus, bundle->segment_length(), aug, tc.seed);

  std::ofstream log(log_path, std::ios::app);
  if (!log) throw IoError("cannot write " + log_path.string());
  log.precision(10);
  model::TrainHooks hooks;
  hooks.checkpoint = [&](const model::LarsNetBundle&) {
    model::save_bundle(*bundle, bundle_path);
    log.flush();
  };
  hooks.on_loss = [&](const model::LossRecord& r) {
    log << r.iteration << "\t" << stem_name(r.stem) << "\t" << r.loss << "\n";
  };
  const long long start = bundle->step;
  model::train(*bundle, source, tc, hooks);
  model::save_bundle(*bundle, bundle_path);
  io.out << "trained iterations " << start << " -> " << bundle->step << " on "
         << corpus.patterns() << " patterns x " << corpus.kits.size() << " kits; bundle "
         << bundle_path.string() << "\n";
  return kOk;
}

struct SeparateArgs {
  std::vector<fs::path> inputs;
  SeparatorSpec spec;
  fs::path out = ".";
};

inline int cmd_separate(const RunConfig& rc, const SeparateArgs& a, Io io) {
  auto sep = make_separator(a.spec, rc);
  fs::create_directories(a.out);
  for (const auto& in : a.inputs) {
    const auto x = read_stereo(in);
    const auto stems = sep(x);
    for (Stem s : kAllStems) {
      const auto path = a.out / (in.stem().string() + "_" + std::string(stem_name(s)) + ".wav");
      io::write_wav(path, stems[stem_index(s)], io::WavEncoding::Pcm16);
    }
    io.out << in.string() << " -> " << kNumStems << " stems in " << a.out.string() << "\n";
  }
  return kOk;
}

struct TemplatesArgs {
  fs::path out;
};

inline int cmd_templates(const RunConfig& rc, const TemplatesArgs& a, Io io) {
  const auto dict = nmf::kit_templates(rc.get_ints("templates.kits"),
                                       rc.get_ints("templates.velocities"), stft_for(rc),
                                       rc.get_int("templates.length"));
  if (a.out.has_parent_path()) fs::create_directories(a.out.parent_path());
  dict.save(a.out);
  io.out << "wrote " << dict.size() << " templates (L=" << dict.length << ", " << dict.num_bins
         << " bins) to " << a.out.string() << "\n";
  return kOk;
}

struct EvaluateArgs {
  fs::path dataset;
  SeparatorSpec spec;
  fs::path out = ".";
  std::optional<fs::path> from_report;
  std::vector<int> kits;
};

inline int cmd_evaluate(const RunConfig& rc, const EvaluateArgs& a, Io io) {
  fs::create_directories(a.out);
  eval::EvalReport report;
  if (a.from_report) {
    report = eval::EvalReport::load(*a.from_report);
  } else {
    eval::EvalConfig ec;
    ec.epsilon = rc.get_double("evaluate.epsilon");
    ec.validate();
    report.epsilon = ec.epsilon;
    const auto manifest = dataset::DatasetManifest::load(a.dataset / kManifestFile);
    manifest.validate(&a.dataset);
    const auto methods = rc.get_list("evaluate.methods");
    if (methods.empty()) throw ConfigError("evaluate.methods is empty");
    std::map<std::string, std::function<model::StemClips(const AudioClip&)>> seps;
    for (const auto& m : methods) {
      if (m == "oracle" || m == "mixture" || m == "silence") continue;
      auto spec = a.spec;
      spec.method = m;
      seps[m] = make_separator(spec, rc);
    }
    const bool quantize = rc.get_bool("evaluate.quantize");
    std::size_t clips = 0;
    for (const auto* e : manifest.select(rc.get("evaluate.split"))) {
      if (!a.kits.empty() && std::find(a.kits.begin(), a.kits.end(), e->kit) == a.kits.end())
        continue;
      const auto g = dataset::load_grouped(a.dataset, *e);
      eval::EvalClip clip{e->id, e->kit, g.stems, {}};
      for (int i = 0; i < kNumStems; ++i) clip.nonzero[i] = e->stems_nonzero[i];
      for (const auto& m : methods) {
        model::StemClips est;
        if (m == "oracle") {
          est = g.stems;
        } else if (m == "mixture" || m == "silence") {
          for (auto& s : est)
            s = m == "mixture" ? g.mixture : AudioClip::silence(2, g.mixture.length());
        } else {
          est = seps.at(m)(g.mixture);
          if (quantize)
            for (auto& s : est) s = io::quantized_pcm16(s);
        }
        eval::score_clip(report, m, clip, est, ec);
      }
      ++clips;
    }
    if (clips == 0) io.err << "warning: no clips in split '" << rc.get("evaluate.split") << "'\n";
  }
  report.save(a.out / "report.json");
  const auto text = report.to_text();
  std::ofstream(a.out / "report.txt") << text;
  io.out << text;
  return kOk;
}

struct RtrArgs {
  std::vector<fs::path> inputs;
  SeparatorSpec spec;
  std::optional<fs::path> out;
};

inline int cmd_rtr(const RunConfig& rc, const RtrArgs& a, Io io) {
  auto spec = a.spec;
  spec.method = rc.get("rtr.method");
  auto sep = make_separator(spec, rc);
  std::vector<AudioClip> clips;
  for (const auto& p : a.inputs) clips.push_back(read_stereo(p));
  if (clips.empty()) {
    const double secs = rc.get_double("rtr.seconds");
    if (!(secs > 0)) throw ConfigError("rtr.seconds must be positive");
    std::mt19937_64 rng(seed_of(rc));
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    AudioClip x(2, static_cast<index_t>(std::llround(secs * kSampleRate)));
    for (index_t i = 0; i < x.samples.size(); ++i) x.samples.data()[i] = u(rng);
    clips.push_back(std::move(x));
  }
  const auto r = eval::measure_rtr(sep, clips);
  eval::json j = {{"method", spec.method},
                  {"audio_seconds", r.audio_seconds},
                  {"compute_seconds", r.compute_seconds},
                  {"rtr", r.rtr},
                  {"hardware", r.hardware}};
  io.out << "method " << spec.method << ": " << r.compute_seconds << " s for " << r.audio_seconds
         << " s of audio, RTR " << r.rtr << " (" << r.hardware << ")\n";
  if (a.out) {
    fs::create_directories(*a.out);
    std::ofstream(*a.out / "rtr.json") << j.dump(2) << "\n";
  }
  return kOk;
}

struct PreviewArgs {
  fs::path out;
};

inline std::string describe(const augment::AugmentPlan& p) {
  std::ostringstream os;
  os << "disabled = " << (p.disabled ? "true" : "false") << "\n";
  os << "kit_swap = " << (p.kit_swap ? "true" : "false") << "\n";
  os << "remix = " << (p.remix ? "true" : "false") << "\n";
  for (Stem s : kAllStems) {
    const auto& st = p.stems[stem_index(s)];
    os << stem_name(s) << ": kit " << st.kit;
    if (st.double_kit >= 0) os << ", doubled with kit " << st.double_kit;
    if (st.shift) os << ", shift " << st.semitones << " st";
    if (st.saturate) os << ", saturate beta " << st.beta;
    if (st.swap) os << ", channels swapped";
    if (p.remix) os << ", gain " << st.gamma;
    os << "\n";
  }
  return os.str();
}

inline int cmd_preview(const RunConfig& rc, const PreviewArgs& a, Io io) {
  augment::AugmentConfig cfg;
  cfg.p_ks = rc.get_double("augment.p_ks");
  cfg.p_cs = rc.get_double("augment.p_cs");
  cfg.p_db = rc.get_double("augment.p_db");
  cfg.p_ps = rc.get_double("augment.p_ps");
  cfg.p_st = rc.get_double("augment.p_st");
  cfg.p_rx = rc.get_double("augment.p_rx");
  cfg.p_disable_all = rc.get_double("augment.p_disable_all");
  cfg.validate();
  const auto count = rc.get_int("augment.count");
  if (count < 0) throw ConfigError("augment.count must be >= 0");
  const auto pattern = static_cast<int>(rc.get_int("augment.pattern"));
  const double secs = rc.get_double("augment.seconds");
  const auto score = dataset::map_notes(dataset::make_pattern(pattern, secs));
  std::vector<int> kits;
  for (int k = 0; k < dataset::kNumKits; ++k) kits.push_back(k);
  const auto corpus = dataset::score_corpus({score}, kits);
  const index_t len = corpus.lengths[0];
  fs::create_directories(a.out);
  for (long long n = 0; n < count; ++n) {
    auto rng = augment::RngStream::for_stream(seed_of(rc), static_cast<std::uint64_t>(n));
    const auto plan = augment::draw_plan(cfg, kits, 0, rng);
    const auto r = augment::apply_plan(
        plan, [&](int k) { return corpus.window(0, k, 0, len); });
    const std::string base = "preview" + std::to_string(n);
    io::write_wav(a.out / (base + "_mixture.wav"), r.mixture, io::WavEncoding::Float32);
    for (Stem s : kAllStems)
      io::write_wav(a.out / (base + "_" + std::string(stem_name(s)) + ".wav"),
                    r.stems[stem_index(s)], io::WavEncoding::Float32);
    std::ofstream(a.out / (base + ".txt")) << describe(plan);
  }
  io.out << "wrote " << count << " previews of pattern " << pattern << " to " << a.out.string()
         << "\n";
  return kOk;
}

// ------------------------------------------------------------- dispatch

inline std::map<std::string, std::string> parse_overrides(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got '" + s + "'");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  Io io{out, err};
  CLI::App app{"drumsep: drum source separation toolkit"};
  app.require_subcommand(1);

  struct Common {
    std::optional<std::string> config;
    std::vector<std::string> sets;
    bool print_config = false;
    std::map<std::string, std::string> flags;  // dedicated flags, highest precedence
  };
  std::map<std::string, Common> common;
  auto add_common = [&](CLI::App* sub) {
    auto& c = common[sub->get_name()];
    sub->add_option("--config", c.config, "Config file of key = value lines");
    sub->add_option("--set", c.sets, "Override one setting (key=value); repeatable")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_flag("--print-config", c.print_config, "Print the effective configuration and exit");
    sub->add_option_function<std::string>(
        "--preset", [&c](const std::string& v) { c.flags["preset"] = v; }, "desk | paper");
    sub->add_option_function<long long>(
        "--seed", [&c](long long v) { c.flags["seed"] = std::to_string(v); }, "Random seed");
    return &c;
  };
  auto flag_to = [](Common* c, const std::string& key) {
    return [c, key](const std::string& v) { c->flags[key] = v; };
  };

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Render stems and mixtures from MIDI or patterns");
  auto* c_synth = add_common(s_synth);
  s_synth->add_option("--midi", synth.midi_dir, "Directory of .mid files (default: procedural)");
  s_synth->add_option("--out", synth.out, "Dataset directory")->required();
  s_synth->add_option_function<std::string>("--kits", flag_to(c_synth, "synth.kits"),
                                            "Comma list of kits");

  TrainArgs train;
  auto* s_train = app.add_subcommand("train", "Train the five stem models");
  auto* c_train = add_common(s_train);
  s_train->add_option("--dataset", train.dataset, "Dataset directory")->required();
  s_train->add_option("--out", train.out, "Bundle directory")->required();
  s_train->add_flag("--resume", train.resume, "Continue from the bundle in --out");
  s_train->add_option("--kits", train.kits, "Train only on these kits")->delimiter(',');
  s_train->add_option_function<std::string>("--iterations", flag_to(c_train, "train.iterations"),
                                            "Total iterations");
  s_train->add_option_function<std::string>("--batch", flag_to(c_train, "train.batch"),
                                            "Batch size");
  s_train->add_option_function<std::string>("--lr", flag_to(c_train, "train.lr"),
                                            "Learning rate");

  SeparateArgs sep;
  auto* s_sep = app.add_subcommand("separate", "Separate stereo mixtures into five stems");
  auto* c_sep = add_common(s_sep);
  s_sep->add_option("inputs", sep.inputs, "Input WAV files")->required();
  s_sep->add_option("--bundle", sep.spec.bundle, "LarsNet bundle manifest");
  s_sep->add_option("--templates", sep.spec.templates, "Template dictionary for nmfd / sab-nmf");
  s_sep->add_option("--out", sep.out, "Output directory");
  s_sep->add_option_function<std::string>("--method", flag_to(c_sep, "separate.method"),
                                          "larsnet | nmfd | sab-nmf");
  s_sep->add_flag_callback("--wiener", [c_sep] { c_sep->flags["separate.wiener"] = "true"; },
                           "Alpha-Wiener refinement");
  s_sep->add_option_function<std::string>("--alpha", flag_to(c_sep, "separate.alpha"),
                                          "Wiener exponent in (0, 2]");

  TemplatesArgs tpl;
  auto* s_tpl = app.add_subcommand("factorize-templates", "Build NMF templates from kit hits");
  auto* c_tpl = add_common(s_tpl);
  s_tpl->add_option("--out", tpl.out, "Dictionary file")->required();
  s_tpl->add_option_function<std::string>("--kits", flag_to(c_tpl, "templates.kits"),
                                          "Comma list of kits");

  EvaluateArgs ev;
  auto* s_ev = app.add_subcommand("evaluate", "Score methods on a dataset split");
  auto* c_ev = add_common(s_ev);
  s_ev->add_option("--dataset", ev.dataset, "Dataset directory");
  s_ev->add_option("--bundle", ev.spec.bundle, "LarsNet bundle manifest");
  s_ev->add_option("--templates", ev.spec.templates, "Template dictionary");
  s_ev->add_option("--out", ev.out, "Report directory");
  s_ev->add_option("--from-report", ev.from_report, "Re-render an existing report.json");
  s_ev->add_option("--kits", ev.kits, "Score only these kits")->delimiter(',');
  s_ev->add_option_function<std::string>("--methods", flag_to(c_ev, "evaluate.methods"),
                                         "Comma list of methods");
  s_ev->add_option_function<std::string>("--split", flag_to(c_ev, "evaluate.split"), "Split");
  s_ev->add_flag_callback("--wiener", [c_ev] { c_ev->flags["separate.wiener"] = "true"; },
                          "Alpha-Wiener refinement");
  s_ev->add_option_function<std::string>("--alpha", flag_to(c_ev, "separate.alpha"),
                                         "Wiener exponent in (0, 2]");

  RtrArgs rtr;
  auto* s_rtr = app.add_subcommand("rtr", "Measure the real-time ratio of a separator");
  auto* c_rtr = add_common(s_rtr);
  s_rtr->add_option("inputs", rtr.inputs, "Input WAV files (default: generated audio)");
  s_rtr->add_option("--bundle", rtr.spec.bundle, "LarsNet bundle manifest");
  s_rtr->add_option("--templates", rtr.spec.templates, "Template dictionary");
  s_rtr->add_option("--out", rtr.out, "Directory for rtr.json");
  s_rtr->add_option_function<std::string>("--method", flag_to(c_rtr, "rtr.method"),
                                          "larsnet | nmfd | sab-nmf");
  s_rtr->add_option_function<std::string>("--seconds", flag_to(c_rtr, "rtr.seconds"),
                                          "Generated audio length");

  PreviewArgs pv;
  auto* s_pv = app.add_subcommand("augment-preview", "Write augmented examples of a pattern");
  add_common(s_pv);
  s_pv->add_option("--out", pv.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  const std::string cfg_name = name;
  try {
    auto& c = common.at(name);
    auto overrides = parse_overrides(c.sets);
    for (const auto& [k, v] : c.flags) overrides[k] = v;
    const auto rc = RunConfig::resolve(cfg_name, c.config, overrides);
    if (c.print_config) {
      out << rc.dump();
      return kOk;
    }
    if (name == "synth") return cmd_synth(rc, synth, io);
    if (name == "train") return cmd_train(rc, train, io);
    if (name == "separate") {
      sep.spec.method = rc.get("separate.method");
      return cmd_separate(rc, sep, io);
    }
    if (name == "factorize-templates") return cmd_templates(rc, tpl, io);
    if (name == "evaluate") {
      if (!ev.from_report && ev.dataset.empty()) throw ConfigError("evaluate needs --dataset");
      return cmd_evaluate(rc, ev, io);
    }
    if (name == "rtr") return cmd_rtr(rc, rtr, io);
    if (name == "augment-preview") return cmd_preview(rc, pv, io);
    throw ConfigError("unknown command " + name);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const DegenerateInputError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const IoError& e) {
    err << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const Error& e) {
    // shape, alignment, domain, inconsistency and evaluation errors all come
    // from the input data
    if (dynamic_cast<const StateError*>(&e)) {
      err << "internal error: " << e.what() << "\n";
      return kInternal;
    }
    err << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace drumsep::cli
