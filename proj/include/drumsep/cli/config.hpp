// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Run configuration for the command-line tool. Every key has a default and a
// one-line description; a config file may only set keys the command knows.
// Precedence: flags > config file > preset defaults.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "drumsep/common.hpp"
#include "drumsep/io/keyvalue.hpp"

namespace drumsep::cli {

struct Setting {
  std::string key;
  std::string desk;   // default under preset=desk
  std::string paper;  // default under preset=paper
  std::string doc;
};

// Keys shared by every command, then per-command keys.
inline const std::vector<Setting>& common_settings() {
  static const std::vector<Setting> s = {
      {"preset", "desk", "desk", "desk | paper: model size and training defaults"},
      {"seed", "0", "0", "seed for every random choice"},
  };
  return s;
}

inline const std::map<std::string, std::vector<Setting>>& command_settings() {
  static const std::map<std::string, std::vector<Setting>> s = {
      {"synth",
       {{"synth.kits", "0,1,2,3,4,5,6,7,8,9", "0,1,2,3,4,5,6,7,8,9", "kits to render"},
        {"synth.patterns", "10", "10", "procedural patterns when no MIDI directory is given"},
        {"synth.pattern_seconds", "8", "8", "length of each procedural pattern"},
        {"synth.validation", "", "", "clip ids placed in the validation split"},
        {"synth.test", "", "", "clip ids placed in the test split"},
        {"synth.encoding", "float32", "float32", "float32 | pcm16"}}},
      {"train",
       {{"train.iterations", "2000", "100000", "total training iterations"},
        {"train.batch", "2", "24", "examples per iteration"},
        {"train.lr", "0.001", "0.0001", "Adam learning rate"},
        {"train.checkpoint_every", "500", "1000", "iterations between checkpoints"},
        {"train.augment", "true", "true", "run the augmentation pipeline on examples"},
        {"train.threads", "1", "1", "stem models trained in parallel"},
        {"train.split", "train", "train", "dataset split to train on"}}},
      {"separate",
       {{"separate.method", "larsnet", "larsnet", "larsnet | nmfd | sab-nmf"},
        {"separate.wiener", "false", "false", "alpha-Wiener refinement of LarsNet masks"},
        {"separate.alpha", "1", "1", "Wiener exponent, in (0, 2]"},
        {"separate.iterations", "200", "200", "NMF iterations for the baselines"}}},
      {"factorize-templates",
       {{"templates.kits", "0,1,2,3,4,5,6,7,8", "0,1,2,3,4,5,6,7,8", "kits to take hits from"},
        {"templates.velocities", "100", "40,90,127", "hit velocities per instrument"},
        {"templates.length", "8", "8", "template length L in frames"}}},
      {"evaluate",
       {{"evaluate.split", "test", "test", "dataset split to score"},
        {"evaluate.methods", "larsnet", "larsnet",
         "comma list of larsnet | nmfd | sab-nmf | oracle | mixture | silence"},
        {"evaluate.epsilon", "1e-7", "1e-7", "nSDR regularizer"},
        {"evaluate.quantize", "true", "true", "round separator output to 16-bit first"},
        {"separate.wiener", "false", "false", "alpha-Wiener refinement of LarsNet masks"},
        {"separate.alpha", "1", "1", "Wiener exponent, in (0, 2]"},
        {"separate.iterations", "200", "200", "NMF iterations for the baselines"}}},
      {"rtr",
       {{"rtr.method", "larsnet", "larsnet", "larsnet | nmfd | sab-nmf"},
        {"rtr.seconds", "60", "60", "length of generated audio when no inputs are given"},
        {"separate.wiener", "false", "false", "alpha-Wiener refinement of LarsNet masks"},
        {"separate.alpha", "1", "1", "Wiener exponent, in (0, 2]"},
        {"separate.iterations", "200", "200", "NMF iterations for the baselines"}}},
      {"augment-preview",
       {{"augment.p_ks", "0.5", "0.5", "kit swap probability"},
        {"augment.p_cs", "0.5", "0.5", "channel swap probability, per stem"},
        {"augment.p_db", "0.3", "0.3", "doubling probability, per stem"},
        {"augment.p_ps", "0.3", "0.3", "pitch shift probability, per stem"},
        {"augment.p_st", "0.3", "0.3", "saturation probability, per stem"},
        {"augment.p_rx", "0.3", "0.3", "remix probability"},
        {"augment.p_disable_all", "0.5", "0.5", "probability of no augmentation at all"},
        {"augment.count", "4", "4", "previews to write"},
        {"augment.pattern", "0", "0", "procedural pattern to preview"},
        {"augment.seconds", "4", "4", "preview length"}}},
  };
  return s;
}

class RunConfig {
 public:
  /// Defaults for `command` under `preset`, then `file` (if any), then
  /// `overrides`. Unknown keys are rejected wherever they come from.
  static RunConfig resolve(const std::string& command, const std::optional<std::string>& file,
                           const std::map<std::string, std::string>& overrides) {
    const auto& table = command_settings();
    const auto it = table.find(command);
    if (it == table.end()) throw ConfigError("unknown command '" + command + "'");
    RunConfig rc;
    rc.command_ = command;
    std::vector<Setting> all = common_settings();
    all.insert(all.end(), it->second.begin(), it->second.end());
    for (const auto& s : all) rc.settings_[s.key] = s;

    io::KeyValueFile layered;
    if (file) {
      const auto kv = io::KeyValueFile::load(*file);
      for (const auto& k : kv.keys()) {
        rc.check_key(k, *file);
        layered.set(k, kv.get(k));
      }
    }
    for (const auto& [k, v] : overrides) {
      rc.check_key(k, "command line");
      layered.set(k, v);
    }
    const std::string preset = layered.get_or("preset", "desk");
    if (preset != "desk" && preset != "paper")
      throw ConfigError("preset must be desk or paper, got '" + preset + "'");
    for (const auto& s : all) rc.values_[s.key] = preset == "paper" ? s.paper : s.desk;
    for (const auto& k : layered.keys()) rc.values_[k] = layered.get(k);
    return rc;
  }

  const std::string& command() const { return command_; }
  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("setting '" + key + "' is not defined");
    return it->second;
  }
  double get_double(const std::string& key) const { return as_kv().get_double(key); }
  long long get_int(const std::string& key) const { return as_kv().get_int(key); }
  bool get_bool(const std::string& key) const { return as_kv().get_bool(key); }
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key));
    for (std::string tok; std::getline(ss, tok, ',');) {
      const auto a = tok.find_first_not_of(" \t"), b = tok.find_last_not_of(" \t");
      if (a != std::string::npos) out.push_back(tok.substr(a, b - a + 1));
    }
    return out;
  }
  std::vector<int> get_ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& t : get_list(key)) {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(t, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != t.size()) throw ConfigError(key + ": '" + t + "' is not an integer");
      out.push_back(v);
    }
    return out;
  }

  /// The effective configuration as a config file, with documentation.
  std::string dump() const {
    std::ostringstream os;
    os << "# drumsep " << command_ << " configuration\n";
    for (const auto& [k, v] : values_) {
      os << "# " << settings_.at(k).doc << "\n" << k << " = " << v << "\n";
    }
    return os.str();
  }

 private:
  void check_key(const std::string& k, const std::string& where) const {
    if (!settings_.count(k))
      throw ConfigError(where + ": unknown setting '" + k + "' for command " + command_);
  }
  io::KeyValueFile as_kv() const {
    io::KeyValueFile kv;
    for (const auto& [k, v] : values_) kv.set(k, v);
    return kv;
  }

  std::string command_;
  std::map<std::string, Setting> settings_;
  std::map<std::string, std::string> values_;
};

}  // namespace drumsep::cli
