// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Spectral template dictionaries built from isolated drum hits. Each hit
// yields an onset-aligned (bins x L) magnitude patch for NMFD and one averaged
// spectral column for frame-wise NMF, both scaled to unit maximum.

#include <filesystem>
#include <string>
#include <vector>

#include "drumsep/audio.hpp"
#include "drumsep/common.hpp"
#include "drumsep/dsp/stft.hpp"
#include "drumsep/io/tensor_container.hpp"

namespace drumsep::nmf {

using dsp::RealMatrix;
using Vector = Eigen::VectorXd;

struct Template {
  Stem stem = Stem::Kick;
  std::string instrument;
  int velocity = 0;
  RealMatrix patch;  // bins x L
  Vector column;     // bins
};

struct IsolatedHit {
  Stem stem;
  std::string instrument;
  int velocity;
  AudioClip clip;
};

class TemplateDictionary {
 public:
  index_t num_bins = 0;
  index_t length = 0;  // L
  std::vector<Template> templates;

  index_t size() const { return static_cast<index_t>(templates.size()); }

  void validate() const {
    if (templates.empty()) throw ConfigError("template dictionary is empty");
    for (const auto& t : templates) {
      if (t.patch.rows() != num_bins || t.patch.cols() != length || t.column.size() != num_bins)
        throw ShapeError("template '" + t.instrument + "' has the wrong shape");
      if ((t.patch.array() < 0).any() || (t.column.array() < 0).any())
        throw DomainError("template '" + t.instrument + "' has negative entries");
    }
    for (Stem s : kAllStems) {
      bool found = false;
      for (const auto& t : templates) found = found || t.stem == s;
      if (!found)
        throw ConfigError("template dictionary has no template for " + std::string(stem_name(s)));
    }
  }

  std::vector<Stem> labels() const {
    std::vector<Stem> out;
    for (const auto& t : templates) out.push_back(t.stem);
    return out;
  }

  /// W(t) for t = 0..L-1, each bins x R.
  std::vector<RealMatrix> convolutive_bases() const {
    std::vector<RealMatrix> w(static_cast<std::size_t>(length), RealMatrix(num_bins, size()));
    for (index_t r = 0; r < size(); ++r)
      for (index_t t = 0; t < length; ++t) w[t].col(r) = templates[r].patch.col(t);
    return w;
  }

  /// bins x R matrix of spectral columns.
  RealMatrix frame_bases() const {
    RealMatrix w(num_bins, size());
    for (index_t r = 0; r < size(); ++r) w.col(r) = templates[r].column;
    return w;
  }

  /// Dictionary from raw convolutive bases; columns default to the time mean.
  static TemplateDictionary from_bases(const std::vector<RealMatrix>& w,
                                       const std::vector<Stem>& labels) {
    if (w.empty()) throw ConfigError("from_bases: no bases");
    TemplateDictionary d;
    d.num_bins = w[0].rows();
    d.length = static_cast<index_t>(w.size());
    if (static_cast<index_t>(labels.size()) != w[0].cols())
      throw ConfigError("from_bases: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(w[0].cols()) + " components");
    for (index_t r = 0; r < w[0].cols(); ++r) {
      Template t;
      t.stem = labels[r];
      t.instrument = "component" + std::to_string(r);
      t.patch.resize(d.num_bins, d.length);
      for (index_t k = 0; k < d.length; ++k) t.patch.col(k) = w[k].col(r);
      t.column = t.patch.rowwise().mean();
      d.templates.push_back(std::move(t));
    }
    return d;
  }

  io::TensorContainer to_container() const {
    io::TensorContainer c;
    c.metadata["kind"] = "template-dictionary";
    c.metadata["num_bins"] = num_bins;
    c.metadata["length"] = length;
    auto& list = c.metadata["templates"] = nlohmann::json::array();
    for (std::size_t r = 0; r < templates.size(); ++r) {
      const auto& t = templates[r];
      list.push_back({{"stem", std::string(stem_name(t.stem))},
                      {"instrument", t.instrument},
                      {"velocity", t.velocity}});
      // Eigen is column-major; store row-major (bins, L)
      std::vector<double> rm(static_cast<std::size_t>(t.patch.size()));
      for (index_t i = 0; i < t.patch.rows(); ++i)
        for (index_t j = 0; j < t.patch.cols(); ++j)
          rm[static_cast<std::size_t>(i * t.patch.cols() + j)] = t.patch(i, j);
      c.add<double>("patch." + std::to_string(r), {num_bins, length}, rm, io::DType::F32);
      c.add<double>("column." + std::to_string(r), {num_bins},
                    std::span<const double>(t.column.data(), static_cast<std::size_t>(num_bins)),
                    io::DType::F32);
    }
    return c;
  }

  static TemplateDictionary from_container(const io::TensorContainer& c) {
    const auto& md = c.metadata;
    if (md.value("kind", std::string()) != "template-dictionary")
      throw IoError("container does not hold a template dictionary");
    TemplateDictionary d;
    d.num_bins = md.at("num_bins").get<index_t>();
    d.length = md.at("length").get<index_t>();
    const auto& list = md.at("templates");
    for (std::size_t r = 0; r < list.size(); ++r) {
      Template t;
      t.stem = stem_from_name(list[r].at("stem").get<std::string>());
      t.instrument = list[r].at("instrument").get<std::string>();
      t.velocity = list[r].at("velocity").get<int>();
      const auto& p = c.at("patch." + std::to_string(r));
      const auto& col = c.at("column." + std::to_string(r));
      if (p.numel() != d.num_bins * d.length || col.numel() != d.num_bins)
        throw ShapeError("template " + std::to_string(r) + " has the wrong size");
      t.patch.resize(d.num_bins, d.length);
      for (index_t i = 0; i < d.num_bins; ++i)
        for (index_t j = 0; j < d.length; ++j)
          t.patch(i, j) = p.values[static_cast<std::size_t>(i * d.length + j)];
      t.column = Eigen::Map<const Vector>(col.values.data(), d.num_bins);
      d.templates.push_back(std::move(t));
    }
    d.validate();
    return d;
  }

  void save(const std::filesystem::path& path) const { to_container().save(path); }
  static TemplateDictionary load(const std::filesystem::path& path) {
    return from_container(io::TensorContainer::load(path));
  }
};

/// Mono magnitude spectrogram (channel average) of a clip.
inline RealMatrix mono_magnitude(const AudioClip& clip, const dsp::StftConfig& stft) {
  AudioClip mono(1, clip.length(), clip.sample_rate);
  mono.samples.row(0) = clip.samples.colwise().mean();
  return dsp::magnitude(dsp::stft(mono, stft))[0];
}

/// First frame whose summed magnitude reaches `rel` of the loudest frame.
inline index_t onset_frame(const RealMatrix& mag, double rel = 0.1) {
  const Vector energy = mag.colwise().sum().transpose();
  const double peak = energy.maxCoeff();
  for (index_t j = 0; j < energy.size(); ++j)
    if (energy[j] >= rel * peak) return j;
  return 0;
}

inline Template make_template(const IsolatedHit& hit, const dsp::StftConfig& stft,
                              index_t length) {
  if (hit.clip.empty())
    throw DegenerateInputError("template: empty hit for " + hit.instrument);
  const RealMatrix mag = mono_magnitude(hit.clip, stft);
  const double peak = mag.maxCoeff();
  if (!(peak > 0.0))
    throw DegenerateInputError("template: silent hit for " + hit.instrument + " at velocity " +
                               std::to_string(hit.velocity));
  Template t;
  t.stem = hit.stem;
  t.instrument = hit.instrument;
  t.velocity = hit.velocity;
  t.patch = RealMatrix::Zero(mag.rows(), length);
  const index_t on = onset_frame(mag);
  const index_t take = std::min(length, mag.cols() - on);
  t.patch.leftCols(take) = mag.middleCols(on, take);
  t.patch /= t.patch.maxCoeff();
  t.column = mag.middleCols(on, take).rowwise().mean();
  t.column /= t.column.maxCoeff();
  return t;
}

inline TemplateDictionary build_templates(const std::vector<IsolatedHit>& hits,
                                          const dsp::StftConfig& stft, index_t length) {
  if (length < 1) throw ConfigError("templates: L must be >= 1");
  TemplateDictionary d;
  d.num_bins = stft.num_bins();
  d.length = length;
  for (const auto& h : hits) d.templates.push_back(make_template(h, stft, length));
  d.validate();
  return d;
}

}  // namespace drumsep::nmf
