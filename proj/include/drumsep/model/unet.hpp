// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Mask-estimating U-Net.
//
//   input (N, 2, F, T)
//     -> FreqBN
//     -> 6 x [conv 5x5 / stride 2 / pad 2, leaky ReLU 0.2]         encoder
//     -> 6 x [transposed conv 5x5 / stride 2 / pad 2, ReLU]         decoder
//        the output of decoder layer j (j < 5) is concatenated with
//        the output of encoder layer 4 - j along channels
//     -> transposed conv 4x4 / stride 1 / dilation 2 / pad 3, sigmoid
//   mask (N, 2, F, T)
//
// F and T must be multiples of 64 so that the six halvings mirror exactly.

#include <array>
#include <random>
#include <string>
#include <vector>

#include "drumsep/io/tensor_container.hpp"
#include "drumsep/nn/activation.hpp"
#include "drumsep/nn/conv.hpp"
#include "drumsep/nn/freq_batchnorm.hpp"
#include "drumsep/nn/tensor.hpp"

namespace drumsep::model {

using nn::ConvParams;
using nn::ConvSpec;
using nn::Mode;
using nn::Tensor4;

inline constexpr int kEncoderLayers = 6;
inline constexpr int kDecoderLayers = 6;
inline constexpr int kConvLayers = kEncoderLayers + kDecoderLayers + 1;

struct UNetConfig {
  index_t bands = 2048;  // F
  index_t frames = 512;  // T
  index_t in_channels = 2;
  std::array<index_t, kEncoderLayers> widths{32, 64, 128, 256, 512, 512};
  bool input_freq_bn = true;

  static UNetConfig paper() { return {}; }
  static UNetConfig desk() { return {256, 128, 2, {8, 16, 32, 64, 128, 128}, true}; }

  void validate() const {
    constexpr index_t kAlign = index_t{1} << kEncoderLayers;
    if (bands < kAlign || bands % kAlign != 0 || frames < kAlign || frames % kAlign != 0)
      throw ConfigError("UNetConfig: F and T must be positive multiples of " +
                        std::to_string(kAlign) + ", got F=" + std::to_string(bands) +
                        " T=" + std::to_string(frames));
    if (in_channels < 1) throw ConfigError("UNetConfig: in_channels must be >= 1");
    for (auto w : widths)
      if (w < 1) throw ConfigError("UNetConfig: channel widths must be >= 1");
  }

  /// All 13 layer specs: encoder, decoder, final.
  std::vector<ConvSpec> layer_specs() const {
    std::vector<ConvSpec> specs;
    for (int i = 0; i < kEncoderLayers; ++i)
      specs.push_back({widths[i], {5, 5}, {2, 2}, {2, 2}, {1, 1}, {0, 0}, false});
    for (int j = 0; j < kDecoderLayers; ++j) {
      const index_t out = j < kDecoderLayers - 1 ? widths[kEncoderLayers - 2 - j] : widths[0];
      specs.push_back({out, {5, 5}, {2, 2}, {2, 2}, {1, 1}, {1, 1}, true});
    }
    specs.push_back({in_channels, {4, 4}, {1, 1}, {3, 3}, {2, 2}, {0, 0}, true});
    return specs;
  }

  /// Input channel count of each of the 13 layers.
  std::vector<index_t> layer_inputs() const {
    std::vector<index_t> in;
    for (int i = 0; i < kEncoderLayers; ++i) in.push_back(i == 0 ? in_channels : widths[i - 1]);
    for (int j = 0; j < kDecoderLayers; ++j)
      in.push_back(j == 0 ? widths[kEncoderLayers - 1] : 2 * widths[kEncoderLayers - 1 - j]);
    in.push_back(widths[0]);
    return in;
  }

  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

template <typename T>
class UNet {
 public:
  UNet() = default;
  UNet(const UNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    specs_ = cfg_.layer_specs();
    const auto inputs = cfg_.layer_inputs();
    bn_ = nn::FreqBatchNorm<T>("input_bn", cfg_.bands);
    for (int l = 0; l < kConvLayers; ++l)
      layers_[l] = nn::make_conv_params<T>(layer_name(l), inputs[l], specs_[l], rng);
    for (int i = 0; i < kEncoderLayers; ++i) enc_act_[i] = nn::Activation<T>(nn::ActKind::LeakyRelu);
    for (int j = 0; j < kDecoderLayers; ++j) dec_act_[j] = nn::Activation<T>(nn::ActKind::Relu);
    out_act_ = nn::Activation<T>(nn::ActKind::Sigmoid);
  }

  static std::string layer_name(int l) {
    if (l < kEncoderLayers) return "enc" + std::to_string(l);
    if (l < kEncoderLayers + kDecoderLayers) return "dec" + std::to_string(l - kEncoderLayers);
    return "final";
  }

  const UNetConfig& config() const { return cfg_; }
  const std::vector<ConvSpec>& specs() const { return specs_; }

  /// Recording forward pass (needed before backward).
  Tensor4<T> forward(const Tensor4<T>& x, Mode mode) {
    check_input(x);
    Tensor4<T> a = cfg_.input_freq_bn ? bn_.forward(x, mode) : x;
    for (int i = 0; i < kEncoderLayers; ++i) {
      conv_in_[i] = std::move(a);
      a = enc_act_[i].forward(nn::conv_forward(conv_in_[i], specs_[i], layers_[i]));
    }
    for (int j = 0; j < kDecoderLayers; ++j) {
      const int l = kEncoderLayers + j;
      conv_in_[l] = std::move(a);
      Tensor4<T> r = dec_act_[j].forward(nn::conv_forward(conv_in_[l], specs_[l], layers_[l]));
      a = j < kDecoderLayers - 1 ? nn::concat_channels(r, enc_act_[kEncoderLayers - 2 - j].output())
                                 : std::move(r);
    }
    conv_in_[kConvLayers - 1] = std::move(a);
    recorded_ = true;
    return out_act_.forward(
        nn::conv_forward(conv_in_[kConvLayers - 1], specs_[kConvLayers - 1], layers_[kConvLayers - 1]));
  }

  /// Accumulates parameter gradients and returns d(loss)/d(input).
  Tensor4<T> backward(const Tensor4<T>& dmask) {
    if (!recorded_) throw StateError("UNet: backward called before forward");
    std::array<Tensor4<T>, kEncoderLayers> denc;  // gradients w.r.t. encoder outputs

    Tensor4<T> d = out_act_.backward(dmask);
    d = nn::conv_backward(conv_in_[kConvLayers - 1], d, specs_[kConvLayers - 1], layers_[kConvLayers - 1]);
    for (int j = kDecoderLayers - 1; j >= 0; --j) {
      const int l = kEncoderLayers + j;
      if (j < kDecoderLayers - 1) {
        const index_t own = specs_[l].out_channels;
        auto [dr, dskip] = nn::split_channels(d, own);
        denc[kEncoderLayers - 2 - j] = std::move(dskip);
        d = std::move(dr);
      }
      d = dec_act_[j].backward(d);
      d = nn::conv_backward(conv_in_[l], d, specs_[l], layers_[l]);
    }
    for (int i = kEncoderLayers - 1; i >= 0; --i) {
      if (!denc[i].empty()) nn::add_inplace(d, denc[i]);
      d = enc_act_[i].backward(d);
      d = nn::conv_backward(conv_in_[i], d, specs_[i], layers_[i]);
    }
    return cfg_.input_freq_bn ? bn_.backward(d) : d;
  }

  /// Eval-mode forward without recording; safe to call concurrently.
  Tensor4<T> infer(const Tensor4<T>& x) const {
    check_input(x);
    Tensor4<T> a = cfg_.input_freq_bn ? eval_bn(x) : x;
    std::array<Tensor4<T>, kEncoderLayers> skips;
    for (int i = 0; i < kEncoderLayers; ++i) {
      a = nn::activation(nn::conv_forward(a, specs_[i], layers_[i]), nn::ActKind::LeakyRelu);
      skips[i] = a;
    }
    for (int j = 0; j < kDecoderLayers; ++j) {
      const int l = kEncoderLayers + j;
      Tensor4<T> r = nn::activation(nn::conv_forward(a, specs_[l], layers_[l]), nn::ActKind::Relu);
      a = j < kDecoderLayers - 1 ? nn::concat_channels(r, skips[kEncoderLayers - 2 - j]) : std::move(r);
    }
    return nn::activation(nn::conv_forward(a, specs_[kConvLayers - 1], layers_[kConvLayers - 1]),
                          nn::ActKind::Sigmoid);
  }

  std::vector<nn::Param<T>*> params() {
    std::vector<nn::Param<T>*> out;
    if (cfg_.input_freq_bn) {
      out.push_back(&bn_.gamma);
      out.push_back(&bn_.beta);
    }
    for (auto& l : layers_) {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }
  std::vector<const nn::Param<T>*> params() const {
    std::vector<const nn::Param<T>*> out;
    for (auto* p : const_cast<UNet*>(this)->params()) out.push_back(p);
    return out;
  }
  std::vector<nn::Buffer<T>*> buffers() {
    if (!cfg_.input_freq_bn) return {};
    return {&bn_.running_mean, &bn_.running_var};
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  nn::FreqBatchNorm<T>& input_bn() { return bn_; }
  ConvParams<T>& layer(int l) { return layers_.at(static_cast<std::size_t>(l)); }
  const ConvParams<T>& layer(int l) const { return layers_.at(static_cast<std::size_t>(l)); }

  void save(io::TensorContainer& out) {
    for (auto* p : params()) out.add<T>(p->name, p->shape, p->value);
    for (auto* b : buffers())
      out.add<T>(b->name, {static_cast<index_t>(b->value.size())}, b->value);
  }

  void load(const io::TensorContainer& in) {
    for (auto* p : params()) {
      const auto& e = in.at(p->name);
      if (e.shape != p->shape)
        throw ShapeError("checkpoint tensor '" + p->name + "' has shape " +
                         nn::detail::shape_str(e.shape) + ", model expects " +
                         nn::detail::shape_str(p->shape));
      std::transform(e.values.begin(), e.values.end(), p->value.begin(),
                     [](double v) { return static_cast<T>(v); });
    }
    for (auto* b : buffers()) {
      const auto& e = in.at(b->name);
      if (e.numel() != static_cast<index_t>(b->value.size()))
        throw ShapeError("checkpoint buffer '" + b->name + "' has the wrong size");
      std::transform(e.values.begin(), e.values.end(), b->value.begin(),
                     [](double v) { return static_cast<T>(v); });
    }
  }

 private:
  void check_input(const Tensor4<T>& x) const {
    const auto& s = x.shape();
    if (s.c != cfg_.in_channels || s.h != cfg_.bands || s.w != cfg_.frames)
      throw ShapeError("UNet: input " + s.str() + " does not match expected (N, " +
                       std::to_string(cfg_.in_channels) + ", " + std::to_string(cfg_.bands) +
                       ", " + std::to_string(cfg_.frames) + ")");
  }

  Tensor4<T> eval_bn(const Tensor4<T>& x) const {
    const auto& s = x.shape();
    Tensor4<T> y(s);
    for (index_t f = 0; f < s.h; ++f) {
      const double inv = 1.0 / std::sqrt(double(bn_.running_var.value[f]) + bn_.kEps);
      const double mean = bn_.running_mean.value[f];
      const double g = bn_.gamma.value[f], b = bn_.beta.value[f];
      for (index_t n = 0; n < s.n; ++n)
        for (index_t c = 0; c < s.c; ++c)
          for (index_t t = 0; t < s.w; ++t)
            y(n, c, f, t) = static_cast<T>(g * (x(n, c, f, t) - mean) * inv + b);
    }
    return y;
  }

  UNetConfig cfg_;
  std::vector<ConvSpec> specs_;
  nn::FreqBatchNorm<T> bn_;
  std::array<ConvParams<T>, kConvLayers> layers_;
  std::array<nn::Activation<T>, kEncoderLayers> enc_act_;
  std::array<nn::Activation<T>, kDecoderLayers> dec_act_;
  nn::Activation<T> out_act_;
  std::array<Tensor4<T>, kConvLayers> conv_in_;
  bool recorded_ = false;
};

}  // namespace drumsep::model
