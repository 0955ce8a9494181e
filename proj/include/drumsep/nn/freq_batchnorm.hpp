// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "drumsep/nn/tensor.hpp"

namespace drumsep::nn {

enum class Mode { Train, Eval };

/// Batch normalization with one set of statistics per frequency band (the H
/// axis), pooled over batch, channel and time.
template <typename T>
class FreqBatchNorm {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  FreqBatchNorm() = default;
  FreqBatchNorm(const std::string& name, index_t bands)
      : gamma(name + ".gamma", {bands}, T(1)),
        beta(name + ".beta", {bands}, T(0)),
        running_mean{name + ".running_mean", std::vector<T>(static_cast<std::size_t>(bands), T(0))},
        running_var{name + ".running_var", std::vector<T>(static_cast<std::size_t>(bands), T(1))} {}

  index_t bands() const { return gamma.numel(); }

  Tensor4<T> forward(const Tensor4<T>& x, Mode mode) {
    const Shape4& s = x.shape();
    if (s.h != bands())
      throw ShapeError("FreqBN: input " + s.str() + " has " + std::to_string(s.h) +
                       " bands, layer expects " + std::to_string(bands()));
    Tensor4<T> y(s);
    const index_t count = s.n * s.c * s.w;
    mode_ = mode;
    inv_std_.assign(static_cast<std::size_t>(s.h), T(0));
    xhat_ = Tensor4<T>(s);

    for (index_t f = 0; f < s.h; ++f) {
      double mean, var;
      if (mode == Mode::Train) {
        double sum = 0;
        for (index_t n = 0; n < s.n; ++n)
          for (index_t c = 0; c < s.c; ++c)
            for (index_t t = 0; t < s.w; ++t) sum += x(n, c, f, t);
        mean = sum / count;
        double sq = 0;
        for (index_t n = 0; n < s.n; ++n)
          for (index_t c = 0; c < s.c; ++c)
            for (index_t t = 0; t < s.w; ++t) {
              const double d = x(n, c, f, t) - mean;
              sq += d * d;
            }
        var = sq / count;
        const double unbiased = count > 1 ? sq / (count - 1) : var;
        running_mean.value[f] = static_cast<T>((1 - kMomentum) * running_mean.value[f] + kMomentum * mean);
        running_var.value[f] = static_cast<T>((1 - kMomentum) * running_var.value[f] + kMomentum * unbiased);
      } else {
        mean = running_mean.value[f];
        var = running_var.value[f];
      }
      const double inv = 1.0 / std::sqrt(var + kEps);
      inv_std_[f] = static_cast<T>(inv);
      const double g = gamma.value[f], b = beta.value[f];
      for (index_t n = 0; n < s.n; ++n)
        for (index_t c = 0; c < s.c; ++c)
          for (index_t t = 0; t < s.w; ++t) {
            const double xh = (x(n, c, f, t) - mean) * inv;
            xhat_(n, c, f, t) = static_cast<T>(xh);
            y(n, c, f, t) = static_cast<T>(g * xh + b);
          }
    }
    recorded_ = true;
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) {
    if (!recorded_) throw StateError("FreqBN: backward called before forward");
    const Shape4& s = dy.shape();
    if (s.h != bands()) throw ShapeError("FreqBN backward: band count mismatch");
    Tensor4<T> dx(s);
    const double count = double(s.n * s.c * s.w);
    for (index_t f = 0; f < s.h; ++f) {
      const double g = gamma.value[f];
      const double inv = inv_std_[f];
      if (mode_ == Mode::Eval) {
        // statistics are constants in eval mode
        double sdy = 0, sdyx = 0;
        for (index_t n = 0; n < s.n; ++n)
          for (index_t c = 0; c < s.c; ++c)
            for (index_t t = 0; t < s.w; ++t) {
              sdy += dy(n, c, f, t);
              sdyx += dy(n, c, f, t) * xhat_(n, c, f, t);
              dx(n, c, f, t) = static_cast<T>(dy(n, c, f, t) * g * inv);
            }
        gamma.grad[f] += static_cast<T>(sdyx);
        beta.grad[f] += static_cast<T>(sdy);
        continue;
      }
      double sdy = 0, sdyx = 0;
      for (index_t n = 0; n < s.n; ++n)
        for (index_t c = 0; c < s.c; ++c)
          for (index_t t = 0; t < s.w; ++t) {
            sdy += dy(n, c, f, t);
            sdyx += dy(n, c, f, t) * xhat_(n, c, f, t);
          }
      gamma.grad[f] += static_cast<T>(sdyx);
      beta.grad[f] += static_cast<T>(sdy);
      for (index_t n = 0; n < s.n; ++n)
        for (index_t c = 0; c < s.c; ++c)
          for (index_t t = 0; t < s.w; ++t) {
            const double d = count * dy(n, c, f, t) - sdy - xhat_(n, c, f, t) * sdyx;
            dx(n, c, f, t) = static_cast<T>(g * inv * d / count);
          }
    }
    return dx;
  }

  Param<T> gamma, beta;
  Buffer<T> running_mean, running_var;

 private:
  Mode mode_ = Mode::Eval;
  bool recorded_ = false;
  Tensor4<T> xhat_;
  std::vector<T> inv_std_;
};

}  // namespace drumsep::nn
