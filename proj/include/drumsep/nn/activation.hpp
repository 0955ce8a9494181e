// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>

#include "drumsep/nn/tensor.hpp"

namespace drumsep::nn {

enum class ActKind { LeakyRelu, Relu, Sigmoid, Tanh };

inline constexpr double kLeakySlope = 0.2;

template <typename T>
T activate(ActKind k, T x) {
  switch (k) {
    case ActKind::LeakyRelu:
      return x >= T(0) ? x : static_cast<T>(kLeakySlope) * x;
    case ActKind::Relu:
      return x > T(0) ? x : T(0);
    case ActKind::Sigmoid:
      // split form avoids overflow of exp for large |x|
      if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
      else {
        const T e = std::exp(x);
        return e / (T(1) + e);
      }
    case ActKind::Tanh:
      return std::tanh(x);
  }
  return x;
}

/// Derivative expressed through the input x and output y.
template <typename T>
T activate_grad(ActKind k, T x, T y) {
  switch (k) {
    case ActKind::LeakyRelu:
      return x >= T(0) ? T(1) : static_cast<T>(kLeakySlope);
    case ActKind::Relu:
      return x > T(0) ? T(1) : T(0);
    case ActKind::Sigmoid:
      return y * (T(1) - y);
    case ActKind::Tanh:
      return T(1) - y * y;
  }
  return T(1);
}

template <typename T>
Tensor4<T> activation(const Tensor4<T>& x, ActKind kind) {
  Tensor4<T> y(x.shape());
  for (index_t i = 0; i < x.numel(); ++i) y[i] = activate(kind, x[i]);
  return y;
}

/// Stateful wrapper that records what the backward pass needs.
template <typename T>
class Activation {
 public:
  explicit Activation(ActKind k = ActKind::Relu) : kind_(k) {}

  Tensor4<T> forward(const Tensor4<T>& x) {
    x_ = x;
    y_ = activation(x, kind_);
    recorded_ = true;
    return y_;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) const {
    if (!recorded_) throw StateError("activation: backward called before forward");
    if (!(dy.shape() == y_.shape())) throw ShapeError("activation backward: shape mismatch");
    Tensor4<T> dx(dy.shape());
    for (index_t i = 0; i < dy.numel(); ++i) dx[i] = dy[i] * activate_grad(kind_, x_[i], y_[i]);
    return dx;
  }

  ActKind kind() const { return kind_; }
  const Tensor4<T>& output() const { return y_; }

 private:
  ActKind kind_;
  bool recorded_ = false;
  Tensor4<T> x_, y_;
};

}  // namespace drumsep::nn
