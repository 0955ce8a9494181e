// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>

#include "drumsep/nn/tensor.hpp"

namespace drumsep::nn {

template <typename T>
T sign0(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

struct MaskedL1 {
  double loss = 0;
};

/// Sum over all elements of |target - mask * mixture|. Fills `dmask` with
/// the subgradient w.r.t. the mask, using sign(0) = 0.
template <typename T>
double masked_l1(const Tensor4<T>& mask, const Tensor4<T>& mixture, const Tensor4<T>& target,
                 Tensor4<T>* dmask = nullptr) {
  if (!(mask.shape() == mixture.shape()) || !(mask.shape() == target.shape()))
    throw ShapeError("masked_l1: shapes differ: mask " + mask.shape().str() + ", mixture " +
                     mixture.shape().str() + ", target " + target.shape().str());
  if (dmask) *dmask = Tensor4<T>(mask.shape());
  double loss = 0;
  for (index_t i = 0; i < mask.numel(); ++i) {
    const T r = mask[i] * mixture[i] - target[i];
    loss += std::abs(static_cast<double>(r));
    if (dmask) (*dmask)[i] = sign0(r) * mixture[i];
  }
  return loss;
}

}  // namespace drumsep::nn
