// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "drumsep/nn/tensor.hpp"

namespace drumsep::nn {

template <typename T>
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;
  std::vector<std::vector<T>> m;  // one per parameter, in parameter order
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update over `params`. All gradients are checked for
/// finiteness before anything is modified.
template <typename T>
void adam_step(const std::vector<Param<T>*>& params, AdamState<T>& st) {
  for (const auto* p : params)
    for (T g : p->grad)
      if (!std::isfinite(static_cast<double>(g)))
        throw NumericError("adam_step: non-finite gradient in '" + p->name + "'");

  if (st.m.empty()) {
    for (const auto* p : params) {
      st.m.emplace_back(p->value.size(), T(0));
      st.v.emplace_back(p->value.size(), T(0));
    }
  }
  if (st.m.size() != params.size())
    throw ShapeError("adam_step: optimizer state tracks " + std::to_string(st.m.size()) +
                     " parameters, got " + std::to_string(params.size()));

  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = *params[k];
    auto& m = st.m[k];
    auto& v = st.v[k];
    if (m.size() != p.value.size())
      throw ShapeError("adam_step: moment buffer shape mismatch for '" + p.name + "'");
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = st.beta1 * m[i] + (1 - st.beta1) * g;
      const double vi = st.beta2 * v[i] + (1 - st.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = st.lr * (mi / bc1) / (std::sqrt(vi / bc2) + st.eps);
      p.value[i] = static_cast<T>(p.value[i] - update);
    }
  }
}

}  // namespace drumsep::nn
