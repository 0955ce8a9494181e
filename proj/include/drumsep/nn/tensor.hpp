// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "drumsep/common.hpp"

namespace drumsep::nn {

struct Shape4 {
  index_t n = 1, c = 1, h = 1, w = 1;

  index_t numel() const { return n * c * h * w; }
  index_t plane() const { return h * w; }
  index_t sample() const { return c * h * w; }
  std::string str() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " +
           std::to_string(h) + ", " + std::to_string(w) + ")";
  }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense NCHW tensor: batch x channels x freq x time.
template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 s, T fill = T(0)) : shape_(s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
      throw ShapeError("tensor dims must be >= 1, got " + s.str());
    data_.assign(static_cast<std::size_t>(s.numel()), fill);
  }
  Tensor4(index_t n, index_t c, index_t h, index_t w, T fill = T(0))
      : Tensor4(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  index_t numel() const { return shape_.numel(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T* sample(index_t b) { return data_.data() + b * shape_.sample(); }
  const T* sample(index_t b) const { return data_.data() + b * shape_.sample(); }

  T& operator()(index_t b, index_t c, index_t h, index_t w) {
    return data_[static_cast<std::size_t>(((b * shape_.c + c) * shape_.h + h) * shape_.w + w)];
  }
  T operator()(index_t b, index_t c, index_t h, index_t w) const {
    return data_[static_cast<std::size_t>(((b * shape_.c + c) * shape_.h + h) * shape_.w + w)];
  }
  T& operator[](index_t i) { return data_[static_cast<std::size_t>(i)]; }
  T operator[](index_t i) const { return data_[static_cast<std::size_t>(i)]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  Tensor4<U> cast() const {
    Tensor4<U> out(shape_);
    std::transform(data_.begin(), data_.end(), out.vec().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const Tensor4& a, const Tensor4& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape4 shape_{};
  std::vector<T> data_;
};

template <typename T>
T dot(const Tensor4<T>& a, const Tensor4<T>& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("dot: shapes differ " + a.shape().str() + " vs " + b.shape().str());
  T s = 0;
  for (index_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

/// Concatenates along the channel axis.
template <typename T>
Tensor4<T> concat_channels(const Tensor4<T>& a, const Tensor4<T>& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ShapeError("concat_channels: incompatible shapes " + sa.str() + " and " +
                     sb.str());
  Tensor4<T> out(sa.n, sa.c + sb.c, sa.h, sa.w);
  for (index_t n = 0; n < sa.n; ++n) {
    std::copy_n(a.sample(n), sa.sample(), out.sample(n));
    std::copy_n(b.sample(n), sb.sample(), out.sample(n) + sa.sample());
  }
  return out;
}

/// Splits a channel-concatenated tensor back into its two parts.
template <typename T>
std::pair<Tensor4<T>, Tensor4<T>> split_channels(const Tensor4<T>& x, index_t first) {
  const auto& s = x.shape();
  if (first < 1 || first >= s.c)
    throw ShapeError("split_channels: bad split point " + std::to_string(first));
  Tensor4<T> a(s.n, first, s.h, s.w), b(s.n, s.c - first, s.h, s.w);
  for (index_t n = 0; n < s.n; ++n) {
    std::copy_n(x.sample(n), a.shape().sample(), a.sample(n));
    std::copy_n(x.sample(n) + a.shape().sample(), b.shape().sample(), b.sample(n));
  }
  return {std::move(a), std::move(b)};
}

template <typename T>
void add_inplace(Tensor4<T>& dst, const Tensor4<T>& src) {
  if (!(dst.shape() == src.shape()))
    throw ShapeError("add: shapes differ " + dst.shape().str() + " vs " +
                     src.shape().str());
  for (index_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

/// Trainable parameter with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  std::vector<index_t> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::vector<index_t> s, T fill = T(0)) : name(std::move(n)), shape(std::move(s)) {
    index_t count = 1;
    for (auto d : shape) count *= d;
    value.assign(static_cast<std::size_t>(count), fill);
    grad.assign(static_cast<std::size_t>(count), T(0));
  }
  index_t numel() const { return static_cast<index_t>(value.size()); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Non-trainable state saved with checkpoints (FreqBN running statistics).
template <typename T>
struct Buffer {
  std::string name;
  std::vector<T> value;
};

template <typename T>
void fill_uniform(std::span<T> out, T lo, T hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(static_cast<double>(lo), static_cast<double>(hi));
  for (auto& v : out) v = static_cast<T>(d(rng));
}

}  // namespace drumsep::nn
