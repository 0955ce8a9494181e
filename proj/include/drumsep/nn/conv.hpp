// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// 2-D convolution and transposed convolution over NCHW tensors, lowered to
// GEMM through im2col / col2im.
//
// Weight layouts follow the usual convention:
//   convolution             (out_channels, in_channels, kh, kw)
//   transposed convolution  (in_channels, out_channels, kh, kw)

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "drumsep/nn/tensor.hpp"

namespace drumsep::nn {

struct ConvSpec {
  index_t out_channels = 1;
  std::array<index_t, 2> kernel{5, 5};
  std::array<index_t, 2> stride{2, 2};
  std::array<index_t, 2> padding{2, 2};
  std::array<index_t, 2> dilation{1, 1};
  std::array<index_t, 2> output_padding{0, 0};  // transposed only
  bool transposed = false;

  void validate() const {
    auto bad = [](const std::string& m) { throw ConfigError("ConvSpec: " + m); };
    if (out_channels < 1) bad("out_channels must be >= 1");
    for (int a = 0; a < 2; ++a) {
      if (kernel[a] < 1 || stride[a] < 1 || dilation[a] < 1)
        bad("kernel, stride and dilation must be >= 1");
      if (padding[a] < 0 || output_padding[a] < 0) bad("padding must be >= 0");
      if (!transposed && output_padding[a] != 0)
        bad("output_padding only applies to transposed convolution");
      if (transposed && output_padding[a] >= std::max(stride[a], dilation[a]))
        bad("output_padding must be smaller than stride or dilation");
    }
  }

  index_t out_dim(int axis, index_t in) const {
    const index_t k = dilation[axis] * (kernel[axis] - 1);
    if (transposed)
      return (in - 1) * stride[axis] - 2 * padding[axis] + k + output_padding[axis] + 1;
    const index_t span = in + 2 * padding[axis] - k - 1;
    return span < 0 ? 0 : span / stride[axis] + 1;
  }

  std::vector<index_t> weight_shape(index_t in_channels) const {
    if (transposed) return {in_channels, out_channels, kernel[0], kernel[1]};
    return {out_channels, in_channels, kernel[0], kernel[1]};
  }
};

template <typename T>
struct ConvParams {
  Param<T> weight;
  Param<T> bias;
};

namespace detail {

// Describes the sliding window between an "image" grid and a "column" grid:
// column position (y, x), tap (i, j) reads image pixel
// (y*stride - pad + i*dil, x*stride - pad + j*dil).
struct Lowering {
  index_t channels, img_h, img_w, kh, kw, sh, sw, ph, pw, dh, dw, col_h, col_w;

  index_t rows() const { return channels * kh * kw; }
  index_t cols() const { return col_h * col_w; }
};

template <typename T>
void im2col(const T* img, const Lowering& g, T* col) {
  const index_t P = g.cols();
  for (index_t c = 0; c < g.channels; ++c)
    for (index_t i = 0; i < g.kh; ++i)
      for (index_t j = 0; j < g.kw; ++j) {
        T* dst = col + ((c * g.kh + i) * g.kw + j) * P;
        const T* src = img + c * g.img_h * g.img_w;
        for (index_t y = 0; y < g.col_h; ++y) {
          const index_t iy = y * g.sh - g.ph + i * g.dh;
          T* row = dst + y * g.col_w;
          if (iy < 0 || iy >= g.img_h) {
            std::fill_n(row, g.col_w, T(0));
            continue;
          }
          const T* srow = src + iy * g.img_w;
          for (index_t x = 0; x < g.col_w; ++x) {
            const index_t ix = x * g.sw - g.pw + j * g.dw;
            row[x] = (ix >= 0 && ix < g.img_w) ? srow[ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_add(const T* col, const Lowering& g, T* img) {
  const index_t P = g.cols();
  for (index_t c = 0; c < g.channels; ++c)
    for (index_t i = 0; i < g.kh; ++i)
      for (index_t j = 0; j < g.kw; ++j) {
        const T* src = col + ((c * g.kh + i) * g.kw + j) * P;
        T* dst = img + c * g.img_h * g.img_w;
        for (index_t y = 0; y < g.col_h; ++y) {
          const index_t iy = y * g.sh - g.ph + i * g.dh;
          if (iy < 0 || iy >= g.img_h) continue;
          const T* row = src + y * g.col_w;
          T* drow = dst + iy * g.img_w;
          for (index_t x = 0; x < g.col_w; ++x) {
            const index_t ix = x * g.sw - g.pw + j * g.dw;
            if (ix >= 0 && ix < g.img_w) drow[ix] += row[x];
          }
        }
      }
}

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::string shape_str(const std::vector<index_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
  return out + ")";
}

template <typename T>
Shape4 check_and_out_shape(const Tensor4<T>& x, const ConvSpec& spec, const ConvParams<T>& p) {
  spec.validate();
  const auto& s = x.shape();
  const auto expected = spec.weight_shape(s.c);
  if (p.weight.shape != expected)
    throw ShapeError("conv: weight shape " + shape_str(p.weight.shape) +
                     " does not match input " + s.str() + " (expected " +
                     shape_str(expected) + ")");
  if (p.bias.numel() != spec.out_channels)
    throw ShapeError("conv: bias has " + std::to_string(p.bias.numel()) +
                     " entries, expected " + std::to_string(spec.out_channels));
  const Shape4 out{s.n, spec.out_channels, spec.out_dim(0, s.h), spec.out_dim(1, s.w)};
  if (out.h < 1 || out.w < 1)
    throw ShapeError("conv: input " + s.str() + " yields empty output " + out.str());
  return out;
}

// Lowering whose image is the input (convolution) or the output
// (transposed convolution).
inline Lowering lowering(const ConvSpec& spec, index_t img_c, index_t img_h,
                         index_t img_w, index_t col_h, index_t col_w) {
  return {img_c,          img_h,          img_w,           spec.kernel[0], spec.kernel[1],
          spec.stride[0], spec.stride[1], spec.padding[0], spec.padding[1],
          spec.dilation[0], spec.dilation[1], col_h, col_w};
}

}  // namespace detail

/// Forward pass of a (transposed) convolution, dispatching on spec.transposed.
template <typename T>
Tensor4<T> conv_forward(const Tensor4<T>& x, const ConvSpec& spec, const ConvParams<T>& p) {
  using detail::MatRM;
  const Shape4 os = detail::check_and_out_shape(x, spec, p);
  const Shape4& is = x.shape();
  Tensor4<T> y(os);
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(p.bias.value.data(), os.c);

  if (!spec.transposed) {
    const auto g = detail::lowering(spec, is.c, is.h, is.w, os.h, os.w);
    std::vector<T> col(static_cast<std::size_t>(g.rows() * g.cols()));
    Eigen::Map<const MatRM<T>> W(p.weight.value.data(), os.c, g.rows());
    for (index_t b = 0; b < is.n; ++b) {
      detail::im2col(x.sample(b), g, col.data());
      Eigen::Map<const MatRM<T>> C(col.data(), g.rows(), g.cols());
      Eigen::Map<MatRM<T>> Y(y.sample(b), os.c, g.cols());
      Y.noalias() = W * C;
      Y.colwise() += bias;
    }
  } else {
    const auto g = detail::lowering(spec, os.c, os.h, os.w, is.h, is.w);
    std::vector<T> col(static_cast<std::size_t>(g.rows() * g.cols()));
    Eigen::Map<const MatRM<T>> W(p.weight.value.data(), is.c, g.rows());
    for (index_t b = 0; b < is.n; ++b) {
      Eigen::Map<const MatRM<T>> X(x.sample(b), is.c, g.cols());
      Eigen::Map<MatRM<T>> C(col.data(), g.rows(), g.cols());
      C.noalias() = W.transpose() * X;
      T* yb = y.sample(b);
      for (index_t c = 0; c < os.c; ++c) std::fill_n(yb + c * os.plane(), os.plane(), p.bias.value[c]);
      detail::col2im_add(col.data(), g, yb);
    }
  }
  return y;
}

/// Backward pass: accumulates into p.weight.grad / p.bias.grad and returns
/// the input gradient (empty tensor when need_input_grad is false).
template <typename T>
Tensor4<T> conv_backward(const Tensor4<T>& x, const Tensor4<T>& dy, const ConvSpec& spec,
                         ConvParams<T>& p, bool need_input_grad = true) {
  using detail::MatRM;
  const Shape4 os = detail::check_and_out_shape(x, spec, p);
  if (!(dy.shape() == os))
    throw ShapeError("conv backward: upstream gradient " + dy.shape().str() +
                     " does not match output " + os.str());
  const Shape4& is = x.shape();
  Tensor4<T> dx;
  if (need_input_grad) dx = Tensor4<T>(is);

  for (index_t b = 0; b < is.n; ++b) {
    const T* dyb = dy.sample(b);
    for (index_t c = 0; c < os.c; ++c) {
      T s = 0;
      for (index_t i = 0; i < os.plane(); ++i) s += dyb[c * os.plane() + i];
      p.bias.grad[c] += s;
    }
  }

  if (!spec.transposed) {
    const auto g = detail::lowering(spec, is.c, is.h, is.w, os.h, os.w);
    std::vector<T> col(static_cast<std::size_t>(g.rows() * g.cols()));
    Eigen::Map<const MatRM<T>> W(p.weight.value.data(), os.c, g.rows());
    Eigen::Map<MatRM<T>> dW(p.weight.grad.data(), os.c, g.rows());
    for (index_t b = 0; b < is.n; ++b) {
      detail::im2col(x.sample(b), g, col.data());
      Eigen::Map<MatRM<T>> C(col.data(), g.rows(), g.cols());
      Eigen::Map<const MatRM<T>> DY(dy.sample(b), os.c, g.cols());
      dW.noalias() += DY * C.transpose();
      if (need_input_grad) {
        C.noalias() = W.transpose() * DY;
        detail::col2im_add(col.data(), g, dx.sample(b));
      }
    }
  } else {
    const auto g = detail::lowering(spec, os.c, os.h, os.w, is.h, is.w);
    std::vector<T> col(static_cast<std::size_t>(g.rows() * g.cols()));
    Eigen::Map<const MatRM<T>> W(p.weight.value.data(), is.c, g.rows());
    Eigen::Map<MatRM<T>> dW(p.weight.grad.data(), is.c, g.rows());
    for (index_t b = 0; b < is.n; ++b) {
      detail::im2col(dy.sample(b), g, col.data());
      Eigen::Map<const MatRM<T>> C(col.data(), g.rows(), g.cols());
      Eigen::Map<const MatRM<T>> X(x.sample(b), is.c, g.cols());
      dW.noalias() += X * C.transpose();
      if (need_input_grad) {
        Eigen::Map<MatRM<T>> DX(dx.sample(b), is.c, g.cols());
        DX.noalias() = W * C;
      }
    }
  }
  return dx;
}

/// Kaiming-uniform (fan-in, ReLU gain) weights and zero bias. For transposed
/// layers the fan-in is the number of taps feeding one output pixel.
template <typename T>
ConvParams<T> make_conv_params(const std::string& name, index_t in_channels,
                               const ConvSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  ConvParams<T> p{Param<T>(name + ".weight", spec.weight_shape(in_channels)),
                  Param<T>(name + ".bias", {spec.out_channels})};
  double fan_in = double(in_channels) * spec.kernel[0] * spec.kernel[1];
  if (spec.transposed) fan_in /= double(spec.stride[0] * spec.stride[1]);
  const T bound = static_cast<T>(std::sqrt(6.0 / std::max(fan_in, 1.0)));
  fill_uniform<T>(p.weight.value, -bound, bound, rng);
  return p;
}

}  // namespace drumsep::nn
