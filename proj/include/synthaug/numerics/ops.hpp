// Copyright 2026 The synthaug Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <vector>

#include "synthaug/numerics/tensor.hpp"

// Differentiable tensor operations. Every op records a graph node when grad
// mode is on and an input requires a gradient. Ops listed under "double
// backward" have backward passes built purely from differentiable ops, so
// gradients taken with create_graph can be differentiated again; the rest
// treat their local derivative as a constant (exact for piecewise-linear ops,
// first-order only otherwise).
namespace synthaug::nn {

// ---- elementwise (double backward) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);
// (1 - alpha) * a + alpha * b
Tensor lerp(const Tensor& a, const Tensor& b, double alpha);
Tensor leaky_relu(const Tensor& t, double slope);
Tensor relu(const Tensor& t);
// 1/x, with 0 mapped to 0.
Tensor safe_reciprocal(const Tensor& t);
Tensor sqrt_act(const Tensor& t);

// ---- elementwise (first order) ----
Tensor tanh_act(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor log_act(const Tensor& t);
Tensor rsqrt(const Tensor& t);
Tensor abs_act(const Tensor& t);
Tensor clamp(const Tensor& t, double lo, double hi);
// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise
Tensor smooth_l1(const Tensor& t);
// softplus(z) - t*z, the numerically stable binary cross-entropy on logits.
// `targets` is treated as a constant.
Tensor bce_with_logits(const Tensor& logits, const Tensor& targets);

// ---- reductions and their adjoints (double backward) ----
Tensor sum(const Tensor& t);
Tensor mean(const Tensor& t);
Tensor expand_scalar(const Tensor& s, const Shape& shape);
// (N, ...) -> (N)
Tensor sum_per_sample(const Tensor& t);
Tensor expand_per_sample(const Tensor& v, const Shape& shape);
// (N, C, ...) -> (C)
Tensor sum_to_channels(const Tensor& t);
Tensor broadcast_channels(const Tensor& b, const Shape& shape);
// (N, C, H, W) -> (N, 1, H, W)
Tensor channel_sum(const Tensor& t);
Tensor channel_broadcast(const Tensor& t, int channels);

// ---- shape ----
Tensor reshape(const Tensor& t, const Shape& shape);
// (N, ...) -> (N, prod(...))
Tensor flatten(const Tensor& t);
Tensor transpose2d(const Tensor& t);
Tensor concat_channels(const std::vector<Tensor>& parts);
Tensor slice_channels(const Tensor& t, int begin, int end);
// Embeds t into `total` channels starting at `begin`; zeros elsewhere.
Tensor pad_channels(const Tensor& t, int begin, int total);

// ---- linear algebra and convolution (double backward) ----
Tensor matmul(const Tensor& a, const Tensor& b);
// x: (N, C) or (N, C, H, W); b: (C)
Tensor add_bias(const Tensor& x, const Tensor& b);
// Cross-correlation with zero padding. input NCHW, kernel (Cout, Cin, kh, kw).
Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int pad);
// Adjoint of conv2d w.r.t. its input (a transposed convolution).
Tensor conv2d_input_grad(const Tensor& grad_out, const Tensor& kernel, const Shape& input_shape, int stride,
                         int pad);
// Adjoint of conv2d w.r.t. its kernel.
Tensor conv2d_kernel_grad(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape, int stride,
                          int pad);
Tensor upsample_nearest2x(const Tensor& t);
Tensor avgpool2x(const Tensor& t);

// ---- composites ----
// Divides each pixel's channel vector by sqrt(mean of squares + eps).
// Accepts (N, C) or (N, C, H, W).
Tensor pixelwise_norm(const Tensor& t, double eps);
// Normalizes every (sample, channel) plane of an (N, C, H, W) tensor to zero
// mean and unit variance (biased, plus eps). No affine parameters.
Tensor instance_norm(const Tensor& t, double eps = 1e-5);

}  // namespace synthaug::nn
