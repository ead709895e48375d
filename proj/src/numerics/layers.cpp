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

#include "synthaug/numerics/layers.hpp"

#include <cmath>

#include "synthaug/numerics/ops.hpp"

namespace synthaug::nn {

std::int64_t parameter_count(const ParameterList& params) {
  std::int64_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

void zero_grads(const ParameterList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride_, int pad_, Rng& rng, Dtype dtype,
               double gain)
    : stride(stride_), pad(pad_) {
  const double fan_in = static_cast<double>(in_channels) * kernel * kernel;
  init_std = gain / std::sqrt(fan_in);
  weight = Tensor::randn({out_channels, in_channels, kernel, kernel}, rng, init_std, dtype);
  weight.set_requires_grad(true);
  bias = Tensor::zeros({out_channels}, dtype);
  bias.set_requires_grad(true);
}

namespace {

// Stores w / c and multiplies by c at run time; the forward function is
// unchanged but Adam now sees unit-scale weights.
void equalize_weight(Tensor& weight, double& weight_scale, double c) {
  if (weight_scale != 1.0) return;
  dispatch(weight.dtype(), [&]<class T>(std::type_identity<T>) {
    for (auto& v : weight.mutable_values<T>()) v = static_cast<T>(v / c);
  });
  weight_scale = c;
}

Tensor scaled(const Tensor& w, double c) { return c == 1.0 ? w : scale(w, c); }

}  // namespace

void Conv2d::equalize() { equalize_weight(weight, weight_scale, init_std); }

Tensor Conv2d::forward(const Tensor& x) const {
  Tensor y = conv2d(x, scaled(weight, weight_scale), stride, pad);
  return bias.defined() ? add_bias(y, bias) : y;
}

void Conv2d::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

Conv2d& Conv2d::without_bias() {
  bias = Tensor();
  return *this;
}

Linear::Linear(int in_features, int out_features, Rng& rng, Dtype dtype, double gain) {
  init_std = gain / std::sqrt(static_cast<double>(in_features));
  weight = Tensor::randn({in_features, out_features}, rng, init_std, dtype);
  weight.set_requires_grad(true);
  bias = Tensor::zeros({out_features}, dtype);
  bias.set_requires_grad(true);
}

void Linear::equalize() { equalize_weight(weight, weight_scale, init_std); }

Tensor Linear::forward(const Tensor& x) const { return add_bias(matmul(x, scaled(weight, weight_scale)), bias); }

void Linear::collect(const std::string& prefix, ParameterList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

}  // namespace synthaug::nn
