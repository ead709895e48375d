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

#include <string>
#include <vector>

#include "synthaug/common/rng.hpp"
#include "synthaug/numerics/tensor.hpp"

namespace synthaug::nn {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<NamedParameter>;

std::int64_t parameter_count(const ParameterList& params);
void zero_grads(const ParameterList& params);

// He-style scaled normal init: weights ~ N(0, gain^2 / fan_in), zero bias.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad, Rng& rng, Dtype dtype = Dtype::f32,
         double gain = 1.4142135623730951);

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;
  // Equalized learning rate: keep weights at unit scale and apply the init
  // std at run time. Leaves the forward function unchanged.
  void equalize();
  // For convolutions followed by a normalization that cancels the bias.
  Conv2d& without_bias();

  Tensor weight;
  Tensor bias;  // undefined after without_bias()
  int stride = 1;
  int pad = 0;
  double init_std = 1.0;
  double weight_scale = 1.0;
};

// y = x W + b with W stored (in, out).
class Linear {
 public:
  Linear() = default;
  Linear(int in_features, int out_features, Rng& rng, Dtype dtype = Dtype::f32, double gain = 1.4142135623730951);

  Tensor forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParameterList& out) const;
  void equalize();

  Tensor weight;
  Tensor bias;
  double init_std = 1.0;
  double weight_scale = 1.0;
};

}  // namespace synthaug::nn
