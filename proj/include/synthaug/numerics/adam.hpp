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

#include <cstdint>
#include <vector>

#include "synthaug/numerics/layers.hpp"

namespace synthaug::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;

  // Both GANs: beta1 = 0, beta2 = 0.99.
  static AdamConfig gan() { return {}; }
  static AdamConfig detector() { return {1e-3, 0.9, 0.999, 1e-8}; }
};

struct AdamState {
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

// Bias-corrected Adam over a fixed parameter list. Parameters without a
// gradient are treated as having a zero gradient.
class Adam {
 public:
  Adam(ParameterList params, AdamConfig config);

  void zero_grad();
  void step();

  const AdamState& state() const { return state_; }
  const AdamConfig& config() const { return config_; }
  const ParameterList& parameters() const { return params_; }

 private:
  ParameterList params_;
  AdamConfig config_;
  AdamState state_;
};

}  // namespace synthaug::nn
