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

#include "synthaug/numerics/adam.hpp"

#include <cmath>

namespace synthaug::nn {

Adam::Adam(ParameterList params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (config_.beta1 < 0.0 || config_.beta1 >= 1.0 || config_.beta2 < 0.0 || config_.beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (config_.lr <= 0.0 || config_.eps <= 0.0) throw ConfigError("Adam lr and eps must be positive");
  for (const auto& p : params_) {
    state_.first_moment.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
    state_.second_moment.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0);
  }
}

void Adam::zero_grad() { zero_grads(params_); }

void Adam::step() {
  // Validate everything first so a bad gradient leaves all parameters intact.
  for (const auto& p : params_) {
    const Tensor g = p.tensor.grad();
    if (!g.defined()) continue;
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      if (!std::isfinite(g.at(i))) throw TrainingError("non-finite gradient", p.name);
    }
  }
  state_.step_count += 1;
  const double t = static_cast<double>(state_.step_count);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor param = params_[k].tensor;
    const Tensor g = param.grad();
    auto& m = state_.first_moment[k];
    auto& v = state_.second_moment[k];
    dispatch(param.dtype(), [&]<class T>(std::type_identity<T>) {
      auto w = param.mutable_values<T>();
      const T* gv = g.defined() ? g.values<T>().data() : nullptr;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = gv ? static_cast<double>(gv[i]) : 0.0;
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        w[i] = static_cast<T>(static_cast<double>(w[i]) - config_.lr * mh / (std::sqrt(vh) + config_.eps));
      }
    });
  }
}

}  // namespace synthaug::nn
