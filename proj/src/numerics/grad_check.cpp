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

#include "synthaug/numerics/grad_check.hpp"

#include <cmath>

#include "synthaug/numerics/autograd.hpp"

namespace synthaug::nn {

GradCheckReport compare_gradients(const std::function<Tensor()>& loss_fn, const ParameterList& params,
                                  const std::vector<std::vector<double>>& claimed, const GradCheckOptions& options) {
  if (options.tolerance <= 0.0 || options.step <= 0.0) throw ArgumentError("grad_check needs positive step and tolerance");
  if (claimed.size() != params.size()) throw ArgumentError("grad_check: one claimed gradient per parameter required");
  GradCheckReport report;
  // No NoGradGuard here: losses that differentiate internally (gradient
  // penalties) need the graph during the perturbed evaluations too.
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k].tensor;
    GradCheckEntry entry;
    entry.name = params[k].name;
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      const double original = p.at(i);
      p.set(i, original + options.step);
      const double up = loss_fn().item();
      p.set(i, original - options.step);
      const double down = loss_fn().item();
      p.set(i, original);
      const double numeric = (up - down) / (2.0 * options.step);
      const double autodiff = claimed[k].at(static_cast<std::size_t>(i));
      const double denom = std::max({std::abs(numeric), std::abs(autodiff), options.floor});
      const double rel = std::abs(numeric - autodiff) / denom;
      if (rel > entry.max_rel_error || entry.worst_index < 0) {
        entry.max_rel_error = rel;
        entry.worst_index = i;
        entry.autodiff = autodiff;
        entry.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(entry);
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, const ParameterList& params,
                           const GradCheckOptions& options) {
  std::vector<Tensor> inputs;
  for (const auto& p : params) {
    if (!p.tensor.is_leaf() || !p.tensor.requires_grad()) {
      throw ArgumentError("grad_check: '" + p.name + "' must be a leaf with requires_grad");
    }
    inputs.push_back(p.tensor);
  }
  std::vector<std::vector<double>> claimed;
  {
    Tensor loss = loss_fn();
    for (const Tensor& g : grad(loss, inputs)) claimed.push_back(g.to_vector());
  }
  return compare_gradients(loss_fn, params, claimed, options);
}

}  // namespace synthaug::nn
