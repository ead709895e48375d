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

#include <functional>
#include <string>
#include <vector>

#include "synthaug/numerics/layers.hpp"

namespace synthaug::nn {

struct GradCheckOptions {
  double step = 1e-4;       // central-difference half width
  double tolerance = 1e-4;  // pass iff max relative error < tolerance
  // Denominator floor for the relative error, so entries whose true gradient
  // is ~0 are judged on absolute error instead.
  double floor = 1e-6;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::int64_t worst_index = -1;
  double autodiff = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool passed = false;
  std::vector<GradCheckEntry> entries;
};

// Compares the autodiff gradient of loss_fn() with respect to every tensor in
// `params` (parameters and/or inputs, all leaves) against central finite
// differences. loss_fn must be deterministic and return a single element.
GradCheckReport grad_check(const std::function<Tensor()>& loss_fn, const ParameterList& params,
                           const GradCheckOptions& options = {});

// Variant with a caller-supplied gradient, for negative controls and for
// gradients produced outside backward().
GradCheckReport compare_gradients(const std::function<Tensor()>& loss_fn, const ParameterList& params,
                                  const std::vector<std::vector<double>>& claimed, const GradCheckOptions& options);

}  // namespace synthaug::nn
