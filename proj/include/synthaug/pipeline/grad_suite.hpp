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
#include <string>
#include <vector>

namespace synthaug::pipeline {

struct GradSuiteRow {
  std::string name;
  std::string kind;  // "linear", "nonlinear" or "model"
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Autodiff against central finite differences in f64 for every
// differentiable op (tolerance 1e-6 for ops linear in each input, 1e-4
// otherwise) and for the full PGAN, CGAN and detector losses on small random
// networks.
std::vector<GradSuiteRow> run_grad_suite(std::uint64_t seed = 1);

}  // namespace synthaug::pipeline
