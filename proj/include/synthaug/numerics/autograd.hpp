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

namespace synthaug::nn {

// Thread-local switch controlling whether ops record graph nodes.
class GradMode {
 public:
  static bool is_enabled();
  static void set_enabled(bool enabled);
};

class NoGradGuard {
 public:
  NoGradGuard() : prev_(GradMode::is_enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Attaches a node to `out` when grad mode is on and some input needs a
// gradient. Returns `out` for chaining.
Tensor& record(Tensor& out, std::string_view name, std::vector<Tensor> inputs, BackwardFn fn);

// Accumulates d(loss)/d(leaf) into every reachable leaf with
// requires_grad set. `loss` must hold a single element.
void backward(const Tensor& loss);

// Returns d(output)/d(input) for each requested input (zeros when the input
// is unreachable). With create_graph the returned tensors carry their own
// history and can be differentiated again.
std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs,
                         bool create_graph = false, const Tensor& grad_output = {});

}  // namespace synthaug::nn
