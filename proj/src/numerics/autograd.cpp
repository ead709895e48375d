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

#include "synthaug/numerics/autograd.hpp"

#include <unordered_map>
#include <unordered_set>

#include "synthaug/numerics/ops.hpp"

namespace synthaug::nn {

namespace {
thread_local bool t_grad_enabled = true;

// Reverse topological order (output first) over every impl reachable from
// `root` through grad_fn edges. Iterative DFS so deep graphs do not blow the
// stack; visiting inputs in order keeps the schedule deterministic.
std::vector<Tensor> reverse_topo(const Tensor& root) {
  std::vector<Tensor> order;
  std::unordered_set<TensorImpl*> seen;
  struct Frame {
    Tensor t;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  seen.insert(root.impl());
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = f.t.grad_fn();
    if (node && f.next < node->inputs.size()) {
      const Tensor& in = node->inputs[f.next++];
      if (in.defined() && in.requires_grad() && seen.insert(in.impl()).second) {
        stack.push_back({in, 0});
      }
      continue;
    }
    order.push_back(f.t);
    stack.pop_back();
  }
  return {order.rbegin(), order.rend()};
}

std::unordered_map<TensorImpl*, Tensor> run_backward(const Tensor& output, const Tensor& seed,
                                                     const std::unordered_set<TensorImpl*>& keep = {}) {
  std::unordered_map<TensorImpl*, Tensor> grads;
  grads[output.impl()] = seed;
  for (const Tensor& t : reverse_topo(output)) {
    const auto& node = t.grad_fn();
    if (!node) continue;
    auto it = grads.find(t.impl());
    if (it == grads.end()) continue;
    const Tensor g = it->second;
    std::vector<Tensor> in_grads = node->backward(g);
    for (std::size_t i = 0; i < node->inputs.size() && i < in_grads.size(); ++i) {
      const Tensor& in = node->inputs[i];
      if (!in_grads[i].defined() || !in.requires_grad()) continue;
      auto [slot, inserted] = grads.try_emplace(in.impl(), in_grads[i]);
      if (!inserted) slot->second = add(slot->second, in_grads[i]);
    }
    // Interior gradients are no longer needed once propagated.
    if (!t.is_leaf() && !keep.contains(t.impl())) grads.erase(t.impl());
  }
  return grads;
}

}  // namespace

bool GradMode::is_enabled() { return t_grad_enabled; }
void GradMode::set_enabled(bool enabled) { t_grad_enabled = enabled; }

Tensor& record(Tensor& out, std::string_view name, std::vector<Tensor> inputs, BackwardFn fn) {
  if (!GradMode::is_enabled()) return out;
  bool needed = false;
  for (const auto& in : inputs) needed = needed || (in.defined() && in.requires_grad());
  if (!needed) return out;
  auto node = std::make_shared<Node>();
  node->name = name;
  node->inputs = std::move(inputs);
  node->backward = std::move(fn);
  out.set_grad_fn(std::move(node));
  return out;
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) throw DimensionError("backward() needs a single-element loss, got " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;
  NoGradGuard guard;
  auto grads = run_backward(loss, Tensor::full(loss.shape(), 1.0, loss.dtype()));
  // Walk the topo order again so leaves are reached in a fixed order.
  for (const Tensor& t : reverse_topo(loss)) {
    if (!t.is_leaf()) continue;
    auto it = grads.find(t.impl());
    if (it == grads.end()) continue;
    Tensor leaf = t;
    leaf.accumulate_grad(it->second);
  }
}

std::vector<Tensor> grad(const Tensor& output, const std::vector<Tensor>& inputs, bool create_graph,
                         const Tensor& grad_output) {
  Tensor seed = grad_output.defined() ? grad_output : Tensor::full(output.shape(), 1.0, output.dtype());
  if (seed.shape() != output.shape()) {
    throw DimensionError("grad_output " + shape_str(seed.shape()) + " does not match output " +
                         shape_str(output.shape()));
  }
  std::unordered_set<TensorImpl*> keep;
  for (const Tensor& in : inputs) keep.insert(in.impl());
  std::unordered_map<TensorImpl*, Tensor> grads;
  if (output.requires_grad()) {
    if (create_graph) {
      grads = run_backward(output, seed, keep);
    } else {
      NoGradGuard guard;
      grads = run_backward(output, seed, keep);
    }
  }
  std::vector<Tensor> result;
  result.reserve(inputs.size());
  for (const Tensor& in : inputs) {
    auto it = grads.find(in.impl());
    if (it != grads.end()) {
      result.push_back(create_graph ? it->second : it->second.detach());
    } else {
      result.push_back(Tensor::zeros(in.shape(), in.dtype()));
    }
  }
  return result;
}

}  // namespace synthaug::nn
