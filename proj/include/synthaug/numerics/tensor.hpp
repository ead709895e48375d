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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "synthaug/common/error.hpp"
#include "synthaug/common/rng.hpp"

namespace synthaug::nn {

using Shape = std::vector<int>;

// Training runs in f32. f64 exists so finite-difference gradient checks can
// resolve relative errors well below float epsilon.
enum class Dtype { f32, f64 };

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

// One recorded operation in the reverse-mode graph. `inputs` are the edges;
// `backward` maps the output gradient to one gradient per input (an undefined
// Tensor where an input receives nothing). Backward functions are written in
// terms of differentiable ops so the engine can record a graph of the
// backward pass itself (needed for input-gradient penalties).
struct Node {
  std::string_view name;
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

struct Storage {
  std::vector<float> f32;
  std::vector<double> f64;
};

struct TensorImpl {
  Shape shape;
  Dtype dtype = Dtype::f32;
  std::shared_ptr<Storage> storage;
  bool requires_grad = false;  // leaf flag
  std::shared_ptr<Node> grad_fn;
  std::shared_ptr<TensorImpl> grad;
};

// Handle to an n-dimensional row-major array. Copies share the underlying
// array; use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor empty(Shape shape, Dtype dtype = Dtype::f32);
  static Tensor zeros(Shape shape, Dtype dtype = Dtype::f32);
  static Tensor full(Shape shape, double value, Dtype dtype = Dtype::f32);
  static Tensor scalar(double value, Dtype dtype = Dtype::f32);
  static Tensor from_vector(Shape shape, std::vector<float> values);
  static Tensor from_vector(Shape shape, std::vector<double> values);
  static Tensor from_values(Shape shape, std::span<const double> values, Dtype dtype);
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0, Dtype dtype = Dtype::f32);
  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi, Dtype dtype = Dtype::f32);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  int ndim() const { return static_cast<int>(shape().size()); }
  // Negative axes count from the end.
  int dim(int axis) const;
  std::int64_t numel() const;
  Dtype dtype() const;

  template <class T>
  std::span<const T> values() const;
  // Writable view. Only for leaves (parameters, freshly built outputs).
  template <class T>
  std::span<T> mutable_values();

  double at(std::int64_t flat_index) const;
  void set(std::int64_t flat_index, double value);
  double item() const;
  std::vector<double> to_vector() const;
  Tensor to(Dtype dtype) const;
  Tensor clone() const;

  bool requires_grad() const;
  bool is_leaf() const;
  Tensor& set_requires_grad(bool flag);
  Tensor grad() const;
  void zero_grad();
  // Same values, no history; shares the array.
  Tensor detach() const;

  const std::shared_ptr<Node>& grad_fn() const;
  TensorImpl* impl() const { return impl_.get(); }

  // Used by the engine and by ops.
  void set_grad_fn(std::shared_ptr<Node> node);
  void accumulate_grad(const Tensor& g);

  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl> impl_;

  friend Tensor view_as(const Tensor& src, Shape shape);
};

template <>
std::span<const float> Tensor::values<float>() const;
template <>
std::span<const double> Tensor::values<double>() const;
template <>
std::span<float> Tensor::mutable_values<float>();
template <>
std::span<double> Tensor::mutable_values<double>();


// Shares storage with `src` under a new shape (no graph).
Tensor view_as(const Tensor& src, Shape shape);

// Calls f(std::type_identity<float>{}) or f(std::type_identity<double>{}).
template <class F>
decltype(auto) dispatch(Dtype dtype, F&& f) {
  if (dtype == Dtype::f32) return f(std::type_identity<float>{});
  return f(std::type_identity<double>{});
}

}  // namespace synthaug::nn
