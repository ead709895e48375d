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

#include "synthaug/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/ops.hpp"

namespace synthaug::nn {

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

namespace {

void check_shape(const Shape& shape) {
  for (int d : shape) {
    if (d <= 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
  }
}

std::shared_ptr<TensorImpl> make_impl(Shape shape, Dtype dtype) {
  check_shape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->storage = std::make_shared<Storage>();
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  if (dtype == Dtype::f32) {
    impl->storage->f32.assign(n, 0.0f);
  } else {
    impl->storage->f64.assign(n, 0.0);
  }
  impl->shape = std::move(shape);
  impl->dtype = dtype;
  return impl;
}

}  // namespace

Tensor Tensor::empty(Shape shape, Dtype dtype) { return Tensor(make_impl(std::move(shape), dtype)); }

Tensor Tensor::zeros(Shape shape, Dtype dtype) { return empty(std::move(shape), dtype); }

Tensor Tensor::full(Shape shape, double value, Dtype dtype) {
  Tensor t = empty(std::move(shape), dtype);
  dispatch(dtype, [&]<class T>(std::type_identity<T>) {
    auto v = t.mutable_values<T>();
    std::fill(v.begin(), v.end(), static_cast<T>(value));
  });
  return t;
}

Tensor Tensor::scalar(double value, Dtype dtype) { return full({}, value, dtype); }

Tensor Tensor::from_vector(Shape shape, std::vector<float> values) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_str(shape));
  }
  check_shape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->storage = std::make_shared<Storage>();
  impl->storage->f32 = std::move(values);
  impl->shape = std::move(shape);
  impl->dtype = Dtype::f32;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) + " does not match shape " +
                         shape_str(shape));
  }
  check_shape(shape);
  auto impl = std::make_shared<TensorImpl>();
  impl->storage = std::make_shared<Storage>();
  impl->storage->f64 = std::move(values);
  impl->shape = std::move(shape);
  impl->dtype = Dtype::f64;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values, Dtype dtype) {
  if (dtype == Dtype::f64) return from_vector(std::move(shape), std::vector<double>(values.begin(), values.end()));
  std::vector<float> f(values.size());
  std::transform(values.begin(), values.end(), f.begin(), [](double v) { return static_cast<float>(v); });
  return from_vector(std::move(shape), std::move(f));
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, Dtype dtype) {
  Tensor t = empty(std::move(shape), dtype);
  for (std::int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.normal() * stddev);
  return t;
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi, Dtype dtype) {
  Tensor t = empty(std::move(shape), dtype);
  for (std::int64_t i = 0; i < t.numel(); ++i) t.set(i, rng.uniform(lo, hi));
  return t;
}

const Shape& Tensor::shape() const {
  if (!impl_) throw StateError("use of undefined tensor");
  return impl_->shape;
}

int Tensor::dim(int axis) const {
  const int n = ndim();
  const int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  return impl_->shape[a];
}

std::int64_t Tensor::numel() const { return shape_numel(shape()); }

Dtype Tensor::dtype() const {
  if (!impl_) throw StateError("use of undefined tensor");
  return impl_->dtype;
}

template <>
std::span<const float> Tensor::values<float>() const {
  if (dtype() != Dtype::f32) throw StateError("tensor is not f32");
  return impl_->storage->f32;
}
template <>
std::span<const double> Tensor::values<double>() const {
  if (dtype() != Dtype::f64) throw StateError("tensor is not f64");
  return impl_->storage->f64;
}
template <>
std::span<float> Tensor::mutable_values<float>() {
  if (dtype() != Dtype::f32) throw StateError("tensor is not f32");
  return impl_->storage->f32;
}
template <>
std::span<double> Tensor::mutable_values<double>() {
  if (dtype() != Dtype::f64) throw StateError("tensor is not f64");
  return impl_->storage->f64;
}

double Tensor::at(std::int64_t i) const {
  return dtype() == Dtype::f32 ? static_cast<double>(impl_->storage->f32.at(i)) : impl_->storage->f64.at(i);
}

void Tensor::set(std::int64_t i, double value) {
  if (dtype() == Dtype::f32) {
    impl_->storage->f32.at(i) = static_cast<float>(value);
  } else {
    impl_->storage->f64.at(i) = value;
  }
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
  return at(0);
}

std::vector<double> Tensor::to_vector() const {
  if (dtype() == Dtype::f64) return impl_->storage->f64;
  const auto& f = impl_->storage->f32;
  return std::vector<double>(f.begin(), f.end());
}

Tensor Tensor::to(Dtype target) const {
  if (target == dtype()) return clone();
  auto v = to_vector();
  return from_values(shape(), v, target);
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape();
  impl->dtype = dtype();
  impl->storage = std::make_shared<Storage>(*impl_->storage);
  return Tensor(std::move(impl));
}

bool Tensor::requires_grad() const { return impl_ && (impl_->requires_grad || impl_->grad_fn); }

bool Tensor::is_leaf() const { return impl_ && !impl_->grad_fn; }

Tensor& Tensor::set_requires_grad(bool flag) {
  if (!is_leaf()) throw StateError("requires_grad can only be set on leaf tensors");
  impl_->requires_grad = flag;
  return *this;
}

Tensor Tensor::grad() const {
  if (!impl_ || !impl_->grad) return {};
  return Tensor(impl_->grad);
}

void Tensor::zero_grad() {
  if (impl_) impl_->grad.reset();
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape();
  impl->dtype = dtype();
  impl->storage = impl_->storage;
  return Tensor(std::move(impl));
}

const std::shared_ptr<Node>& Tensor::grad_fn() const {
  static const std::shared_ptr<Node> none;
  return impl_ ? impl_->grad_fn : none;
}

void Tensor::set_grad_fn(std::shared_ptr<Node> node) { impl_->grad_fn = std::move(node); }

void Tensor::accumulate_grad(const Tensor& g) {
  if (g.shape() != shape()) {
    throw DimensionError("gradient shape " + shape_str(g.shape()) + " does not match " + shape_str(shape()));
  }
  if (!impl_->grad) {
    impl_->grad = g.detach().clone().impl_;
    return;
  }
  Tensor acc(impl_->grad);
  dispatch(dtype(), [&]<class T>(std::type_identity<T>) {
    auto a = acc.mutable_values<T>();
    auto b = g.values<T>();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  });
}

Tensor view_as(const Tensor& src, Shape shape) {
  if (shape_numel(shape) != src.numel()) {
    throw DimensionError("cannot view " + shape_str(src.shape()) + " as " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->dtype = src.dtype();
  impl->storage = src.impl_->storage;
  return Tensor(std::move(impl));
}

}  // namespace synthaug::nn
