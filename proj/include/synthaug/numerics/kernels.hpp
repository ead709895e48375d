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

// Hot loops behind the tensor ops. Two implementations share one signature:
//
//   serial::   direct textbook loops, kept as the reference for tests and the
//              benchmark baseline.
//   parallel:: im2col + blocked GEMM, OpenMP over samples/rows. Each output
//              element is produced by exactly one thread with a fixed
//              summation order, so results do not depend on thread count.
//
// All buffers are dense row-major; convolution tensors are NCHW / OIHW.
namespace synthaug::kernels {

struct ConvGeometry {
  int batch = 0;
  int in_channels = 0;
  int in_h = 0;
  int in_w = 0;
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int pad = 0;

  int out_h() const { return (in_h + 2 * pad - kernel_h) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel_w) / stride + 1; }
  // Output size before flooring; <= 0 means the window never fits.
  bool valid() const { return in_h + 2 * pad - kernel_h >= 0 && in_w + 2 * pad - kernel_w >= 0 && stride >= 1; }
};

namespace serial {

// c[m x n] = a[m x k] * b[k x n]
template <class T>
void gemm(int m, int n, int k, const T* a, const T* b, T* c);

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, T* output);
// grad_input must be zero-initialised by the caller.
template <class T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_output, const T* weight, T* grad_input);
// grad_weight must be zero-initialised by the caller.
template <class T>
void conv2d_backward_weight(const ConvGeometry& g, const T* input, const T* grad_output, T* grad_weight);

}  // namespace serial

namespace parallel {

template <class T>
void gemm(int m, int n, int k, const T* a, const T* b, T* c);

template <class T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, T* output);
template <class T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_output, const T* weight, T* grad_input);
template <class T>
void conv2d_backward_weight(const ConvGeometry& g, const T* input, const T* grad_output, T* grad_weight);

// Elementwise helpers used by the tensor ops.
template <class T>
void axpby(std::int64_t n, T alpha, const T* x, T beta, const T* y, T* out);  // out = alpha*x + beta*y
template <class T>
void multiply(std::int64_t n, const T* x, const T* y, T* out);

}  // namespace parallel

}  // namespace synthaug::kernels
