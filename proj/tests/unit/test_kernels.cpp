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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "synthaug/common/rng.hpp"
#include "synthaug/numerics/kernels.hpp"

namespace synthaug::kernels {
namespace {

template <class T>
std::vector<T> random_values(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.normal());
  return v;
}

template <class T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

struct Case {
  int batch, cin, h, w, cout, k, stride, pad;
};

std::vector<Case> cases() {
  return {{1, 1, 3, 3, 1, 1, 1, 0},  {2, 3, 8, 8, 4, 3, 1, 1}, {3, 5, 9, 7, 2, 3, 2, 1},
          {2, 4, 8, 8, 6, 4, 2, 1},  {1, 2, 6, 10, 3, 1, 1, 0}, {2, 9, 16, 16, 8, 3, 2, 1},
          {4, 3, 5, 5, 2, 5, 1, 2}};
}

ConvGeometry geometry(const Case& c) {
  ConvGeometry g;
  g.batch = c.batch;
  g.in_channels = c.cin;
  g.in_h = c.h;
  g.in_w = c.w;
  g.out_channels = c.cout;
  g.kernel_h = g.kernel_w = c.k;
  g.stride = c.stride;
  g.pad = c.pad;
  return g;
}

// The OpenMP kernels and the direct-loop reference must agree on every
// geometry; f64 agreement is tight because only the summation order differs.
TEST(ConvKernels, ParallelMatchesSerialReference) {
  Rng rng(2024);
  for (const Case& c : cases()) {
    const auto g = geometry(c);
    const std::size_t nx = static_cast<std::size_t>(c.batch) * c.cin * c.h * c.w;
    const std::size_t nw = static_cast<std::size_t>(c.cout) * c.cin * c.k * c.k;
    const std::size_t ny = static_cast<std::size_t>(c.batch) * c.cout * g.out_h() * g.out_w();
    auto x = random_values<double>(nx, rng);
    auto w = random_values<double>(nw, rng);
    auto gy = random_values<double>(ny, rng);

    std::vector<double> y_ref(ny), y_par(ny);
    serial::conv2d_forward(g, x.data(), w.data(), y_ref.data());
    parallel::conv2d_forward(g, x.data(), w.data(), y_par.data());
    EXPECT_LT(max_abs_diff(y_ref, y_par), 1e-12);

    std::vector<double> gx_ref(nx, 0.0), gx_par(nx, 0.0);
    serial::conv2d_backward_input(g, gy.data(), w.data(), gx_ref.data());
    parallel::conv2d_backward_input(g, gy.data(), w.data(), gx_par.data());
    EXPECT_LT(max_abs_diff(gx_ref, gx_par), 1e-12);

    std::vector<double> gw_ref(nw, 0.0), gw_par(nw, 0.0);
    serial::conv2d_backward_weight(g, x.data(), gy.data(), gw_ref.data());
    parallel::conv2d_backward_weight(g, x.data(), gy.data(), gw_par.data());
    EXPECT_LT(max_abs_diff(gw_ref, gw_par), 1e-11);
  }
}

TEST(ConvKernels, FloatAgreesWithinRounding) {
  Rng rng(7);
  const Case c{2, 16, 16, 16, 16, 3, 1, 1};
  const auto g = geometry(c);
  auto x = random_values<float>(2 * 16 * 16 * 16, rng);
  auto w = random_values<float>(16 * 16 * 9, rng);
  std::vector<float> a(2 * 16 * 16 * 16), b(a.size());
  serial::conv2d_forward(g, x.data(), w.data(), a.data());
  parallel::conv2d_forward(g, x.data(), w.data(), b.data());
  EXPECT_LT(max_abs_diff(a, b), 1e-3);
}

TEST(Gemm, ParallelMatchesSerial) {
  Rng rng(1);
  for (auto [m, n, k] : {std::tuple{1, 1, 1}, {3, 7, 5}, {64, 33, 129}}) {
    auto a = random_values<double>(static_cast<std::size_t>(m) * k, rng);
    auto b = random_values<double>(static_cast<std::size_t>(k) * n, rng);
    std::vector<double> c1(static_cast<std::size_t>(m) * n), c2(c1.size());
    serial::gemm(m, n, k, a.data(), b.data(), c1.data());
    parallel::gemm(m, n, k, a.data(), b.data(), c2.data());
    EXPECT_LT(max_abs_diff(c1, c2), 1e-12);
  }
}

TEST(ConvKernels, ParallelIsBitwiseRepeatable) {
  Rng rng(3);
  const Case c{4, 8, 12, 12, 8, 3, 1, 1};
  const auto g = geometry(c);
  auto x = random_values<float>(4 * 8 * 144, rng);
  auto w = random_values<float>(8 * 8 * 9, rng);
  auto gy = random_values<float>(4 * 8 * 144, rng);
  std::vector<float> gw1(8 * 8 * 9, 0.f), gw2(gw1.size(), 0.f);
  parallel::conv2d_backward_weight(g, x.data(), gy.data(), gw1.data());
  parallel::conv2d_backward_weight(g, x.data(), gy.data(), gw2.data());
  EXPECT_EQ(gw1, gw2);
}

}  // namespace
}  // namespace synthaug::kernels
