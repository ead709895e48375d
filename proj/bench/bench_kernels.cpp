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

// Serial reference vs OpenMP conv kernels on generator/detector-sized layers.
#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "synthaug/common/rng.hpp"
#include "synthaug/numerics/kernels.hpp"

namespace {

using synthaug::kernels::ConvGeometry;

ConvGeometry geometry(const benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int ch = static_cast<int>(state.range(1));
  return ConvGeometry{8, ch, side, side, ch, 3, 3, 1, 1};
}

struct Buffers {
  std::vector<float> x, w, y;
  explicit Buffers(const ConvGeometry& g) {
    synthaug::Rng rng(1);
    x.resize(static_cast<std::size_t>(g.batch) * g.in_channels * g.in_h * g.in_w);
    w.resize(static_cast<std::size_t>(g.out_channels) * g.in_channels * g.kernel_h * g.kernel_w);
    y.resize(static_cast<std::size_t>(g.batch) * g.out_channels * g.out_h() * g.out_w());
    for (auto& v : x) v = static_cast<float>(rng.normal());
    for (auto& v : w) v = static_cast<float>(rng.normal() * 0.1);
  }
};

void BM_ConvForwardSerial(benchmark::State& state) {
  const auto g = geometry(state);
  Buffers buf(g);
  for (auto _ : state) {
    synthaug::kernels::serial::conv2d_forward<float>(g, buf.x.data(), buf.w.data(), buf.y.data());
    benchmark::DoNotOptimize(buf.y.data());
  }
}

void BM_ConvForwardParallel(benchmark::State& state) {
  const auto g = geometry(state);
  Buffers buf(g);
  for (auto _ : state) {
    synthaug::kernels::parallel::conv2d_forward<float>(g, buf.x.data(), buf.w.data(), buf.y.data());
    benchmark::DoNotOptimize(buf.y.data());
  }
}

void BM_ConvWeightGradSerial(benchmark::State& state) {
  const auto g = geometry(state);
  Buffers buf(g);
  std::vector<float> gw(buf.w.size());
  for (auto _ : state) {
    std::fill(gw.begin(), gw.end(), 0.0f);
    synthaug::kernels::serial::conv2d_backward_weight<float>(g, buf.x.data(), buf.y.data(), gw.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

void BM_ConvWeightGradParallel(benchmark::State& state) {
  const auto g = geometry(state);
  Buffers buf(g);
  std::vector<float> gw(buf.w.size());
  for (auto _ : state) {
    std::fill(gw.begin(), gw.end(), 0.0f);
    synthaug::kernels::parallel::conv2d_backward_weight<float>(g, buf.x.data(), buf.y.data(), gw.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForwardSerial)->Args({16, 32})->Args({32, 16})->Args({32, 32})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvForwardParallel)->Args({16, 32})->Args({32, 16})->Args({32, 32})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvWeightGradSerial)->Args({16, 32})->Args({32, 16})->Args({32, 32})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ConvWeightGradParallel)->Args({16, 32})->Args({32, 16})->Args({32, 32})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
