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

#include "synthaug/pipeline/grad_suite.hpp"

#include <cmath>
#include <functional>

#include "synthaug/cgan/cgan.hpp"
#include "synthaug/common/palette.hpp"
#include "synthaug/common/rng.hpp"
#include "synthaug/detector/detector.hpp"
#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/grad_check.hpp"
#include "synthaug/numerics/ops.hpp"
#include "synthaug/pgan/pgan.hpp"

namespace synthaug::pipeline {

namespace {

using nn::Shape;
using nn::Tensor;
constexpr nn::Dtype kF64 = nn::Dtype::f64;
constexpr double kLinearTol = 1e-6, kTol = 1e-4;

struct Suite {
  Rng rng;
  std::vector<GradSuiteRow> rows;

  Tensor leaf(Shape s, double sd = 1.0) { return Tensor::randn(std::move(s), rng, sd, kF64).set_requires_grad(true); }

  // Values pushed at least `margin` away from zero.
  Tensor off_kink(Shape s, double margin = 0.05) {
    Tensor t = Tensor::randn(std::move(s), rng, 1.0, kF64);
    for (std::int64_t i = 0; i < t.numel(); ++i) {
      const double v = t.at(i);
      if (std::abs(v) < margin) t.set(i, v < 0 ? v - margin : v + margin);
    }
    return t.set_requires_grad(true);
  }

  Tensor positive(Shape s) {
    Tensor t = Tensor::uniform(std::move(s), rng, 0.5, 2.0, kF64);
    return t.set_requires_grad(true);
  }

  void record(const std::string& name, const std::string& kind, double tol, const nn::GradCheckReport& r) {
    rows.push_back({name, kind, tol, r.max_rel_error, r.passed});
  }

  // Projects op(inputs) on a fixed random direction.
  void op(const std::string& name, bool linear, const std::function<Tensor()>& f, const nn::ParameterList& inputs) {
    Tensor probe;
    {
      nn::NoGradGuard g;
      probe = Tensor::randn(f().shape(), rng, 1.0, kF64);
    }
    const double tol = linear ? kLinearTol : kTol;
    record(name, linear ? "linear" : "nonlinear", tol,
           nn::grad_check([&] { return nn::sum(nn::mul(f(), probe)); }, inputs, {1e-4, tol, 1e-6}));
  }

  void unary(const std::string& name, bool linear, const std::function<Tensor(const Tensor&)>& f, Tensor x) {
    op(name, linear, [&] { return f(x); }, {{"x", x}});
  }
};

void elementwise(Suite& s) {
  Tensor a = s.leaf({3, 4}), b = s.leaf({3, 4});
  s.op("add", true, [&] { return nn::add(a, b); }, {{"a", a}, {"b", b}});
  s.op("sub", true, [&] { return nn::sub(a, b); }, {{"a", a}, {"b", b}});
  s.op("mul", true, [&] { return nn::mul(a, b); }, {{"a", a}, {"b", b}});
  s.op("lerp", true, [&] { return nn::lerp(a, b, 0.3); }, {{"a", a}, {"b", b}});
  s.unary("scale", true, [](const Tensor& x) { return nn::scale(x, -1.7); }, s.leaf({3, 4}));
  s.unary("add_scalar", true, [](const Tensor& x) { return nn::add_scalar(x, 0.4); }, s.leaf({3, 4}));
  s.unary("neg", true, [](const Tensor& x) { return nn::neg(x); }, s.leaf({3, 4}));
  s.unary("leaky_relu", false, [](const Tensor& x) { return nn::leaky_relu(x, 0.2); }, s.off_kink({3, 4}));
  s.unary("relu", false, [](const Tensor& x) { return nn::relu(x); }, s.off_kink({3, 4}));
  s.unary("safe_reciprocal", false, [](const Tensor& x) { return nn::safe_reciprocal(x); }, s.positive({3, 4}));
  s.unary("sqrt", false, [](const Tensor& x) { return nn::sqrt_act(x); }, s.positive({3, 4}));
  s.unary("tanh", false, [](const Tensor& x) { return nn::tanh_act(x); }, s.leaf({3, 4}));
  s.unary("sigmoid", false, [](const Tensor& x) { return nn::sigmoid(x); }, s.leaf({3, 4}));
  s.unary("log", false, [](const Tensor& x) { return nn::log_act(x); }, s.positive({3, 4}));
  s.unary("rsqrt", false, [](const Tensor& x) { return nn::rsqrt(x); }, s.positive({3, 4}));
  s.unary("abs", false, [](const Tensor& x) { return nn::abs_act(x); }, s.off_kink({3, 4}));
  s.unary("clamp", false, [](const Tensor& x) { return nn::clamp(x, -0.5, 0.5); }, s.off_kink({3, 4}));
  s.unary("smooth_l1", false, [](const Tensor& x) { return nn::smooth_l1(nn::scale(x, 2.0)); }, s.off_kink({3, 4}));
  Tensor targets = Tensor::uniform({3, 4}, s.rng, 0, 1, kF64);
  s.unary("bce_with_logits", false, [&](const Tensor& x) { return nn::bce_with_logits(x, targets); }, s.leaf({3, 4}));
}

void shapes(Suite& s) {
  s.unary("sum", true, [](const Tensor& x) { return nn::sum(x); }, s.leaf({3, 4}));
  s.unary("mean", true, [](const Tensor& x) { return nn::mean(x); }, s.leaf({3, 4}));
  s.unary("expand_scalar", true, [](const Tensor& x) { return nn::expand_scalar(x, {2, 3}); }, s.leaf({1}));
  s.unary("sum_per_sample", true, [](const Tensor& x) { return nn::sum_per_sample(x); }, s.leaf({3, 2, 2}));
  s.unary("expand_per_sample", true, [](const Tensor& x) { return nn::expand_per_sample(x, {3, 2, 2}); }, s.leaf({3}));
  s.unary("sum_to_channels", true, [](const Tensor& x) { return nn::sum_to_channels(x); }, s.leaf({2, 3, 2, 2}));
  s.unary("broadcast_channels", true, [](const Tensor& x) { return nn::broadcast_channels(x, {2, 3, 2, 2}); }, s.leaf({3}));
  s.unary("channel_sum", true, [](const Tensor& x) { return nn::channel_sum(x); }, s.leaf({2, 3, 2, 2}));
  s.unary("channel_broadcast", true, [](const Tensor& x) { return nn::channel_broadcast(x, 3); }, s.leaf({2, 1, 2, 2}));
  s.unary("reshape", true, [](const Tensor& x) { return nn::reshape(x, {4, 3}); }, s.leaf({2, 6}));
  s.unary("flatten", true, [](const Tensor& x) { return nn::flatten(x); }, s.leaf({2, 3, 2, 2}));
  s.unary("transpose2d", true, [](const Tensor& x) { return nn::transpose2d(x); }, s.leaf({3, 5}));
  Tensor a = s.leaf({2, 2, 3, 3}), b = s.leaf({2, 3, 3, 3});
  s.op("concat_channels", true, [&] { return nn::concat_channels({a, b}); }, {{"a", a}, {"b", b}});
  s.unary("slice_channels", true, [](const Tensor& x) { return nn::slice_channels(x, 1, 3); }, s.leaf({2, 4, 2, 2}));
  s.unary("pad_channels", true, [](const Tensor& x) { return nn::pad_channels(x, 1, 4); }, s.leaf({2, 2, 2, 2}));
  s.unary("upsample_nearest2x", true, [](const Tensor& x) { return nn::upsample_nearest2x(x); }, s.leaf({2, 2, 3, 3}));
  s.unary("avgpool2x", true, [](const Tensor& x) { return nn::avgpool2x(x); }, s.leaf({2, 2, 4, 6}));
  s.unary("pixelwise_norm", false, [](const Tensor& x) { return nn::pixelwise_norm(x, 1e-8); }, s.leaf({2, 4, 3, 3}));
  s.unary("instance_norm", false, [](const Tensor& x) { return nn::instance_norm(x); }, s.leaf({2, 3, 3, 3}));
}

void linear_algebra(Suite& s) {
  Tensor a = s.leaf({3, 4}), b = s.leaf({4, 2});
  s.op("matmul", true, [&] { return nn::matmul(a, b); }, {{"a", a}, {"b", b}});
  Tensor x = s.leaf({2, 3, 4, 4}), bias = s.leaf({3});
  s.op("add_bias", true, [&] { return nn::add_bias(x, bias); }, {{"x", x}, {"bias", bias}});
  Tensor in = s.leaf({2, 3, 6, 6}), k = s.leaf({4, 3, 3, 3}, 0.3);
  s.op("conv2d", true, [&] { return nn::conv2d(in, k, 1, 1); }, {{"input", in}, {"kernel", k}});
  s.op("conv2d_stride2", true, [&] { return nn::conv2d(in, k, 2, 1); }, {{"input", in}, {"kernel", k}});
  Tensor go = s.leaf({2, 4, 6, 6});
  s.op("conv2d_input_grad", true, [&] { return nn::conv2d_input_grad(go, k, in.shape(), 1, 1); },
       {{"grad_out", go}, {"kernel", k}});
  s.op("conv2d_kernel_grad", true, [&] { return nn::conv2d_kernel_grad(in, go, k.shape(), 1, 1); },
       {{"input", in}, {"grad_out", go}});
}

void models(Suite& s, std::uint64_t seed) {
  {
    pgan::PganConfig c;
    c.target_side = 8;
    c.latent_dim = 5;
    c.channels = {{4, 4}, {8, 3}};
    c.minibatch_stddev = true;
    c.dtype = kF64;
    c.seed = seed;
    pgan::Pgan m = pgan::build_pgan(c);
    m.grow();
    m.set_fade_alpha(0.4);
    Tensor real = Tensor::uniform({2, 3, 8, 8}, s.rng, -1, 1, kF64);
    Tensor fake = Tensor::uniform({2, 3, 8, 8}, s.rng, -1, 1, kF64);
    const auto d_loss = [&] {
      Tensor anchor = fake.clone().set_requires_grad(true);
      const auto d = [&](const Tensor& x) { return m.discriminator.forward(x); };
      return nn::add(nn::neg(pgan::d_loss_wgan(d(real), d(fake))), pgan::gradient_penalty(d, anchor, 10.0));
    };
    s.record("pgan_discriminator_loss", "model", kTol, nn::grad_check(d_loss, m.discriminator.parameters(), {1e-5, kTol, 1e-6}));
    Tensor z = Tensor::randn({3, 5}, s.rng, 1.0, kF64);
    const auto g_loss = [&] { return pgan::g_loss_wgan(m.discriminator.forward(m.generator.forward(z))); };
    s.record("pgan_generator_loss", "model", kTol, nn::grad_check(g_loss, m.generator.parameters(), {1e-6, kTol, 1e-6}));
  }
  {
    cgan::CganConfig c;
    c.crop_side = 16;
    c.num_scales = 2;
    c.base_channels = 2;
    c.residual_blocks = 1;
    c.dtype = kF64;
    c.seed = 5;
    cgan::Cgan m = cgan::build_cgan(c);
    Rng rng(7);
    data::LabelMask mask(16, 16);
    for (auto& v : mask.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, kNumClasses - 1));
    Tensor labels = cgan::one_hot_encode(mask, 6, kF64);
    Tensor real = Tensor::uniform({1, 3, 16, 16}, rng, -1, 1, kF64);
    const auto d_loss = [&] {
      Tensor fake = m.generator.forward(labels).detach();
      return nn::neg(cgan::cgan_d_objective(m.discriminator.forward(labels, real), m.discriminator.forward(labels, fake)));
    };
    s.record("cgan_discriminator_loss", "model", kTol, nn::grad_check(d_loss, m.discriminator.parameters(), {1e-6, kTol, 1e-6}));
    const auto g_loss = [&] {
      const auto r = m.discriminator.forward(labels, real);
      return cgan::cgan_g_loss(m.discriminator.forward(labels, m.generator.forward(labels)), r, 10.0).total;
    };
    s.record("cgan_generator_loss", "model", kTol, nn::grad_check(g_loss, m.generator.parameters(), {1e-6, kTol, 1e-6}));
  }
  {
    detector::DetectorConfig c;
    c.input_side = 16;
    c.grid_stride = 4;
    c.channels = {2, 3, 3, 4};
    c.dtype = kF64;
    c.seed = seed;
    detector::Detector net = detector::build_detector(c, {4, 8});
    Tensor x = Tensor::uniform({2, 3, 16, 16}, s.rng, -1, 1, kF64);
    const auto t = detector::assign_targets({{{Box{2, 3, 7, 6}}}, {{Box{9, 8, 13, 15}}, {Box{1, 1, 5, 5}}}}, net.anchors());
    const auto loss = [&] { return detector::detector_loss(net.forward(x), t).total; };
    s.record("detector_loss", "model", kTol, nn::grad_check(loss, net.parameters(), {1e-5, kTol, 1e-6}));
  }
}

}  // namespace

std::vector<GradSuiteRow> run_grad_suite(std::uint64_t seed) {
  Suite s{Rng(seed), {}};
  elementwise(s);
  shapes(s);
  linear_algebra(s);
  models(s, seed);
  return s.rows;
}

}  // namespace synthaug::pipeline
