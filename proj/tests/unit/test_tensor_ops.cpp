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

#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/ops.hpp"

namespace synthaug::nn {
namespace {

Tensor t2(std::vector<double> v, Shape s) { return Tensor::from_values(std::move(s), v, Dtype::f32); }

TEST(Matmul, IdentityTimesIdentity) {
  Tensor eye = t2({1, 0, 0, 1}, {2, 2});
  EXPECT_EQ(matmul(eye, eye).to_vector(), (std::vector<double>{1, 0, 0, 1}));
}

TEST(Matmul, HandProduct) {
  Tensor a = t2({1, 2, 3, 4}, {2, 2});
  Tensor b = t2({1, 1}, {2, 1});
  Tensor c = matmul(a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 1}));
  EXPECT_EQ(c.to_vector(), (std::vector<double>{3, 7}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(2,3)"), std::string::npos);
    EXPECT_NE(msg.find("(2,3)"), msg.rfind("(2,3)"));  // both operands named
  }
}

TEST(Conv2d, ScalarKernelDoubles) {
  Rng rng(3);
  Tensor x = Tensor::randn({1, 1, 3, 3}, rng);
  Tensor k = t2({2}, {1, 1, 1, 1});
  Tensor y = conv2d(x, k, 1, 0);
  for (int i = 0; i < 9; ++i) EXPECT_FLOAT_EQ(y.at(i), 2 * x.at(i));
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  Rng rng(4);
  Tensor x = Tensor::randn({2, 1, 5, 4}, rng);
  Tensor k = t2({0, 0, 0, 0, 1, 0, 0, 0, 0}, {1, 1, 3, 3});
  EXPECT_EQ(conv2d(x, k, 1, 1).to_vector(), x.to_vector());
}

TEST(Conv2d, NonPositiveOutputIsDimensionError) {
  EXPECT_THROW(conv2d(Tensor::zeros({1, 1, 2, 2}), Tensor::zeros({1, 1, 3, 3}), 1, 0), DimensionError);
  EXPECT_THROW(conv2d(Tensor::zeros({1, 2, 4, 4}), Tensor::zeros({1, 3, 3, 3}), 1, 1), DimensionError);
}

TEST(Resample, UpsampleReplicates) {
  Tensor x = t2({1, 2, 3, 4}, {1, 1, 2, 2});
  Tensor up = upsample_nearest2x(x);
  EXPECT_EQ(up.shape(), (Shape{1, 1, 4, 4}));
  EXPECT_EQ(up.to_vector(), (std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
  EXPECT_EQ(avgpool2x(up).to_vector(), x.to_vector());
}

TEST(Resample, ConstantImageUnchanged) {
  Tensor c = Tensor::full({2, 3, 4, 4}, 0.75);
  for (double v : avgpool2x(c).to_vector()) EXPECT_EQ(v, 0.75);
  for (double v : upsample_nearest2x(c).to_vector()) EXPECT_EQ(v, 0.75);
}

TEST(Resample, OddDimsRejected) { EXPECT_THROW(avgpool2x(Tensor::zeros({1, 1, 3, 4})), DimensionError); }

// avgpool2x o upsample_nearest2x == id, bitwise, on random tensors.
TEST(Resample, RoundTripProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Shape s{rng.uniform_int(1, 3), rng.uniform_int(1, 4), 2 * rng.uniform_int(1, 5), 2 * rng.uniform_int(1, 5)};
    Tensor x = Tensor::randn(s, rng, 3.0);
    EXPECT_EQ(avgpool2x(upsample_nearest2x(x)).to_vector(), x.to_vector());
  }
}

TEST(Activations, Definitions) {
  EXPECT_NEAR(leaky_relu(Tensor::scalar(-1), 0.2).item(), -0.2, 1e-7);
  EXPECT_EQ(tanh_act(Tensor::scalar(0)).item(), 0.0);
  Tensor ones = Tensor::full({1, 4, 1, 1}, 1.0, Dtype::f64);
  for (double v : pixelwise_norm(ones, 1e-12).to_vector()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Activations, PixelwiseNormUnitMeanSquare) {
  Rng rng(5);
  Tensor x = Tensor::randn({2, 6, 3, 3}, rng, 4.0, Dtype::f64);
  Tensor y = pixelwise_norm(x, 1e-8);
  for (int n = 0; n < 2; ++n) {
    for (int p = 0; p < 9; ++p) {
      double ms = 0;
      for (int c = 0; c < 6; ++c) ms += std::pow(y.at((n * 6 + c) * 9 + p), 2);
      EXPECT_NEAR(ms / 6, 1.0, 1e-6);
    }
  }
  EXPECT_THROW(pixelwise_norm(x, 0.0), ArgumentError);
}

TEST(Activations, InstanceNormStandardizesEachPlane) {
  Rng rng(6);
  Tensor x = Tensor::randn({2, 3, 4, 5}, rng, 3.0, Dtype::f64);
  Tensor y = instance_norm(nn::add_scalar(x, 7.0), 1e-12);
  for (int plane = 0; plane < 6; ++plane) {
    double mu = 0, ms = 0;
    for (int i = 0; i < 20; ++i) mu += y.at(plane * 20 + i) / 20;
    for (int i = 0; i < 20; ++i) ms += std::pow(y.at(plane * 20 + i) - mu, 2) / 20;
    EXPECT_NEAR(mu, 0.0, 1e-9);
    EXPECT_NEAR(ms, 1.0, 1e-9);
  }
  EXPECT_THROW(instance_norm(Tensor::zeros({2, 3}), 1e-5), DimensionError);
}

TEST(Ops, ForwardIsPure) {
  Rng rng(8);
  Tensor x = Tensor::randn({3, 4, 6, 6}, rng);
  Tensor k = Tensor::randn({5, 4, 3, 3}, rng);
  auto run = [&] { return pixelwise_norm(leaky_relu(conv2d(avgpool2x(x), k, 1, 1), 0.2), 1e-8).to_vector(); };
  EXPECT_EQ(run(), run());
}

TEST(Ops, ConcatSliceRoundTrip) {
  Rng rng(9);
  Tensor a = Tensor::randn({2, 3, 2, 2}, rng);
  Tensor b = Tensor::randn({2, 5, 2, 2}, rng);
  Tensor c = concat_channels({a, b});
  EXPECT_EQ(c.shape(), (Shape{2, 8, 2, 2}));
  EXPECT_EQ(slice_channels(c, 0, 3).to_vector(), a.to_vector());
  EXPECT_EQ(slice_channels(c, 3, 8).to_vector(), b.to_vector());
}

TEST(Ops, ElementwiseShapeMismatch) {
  EXPECT_THROW(add(Tensor::zeros({2, 2}), Tensor::zeros({4})), DimensionError);
  EXPECT_THROW(mul(Tensor::zeros({2, 2}), Tensor::zeros({2, 3})), DimensionError);
}

TEST(Tensor, InvariantsAndDetach) {
  Tensor t = Tensor::zeros({2, 3});
  EXPECT_EQ(t.numel(), 6);
  EXPECT_THROW(Tensor::from_vector({2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::zeros({0, 2}), DimensionError);
  t.set_requires_grad(true);
  Tensor y = scale(t, 2.0);
  EXPECT_TRUE(y.requires_grad());
  EXPECT_FALSE(y.detach().requires_grad());
  EXPECT_THROW(y.set_requires_grad(false), StateError);
}

}  // namespace
}  // namespace synthaug::nn
