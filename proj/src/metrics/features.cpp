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

#include "synthaug/metrics/features.hpp"

#include <regex>

#include "synthaug/common/rng.hpp"
#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/ops.hpp"

namespace synthaug::metrics {

namespace {
constexpr int kBatch = 64;
}

RandomConvExtractor::RandomConvExtractor(std::uint64_t seed, int dim) : seed_(seed), dim_(dim) {
  if (dim < 8) throw ConfigError("extractor dim must be >= 8");
  Rng rng(seed);
  const int c1 = std::max(8, dim / 8), c2 = std::max(8, dim / 4), c3 = std::max(8, dim / 2);
  layers_.emplace_back(3, c1, 3, 1, 1, rng);
  layers_.emplace_back(c1, c2, 3, 2, 1, rng);
  layers_.emplace_back(c2, c3, 3, 2, 1, rng);
  layers_.emplace_back(c3, dim, 3, 2, 1, rng);
}

std::string RandomConvExtractor::id() const {
  return "random-conv:" + std::to_string(seed_) + ":" + std::to_string(dim_);
}

Eigen::MatrixXd RandomConvExtractor::extract(const std::vector<data::ImageChip>& images) const {
  if (images.empty()) throw ArgumentError("extract_features: empty batch");
  const int h = images[0].height, w = images[0].width;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), dim_);
  nn::NoGradGuard no_grad;
  for (std::size_t start = 0; start < images.size(); start += kBatch) {
    const int n = static_cast<int>(std::min<std::size_t>(kBatch, images.size() - start));
    std::vector<float> buf;
    buf.reserve(std::size_t(n) * 3 * h * w);
    for (int i = 0; i < n; ++i) {
      const auto& img = images[start + i];
      if (img.height != h || img.width != w) throw DimensionError("extract_features: images differ in size");
      buf.insert(buf.end(), img.data.begin(), img.data.end());
    }
    nn::Tensor x = nn::Tensor::from_vector({n, 3, h, w}, std::move(buf));
    for (const auto& layer : layers_) x = nn::leaky_relu(layer.forward(x), 0.2);
    // Global average pooling.
    const std::size_t area = std::size_t(x.dim(2)) * x.dim(3);
    auto v = x.values<float>();
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < dim_; ++d) {
        const float* p = v.data() + (std::size_t(i) * dim_ + d) * area;
        double acc = 0.0;
        for (std::size_t k = 0; k < area; ++k) acc += p[k];
        out(static_cast<Eigen::Index>(start) + i, d) = acc / double(area);
      }
  }
  return out;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id) {
  static const std::regex pattern(R"(random-conv(?::(\d+))?(?::(\d+))?)");
  std::smatch m;
  if (std::regex_match(id, m, pattern)) {
    const std::uint64_t seed = m[1].matched ? std::stoull(m[1]) : 2048;
    const int dim = m[2].matched ? std::stoi(m[2]) : 256;
    return std::make_unique<RandomConvExtractor>(seed, dim);
  }
  throw ConfigError("unknown feature extractor '" + id + "'");
}

Eigen::MatrixXd extract_features(const std::vector<data::ImageChip>& images, const FeatureExtractor& extractor) {
  return extractor.extract(images);
}

}  // namespace synthaug::metrics
