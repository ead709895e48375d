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
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthaug/dataset/raster.hpp"
#include "synthaug/numerics/layers.hpp"

namespace synthaug::metrics {

// Images -> n x d feature rows. Implementations must be deterministic.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual Eigen::MatrixXd extract(const std::vector<data::ImageChip>& images) const = 0;
};

// Untrained conv net with frozen seed-fixed weights and global average
// pooling.
class RandomConvExtractor : public FeatureExtractor {
 public:
  explicit RandomConvExtractor(std::uint64_t seed = 2048, int dim = 256);

  std::string id() const override;
  int dim() const override { return dim_; }
  Eigen::MatrixXd extract(const std::vector<data::ImageChip>& images) const override;

 private:
  std::uint64_t seed_;
  int dim_;
  std::vector<nn::Conv2d> layers_;
};

// Looks up an extractor by id, e.g. "random-conv:2048:256".
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id);

Eigen::MatrixXd extract_features(const std::vector<data::ImageChip>& images, const FeatureExtractor& extractor);

}  // namespace synthaug::metrics
