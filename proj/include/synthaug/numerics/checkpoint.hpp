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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "synthaug/numerics/layers.hpp"

namespace synthaug::nn {

// Versioned binary container shared by every trainable component.
//
//   magic    8 bytes  "SYNCKPT\0"
//   version  u32      (currently 1)
//   n_meta   u32, then n_meta x { u32 len, key bytes, u32 len, value bytes }
//   n_param  u32, then n_param x { u32 len, name bytes, u32 ndim, ndim x u32,
//                                  numel x f32 }
//
// All integers and floats little-endian.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const std::string& meta(const std::string& key) const;
  int meta_int(const std::string& key) const;
  double meta_double(const std::string& key) const;
};

Checkpoint make_checkpoint(const ParameterList& params, std::map<std::string, std::string> metadata);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::vector<char> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<char>& bytes);

// Copies values into `params` by name. Every parameter must be present with
// an identical shape.
void restore_parameters(const Checkpoint& ckpt, const ParameterList& params);

}  // namespace synthaug::nn
