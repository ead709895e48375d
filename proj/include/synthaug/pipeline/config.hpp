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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "synthaug/cgan/cgan.hpp"
#include "synthaug/detector/detector.hpp"
#include "synthaug/labelpost/labelpost.hpp"
#include "synthaug/pgan/pgan.hpp"

namespace synthaug::pipeline {

// Where training and test tiles come from.
struct DataConfig {
  std::string source = "toy";  // "toy" or "dir"
  std::string dir;             // tile directory when source = dir
  std::string manifest;        // split manifest path; empty means the Potsdam split
  int downsample = 1;          // nearest-neighbour factor applied to loaded tiles
  int toy_train_tiles = 8;
  int toy_test_tiles = 2;
  int toy_tile_side = 128;
  int toy_vehicles_min = 10;  // vehicles per procedural tile
  int toy_vehicles_max = 16;
  int chip_side = 32;
  int chip_stride = 32;
};

struct SynthesisOptions {
  int batch = 64;              // raw labels sampled per round
  int max_raw_factor = 20;     // attempt budget: max_raw_factor * n_pairs raw labels
  double acceptance_floor = 0.05;
  bool d4_gan_data = true;     // train both GANs on all 8 dihedral copies of each chip
  int cgan_crops_per_tile = 32;
};

struct ExperimentGrid {
  std::vector<int> subsets{1, 2, 4, 8};  // nested training tile counts
  std::vector<double> ratios{0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  int seeds = 3;
  int workers = 1;

  // ConfigError unless subsets strictly increase and ratio 0 is present.
  void validate() const;
};

struct EvalConfig {
  double iou = 0.75;
  int max_dets = 100;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  pgan::PganConfig pgan;
  cgan::CganConfig cgan;
  labelpost::PurityConfig purity;
  SynthesisOptions synth;
  detector::DetectorConfig detector;
  ExperimentGrid grid;
  EvalConfig eval;
  std::string extractor = "random-conv:2048:256";

  void validate() const;
};

// One settable key, e.g. "pgan.images_per_phase".
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<ConfigKey>& config_keys();

// Applies "key = value" lines. "[section]" headers prefix later keys with
// "section.". '#' and ';' start comments. Unknown keys and unparsable values
// raise ConfigError naming the line.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical "key = value" dump of every key, sorted by name.
std::string format_config(const RunConfig& cfg);
// Hex FNV-1a of format_config.
std::string config_hash(const RunConfig& cfg);

}  // namespace synthaug::pipeline
