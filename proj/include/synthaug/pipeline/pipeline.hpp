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
#include <string>
#include <vector>

#include "synthaug/dataset/dataset.hpp"
#include "synthaug/metrics/features.hpp"
#include "synthaug/pipeline/config.hpp"

namespace synthaug::pipeline {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ data

// Procedural tiles (toy) or tiles loaded from data.dir and split by manifest.
data::Split prepare_split(const RunConfig& cfg);
// Training tiles in seed-shuffled order; subset k is the first subsets[k].
std::vector<data::Tile> subset_order(const std::vector<data::Tile>& train, std::uint64_t seed);
std::vector<data::Chip> chip_tiles(const std::vector<data::Tile>& tiles, int side, int stride);
std::vector<detector::LabeledChip> label_chips(const std::vector<data::Chip>& chips, const std::string& prefix);
int count_vehicles(const std::vector<detector::LabeledChip>& chips);

// ------------------------------------------------------------- synthesis

struct SynthesisResult {
  std::vector<data::LabelMask> masks;
  std::vector<data::ImageChip> images;
  std::int64_t raw_sampled = 0;
  double acceptance_rate = 0.0;  // accepted / raw_sampled over every round
};

// Samples raw PGAN labels in rounds, keeps those passing the purity test
// (snapped to the palette), and translates the first n_pairs through the
// CGAN. Stops early when the raw-label budget is spent. Raises
// DimensionError when the two models disagree on side, and PipelineError when
// the acceptance rate falls below the floor.
SynthesisResult run_joint_synthesis(const pgan::Pgan& pgan_model, const cgan::Cgan& cgan_model, int n_pairs,
                                    const labelpost::PurityConfig& purity, std::uint64_t seed,
                                    const SynthesisOptions& options = {});

// Chip-ready inputs for each GAN.
nn::Tensor pgan_training_set(const std::vector<data::LabelMask>& masks, bool d4);
std::vector<data::Chip> cgan_training_crops(const std::vector<data::Tile>& tiles, const RunConfig& cfg,
                                            std::uint64_t seed);

// ------------------------------------------------------------------- FID

struct FidRow {
  std::string subset;
  int images = 0;    // real chips behind the pool
  int vehicles = 0;  // real vehicles behind the pool
  int pool_size = 0;
  double fid = 0.0;
  std::string counts() const { return std::to_string(images) + " / " + std::to_string(vehicles); }
};

struct FidInput {
  std::string subset;
  int images = 0;
  int vehicles = 0;
  std::vector<data::ImageChip> pool;
};

// FID of every pool against `real`. ArgumentError when either side has fewer
// than 2 images.
std::vector<FidRow> fid_study(const std::vector<data::ImageChip>& real, const std::vector<FidInput>& pools,
                              const metrics::FeatureExtractor& extractor);
void write_fid_csv(const fs::path& path, const std::vector<FidRow>& rows, const std::string& header);

// ------------------------------------------------------------------ sweep

struct SubsetInfo {
  int index = 0;
  int tiles = 0;
  std::vector<std::string> tile_ids;
  int chips = 0;
  int vehicles = 0;
  int pool_size = 0;
  double acceptance_rate = 0.0;
  double fid = 0.0;  // NaN when no pool was synthesized
  std::string pool_digest;  // hex FNV-1a over every mask and image value
  std::string synthesis_error;
};

struct CellResult {
  int subset = 0;
  double ratio = 0.0;
  int replicate = 0;
  std::uint64_t seed = 0;
  int synthetic_used = 0;
  double map = 0.0;  // AP at eval.iou over the test chips
  double recall = 0.0;
  double baseline_map = 0.0;
  double baseline_recall = 0.0;
  double relative_change = 0.0;  // (map - baseline_map) / baseline_map, NaN for a zero baseline
  double wall_seconds = 0.0;
};

struct CellFailure {
  int subset = 0;
  double ratio = 0.0;
  int replicate = 0;
  std::string error;
};

struct RunReport {
  std::string config_hash;
  std::string extractor;
  std::vector<double> ratios;
  int seeds = 0;
  int test_chips = 0;
  int test_vehicles = 0;
  std::vector<SubsetInfo> subsets;
  std::vector<CellResult> cells;
  std::vector<CellFailure> failures;

  const CellResult* find(int subset, double ratio, int replicate) const;
  // Mean over replicates that finished; NaN when none did.
  double mean_map(int subset, double ratio) const;
  std::vector<double> per_seed_map(int subset, double ratio) const;
};

struct SweepOptions {
  fs::path work_dir;           // checkpoint cache and outputs; empty keeps everything in memory
  bool reuse_checkpoints = true;
  bool write_samples = true;
};

// Trains one PGAN and one CGAN per subset, synthesizes a pool sized for the
// largest ratio, then trains and evaluates one detector per (subset, ratio,
// replicate). A failing cell is recorded and the sweep continues.
RunReport augmentation_sweep(const RunConfig& cfg, const SweepOptions& options = {});

void write_report(const fs::path& dir, const RunReport& report, const std::string& header);
// Rebuilds a report from write_report's cells.csv and subsets.csv (wall
// times and per-subset tile ids are not restored).
RunReport read_report(const fs::path& dir);

// ------------------------------------------------------------ plot data

struct PlotPoint {
  double ratio = 0.0;
  int real_vehicles = 0;
  int real_chips = 0;
  double map = 0.0;
  double relative_change = 0.0;
};

// One series per ratio, x = real vehicle count in increasing order. Raises
// PipelineError listing the missing cells when a cell has no replicate.
std::vector<std::vector<PlotPoint>> emit_plot_data(const RunReport& report);
void write_plot_csv(const fs::path& path, const std::vector<std::vector<PlotPoint>>& series, const std::string& header);

// ----------------------------------------------------------- sample grid

struct SampleSheet {
  data::ImageChip masks;   // palette-rendered, (rows*side, cols*side)
  data::ImageChip images;  // (rows*side, cols*side)
};

// Row-major tiling in input order. ArgumentError unless there are at least
// rows*cols pairs of one common side.
SampleSheet emit_sample_grids(const std::vector<data::LabelMask>& masks, const std::vector<data::ImageChip>& images,
                              int rows, int cols);
void write_sample_sheet(const fs::path& dir, const std::string& stem, const SampleSheet& sheet);

// --------------------------------------------------------------- helpers

std::vector<data::ImageChip> images_of(const std::vector<detector::LabeledChip>& chips);
std::vector<detector::LabeledChip> label_synthetic(const SynthesisResult& synth, const std::string& prefix);

// Pairs on disk: <dir>/masks/<i>.png (class indices) and <dir>/images/<i>.png,
// i zero-padded to 6 digits.
void save_pairs(const fs::path& dir, const std::vector<data::LabelMask>& masks, const std::vector<data::ImageChip>& images);
SynthesisResult load_pairs(const fs::path& dir);

}  // namespace synthaug::pipeline
