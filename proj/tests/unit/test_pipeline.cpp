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
#include <filesystem>
#include <fstream>
#include <sstream>

#include "synthaug/common/error.hpp"
#include "synthaug/common/rng.hpp"
#include "synthaug/common/util.hpp"
#include "synthaug/dataset/toy.hpp"
#include "synthaug/labelpost/labelpost.hpp"
#include "synthaug/pipeline/config.hpp"
#include "synthaug/pipeline/pipeline.hpp"

namespace {

using namespace synthaug;
using namespace synthaug::pipeline;
namespace fs = std::filesystem;

constexpr const char* kSmoke = R"(
seed = 1
[data]
source = toy
toy_train_tiles = 2
toy_test_tiles = 1
toy_tile_side = 64
chip_side = 16
chip_stride = 16
[pgan]
images_per_phase = 256
batch_sizes = 4:16,8:16,16:8
channels = 4:8,8:8,16:4
latent_dim = 16
[cgan]
steps = 40
batch_size = 4
base_channels = 4
residual_blocks = 1
num_scales = 2
min_vehicles_per_crop = 1
[purity]
tol = 1.0
min_pure_fraction = 0.0
[synth]
acceptance_floor = 0.0
cgan_crops_per_tile = 4
[detector]
steps = 20
batch_size = 4
channels = 4,4,4,4
[grid]
subsets = 1,2
ratios = 0,0.5,1
seeds = 2
)";

RunConfig smoke_config() {
  RunConfig cfg;
  apply_config_text(cfg, kSmoke);
  return cfg;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("synthaug_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Untrained models grown to 16 px; enough for the synthesis contract.
struct TinyModels {
  pgan::Pgan pgan;
  cgan::Cgan cgan;
};

TinyModels tiny_models(int side = 16) {
  const auto cfg = smoke_config();
  pgan::PganConfig pc = cfg.pgan;
  pc.target_side = side;
  pgan::Pgan p = pgan::build_pgan(pc);
  while (!p.generator.fully_grown()) p.grow();
  p.set_fade_alpha(1.0);
  cgan::CganConfig cc = cfg.cgan;
  cc.crop_side = 16;
  return {std::move(p), cgan::build_cgan(cc)};
}

RunReport fake_report(int subsets, const std::vector<double>& ratios, int seeds) {
  RunReport r;
  r.ratios = ratios;
  r.seeds = seeds;
  for (int k = 0; k < subsets; ++k) {
    SubsetInfo s;
    s.index = k;
    s.tiles = 1 << k;
    s.chips = 16 << k;
    s.vehicles = 40 * (k + 1) + k * k;
    r.subsets.push_back(s);
    for (int rep = 0; rep < seeds; ++rep) {
      for (double ratio : ratios) {
        CellResult c;
        c.subset = k;
        c.ratio = ratio;
        c.replicate = rep;
        c.map = 0.1 * (k + 1) + 0.01 * ratio + 0.001 * rep;
        r.cells.push_back(c);
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------- config

TEST(Config, ParsesSectionsAndComments) {
  RunConfig cfg;
  apply_config_text(cfg, "seed = 9  # trailing\n; full line\n[pgan]\nlatent_dim = 12\n[grid]\nratios = 0,1\n");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.pgan.latent_dim, 12);
  EXPECT_EQ(cfg.grid.ratios, (std::vector<double>{0, 1}));
}

TEST(Config, UnknownKeyNamesTheLine) {
  RunConfig cfg;
  try {
    apply_config_text(cfg, "seed = 1\n[pgan]\nlatnet_dim = 3\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("latnet_dim"), std::string::npos) << e.what();
  }
  EXPECT_THROW(apply_config_text(cfg, "seed = banana\n"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "no.such.key", "1"), ConfigError);
}

TEST(Config, EveryKeyRoundTripsThroughTheDump) {
  auto cfg = smoke_config();
  RunConfig again;
  apply_config_text(again, format_config(cfg));
  EXPECT_EQ(format_config(again), format_config(cfg));
  EXPECT_EQ(config_hash(again), config_hash(cfg));
}

TEST(Config, HashTracksEveryChange) {
  auto cfg = smoke_config();
  const auto h = config_hash(cfg);
  EXPECT_EQ(config_hash(smoke_config()), h);
  for (const auto& key : config_keys()) {
    RunConfig changed = cfg;
    const auto before = key.get(changed);
    // Rewriting a key with its own value must not move the hash.
    key.set(changed, before);
    EXPECT_EQ(config_hash(changed), h) << key.name;
  }
  apply_override(cfg, "detector.steps", "21");
  EXPECT_NE(config_hash(cfg), h);
}

TEST(Config, ChipSideOverrideMovesEveryModel) {
  RunConfig cfg;
  apply_override(cfg, "data.chip_side", "16");
  EXPECT_EQ(cfg.pgan.target_side, 16);
  EXPECT_EQ(cfg.cgan.crop_side, 16);
  EXPECT_EQ(cfg.detector.input_side, 16);
  // Three discriminator scales need 32 px crops.
  EXPECT_THROW(cfg.validate(), ConfigError);
  apply_override(cfg, "cgan.num_scales", "2");
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, KeysAreSortedAndUnique) {
  const auto& keys = config_keys();
  for (std::size_t i = 1; i < keys.size(); ++i) EXPECT_LT(keys[i - 1].name, keys[i].name);
}

TEST(Grid, RequiresNestedSubsetsAndABaseline) {
  ExperimentGrid g;
  EXPECT_NO_THROW(g.validate());
  g.subsets = {2, 2};
  EXPECT_THROW(g.validate(), ConfigError);
  g.subsets = {4, 2};
  EXPECT_THROW(g.validate(), ConfigError);
  g.subsets = {1, 2};
  g.ratios = {0.5, 1.0};
  EXPECT_THROW(g.validate(), ConfigError);
  g.ratios = {0, 0.5};
  g.seeds = 0;
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Grid, DefaultsCoverTwentyEightCells) {
  const ExperimentGrid g;
  EXPECT_EQ(g.subsets.size() * g.ratios.size(), 28u);
  EXPECT_EQ(g.ratios.front(), 0.0);
  EXPECT_EQ(g.ratios.back(), 3.0);
}

// ------------------------------------------------------------------ data

TEST(Data, SubsetsAreNestedPrefixesOfOneOrder) {
  const auto split = prepare_split(smoke_config());
  ASSERT_EQ(split.train.size(), 2u);
  ASSERT_EQ(split.test.size(), 1u);
  const auto a = subset_order(split.train, 4), b = subset_order(split.train, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].id, b[i].id);
}

TEST(Data, PganSetIsPaletteRasters) {
  data::LabelMask m(8, 8, 2);
  m.at(3, 3) = 4;
  const auto plain = pgan_training_set({m}, false);
  const auto aug = pgan_training_set({m}, true);
  EXPECT_EQ(plain.shape(), (std::vector<int>{1, 3, 8, 8}));
  EXPECT_EQ(aug.shape(), (std::vector<int>{8, 3, 8, 8}));
}

// ------------------------------------------------------------- synthesis

TEST(Synthesis, ZeroPairsIsEmpty) {
  auto m = tiny_models();
  const auto out = run_joint_synthesis(m.pgan, m.cgan, 0, {}, 1);
  EXPECT_TRUE(out.masks.empty());
  EXPECT_TRUE(out.images.empty());
}

TEST(Synthesis, EmittedMasksPassPurity) {
  auto m = tiny_models();
  const labelpost::PurityConfig loose{1.0, 0.0};
  const auto out = run_joint_synthesis(m.pgan, m.cgan, 10, loose, 3);
  ASSERT_EQ(out.masks.size(), 10u);
  ASSERT_EQ(out.images.size(), 10u);
  const labelpost::PurityConfig strict{0.0, 1.0};
  for (const auto& mask : out.masks) {
    EXPECT_EQ(mask.height, 16);
    // A snapped mask renders to exact palette colours.
    EXPECT_TRUE(labelpost::histogram_purity_test(labelpost::render_palette(mask), strict).passed);
  }
  for (const auto& img : out.images) {
    for (float v : img.data) {
      EXPECT_GE(v, -1.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(Synthesis, SameSeedSamePairs) {
  auto m = tiny_models();
  const labelpost::PurityConfig loose{1.0, 0.0};
  const auto a = run_joint_synthesis(m.pgan, m.cgan, 6, loose, 7);
  const auto b = run_joint_synthesis(m.pgan, m.cgan, 6, loose, 7);
  const auto c = run_joint_synthesis(m.pgan, m.cgan, 6, loose, 8);
  EXPECT_EQ(a.masks, b.masks);
  EXPECT_EQ(a.images, b.images);
  EXPECT_EQ(a.raw_sampled, b.raw_sampled);
  EXPECT_NE(a.images, c.images);
}

TEST(Synthesis, AcceptanceBelowFloorRaises) {
  auto m = tiny_models();
  const labelpost::PurityConfig impossible{0.0, 1.0};
  SynthesisOptions opt;
  opt.acceptance_floor = 0.05;
  opt.max_raw_factor = 2;
  try {
    run_joint_synthesis(m.pgan, m.cgan, 4, impossible, 1, opt);
    FAIL() << "expected PipelineError";
  } catch (const PipelineError& e) {
    EXPECT_NE(std::string(e.what()).find("purity"), std::string::npos) << e.what();
  }
}

TEST(Synthesis, BudgetCapsRawSamples) {
  auto m = tiny_models();
  const labelpost::PurityConfig impossible{0.0, 1.0};
  SynthesisOptions opt;
  opt.acceptance_floor = 0.0;
  opt.max_raw_factor = 3;
  opt.batch = 5;
  const auto out = run_joint_synthesis(m.pgan, m.cgan, 4, impossible, 1, opt);
  EXPECT_EQ(out.raw_sampled, 12);
  EXPECT_TRUE(out.masks.empty());
  EXPECT_EQ(out.acceptance_rate, 0.0);
}

TEST(Synthesis, SideMismatchRaises) {
  auto m = tiny_models(8);
  EXPECT_THROW(run_joint_synthesis(m.pgan, m.cgan, 2, {1.0, 0.0}, 1), DimensionError);
}

TEST(Synthesis, PairsRoundTripOnDisk) {
  auto m = tiny_models();
  const auto out = run_joint_synthesis(m.pgan, m.cgan, 3, {1.0, 0.0}, 2);
  const auto dir = scratch("pairs");
  save_pairs(dir, out.masks, out.images);
  const auto back = load_pairs(dir);
  EXPECT_EQ(back.masks, out.masks);
  ASSERT_EQ(back.images.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < out.images[i].data.size(); ++j) {
      // 8-bit PNG quantisation.
      EXPECT_NEAR(back.images[i].data[j], out.images[i].data[j], 1.0 / 255 + 1e-6);
    }
  }
}

// ------------------------------------------------------------------- FID

TEST(FidStudy, IdenticalPoolScoresZero) {
  const auto scene = data::toy_scene_generate(3, 64);
  std::vector<data::ImageChip> imgs;
  for (const auto& c : data::chip(scene.tile, 16, 16)) imgs.push_back(c.image);
  const auto ex = metrics::make_extractor("random-conv:7:16");
  const auto rows = fid_study(imgs, {{"1", 16, 40, imgs}, {"2", 32, 80, imgs}}, *ex);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_NEAR(r.fid, 0.0, 1e-8);
  EXPECT_EQ(rows[0].counts(), "16 / 40");
  EXPECT_EQ(rows[1].pool_size, 16);
}

TEST(FidStudy, UndersizedPoolsRaise) {
  const auto ex = metrics::make_extractor("random-conv:7:16");
  const std::vector<data::ImageChip> one{data::ImageChip(16, 16)};
  const std::vector<data::ImageChip> two{data::ImageChip(16, 16), data::ImageChip(16, 16, 0.5f)};
  EXPECT_THROW(fid_study(one, {{"a", 1, 1, two}}, *ex), ArgumentError);
  EXPECT_THROW(fid_study(two, {{"a", 1, 1, one}}, *ex), ArgumentError);
}

// ------------------------------------------------------------- plot data

TEST(PlotData, OneSeriesPerRatioWithIncreasingX) {
  const auto report = fake_report(4, ExperimentGrid{}.ratios, 3);
  const auto series = emit_plot_data(report);
  ASSERT_EQ(series.size(), 7u);
  for (const auto& s : series) {
    ASSERT_EQ(s.size(), 4u);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s[i - 1].real_vehicles, s[i].real_vehicles);
  }
  for (const auto& p : series[0]) EXPECT_EQ(p.relative_change, 0.0);
  // Series at ratio 1 on subset 0: mean map 0.111 against baseline 0.101.
  EXPECT_NEAR(series[2].front().relative_change, (0.111 - 0.101) / 0.101, 1e-12);
}

TEST(PlotData, MissingCellsAreListed) {
  auto report = fake_report(2, {0, 0.5, 1}, 1);
  report.cells.erase(std::remove_if(report.cells.begin(), report.cells.end(),
                                    [](const CellResult& c) { return c.subset == 1 && c.ratio == 0.5; }),
                     report.cells.end());
  try {
    emit_plot_data(report);
    FAIL() << "expected PipelineError";
  } catch (const PipelineError& e) {
    EXPECT_NE(std::string(e.what()).find("(subset 1, ratio 0.5)"), std::string::npos) << e.what();
  }
}

TEST(Report, RoundTripsThroughCsv) {
  auto report = fake_report(2, {0, 1}, 2);
  report.config_hash = "abc123";
  report.extractor = "random-conv:1:8";
  for (auto& c : report.cells) {
    const auto* base = report.find(c.subset, 0.0, c.replicate);
    c.baseline_map = base->map;
    c.relative_change = (c.map - base->map) / base->map;
  }
  report.failures.push_back({1, 1.0, 3, "boom"});
  const auto dir = scratch("report");
  write_report(dir, report, report_header(report.config_hash, report.extractor));
  const auto back = read_report(dir);
  EXPECT_EQ(back.config_hash, "abc123");
  EXPECT_EQ(back.extractor, "random-conv:1:8");
  ASSERT_EQ(back.cells.size(), report.cells.size());
  for (std::size_t i = 0; i < back.cells.size(); ++i) {
    EXPECT_EQ(back.cells[i].map, report.cells[i].map);
    EXPECT_EQ(back.cells[i].relative_change, report.cells[i].relative_change);
  }
  ASSERT_EQ(back.failures.size(), 1u);
  EXPECT_EQ(back.failures[0].error, "boom");
  EXPECT_EQ(back.ratios, report.ratios);
  const auto summary = slurp(dir / "summary.csv");
  EXPECT_EQ(summary.rfind(std::string("# tool=synthaug "), 0), 0u);
  // Per-seed values are kept next to the mean.
  EXPECT_NE(summary.find(";"), std::string::npos);
}

// ----------------------------------------------------------- sample grid

TEST(SampleGrid, TilesInInputOrder) {
  std::vector<data::LabelMask> masks;
  std::vector<data::ImageChip> images;
  for (int i = 0; i < 6; ++i) {
    masks.emplace_back(4, 4, static_cast<std::uint8_t>(i));
    images.emplace_back(4, 4, -1.0f + 0.25f * i);
  }
  const auto sheet = emit_sample_grids(masks, images, 2, 3);
  EXPECT_EQ(sheet.images.height, 8);
  EXPECT_EQ(sheet.images.width, 12);
  EXPECT_EQ(sheet.masks.height, 8);
  EXPECT_EQ(sheet.masks.width, 12);
  for (int i = 0; i < 6; ++i) {
    const int y = (i / 3) * 4 + 1, x = (i % 3) * 4 + 2;
    EXPECT_EQ(sheet.images.at(1, y, x), -1.0f + 0.25f * i);
    EXPECT_EQ(sheet.masks.at(0, y, x), labelpost::render_palette(masks[i]).at(0, 0, 0));
  }
  EXPECT_THROW(emit_sample_grids(masks, images, 3, 3), ArgumentError);
}

// ----------------------------------------------------------------- sweep

TEST(Sweep, EveryCellReportedOnceAndBaselinesAreZero) {
  const auto cfg = smoke_config();
  const auto report = augmentation_sweep(cfg);
  const std::size_t expected = cfg.grid.subsets.size() * cfg.grid.ratios.size() * cfg.grid.seeds;
  EXPECT_EQ(report.cells.size() + report.failures.size(), expected);
  for (std::size_t k = 0; k < cfg.grid.subsets.size(); ++k) {
    for (double r : cfg.grid.ratios) {
      for (int rep = 0; rep < cfg.grid.seeds; ++rep) {
        int seen = report.find(int(k), r, rep) ? 1 : 0;
        for (const auto& f : report.failures) seen += (f.subset == int(k) && f.ratio == r && f.replicate == rep);
        EXPECT_EQ(seen, 1) << k << " " << r << " " << rep;
      }
    }
  }
  for (const auto& c : report.cells) {
    if (c.ratio == 0.0 && c.map > 0) {
      EXPECT_EQ(c.relative_change, 0.0);
    }
    EXPECT_EQ(c.synthetic_used, int(std::lround(c.ratio * report.subsets[c.subset].chips)));
  }
  EXPECT_LT(report.subsets[0].chips, report.subsets[1].chips);
}

TEST(Sweep, RerunIsBitwiseIdentical) {
  const auto cfg = smoke_config();
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  const auto header = report_header(config_hash(cfg), cfg.extractor);
  write_report(a, augmentation_sweep(cfg, {a / "work", false, true}), header);
  write_report(b, augmentation_sweep(cfg, {b / "work", false, true}), header);
  for (const char* f : {"cells.csv", "summary.csv", "subsets.csv", "failures.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  for (const char* f : {"work/subset_0/pgan.ckpt", "work/subset_0/cgan.ckpt", "work/subset_1/pgan.ckpt"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Sweep, CachedCheckpointsGiveTheSameReport) {
  const auto cfg = smoke_config();
  const auto dir = scratch("cache");
  const auto first = augmentation_sweep(cfg, {dir, true, false});
  const auto second = augmentation_sweep(cfg, {dir, true, false});
  ASSERT_EQ(first.cells.size(), second.cells.size());
  for (std::size_t i = 0; i < first.cells.size(); ++i) EXPECT_EQ(first.cells[i].map, second.cells[i].map);
  for (std::size_t k = 0; k < first.subsets.size(); ++k) {
    EXPECT_EQ(first.subsets[k].pool_digest, second.subsets[k].pool_digest);
  }
}

TEST(Sweep, BaselineIgnoresSynthesisSettings) {
  auto cfg = smoke_config();
  cfg.grid.seeds = 1;
  const auto a = augmentation_sweep(cfg);
  cfg.pgan.images_per_phase = 128;
  cfg.cgan.steps = 10;
  cfg.purity = {0.5, 0.2};
  cfg.synth.batch = 7;
  const auto b = augmentation_sweep(cfg);
  int compared = 0;
  for (const auto& ca : a.cells) {
    if (ca.ratio != 0.0) continue;
    const auto* cb = b.find(ca.subset, 0.0, ca.replicate);
    ASSERT_NE(cb, nullptr);
    EXPECT_EQ(ca.seed, cb->seed);
    EXPECT_EQ(ca.map, cb->map);
    EXPECT_EQ(ca.recall, cb->recall);
    ++compared;
  }
  EXPECT_EQ(compared, 2);
}

}  // namespace
