// Copyright 2026 The gradepipe Authors. All Rights Reserved.
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

#include "gradepipe/config.h"

#include <gtest/gtest.h>

#include <fstream>

#include "test_support.h"

namespace gradepipe {
namespace {

using testing::TempDir;

std::filesystem::path repo_config(const char* name) {
  return std::filesystem::path(GRADEPIPE_SOURCE_DIR) / "configs" / name;
}

TEST(KeyValueConfig, ParsesCommentsAndWhitespace) {
  const auto kv = KeyValueConfig::parse(
      "# heading\n\n  roi.patch_px = 64  # trailing\nnet.growth_rate=4\n");
  EXPECT_EQ(kv.get("roi.patch_px"), "64");
  EXPECT_EQ(kv.get("net.growth_rate"), "4");
  EXPECT_EQ(kv.get("net.block_pairs"), std::nullopt);
  EXPECT_EQ(kv.values().size(), 2u);
}

TEST(KeyValueConfig, MalformedLineNamesTheLine) {
  try {
    KeyValueConfig::parse("roi.patch_px = 64\nthis line has no equals\n", "f.cfg");
    FAIL() << "expected InvalidConfig";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    EXPECT_NE(std::string(e.what()).find("f.cfg:2"), std::string::npos) << e.what();
  }
}

TEST(ApplyConfig, OverlaysEverySection) {
  const auto kv = KeyValueConfig::parse(
      "roi.green_red_ratio = 0.8\nnet.hidden_units = 16\nadam.beta2 = 0.99\n"
      "augment.elastic_alpha = 3.5\nsynth.noise_sigma = 2\npipeline.epochs = 2\n"
      "pipeline.deterministic = true\npipeline.slide_rule = ranked\n"
      "pipeline.global_seed = 18446744073709551615\n");
  const PipelineConfig cfg = apply_config(kv);
  EXPECT_DOUBLE_EQ(cfg.roi.green_red_ratio, 0.8);
  EXPECT_EQ(cfg.net.hidden_units, 16);
  EXPECT_DOUBLE_EQ(cfg.adam.beta2, 0.99);
  EXPECT_DOUBLE_EQ(cfg.augment.elastic_alpha, 3.5);
  EXPECT_DOUBLE_EQ(cfg.synth.noise_sigma, 2.0);
  EXPECT_EQ(cfg.epochs, 2);
  EXPECT_TRUE(cfg.deterministic);
  EXPECT_EQ(cfg.slide_rule, SlideRule::kRanked);
  EXPECT_EQ(cfg.global_seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.batch_size, 10);
}

TEST(ApplyConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_GP_ERROR(apply_config(KeyValueConfig::parse("roi.nope = 1")), ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(apply_config(KeyValueConfig::parse("net.growth_rate = four")),
                  ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(apply_config(KeyValueConfig::parse("pipeline.epochs = 3x")),
                  ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(apply_config(KeyValueConfig::parse("pipeline.deterministic = maybe")),
                  ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(apply_config(KeyValueConfig::parse("pipeline.slide_rule = mean")),
                  ErrorCode::kInvalidConfig);
}

TEST(PipelineConfig, Validation) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.train_fraction = 1.0;
  EXPECT_GP_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = PipelineConfig{};
  cfg.batch_size = 0;
  EXPECT_GP_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = PipelineConfig{};
  cfg.queue_capacity = 0;
  EXPECT_GP_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = PipelineConfig{};
  cfg.net.input_px = 64;
  EXPECT_GP_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
  cfg = PipelineConfig{};
  cfg.net.num_classes = 3;
  EXPECT_GP_ERROR(cfg.validate(), ErrorCode::kInvalidConfig);
}

TEST(ConfigText, RoundTripsThroughFile) {
  TempDir dir("cfg");
  PipelineConfig cfg;
  cfg.roi.sampling_seed = 12345;
  cfg.adam.learning_rate = 3e-4;
  cfg.augment.elastic_sigma = 0.1 + 0.2;
  cfg.slide_rule = SlideRule::kRanked;
  cfg.worker_threads = 3;
  {
    std::ofstream(dir.path() / "a.cfg") << to_config_text(cfg);
  }
  const PipelineConfig back = load_pipeline_config(dir.path() / "a.cfg");
  EXPECT_EQ(to_config_text(back), to_config_text(cfg));
  EXPECT_EQ(back.augment.elastic_sigma, cfg.augment.elastic_sigma);
  EXPECT_EQ(back.roi.sampling_seed, 12345u);
}

TEST(ShippedConfigs, DefaultCarriesFullScaleValues) {
  const PipelineConfig cfg = load_pipeline_config(repo_config("default.cfg"));
  EXPECT_DOUBLE_EQ(cfg.roi.green_red_ratio, 0.9);
  EXPECT_EQ(cfg.roi.median_disk_px, 50);
  EXPECT_EQ(cfg.roi.work_factor, 64u);
  EXPECT_EQ(cfg.roi.patch_px, 512);
  EXPECT_EQ(cfg.roi.num_patches, 20);
  EXPECT_EQ(cfg.net.stem_maps, 32);
  EXPECT_EQ(cfg.net.extractors_per_block, 6);
  EXPECT_EQ(cfg.net.hidden_units, 128);
  EXPECT_EQ(cfg.net.num_classes, 4);
  EXPECT_DOUBLE_EQ(cfg.adam.learning_rate, 0.001);
  EXPECT_DOUBLE_EQ(cfg.adam.beta1, 0.9);
  EXPECT_DOUBLE_EQ(cfg.adam.beta2, 0.999);
  EXPECT_DOUBLE_EQ(cfg.train_fraction, 0.8);
  EXPECT_EQ(cfg.epochs, 6);
  EXPECT_EQ(cfg.batch_size, 10);
}

TEST(ShippedConfigs, DeskMatchesPreset) {
  const PipelineConfig cfg = load_pipeline_config(repo_config("desk.cfg"));
  EXPECT_EQ(cfg.net, desk_preset());
  EXPECT_EQ(cfg.roi.patch_px, 64);
}

TEST(LoadPipelineConfig, MissingFile) {
  EXPECT_GP_ERROR(load_pipeline_config("/nonexistent/x.cfg"), ErrorCode::kIoFailure);
}

}  // namespace
}  // namespace gradepipe
