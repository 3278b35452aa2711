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

#include "gradepipe/synth.h"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <set>

#include "gradepipe/aggregate.h"
#include "gradepipe/roi.h"
#include "test_support.h"

namespace gradepipe {
namespace {

using testing::TempDir;

std::set<std::array<std::uint8_t, 3>> distinct_colors(const Level& level) {
  std::set<std::array<std::uint8_t, 3>> colors;
  for (std::size_t i = 0; i < level.pixels.size(); i += 3) {
    colors.insert({level.pixels[i], level.pixels[i + 1], level.pixels[i + 2]});
  }
  return colors;
}

// Tissue pixels counted from a noiseless rendering of the same geometry:
// every pixel that is not exactly the background color.
std::size_t drawn_tissue_oracle(SynthConfig cfg) {
  cfg.noise_sigma = 0.0;
  const Level level = generate_slide(cfg).pyramid.levels.at(0);
  std::size_t n = 0;
  for (std::uint32_t y = 0; y < level.height; ++y) {
    for (std::uint32_t x = 0; x < level.width; ++x) n += level.at(x, y) == cfg.background_rgb ? 0 : 1;
  }
  return n;
}

TEST(GenerateSlide, SameSeedIsByteIdentical) {
  for (SlideLabel kind : kAllSlideLabels) {
    const auto a = generate_slide(default_synth_config(kind, 42), "s");
    const auto b = generate_slide(default_synth_config(kind, 42), "s");
    EXPECT_EQ(encode_slide(a.pyramid), encode_slide(b.pyramid));
    EXPECT_EQ(a.label, kind);
  }
  EXPECT_NE(generate_slide(default_synth_config(SlideLabel::kMicro, 1)).pyramid,
            generate_slide(default_synth_config(SlideLabel::kMicro, 2)).pyramid);
}

TEST(GenerateSlide, EmitsTheWorkLevel) {
  const auto s = generate_slide(default_synth_config(SlideLabel::kItc, 3), "id");
  ASSERT_EQ(s.pyramid.levels.size(), 1u);
  EXPECT_EQ(s.pyramid.levels[0].downsample_factor, 64u);
  EXPECT_EQ(s.pyramid.levels[0].width, 256u);
  EXPECT_EQ(s.pyramid.slide_id, "id");
  validate_pyramid(s.pyramid);
}

TEST(GenerateSlide, NegativeHasNoLesionColor) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig cfg = default_synth_config(SlideLabel::kNegative, seed);
    cfg.lesion_rgb = {1, 2, 3};
    cfg.noise_sigma = 0.0;
    const auto colors = distinct_colors(generate_slide(cfg).pyramid.levels[0]);
    EXPECT_EQ(colors.size(), 2u);
    EXPECT_FALSE(colors.contains({1, 2, 3}));
  }
}

TEST(GenerateSlide, PositiveClassesDrawLesions) {
  for (SlideLabel kind : {SlideLabel::kItc, SlideLabel::kMicro, SlideLabel::kMacro}) {
    SynthConfig cfg = default_synth_config(kind, 9);
    cfg.noise_sigma = 0.0;
    const auto colors = distinct_colors(generate_slide(cfg).pyramid.levels[0]);
    EXPECT_TRUE(colors.contains({cfg.lesion_rgb.r, cfg.lesion_rgb.g, cfg.lesion_rgb.b}));
  }
}

TEST(GenerateSlide, ThresholdFractionTracksDrawnTissue) {
  for (SlideLabel kind : kAllSlideLabels) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SynthConfig cfg = default_synth_config(kind, 100 + seed);
      const auto slide = generate_slide(cfg);
      const std::size_t drawn = drawn_tissue_oracle(cfg);
      EXPECT_EQ(slide.tissue_pixels, drawn);
      const double detected =
          static_cast<double>(threshold_mask(slide.pyramid.levels[0], 0.9).count());
      EXPECT_NEAR(detected, static_cast<double>(drawn), 0.10 * static_cast<double>(drawn))
          << label_name(kind) << " seed " << seed;
    }
  }
}

TEST(GenerateSlide, RoiMapAlwaysHasForeground) {
  const RoiConfig roi;
  for (int i = 0; i < 40; ++i) {
    const auto slide = generate_slide(default_synth_config(label_from_index(i % 4), 500 + i));
    EXPECT_GT(compute_roi_mask(slide.pyramid, roi).count(), 0u) << i;
  }
}

TEST(SynthConfig, RejectsLesionLargerThanTissue) {
  SynthConfig cfg = default_synth_config(SlideLabel::kMacro, 0);
  cfg.tissue_radius_min_px = 5.0;
  cfg.tissue_radius_max_px = 6.0;
  EXPECT_GP_ERROR(generate_slide(cfg), ErrorCode::kDegenerateConfig);
  cfg.lesion_kind = SlideLabel::kNegative;
  EXPECT_NO_THROW(cfg.validate());
}

TEST(SynthConfig, RejectsUnorderedRadii) {
  SynthConfig cfg;
  cfg.lesion_size_px = {3.0, 3.0, 8.0};
  EXPECT_GP_ERROR(cfg.validate(), ErrorCode::kDegenerateConfig);
}

TEST(PlanCorpus, BalancedCountsAreExact) {
  for (int patients : {4, 8, 32}) {
    CorpusConfig cc;
    cc.patients = patients;
    cc.seed = 11;
    std::array<int, 4> counts{};
    for (const auto& p : plan_corpus(cc)) {
      ASSERT_EQ(p.labels.size(), 5u);
      for (SlideLabel l : p.labels) ++counts[label_index(l)];
    }
    for (int c : counts) EXPECT_EQ(c, patients * 5 / 4);
  }
}

TEST(PlanCorpus, StagedPatientsRealiseTheirStage) {
  CorpusConfig cc;
  cc.patients = 50;
  cc.seed = 3;
  cc.policy = LabelPolicy::kStaged;
  const auto plan = plan_corpus(cc);
  for (std::size_t p = 0; p < plan.size(); ++p) {
    EXPECT_EQ(stage_patient(plan[p].labels), static_cast<PatientStage>(p % 5)) << p;
  }
}

TEST(GenerateCorpus, WritesSlidesSidecarsAndManifest) {
  TempDir dir("corpus");
  CorpusConfig cc;
  cc.patients = 2;
  cc.seed = 5;
  cc.slide_template.base_width = 4096;
  cc.slide_template.base_height = 4096;
  cc.slide_template.tissue_radius_min_px = 10;
  cc.slide_template.tissue_radius_max_px = 20;
  const auto plan = generate_corpus(cc, dir.path());
  EXPECT_EQ(read_manifest(dir.path() / kManifestName).size(), 2u);
  for (const auto& p : plan) {
    for (std::size_t s = 0; s < p.slide_ids.size(); ++s) {
      const auto pyr = read_slide(dir.path() / (p.slide_ids[s] + ".wsip"));
      EXPECT_EQ(pyr.slide_id, p.slide_ids[s]);
      const auto [id, label] = read_label_sidecar(dir.path() / (p.slide_ids[s] + ".label"));
      EXPECT_EQ(id, p.slide_ids[s]);
      EXPECT_EQ(label, p.labels[s]);
    }
  }
  const auto again = read_manifest(dir.path() / kManifestName);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    EXPECT_EQ(again[i].patient_id, plan[i].patient_id);
    EXPECT_EQ(again[i].slide_ids, plan[i].slide_ids);
  }
}

}  // namespace
}  // namespace gradepipe
