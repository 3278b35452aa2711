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

#include "gradepipe/aggregate.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "oracles.h"
#include "test_support.h"

namespace gradepipe {
namespace {

using L = SlideLabel;

ClassActivations act(double neg, double itc, double micro, double macro) {
  return ClassActivations{{neg, itc, micro, macro}, false};
}

TEST(StagePatient, ExhaustiveAgainstRuleOracle) {
  const auto sequences = testing::all_label_sequences();
  ASSERT_EQ(sequences.size(), 1364u);
  for (const auto& labels : sequences) {
    ASSERT_EQ(stage_patient(labels), testing::stage_oracle(labels)) << labels.size() << " slides";
  }
}

TEST(StagePatient, GradingExamples) {
  EXPECT_EQ(stage_patient(std::vector{L::kNegative, L::kNegative, L::kNegative, L::kNegative, L::kNegative}),
            PatientStage::kPN0);
  EXPECT_EQ(stage_patient(std::vector{L::kItc, L::kNegative, L::kNegative, L::kNegative, L::kNegative}),
            PatientStage::kPN0ItcPlus);
  EXPECT_EQ(stage_patient(std::vector{L::kMicro, L::kMicro, L::kNegative, L::kNegative, L::kNegative}),
            PatientStage::kPN1mi);
  EXPECT_EQ(stage_patient(std::vector{L::kMacro, L::kMicro, L::kNegative, L::kNegative, L::kNegative}),
            PatientStage::kPN1);
  EXPECT_EQ(stage_patient(std::vector{L::kMacro, L::kMacro, L::kMicro, L::kMicro, L::kNegative}),
            PatientStage::kPN2);
}

TEST(StagePatient, OrderInvariant) {
  std::vector<L> labels = {L::kMacro, L::kItc, L::kMicro, L::kNegative, L::kMicro};
  const PatientStage want = stage_patient(labels);
  std::sort(labels.begin(), labels.end());
  do {
    EXPECT_EQ(stage_patient(labels), want);
  } while (std::next_permutation(labels.begin(), labels.end()));
}

TEST(StagePatient, ListLengthErrors) {
  EXPECT_GP_ERROR(stage_patient(std::vector<L>{}), ErrorCode::kEmptySlideList);
  EXPECT_GP_ERROR(stage_patient(std::vector<L>(6, L::kNegative)), ErrorCode::kTooManySlides);
}

TEST(StageName, Spellings) {
  EXPECT_EQ(stage_name(PatientStage::kPN0), "pN0");
  EXPECT_EQ(stage_name(PatientStage::kPN0ItcPlus), "pN0(i+)");
  EXPECT_EQ(stage_name(PatientStage::kPN1mi), "pN1mi");
  EXPECT_EQ(stage_name(PatientStage::kPN1), "pN1");
  EXPECT_EQ(stage_name(PatientStage::kPN2), "pN2");
}

TEST(AveragePatch, SumsViews) {
  const std::vector<ClassActivations> one = {ClassActivations{{0.1, 0.2, 0.3, 0.4}, true}};
  EXPECT_EQ(average_patch(one).scores, one[0].scores);
  EXPECT_FALSE(average_patch(one).normalized);
  const std::vector<ClassActivations> eight(8, ClassActivations{{0.25, 0.25, 0.25, 0.25}, true});
  const auto s = average_patch(eight);
  for (double v : s.scores) EXPECT_DOUBLE_EQ(v, 2.0);
  EXPECT_GP_ERROR(average_patch(std::vector<ClassActivations>{}), ErrorCode::kEmptyList);
}

TEST(AveragePatch, ArgmaxOfSumEqualsArgmaxOfMean) {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    std::vector<ClassActivations> views;
    for (int i = 0; i < n; ++i) views.push_back(act(u(rng), u(rng), u(rng), u(rng)));
    auto sum = average_patch(views).scores;
    auto mean = sum;
    for (double& v : mean) v /= n;
    EXPECT_EQ(argmax_label(sum), argmax_label(mean));
  }
}

TEST(SelectSlideClass, MaxRuleExamples) {
  EXPECT_EQ(select_slide_class(std::vector{act(7, 0.3, 0.4, 0.3), act(6, 1, 0.5, 0.5)}), L::kNegative);
  const std::vector patches = {act(7.2, .2, .4, .2), act(1.0, .5, .5, 6.0)};
  const auto scores = slide_scores(patches);
  EXPECT_DOUBLE_EQ(scores[0], 7.2);
  EXPECT_DOUBLE_EQ(scores[1], 0.5);
  EXPECT_DOUBLE_EQ(scores[2], 0.5);
  EXPECT_DOUBLE_EQ(scores[3], 6.0);
  EXPECT_EQ(select_slide_class(patches), L::kNegative);
  EXPECT_EQ(select_slide_class(std::vector{act(1, 1, 5, 2), act(1, 1, 2, 5)}), L::kMacro);
  EXPECT_GP_ERROR(select_slide_class(std::vector<ClassActivations>{}), ErrorCode::kEmptyList);
}

TEST(SelectSlideClass, TiesResolveTowardSeverity) {
  EXPECT_EQ(argmax_label({1, 1, 1, 1}), L::kMacro);
  EXPECT_EQ(argmax_label({2, 2, 1, 1}), L::kItc);
  EXPECT_EQ(argmax_label({2, 1, 2, 1}), L::kMicro);
}

TEST(SelectSlideClass, ScaleAndPermutationInvariant) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(0, 8);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<ClassActivations> patches;
    for (int i = 0; i < 20; ++i) patches.push_back(act(u(rng), u(rng), u(rng), u(rng)));
    const L want = select_slide_class(patches);
    const double k = std::uniform_real_distribution<double>(0.01, 100)(rng);
    auto scaled = patches;
    for (auto& p : scaled) {
      for (double& v : p.scores) v *= k;
    }
    EXPECT_EQ(select_slide_class(scaled), want);
    std::shuffle(patches.begin(), patches.end(), rng);
    EXPECT_EQ(select_slide_class(patches), want);
    EXPECT_EQ(select_slide_class_ranked(patches), select_slide_class_ranked(scaled));
  }
}

TEST(SelectSlideClassRanked, SeverityRule) {
  std::vector<ClassActivations> patches(19, act(5, 1, 1, 1));
  EXPECT_EQ(select_slide_class_ranked(patches), L::kNegative);
  patches.push_back(act(1, 5, 1, 1));
  EXPECT_EQ(select_slide_class_ranked(patches), L::kItc);
  patches.push_back(act(1, 1, 1, 1.5));
  EXPECT_EQ(select_slide_class_ranked(patches), L::kMacro);
  EXPECT_EQ(select_slide_class_ranked(std::vector{act(7.2, .2, .4, .2), act(1.0, .5, .5, 6.0)}),
            L::kMacro);
  EXPECT_GP_ERROR(select_slide_class_ranked(std::vector<ClassActivations>{}), ErrorCode::kEmptyList);
}

TEST(ResultRows, TsvLayout) {
  SlideResult r;
  r.slide_id = "p000_n0";
  r.per_patch = {act(1, 2, 3, 4), act(4, 3, 2, 1)};
  r.label = L::kMacro;
  std::ostringstream slide;
  write_slide_row(slide, r);
  EXPECT_EQ(slide.str(), "p000_n0\tmacro\t4\t3\t3\t4\n");
  std::ostringstream patient;
  write_patient_row(patient, "p000", PatientStage::kPN0ItcPlus);
  EXPECT_EQ(patient.str(), "p000\tpN0(i+)\n");
}

}  // namespace
}  // namespace gradepipe
