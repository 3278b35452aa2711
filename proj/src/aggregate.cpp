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

#include <algorithm>
#include <cstdio>

#include "gradepipe/error.h"

namespace gradepipe {

std::string_view stage_name(PatientStage stage) {
  switch (stage) {
    case PatientStage::kPN0: return "pN0";
    case PatientStage::kPN0ItcPlus: return "pN0(i+)";
    case PatientStage::kPN1mi: return "pN1mi";
    case PatientStage::kPN1: return "pN1";
    case PatientStage::kPN2: return "pN2";
  }
  return "pN0";
}

ClassActivations average_patch(std::span<const ClassActivations> views) {
  if (views.empty()) fail(ErrorCode::kEmptyList, "average_patch needs at least one view");
  ClassActivations out;
  for (const ClassActivations& v : views) {
    for (int c = 0; c < kNumSlideLabels; ++c) out.scores[c] += v.scores[c];
  }
  out.normalized = false;
  return out;
}

std::array<double, kNumSlideLabels> slide_scores(
    std::span<const ClassActivations> per_patch) {
  if (per_patch.empty()) fail(ErrorCode::kEmptyList, "slide has no patches");
  std::array<double, kNumSlideLabels> best = per_patch.front().scores;
  for (const ClassActivations& p : per_patch.subspan(1)) {
    for (int c = 0; c < kNumSlideLabels; ++c) best[c] = std::max(best[c], p.scores[c]);
  }
  return best;
}

SlideLabel argmax_label(const std::array<double, kNumSlideLabels>& scores) {
  int best = kNumSlideLabels - 1;
  for (int c = kNumSlideLabels - 2; c >= 0; --c) {
    if (scores[c] > scores[best]) best = c;
  }
  return label_from_index(best);
}

SlideLabel select_slide_class(std::span<const ClassActivations> per_patch) {
  return argmax_label(slide_scores(per_patch));
}

SlideLabel select_slide_class_ranked(std::span<const ClassActivations> per_patch) {
  if (per_patch.empty()) fail(ErrorCode::kEmptyList, "slide has no patches");
  SlideLabel worst = SlideLabel::kNegative;
  for (const ClassActivations& p : per_patch) {
    worst = std::max(worst, argmax_label(p.scores));
  }
  return worst;
}

PatientStage stage_patient(std::span<const SlideLabel> slide_labels) {
  if (slide_labels.empty()) fail(ErrorCode::kEmptySlideList, "patient has no slides");
  if (slide_labels.size() > 5) {
    fail(ErrorCode::kTooManySlides,
         "patient has " + std::to_string(slide_labels.size()) + " slides, at most 5 allowed");
  }
  int positive_nodes = 0;
  bool any_macro = false;
  bool any_micro = false;
  bool any_itc = false;
  for (SlideLabel l : slide_labels) {
    any_macro |= l == SlideLabel::kMacro;
    any_micro |= l == SlideLabel::kMicro;
    any_itc |= l == SlideLabel::kItc;
    if (l == SlideLabel::kMacro || l == SlideLabel::kMicro) ++positive_nodes;
  }
  if (any_macro) {
    // 4..9 nodes is pN2; with at most five slides only 4 and 5 occur.
    if (positive_nodes >= 4 && positive_nodes <= 9) return PatientStage::kPN2;
    return PatientStage::kPN1;
  }
  if (any_micro) return PatientStage::kPN1mi;
  if (any_itc) return PatientStage::kPN0ItcPlus;
  return PatientStage::kPN0;
}

void write_slide_row(std::ostream& out, const SlideResult& result) {
  const auto scores = slide_scores(result.per_patch);
  out << result.slide_id << '\t' << label_name(result.label);
  char buf[32];
  for (double s : scores) {
    std::snprintf(buf, sizeof(buf), "%.17g", s);
    out << '\t' << buf;
  }
  out << '\n';
}

void write_patient_row(std::ostream& out, std::string_view patient_id,
                       PatientStage stage) {
  out << patient_id << '\t' << stage_name(stage) << '\n';
}

}  // namespace gradepipe
