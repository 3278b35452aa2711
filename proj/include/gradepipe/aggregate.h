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

#ifndef GRADEPIPE_AGGREGATE_H_
#define GRADEPIPE_AGGREGATE_H_

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gradepipe/slide_io.h"

namespace gradepipe {

/// Per-patch class scores ordered (negative, ITC, micro, macro).
struct ClassActivations {
  std::array<double, kNumSlideLabels> scores{};
  bool normalized = false;

  friend bool operator==(const ClassActivations&, const ClassActivations&) = default;
};

struct SlideResult {
  std::string slide_id;
  std::vector<ClassActivations> per_patch;
  SlideLabel label = SlideLabel::kNegative;
};

enum class PatientStage { kPN0, kPN0ItcPlus, kPN1mi, kPN1, kPN2 };

/// "pN0", "pN0(i+)", "pN1mi", "pN1", "pN2".
std::string_view stage_name(PatientStage stage);

/// Elementwise sum of the views' scores (model averaging). The result is
/// marked unnormalized. Throws EmptyList.
ClassActivations average_patch(std::span<const ClassActivations> views);

/// Per-class maximum over patches.
std::array<double, kNumSlideLabels> slide_scores(
    std::span<const ClassActivations> per_patch);

/// Class with the largest slide score; ties go to the more severe class.
/// Throws EmptyList.
SlideLabel select_slide_class(std::span<const ClassActivations> per_patch);

/// Most severe of the per-patch argmax labels. Throws EmptyList.
SlideLabel select_slide_class_ranked(std::span<const ClassActivations> per_patch);

/// Argmax with ties resolved toward the more severe class.
SlideLabel argmax_label(const std::array<double, kNumSlideLabels>& scores);

/// Patient pN stage from 1..5 slide labels. Micro and macro slides count as
/// positive nodes; ITC slides do not. Throws EmptySlideList / TooManySlides.
PatientStage stage_patient(std::span<const SlideLabel> slide_labels);

/// "slide_id<TAB>label<TAB>s_neg<TAB>s_itc<TAB>s_micro<TAB>s_macro", where the
/// scores are the slide-level per-class maxima.
void write_slide_row(std::ostream& out, const SlideResult& result);
void write_patient_row(std::ostream& out, std::string_view patient_id,
                       PatientStage stage);

}  // namespace gradepipe

#endif  // GRADEPIPE_AGGREGATE_H_
