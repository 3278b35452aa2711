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

#ifndef GRADEPIPE_SYNTH_H_
#define GRADEPIPE_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradepipe/slide_io.h"

namespace gradepipe {

/// Lesion radii in work-level (factor 64) pixels.
struct LesionRadii {
  double itc = 1.5;
  double micro = 3.5;
  double macro = 8.0;

  double for_label(SlideLabel label) const;
};

/// Parameters of one synthetic H&E-like slide. Tissue blobs are pink
/// ellipses on a near-white background; metastatic classes scatter lesion
/// discs of the class radius and color inside every blob.
struct SynthConfig {
  std::uint64_t seed = 0;
  std::uint32_t base_width = 16384;
  std::uint32_t base_height = 16384;
  std::uint32_t work_factor = 64;
  int tissue_blob_count = 3;
  double tissue_radius_min_px = 36.0;
  double tissue_radius_max_px = 60.0;
  SlideLabel lesion_kind = SlideLabel::kNegative;
  LesionRadii lesion_size_px;
  double lesion_coverage = 0.2;  // fraction of blob area covered by lesions
  Rgb background_rgb{240, 238, 242};
  Rgb tissue_rgb{222, 150, 196};
  Rgb lesion_rgb{70, 50, 150};
  double noise_sigma = 8.0;

  /// Throws DegenerateConfig.
  void validate() const;
};

/// Default config for `kind` with that class's lesion color.
SynthConfig default_synth_config(SlideLabel kind, std::uint64_t seed);
Rgb default_lesion_rgb(SlideLabel kind);

struct SyntheticSlide {
  SlidePyramid pyramid;
  SlideLabel label = SlideLabel::kNegative;
  std::size_t tissue_pixels = 0;  // drawn tissue (incl. lesions) at work level
  double tissue_fraction = 0.0;
};

/// Deterministic in `config.seed`. Emits a single level at work_factor.
SyntheticSlide generate_slide(const SynthConfig& config,
                              const std::string& slide_id = "synthetic");

enum class LabelPolicy {
  kBalanced,  // labels cycle through the four classes, then shuffled
  kStaged,    // each patient's labels are drawn to realise a target pN stage
};

struct CorpusConfig {
  int patients = 1;
  std::uint64_t seed = 0;
  LabelPolicy policy = LabelPolicy::kBalanced;
  SynthConfig slide_template;  // seed, lesion kind and color are overridden
};

inline constexpr int kSlidesPerPatient = 5;

struct PatientRecord {
  std::string patient_id;
  std::vector<std::string> slide_ids;
  std::vector<SlideLabel> labels;
};

/// Label plan only; no pixels generated.
std::vector<PatientRecord> plan_corpus(const CorpusConfig& config);

/// Writes `<slide_id>.wsip`, `<slide_id>.label` and `patients.tsv` into
/// `out_dir` and returns the plan that was written.
std::vector<PatientRecord> generate_corpus(const CorpusConfig& config,
                                           const std::filesystem::path& out_dir);

inline constexpr const char* kManifestName = "patients.tsv";

/// Manifest lines are "patient_id<TAB>slide_id<TAB>..." (labels not stored).
void write_manifest(const std::vector<PatientRecord>& patients,
                    const std::filesystem::path& path);
std::vector<PatientRecord> read_manifest(const std::filesystem::path& path);

}  // namespace gradepipe

#endif  // GRADEPIPE_SYNTH_H_
