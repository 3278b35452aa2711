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

#ifndef GRADEPIPE_PIPELINE_H_
#define GRADEPIPE_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gradepipe/aggregate.h"
#include "gradepipe/config.h"
#include "gradepipe/densenet.h"
#include "gradepipe/roi.h"
#include "gradepipe/slide_io.h"
#include "gradepipe/tensor.h"

namespace gradepipe {

struct SlideRecord {
  std::string slide_id;
  std::filesystem::path path;
  SlideLabel label = SlideLabel::kNegative;
};

/// Every `*.wsip` in `dir` with its `.label` sidecar, sorted by slide id.
/// Throws IoFailure when a sidecar is missing.
std::vector<SlideRecord> load_dataset(const std::filesystem::path& dir);

struct DatasetSplit {
  std::vector<std::size_t> train;       // indices into the input, ascending
  std::vector<std::size_t> validation;  // indices into the input, ascending
};

/// Stratified split. Each class contributes round(fraction * n_class) slides
/// to training, adjusted by largest remainder so the total equals
/// round(fraction * n); both parts are kept nonempty. Throws TooFewSlides.
DatasetSplit split_dataset(std::span<const SlideLabel> labels, double fraction,
                           std::uint64_t seed);

/// Maps RGB8 to [-1, 1] as p / 127.5 - 1, NCHW.
nn::Tensor patches_to_tensor(std::span<const Patch> patches);

/// Runs fn(0..n-1) on up to `threads` threads. Results should be written by
/// index. The first exception thrown is rethrown after all threads join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // sample-weighted mean cross-entropy
  double validation_accuracy = 0.0;
  double seconds = 0.0;
  std::size_t samples = 0;
  std::vector<std::size_t> batch_sizes;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::filesystem::path checkpoint;
  std::vector<std::string> validation_ids;
};

/// Called after every epoch; useful for progress output.
using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains on `data_dir` and writes `epoch_<e>.tncp` per epoch and
/// `model.tncp` into `out_dir`. Throws MissingClass, IoFailure and
/// NonFiniteLoss.
TrainReport train(const PipelineConfig& config, const std::filesystem::path& data_dir,
                  const std::filesystem::path& out_dir,
                  const EpochCallback& on_epoch = {});

/// Loads a checkpoint and checks it against `config.net`.
NetworkParams load_network(const std::filesystem::path& checkpoint,
                           const PipelineConfig& config);

struct SlideTimings {
  double load = 0.0;
  double roi = 0.0;
  double extract = 0.0;
  double forward = 0.0;
  double aggregate = 0.0;
  double total = 0.0;
};

struct SlideInference {
  SlideResult result;
  SlideTimings timings;
  std::size_t patch_count = 0;
  std::size_t forward_count = 0;  // network views evaluated
  bool fallback = false;
};

/// Per-patch scores summed over the 8 dihedral views, evaluated in forward
/// batches of infer_batch views. Results are in patch order.
std::vector<ClassActivations> classify_patches(const NetworkParams& params,
                                               std::span<const Patch> patches,
                                               const PipelineConfig& config);

/// ROI -> num_patches centroids -> patches -> 8 dihedral views each ->
/// batched forward -> per-patch sum over views -> slide class. Centroids are
/// seeded from roi.sampling_seed and the slide id, so a slide always gets
/// the same patches.
SlideInference infer_slide(const NetworkParams& params, const SlidePyramid& slide,
                           const PipelineConfig& config);
SlideInference infer_slide(const NetworkParams& params, const std::filesystem::path& slide,
                           const PipelineConfig& config);
SlideInference infer_slide(const std::filesystem::path& checkpoint,
                           const std::filesystem::path& slide, const PipelineConfig& config);

struct PatientInference {
  std::string patient_id;
  PatientStage stage = PatientStage::kPN0;
  std::vector<SlideInference> slides;
  double seconds = 0.0;
};

/// infer_slide over 1..5 slides, fanned out over worker_threads, then
/// stage_patient. Throws EmptySlideList / TooManySlides.
PatientInference infer_patient(const NetworkParams& params, const std::string& patient_id,
                               std::span<const std::filesystem::path> slides,
                               const PipelineConfig& config);
PatientInference infer_patient(const std::filesystem::path& checkpoint,
                               const std::string& patient_id,
                               std::span<const std::filesystem::path> slides,
                               const PipelineConfig& config);

struct PatientGroup {
  std::string patient_id;
  std::vector<std::filesystem::path> slides;
};

/// Patients from `patients.tsv` when present, otherwise consecutive groups
/// of five slides in slide-id order.
std::vector<PatientGroup> patient_groups(const std::filesystem::path& slide_dir);

struct BenchReport {
  std::size_t slides = 0;
  std::size_t patients = 0;
  std::size_t patches = 0;
  std::size_t forwards = 0;
  double per_view_forward_s = 0.0;   // forward time / views
  double per_patch_s = 0.0;          // forward time / patches (8 views each)
  double per_slide_s = 0.0;          // mean slide wall-clock
  double per_patient_s = 0.0;        // mean patient wall-clock
  double slide_over_patch = 0.0;
  double patient_over_slide = 0.0;
};

BenchReport bench(const std::filesystem::path& checkpoint,
                  const std::filesystem::path& slide_dir, const PipelineConfig& config);

void write_bench_report(std::ostream& out, const BenchReport& report);
void write_train_report(std::ostream& out, const TrainReport& report);

}  // namespace gradepipe

#endif  // GRADEPIPE_PIPELINE_H_
