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

#include "gradepipe/pipeline.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "gradepipe/augment.h"
#include "gradepipe/checkpoint.h"
#include "gradepipe/error.h"
#include "gradepipe/ops.h"
#include "gradepipe/optim.h"
#include "gradepipe/rng.h"
#include "gradepipe/sequenced_queue.h"
#include "gradepipe/synth.h"

namespace gradepipe {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// One training batch as produced by the augmentation workers.
struct Batch {
  nn::Tensor input;
  nn::Tensor targets;
  std::vector<std::string> slide_ids;
};

// Work level of a slide, borrowed when stored, resampled otherwise.
struct WorkLevel {
  const Level* level = nullptr;
  Level owned;

  WorkLevel(const SlidePyramid& pyramid, std::uint32_t factor) {
    level = find_level(pyramid, factor);
    if (level == nullptr) {
      owned = level_at_factor(pyramid, factor);
      level = &owned;
    }
  }
  WorkLevel(const WorkLevel&) = delete;
  WorkLevel& operator=(const WorkLevel&) = delete;
};

// Closes the queue and joins the producers however the consumer exits.
class ProducerGroup {
 public:
  explicit ProducerGroup(SequencedQueue<Batch>& queue) : queue_(queue) {}
  ~ProducerGroup() { stop(); }

  template <typename Fn>
  void spawn(int count, Fn fn) {
    for (int i = 0; i < count; ++i) threads_.emplace_back(fn);
  }

  void stop() {
    queue_.close();
    for (auto& t : threads_) {
      if (t.joinable()) t.join();
    }
  }

 private:
  SequencedQueue<Batch>& queue_;
  std::vector<std::thread> threads_;
};

}  // namespace

std::vector<SlideRecord> load_dataset(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::kIoFailure, "not a directory: " + dir.string());
  std::vector<SlideRecord> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".wsip") continue;
    const fs::path sidecar = fs::path(entry.path()).replace_extension(".label");
    if (!fs::exists(sidecar)) {
      fail(ErrorCode::kIoFailure, "missing label sidecar " + sidecar.string());
    }
    auto [id, label] = read_label_sidecar(sidecar);
    out.push_back({entry.path().stem().string(), entry.path(), label});
  }
  std::sort(out.begin(), out.end(),
            [](const SlideRecord& a, const SlideRecord& b) { return a.slide_id < b.slide_id; });
  return out;
}

DatasetSplit split_dataset(std::span<const SlideLabel> labels, double fraction,
                           std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n < 2) fail(ErrorCode::kTooFewSlides, "need at least 2 slides, got " + std::to_string(n));
  if (!(fraction > 0.0 && fraction < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "train fraction must be in (0, 1)");
  }

  std::array<std::vector<std::size_t>, kNumSlideLabels> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[label_index(labels[i])].push_back(i);

  const auto total = static_cast<std::size_t>(
      std::clamp<double>(std::round(fraction * static_cast<double>(n)), 1.0,
                         static_cast<double>(n - 1)));

  std::array<std::size_t, kNumSlideLabels> quota{};
  std::array<double, kNumSlideLabels> remainder{};
  std::size_t assigned = 0;
  for (int c = 0; c < kNumSlideLabels; ++c) {
    const double exact = fraction * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += quota[c];
  }
  std::array<int, kNumSlideLabels> order;
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  while (assigned < total) {
    bool progressed = false;
    for (int c : order) {
      if (assigned == total) break;
      if (quota[c] < by_class[c].size()) {
        ++quota[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }

  DatasetSplit split;
  for (int c = 0; c < kNumSlideLabels; ++c) {
    auto members = by_class[c];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < quota[c] ? split.train : split.validation).push_back(members[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  if (split.train.empty() || split.validation.empty()) {
    fail(ErrorCode::kTooFewSlides, "split leaves an empty part");
  }
  return split;
}

nn::Tensor patches_to_tensor(std::span<const Patch> patches) {
  if (patches.empty()) fail(ErrorCode::kEmptyList, "no patches to convert");
  const std::size_t px = static_cast<std::size_t>(patches.front().size);
  const std::size_t plane = px * px;
  std::vector<double> values(patches.size() * 3 * plane);
  for (std::size_t n = 0; n < patches.size(); ++n) {
    const Patch& p = patches[n];
    if (static_cast<std::size_t>(p.size) != px) {
      fail(ErrorCode::kShapeMismatch, "patches differ in size");
    }
    double* dst = values.data() + n * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      for (std::size_t c = 0; c < 3; ++c) {
        dst[c * plane + i] = p.pixels[i * 3 + c] / 127.5 - 1.0;
      }
    }
  }
  return nn::Tensor({patches.size(), 3, px, px}, std::move(values));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

TrainReport train(const PipelineConfig& config, const fs::path& data_dir,
                  const fs::path& out_dir, const EpochCallback& on_epoch) {
  config.validate();
  const std::vector<SlideRecord> records = load_dataset(data_dir);
  std::array<std::size_t, kNumSlideLabels> class_counts{};
  for (const auto& r : records) ++class_counts[label_index(r.label)];
  for (SlideLabel l : kAllSlideLabels) {
    if (class_counts[label_index(l)] == 0) {
      fail(ErrorCode::kMissingClass,
           "dataset has no slide of class " + std::string(label_name(l)));
    }
  }

  std::vector<SlideLabel> labels;
  for (const auto& r : records) labels.push_back(r.label);
  const DatasetSplit split =
      split_dataset(labels, config.train_fraction,
                    derive_seed(config.global_seed, hash_string("split")));

  std::vector<LabeledItem> train_items;
  for (std::size_t i : split.train) train_items.push_back({records[i].slide_id, records[i].label});
  {
    std::array<bool, kNumSlideLabels> seen{};
    for (const auto& item : train_items) seen[label_index(item.label)] = true;
    for (SlideLabel l : kAllSlideLabels) {
      if (!seen[label_index(l)]) {
        fail(ErrorCode::kMissingClass,
             "training split has no slide of class " + std::string(label_name(l)));
      }
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot create " + out_dir.string() + ": " + ec.message());

  TrainReport report;
  for (std::size_t i : split.validation) report.validation_ids.push_back(records[i].slide_id);

  NetworkParams params =
      build_network(config.net, derive_seed(config.global_seed, hash_string("net")));
  const fs::path final_path = out_dir / "model.tncp";
  if (config.epochs == 0) {
    nn::save_checkpoint(params.store, final_path);
    report.checkpoint = final_path;
    return report;
  }

  // Shared read-only slide data: work levels and ROI masks of the training
  // slides, full pyramids of the validation slides.
  std::vector<SlidePyramid> train_slides(split.train.size());
  std::vector<std::unique_ptr<WorkLevel>> train_levels(split.train.size());
  std::vector<BinaryMask> train_masks(split.train.size());
  parallel_for(split.train.size(), config.worker_threads, [&](std::size_t i) {
    train_slides[i] = read_slide(records[split.train[i]].path);
    train_levels[i] = std::make_unique<WorkLevel>(train_slides[i], config.roi.work_factor);
    train_masks[i] = median_filter_disk(
        threshold_mask(*train_levels[i]->level, config.roi.green_red_ratio),
        config.roi.median_disk_px);
  });
  std::vector<SlidePyramid> val_slides(split.validation.size());
  parallel_for(split.validation.size(), config.worker_threads, [&](std::size_t i) {
    val_slides[i] = read_slide(records[split.validation[i]].path);
  });

  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    const std::vector<std::size_t> order = balanced_epoch(
        train_items, derive_seed(config.global_seed, hash_string("epoch"),
                                 static_cast<std::uint64_t>(epoch)));
    const std::size_t num_batches = (order.size() + batch_size - 1) / batch_size;

    auto make_batch = [&](std::size_t b) {
      const std::size_t begin = b * batch_size;
      const std::size_t end = std::min(order.size(), begin + batch_size);
      std::vector<Patch> patches;
      Batch batch;
      batch.targets = nn::Tensor({end - begin, static_cast<std::size_t>(kNumSlideLabels)});
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t slot = order[k];
        const std::uint64_t sample_seed =
            derive_seed(config.global_seed, hash_string("sample"),
                        static_cast<std::uint64_t>(epoch), k);
        const CentroidSample centroid = sample_centroids(train_masks[slot], 1, sample_seed);
        const Patch patch = extract_patch(*train_levels[slot]->level, train_items[slot].id,
                                          centroid.points.front(), config.roi.patch_px);
        Rng rng(derive_seed(config.augment.seed, sample_seed));
        patches.push_back(augment_for_training(patch, config.augment, rng));
        batch.targets.mutable_values()[(k - begin) * kNumSlideLabels +
                                       label_index(train_items[slot].label)] = 1.0;
        batch.slide_ids.push_back(train_items[slot].id);
      }
      batch.input = patches_to_tensor(patches);
      return batch;
    };

    SequencedQueue<Batch> queue(static_cast<std::size_t>(config.queue_capacity));
    std::atomic<std::size_t> next_batch{0};
    std::exception_ptr producer_error;
    std::mutex error_mu;
    EpochStats stats;
    stats.epoch = epoch;
    double loss_sum = 0.0;
    {
      ProducerGroup producers(queue);
      producers.spawn(config.worker_threads, [&] {
        try {
          for (std::size_t b = next_batch++; b < num_batches; b = next_batch++) {
            if (!queue.push(b, make_batch(b))) return;
          }
        } catch (...) {
          {
            std::lock_guard lock(error_mu);
            if (!producer_error) producer_error = std::current_exception();
          }
          queue.close();
        }
      });

      for (std::size_t consumed = 0; consumed < num_batches; ++consumed) {
        std::optional<Batch> batch;
        std::size_t seq = consumed;
        if (config.deterministic) {
          batch = queue.pop_next();
        } else if (auto item = queue.pop_any()) {
          seq = item->first;
          batch = std::move(item->second);
        }
        if (!batch) break;
        const nn::Tensor probs = forward(params, batch->input, true);
        const nn::Tensor loss = nn::cross_entropy(probs, batch->targets);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          std::string ids;
          for (const auto& id : batch->slide_ids) ids += (ids.empty() ? "" : ",") + id;
          fail(ErrorCode::kNonFiniteLoss, "epoch " + std::to_string(epoch) + " batch " +
                                              std::to_string(seq) + " loss " +
                                              std::to_string(value) + " slides [" + ids + "]");
        }
        params.store.zero_grad();
        nn::backward(loss);
        nn::adam_step(params.store, config.adam);
        const std::size_t n = batch->slide_ids.size();
        loss_sum += value * static_cast<double>(n);
        stats.samples += n;
        stats.batch_sizes.push_back(n);
      }
      producers.stop();
    }
    if (producer_error) std::rethrow_exception(producer_error);
    stats.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, stats.samples));

    std::vector<SlideLabel> predicted(val_slides.size());
    parallel_for(val_slides.size(), config.worker_threads, [&](std::size_t i) {
      predicted[i] = infer_slide(params, val_slides[i], config).result.label;
    });
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      if (predicted[i] == records[split.validation[i]].label) ++correct;
    }
    stats.validation_accuracy =
        static_cast<double>(correct) / static_cast<double>(std::max<std::size_t>(1, predicted.size()));

    nn::save_checkpoint(params.store, out_dir / ("epoch_" + std::to_string(epoch) + ".tncp"));
    stats.seconds = seconds_since(epoch_start);
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  nn::save_checkpoint(params.store, final_path);
  report.checkpoint = final_path;
  return report;
}

NetworkParams load_network(const fs::path& checkpoint, const PipelineConfig& config) {
  return attach_network(config.net, nn::load_checkpoint(checkpoint));
}

std::vector<ClassActivations> classify_patches(const NetworkParams& params,
                                               std::span<const Patch> patches,
                                               const PipelineConfig& config) {
  const std::size_t views = patches.size() * kDihedralOrder;
  std::vector<ClassActivations> view_scores(views);
  const std::size_t chunk = static_cast<std::size_t>(config.infer_batch);
  std::vector<Patch> batch;
  for (std::size_t begin = 0; begin < views; begin += chunk) {
    const std::size_t end = std::min(views, begin + chunk);
    batch.clear();
    for (std::size_t v = begin; v < end; ++v) {
      batch.push_back(apply_dihedral(patches[v / kDihedralOrder],
                                     DihedralTransform(static_cast<int>(v % kDihedralOrder))));
    }
    const nn::Tensor probs = forward(params, patches_to_tensor(batch), false);
    const auto& p = probs.values();
    for (std::size_t v = begin; v < end; ++v) {
      ClassActivations& a = view_scores[v];
      for (int c = 0; c < kNumSlideLabels; ++c) a.scores[c] = p[(v - begin) * kNumSlideLabels + c];
      a.normalized = true;
    }
  }
  std::vector<ClassActivations> per_patch;
  per_patch.reserve(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    per_patch.push_back(average_patch(
        std::span<const ClassActivations>(view_scores).subspan(i * kDihedralOrder, kDihedralOrder)));
  }
  return per_patch;
}

SlideInference infer_slide(const NetworkParams& params, const SlidePyramid& slide,
                           const PipelineConfig& config) {
  SlideInference out;
  out.result.slide_id = slide.slide_id;
  const auto start = Clock::now();

  auto t = Clock::now();
  const WorkLevel work(slide, config.roi.work_factor);
  const BinaryMask mask = median_filter_disk(
      threshold_mask(*work.level, config.roi.green_red_ratio), config.roi.median_disk_px);
  const CentroidSample centroids =
      sample_centroids(mask, config.roi.num_patches,
                       derive_seed(config.roi.sampling_seed, hash_string(slide.slide_id)));
  out.fallback = centroids.fallback;
  out.timings.roi = seconds_since(t);

  t = Clock::now();
  std::vector<Patch> patches;
  patches.reserve(centroids.points.size());
  for (const Point& c : centroids.points) {
    patches.push_back(extract_patch(*work.level, slide.slide_id, c, config.roi.patch_px));
  }
  out.timings.extract = seconds_since(t);

  t = Clock::now();
  out.result.per_patch = classify_patches(params, patches, config);
  out.timings.forward = seconds_since(t);

  t = Clock::now();
  out.result.label = config.slide_rule == SlideRule::kRanked
                         ? select_slide_class_ranked(out.result.per_patch)
                         : select_slide_class(out.result.per_patch);
  out.timings.aggregate = seconds_since(t);

  out.patch_count = patches.size();
  out.forward_count = patches.size() * kDihedralOrder;
  out.timings.total = seconds_since(start);
  return out;
}

SlideInference infer_slide(const NetworkParams& params, const fs::path& slide,
                           const PipelineConfig& config) {
  const auto start = Clock::now();
  const SlidePyramid pyramid = read_slide(slide);
  const double load = seconds_since(start);
  SlideInference out = infer_slide(params, pyramid, config);
  out.timings.load = load;
  out.timings.total += load;
  return out;
}

SlideInference infer_slide(const fs::path& checkpoint, const fs::path& slide,
                           const PipelineConfig& config) {
  return infer_slide(load_network(checkpoint, config), slide, config);
}

PatientInference infer_patient(const NetworkParams& params, const std::string& patient_id,
                               std::span<const fs::path> slides, const PipelineConfig& config) {
  if (slides.empty()) fail(ErrorCode::kEmptySlideList, "patient " + patient_id + " has no slides");
  if (slides.size() > static_cast<std::size_t>(kSlidesPerPatient)) {
    fail(ErrorCode::kTooManySlides, "patient " + patient_id + " has " +
                                        std::to_string(slides.size()) + " slides");
  }
  PatientInference out;
  out.patient_id = patient_id;
  const auto start = Clock::now();
  out.slides.resize(slides.size());
  parallel_for(slides.size(), config.worker_threads,
               [&](std::size_t i) { out.slides[i] = infer_slide(params, slides[i], config); });
  std::vector<SlideLabel> labels;
  for (const auto& s : out.slides) labels.push_back(s.result.label);
  out.stage = stage_patient(labels);
  out.seconds = seconds_since(start);
  return out;
}

PatientInference infer_patient(const fs::path& checkpoint, const std::string& patient_id,
                               std::span<const fs::path> slides, const PipelineConfig& config) {
  return infer_patient(load_network(checkpoint, config), patient_id, slides, config);
}

std::vector<PatientGroup> patient_groups(const fs::path& slide_dir) {
  std::vector<PatientGroup> groups;
  const fs::path manifest = slide_dir / kManifestName;
  if (fs::exists(manifest)) {
    for (const auto& rec : read_manifest(manifest)) {
      PatientGroup g{rec.patient_id, {}};
      for (const auto& id : rec.slide_ids) g.slides.push_back(slide_dir / (id + ".wsip"));
      groups.push_back(std::move(g));
    }
    return groups;
  }
  std::vector<fs::path> slides;
  std::error_code ec;
  if (!fs::is_directory(slide_dir, ec)) {
    fail(ErrorCode::kIoFailure, "not a directory: " + slide_dir.string());
  }
  for (const auto& entry : fs::directory_iterator(slide_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wsip") {
      slides.push_back(entry.path());
    }
  }
  std::sort(slides.begin(), slides.end());
  for (std::size_t i = 0; i < slides.size(); i += kSlidesPerPatient) {
    char id[32];
    std::snprintf(id, sizeof(id), "group%03zu", i / kSlidesPerPatient);
    PatientGroup g{id, {}};
    for (std::size_t j = i; j < std::min(slides.size(), i + kSlidesPerPatient); ++j) {
      g.slides.push_back(slides[j]);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

BenchReport bench(const fs::path& checkpoint, const fs::path& slide_dir,
                  const PipelineConfig& config) {
  const NetworkParams params = load_network(checkpoint, config);
  const std::vector<PatientGroup> groups = patient_groups(slide_dir);
  if (groups.empty()) fail(ErrorCode::kEmptySlideList, "no slides in " + slide_dir.string());

  BenchReport r;
  double forward_s = 0.0;
  double slide_s = 0.0;
  double patient_s = 0.0;
  for (const auto& g : groups) {
    const PatientInference p = infer_patient(params, g.patient_id, g.slides, config);
    patient_s += p.seconds;
    ++r.patients;
    for (const auto& s : p.slides) {
      ++r.slides;
      r.patches += s.patch_count;
      r.forwards += s.forward_count;
      forward_s += s.timings.forward;
      slide_s += s.timings.total;
    }
  }
  r.per_view_forward_s = forward_s / static_cast<double>(std::max<std::size_t>(1, r.forwards));
  r.per_patch_s = forward_s / static_cast<double>(std::max<std::size_t>(1, r.patches));
  r.per_slide_s = slide_s / static_cast<double>(r.slides);
  r.per_patient_s = patient_s / static_cast<double>(r.patients);
  r.slide_over_patch = r.per_patch_s > 0.0 ? r.per_slide_s / r.per_patch_s : 0.0;
  r.patient_over_slide = r.per_slide_s > 0.0 ? r.per_patient_s / r.per_slide_s : 0.0;
  return r;
}

void write_bench_report(std::ostream& out, const BenchReport& r) {
  char buf[64];
  auto row = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    out << key << '\t' << buf << '\n';
  };
  out << "slides\t" << r.slides << '\n'
      << "patients\t" << r.patients << '\n'
      << "patches\t" << r.patches << '\n'
      << "forwards\t" << r.forwards << '\n';
  row("per_view_forward_s", r.per_view_forward_s);
  row("per_patch_s", r.per_patch_s);
  row("per_slide_s", r.per_slide_s);
  row("per_patient_s", r.per_patient_s);
  row("slide_over_patch", r.slide_over_patch);
  row("patient_over_slide", r.patient_over_slide);
}

void write_train_report(std::ostream& out, const TrainReport& report) {
  out << "epoch\ttrain_loss\tvalidation_accuracy\tseconds\tsamples\n";
  char buf[160];
  for (const auto& e : report.epochs) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%.3f\t%zu\n", e.epoch, e.train_loss,
                  e.validation_accuracy, e.seconds, e.samples);
    out << buf;
  }
}

}  // namespace gradepipe
