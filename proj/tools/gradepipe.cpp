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

// Command-line front end: synth, train, infer, grade, bench, roimap.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradepipe/aggregate.h"
#include "gradepipe/config.h"
#include "gradepipe/error.h"
#include "gradepipe/pipeline.h"
#include "gradepipe/rng.h"
#include "gradepipe/roi.h"
#include "gradepipe/slide_io.h"
#include "gradepipe/synth.h"

namespace fs = std::filesystem;
using namespace gradepipe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool deterministic = false;
  std::string checkpoint;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&f](const std::uint64_t& s) { f.seed = s; f.seed_set = true; },
      "global seed");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--deterministic", f.deterministic, "consume batches in order");
}

PipelineConfig resolve_config(const CommonFlags& f) {
  PipelineConfig cfg;
  if (!f.config.empty()) cfg = apply_config(KeyValueConfig::load(f.config));
  if (f.seed_set) cfg.global_seed = f.seed;
  if (f.threads > 0) cfg.worker_threads = f.threads;
  if (f.deterministic) cfg.deterministic = true;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIoFailure, "cannot write " + path.string());
  return out;
}

// Expands directories to their *.wsip files, sorted.
std::vector<fs::path> expand_slides(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".wsip") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.emplace_back(in);
    }
  }
  return out;
}

int run_synth(const CommonFlags& f, int patients, const std::string& labels) {
  PipelineConfig cfg = resolve_config(f);
  CorpusConfig corpus;
  corpus.patients = patients;
  corpus.seed = cfg.global_seed;
  corpus.policy = labels == "staged" ? LabelPolicy::kStaged : LabelPolicy::kBalanced;
  corpus.slide_template = cfg.synth;
  const auto plan = generate_corpus(corpus, f.out);
  std::size_t slides = 0;
  for (const auto& p : plan) slides += p.slide_ids.size();
  std::cout << "wrote " << slides << " slides for " << plan.size() << " patients to " << f.out
            << '\n';
  return kExitOk;
}

int run_train(const CommonFlags& f, const std::string& data) {
  const PipelineConfig cfg = resolve_config(f);
  const fs::path out_dir = f.out.empty() ? fs::path("run") : fs::path(f.out);
  const TrainReport report = train(cfg, data, out_dir, [](const EpochStats& e) {
    std::cout << "epoch " << e.epoch << "  loss " << e.train_loss << "  val_acc "
              << e.validation_accuracy << "  " << e.seconds << " s\n"
              << std::flush;
  });
  auto tsv = open_out(out_dir / "train_report.tsv");
  write_train_report(tsv, report);
  std::ofstream(out_dir / "config.cfg") << to_config_text(cfg);
  std::cout << "checkpoint " << report.checkpoint.string() << '\n';
  return kExitOk;
}

int run_infer(const CommonFlags& f, const std::vector<std::string>& inputs) {
  const PipelineConfig cfg = resolve_config(f);
  const NetworkParams params = load_network(f.checkpoint, cfg);
  const std::vector<fs::path> slides = expand_slides(inputs);
  if (slides.empty()) fail(ErrorCode::kEmptySlideList, "no slides given");
  std::vector<SlideInference> results(slides.size());
  parallel_for(slides.size(), cfg.worker_threads,
               [&](std::size_t i) { results[i] = infer_slide(params, slides[i], cfg); });
  std::ofstream file;
  if (!f.out.empty()) file = open_out(fs::path(f.out) / "slides.tsv");
  for (const auto& r : results) {
    write_slide_row(std::cout, r.result);
    if (file.is_open()) write_slide_row(file, r.result);
    if (r.fallback) std::cerr << r.result.slide_id << ": no foreground, used center fallback\n";
  }
  return kExitOk;
}

int run_grade(const CommonFlags& f, const std::string& data) {
  const PipelineConfig cfg = resolve_config(f);
  const NetworkParams params = load_network(f.checkpoint, cfg);
  const auto groups = patient_groups(data);
  if (groups.empty()) fail(ErrorCode::kEmptySlideList, "no patients in " + data);
  std::ofstream slides_tsv;
  std::ofstream patients_tsv;
  if (!f.out.empty()) {
    slides_tsv = open_out(fs::path(f.out) / "slides.tsv");
    patients_tsv = open_out(fs::path(f.out) / "patients.tsv");
  }
  for (const auto& g : groups) {
    const PatientInference p = infer_patient(params, g.patient_id, g.slides, cfg);
    write_patient_row(std::cout, p.patient_id, p.stage);
    if (!f.out.empty()) {
      for (const auto& s : p.slides) write_slide_row(slides_tsv, s.result);
      write_patient_row(patients_tsv, p.patient_id, p.stage);
    }
  }
  return kExitOk;
}

int run_bench(const CommonFlags& f, const std::string& data) {
  const PipelineConfig cfg = resolve_config(f);
  const BenchReport r = bench(f.checkpoint, data, cfg);
  write_bench_report(std::cout, r);
  if (!f.out.empty()) {
    auto tsv = open_out(fs::path(f.out) / "bench.tsv");
    write_bench_report(tsv, r);
  }
  return kExitOk;
}

int run_roimap(const CommonFlags& f, const std::string& slide_path) {
  const PipelineConfig cfg = resolve_config(f);
  const SlidePyramid slide = read_slide(slide_path);
  const RoiMap roi =
      compute_roi(slide, cfg.roi, derive_seed(cfg.roi.sampling_seed, hash_string(slide.slide_id)));
  const fs::path mask_path = f.out.empty() ? fs::path(slide.slide_id + ".pbm") : fs::path(f.out);
  if (mask_path.has_parent_path()) fs::create_directories(mask_path.parent_path());
  write_mask_pbm(roi.mask, mask_path);
  write_centroids_tsv(roi.centroids.points, fs::path(mask_path).replace_extension(".tsv"));
  std::cout << "foreground " << roi.mask.count() << " of "
            << static_cast<std::size_t>(roi.mask.width) * roi.mask.height << " pixels"
            << (roi.centroids.fallback ? " (center fallback)" : "") << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse whole-slide classification and pN staging"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic slide corpus");
  add_common(synth, flags);
  int patients = 1;
  std::string labels = "balanced";
  synth->add_option("--out", flags.out, "output directory")->required();
  synth->add_option("--patients", patients, "patients (5 slides each)")
      ->check(CLI::PositiveNumber);
  synth->add_option("--labels", labels, "balanced or staged")
      ->check(CLI::IsMember({"balanced", "staged"}));

  std::string data;
  auto* train_cmd = app.add_subcommand("train", "train the patch classifier");
  add_common(train_cmd, flags);
  train_cmd->add_option("--data", data, "slide directory")->required();
  train_cmd->add_option("--out", flags.out, "run directory");

  std::vector<std::string> inputs;
  auto* infer = app.add_subcommand("infer", "classify slides");
  add_common(infer, flags);
  infer->add_option("--checkpoint", flags.checkpoint, "model checkpoint")->required();
  infer->add_option("--out", flags.out, "directory for slides.tsv");
  infer->add_option("slides", inputs, "slide files or directories")->required();

  auto* grade = app.add_subcommand("grade", "stage patients");
  add_common(grade, flags);
  grade->add_option("--checkpoint", flags.checkpoint, "model checkpoint")->required();
  grade->add_option("--data", data, "slide directory")->required();
  grade->add_option("--out", flags.out, "directory for slides.tsv and patients.tsv");

  auto* bench_cmd = app.add_subcommand("bench", "time the inference path");
  add_common(bench_cmd, flags);
  bench_cmd->add_option("--checkpoint", flags.checkpoint, "model checkpoint")->required();
  bench_cmd->add_option("--data", data, "slide directory")->required();
  bench_cmd->add_option("--out", flags.out, "directory for bench.tsv");

  std::string slide;
  auto* roimap = app.add_subcommand("roimap", "write the ROI mask and centroids of a slide");
  add_common(roimap, flags);
  roimap->add_option("--slide", slide, "slide file")->required();
  roimap->add_option("--out", flags.out, "mask path (.pbm); centroids go next to it as .tsv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (*synth) return run_synth(flags, patients, labels);
    if (*train_cmd) return run_train(flags, data);
    if (*infer) return run_infer(flags, inputs);
    if (*grade) return run_grade(flags, data);
    if (*bench_cmd) return run_bench(flags, data);
    if (*roimap) return run_roimap(flags, slide);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_input_error(e.code()) ? kExitBadInput : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
