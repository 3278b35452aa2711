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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gradepipe/error.h"
#include "gradepipe/rng.h"

namespace gradepipe {
namespace {

struct Ellipse {
  double cx, cy, a, b, cos_t, sin_t;

  // <= 1 inside.
  double radial(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double u = (dx * cos_t + dy * sin_t) / a;
    const double v = (-dx * sin_t + dy * cos_t) / b;
    return u * u + v * v;
  }
};

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

std::string slide_name(int patient, int slide) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p%03d_s%d", patient, slide);
  return buf;
}

std::string patient_name(int patient) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p%03d", patient);
  return buf;
}

std::vector<SlideLabel> staged_labels(int stage, Rng& rng) {
  using L = SlideLabel;
  std::vector<L> labels;
  std::uniform_int_distribution<int> one_or_two(1, 2);
  switch (stage) {
    case 0:  // pN0
      break;
    case 1:  // pN0(i+)
      labels.assign(static_cast<std::size_t>(one_or_two(rng)), L::kItc);
      break;
    case 2: {  // pN1mi
      labels.assign(static_cast<std::size_t>(one_or_two(rng)), L::kMicro);
      if (std::uniform_int_distribution<int>(0, 1)(rng)) labels.push_back(L::kItc);
      break;
    }
    case 3: {  // pN1: one macro, up to two more positive nodes
      labels.push_back(L::kMacro);
      const int extra = std::uniform_int_distribution<int>(0, 2)(rng);
      for (int i = 0; i < extra; ++i) labels.push_back(L::kMicro);
      break;
    }
    default: {  // pN2: four or five positive nodes
      labels = {L::kMacro, L::kMacro, L::kMicro, L::kMicro};
      if (std::uniform_int_distribution<int>(0, 1)(rng)) labels.push_back(L::kMacro);
      break;
    }
  }
  labels.resize(kSlidesPerPatient, L::kNegative);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

}  // namespace

double LesionRadii::for_label(SlideLabel label) const {
  switch (label) {
    case SlideLabel::kItc: return itc;
    case SlideLabel::kMicro: return micro;
    case SlideLabel::kMacro: return macro;
    case SlideLabel::kNegative: return 0.0;
  }
  return 0.0;
}

void SynthConfig::validate() const {
  if (base_width == 0 || base_height == 0 || work_factor == 0) {
    fail(ErrorCode::kDegenerateConfig, "slide dimensions must be positive");
  }
  if (tissue_blob_count < 1) {
    fail(ErrorCode::kDegenerateConfig, "tissue_blob_count must be >= 1");
  }
  if (!(tissue_radius_min_px > 0 && tissue_radius_min_px <= tissue_radius_max_px)) {
    fail(ErrorCode::kDegenerateConfig, "tissue radius range is empty");
  }
  if (!(lesion_size_px.itc > 0 && lesion_size_px.itc < lesion_size_px.micro &&
        lesion_size_px.micro < lesion_size_px.macro)) {
    fail(ErrorCode::kDegenerateConfig, "lesion radii must satisfy 0 < itc < micro < macro");
  }
  const double r = lesion_size_px.for_label(lesion_kind);
  if (r > tissue_radius_min_px) {
    fail(ErrorCode::kDegenerateConfig,
         "lesion radius " + std::to_string(r) + " exceeds tissue blob radius " +
             std::to_string(tissue_radius_min_px));
  }
  if (!(lesion_coverage >= 0 && lesion_coverage <= 1)) {
    fail(ErrorCode::kDegenerateConfig, "lesion_coverage must be in [0, 1]");
  }
  if (!(noise_sigma >= 0)) fail(ErrorCode::kDegenerateConfig, "noise_sigma must be >= 0");
}

Rgb default_lesion_rgb(SlideLabel kind) {
  switch (kind) {
    case SlideLabel::kItc: return {70, 50, 150};
    case SlideLabel::kMicro: return {150, 40, 100};
    case SlideLabel::kMacro: return {105, 25, 45};
    case SlideLabel::kNegative: return {222, 150, 196};
  }
  return {};
}

SynthConfig default_synth_config(SlideLabel kind, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.lesion_kind = kind;
  cfg.lesion_rgb = default_lesion_rgb(kind);
  return cfg;
}

SyntheticSlide generate_slide(const SynthConfig& config,
                              const std::string& slide_id) {
  config.validate();
  Rng rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto w = static_cast<int>((config.base_width + config.work_factor - 1) /
                                  config.work_factor);
  const auto h = static_cast<int>((config.base_height + config.work_factor - 1) /
                                  config.work_factor);

  // Geometry first so the random stream does not depend on raster contents.
  std::vector<Ellipse> blobs;
  for (int i = 0; i < config.tissue_blob_count; ++i) {
    const double a = config.tissue_radius_min_px +
                     unit(rng) * (config.tissue_radius_max_px - config.tissue_radius_min_px);
    const double b = std::max(config.tissue_radius_min_px, a * (0.75 + 0.25 * unit(rng)));
    const double theta = unit(rng) * std::numbers::pi;
    const auto place = [&](int extent) {
      const double lo = std::min(a, extent / 2.0);
      const double hi = std::max(lo, extent - a);
      return lo + unit(rng) * (hi - lo);
    };
    const double cx = place(w);
    const double cy = place(h);
    blobs.push_back({cx, cy, a, b, std::cos(theta), std::sin(theta)});
  }

  const double lesion_r = config.lesion_size_px.for_label(config.lesion_kind);
  struct Disc {
    double cx, cy, r;
  };
  std::vector<Disc> lesions;
  if (config.lesion_kind != SlideLabel::kNegative) {
    for (const Ellipse& e : blobs) {
      const double area = std::numbers::pi * e.a * e.b;
      const int count = std::max(
          1, static_cast<int>(std::lround(config.lesion_coverage * area /
                                          (std::numbers::pi * lesion_r * lesion_r))));
      const double ia = std::max(0.0, e.a - lesion_r);
      const double ib = std::max(0.0, e.b - lesion_r);
      for (int k = 0; k < count; ++k) {
        const double rho = std::sqrt(unit(rng));
        const double phi = unit(rng) * 2.0 * std::numbers::pi;
        const double u = ia * rho * std::cos(phi);
        const double v = ib * rho * std::sin(phi);
        lesions.push_back({e.cx + u * e.cos_t - v * e.sin_t,
                           e.cy + u * e.sin_t + v * e.cos_t, lesion_r});
      }
    }
  }

  // 0 = background, 1 = tissue, 2 = lesion
  std::vector<std::uint8_t> cls(static_cast<std::size_t>(w) * h, 0);
  for (const Ellipse& e : blobs) {
    const double r = std::max(e.a, e.b);
    const int x0 = std::max(0, static_cast<int>(std::floor(e.cx - r)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(e.cx + r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(e.cy - r)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(e.cy + r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (e.radial(x + 0.5, y + 0.5) <= 1.0) cls[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  for (const Disc& d : lesions) {
    const int x0 = std::max(0, static_cast<int>(std::floor(d.cx - d.r)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(d.cx + d.r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(d.cy - d.r)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(d.cy + d.r)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - d.cx;
        const double dy = y + 0.5 - d.cy;
        auto& c = cls[static_cast<std::size_t>(y) * w + x];
        if (c != 0 && dx * dx + dy * dy <= d.r * d.r) c = 2;
      }
    }
  }

  SyntheticSlide out;
  out.label = config.lesion_kind;
  out.pyramid.slide_id = slide_id;
  Level level(config.work_factor, static_cast<std::uint32_t>(w),
              static_cast<std::uint32_t>(h));
  std::normal_distribution<double> noise(0.0, 1.0);
  const Rgb palette[3] = {config.background_rgb, config.tissue_rgb, config.lesion_rgb};
  for (std::size_t i = 0; i < cls.size(); ++i) {
    const Rgb base = palette[cls[i]];
    if (cls[i] != 0) ++out.tissue_pixels;
    level.pixels[3 * i] = clamp_u8(base.r + config.noise_sigma * noise(rng));
    level.pixels[3 * i + 1] = clamp_u8(base.g + config.noise_sigma * noise(rng));
    level.pixels[3 * i + 2] = clamp_u8(base.b + config.noise_sigma * noise(rng));
  }
  out.tissue_fraction = static_cast<double>(out.tissue_pixels) / static_cast<double>(cls.size());
  out.pyramid.levels.push_back(std::move(level));
  return out;
}

std::vector<PatientRecord> plan_corpus(const CorpusConfig& config) {
  if (config.patients < 1) fail(ErrorCode::kInvalidConfig, "patients must be >= 1");
  std::vector<PatientRecord> patients(static_cast<std::size_t>(config.patients));
  Rng rng(derive_seed(config.seed, 0x1abe1ull));

  std::vector<SlideLabel> pool;
  if (config.policy == LabelPolicy::kBalanced) {
    const int total = config.patients * kSlidesPerPatient;
    for (int i = 0; i < total; ++i) pool.push_back(label_from_index(i % kNumSlideLabels));
    std::shuffle(pool.begin(), pool.end(), rng);
  }
  for (int p = 0; p < config.patients; ++p) {
    PatientRecord& rec = patients[static_cast<std::size_t>(p)];
    rec.patient_id = patient_name(p);
    if (config.policy == LabelPolicy::kBalanced) {
      rec.labels.assign(pool.begin() + p * kSlidesPerPatient,
                        pool.begin() + (p + 1) * kSlidesPerPatient);
    } else {
      Rng patient_rng(derive_seed(config.seed, 0x57a9eull, p));
      rec.labels = staged_labels(p % 5, patient_rng);
    }
    for (int s = 0; s < kSlidesPerPatient; ++s) rec.slide_ids.push_back(slide_name(p, s));
  }
  return patients;
}

std::vector<PatientRecord> generate_corpus(const CorpusConfig& config,
                                           const std::filesystem::path& out_dir) {
  auto patients = plan_corpus(config);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIoFailure, "cannot create " + out_dir.string());
  for (std::size_t p = 0; p < patients.size(); ++p) {
    for (std::size_t s = 0; s < patients[p].slide_ids.size(); ++s) {
      SynthConfig cfg = config.slide_template;
      cfg.lesion_kind = patients[p].labels[s];
      cfg.lesion_rgb = default_lesion_rgb(cfg.lesion_kind);
      cfg.seed = derive_seed(config.seed, p, s);
      const std::string& id = patients[p].slide_ids[s];
      const SyntheticSlide slide = generate_slide(cfg, id);
      write_slide(slide.pyramid, out_dir / (id + ".wsip"));
      write_label_sidecar(out_dir / (id + ".label"), id, slide.label);
    }
  }
  write_manifest(patients, out_dir / kManifestName);
  return patients;
}

void write_manifest(const std::vector<PatientRecord>& patients,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot create " + path.string());
  for (const PatientRecord& p : patients) {
    out << p.patient_id;
    for (const std::string& s : p.slide_ids) out << '\t' << s;
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIoFailure, "write error on " + path.string());
}

std::vector<PatientRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::vector<PatientRecord> patients;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    PatientRecord rec;
    std::getline(fields, rec.patient_id, '\t');
    std::string id;
    while (std::getline(fields, id, '\t')) {
      if (!id.empty()) rec.slide_ids.push_back(id);
    }
    if (rec.slide_ids.empty()) {
      fail(ErrorCode::kParseError, path.string() + ": patient '" + rec.patient_id +
                                       "' lists no slides");
    }
    patients.push_back(std::move(rec));
  }
  return patients;
}

}  // namespace gradepipe
