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

#ifndef GRADEPIPE_ROI_H_
#define GRADEPIPE_ROI_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradepipe/slide_io.h"

namespace gradepipe {

struct RoiConfig {
  double green_red_ratio = 0.9;
  int median_disk_px = 50;  // diameter of the disk structuring element
  std::uint32_t work_factor = 64;
  int patch_px = 512;
  int num_patches = 20;
  std::uint64_t sampling_seed = 0;

  void validate() const;
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Binary raster, one byte (0 or 1) per pixel, row-major.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {}

  bool at(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

struct CentroidSample {
  std::vector<Point> points;
  bool fallback = false;  // mask had no foreground; points are the center
};

struct RoiMap {
  BinaryMask mask;
  CentroidSample centroids;
};

/// Square RGB8 crop taken from the work level of a slide.
struct Patch {
  int size = 0;
  std::vector<std::uint8_t> pixels;  // size * size * 3
  std::string source_slide;
  Point center;

  Patch() = default;
  explicit Patch(int px, Rgb fill = {255, 255, 255});

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * size + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * size + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }

  friend bool operator==(const Patch&, const Patch&) = default;
};

/// Foreground iff G < ratio * R. No division, so R = 0 is background.
BinaryMask threshold_mask(const Level& level, double ratio);

/// Binary median over a disk of diameter `disk_px` (membership
/// dx^2 + dy^2 <= (disk_px/2)^2). Foreground needs a strict majority of the
/// disk; pixels outside the raster count as background.
BinaryMask median_filter_disk(const BinaryMask& mask, int disk_px);

/// Draws `n` foreground positions uniformly, without replacement until the
/// foreground is exhausted and with replacement afterwards. An empty mask
/// yields the raster center `n` times with `fallback` set.
CentroidSample sample_centroids(const BinaryMask& mask, int n,
                                std::uint64_t seed);

/// Threshold + median filter on the work level of `pyramid`.
BinaryMask compute_roi_mask(const SlidePyramid& pyramid, const RoiConfig& cfg);

/// Full ROI selection: mask plus `cfg.num_patches` centroids.
RoiMap compute_roi(const SlidePyramid& pyramid, const RoiConfig& cfg,
                   std::uint64_t seed);

/// Crops a patch_px window centered on `center` (top-left at
/// center - patch_px/2). Pixels outside the level are white.
Patch extract_patch(const Level& level, const std::string& slide_id,
                    Point center, int patch_px);
Patch extract_patch(const SlidePyramid& pyramid, Point center,
                    const RoiConfig& cfg);

/// Raw PBM (P4); foreground pixels are written as 1 bits.
void write_mask_pbm(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask read_mask_pbm(const std::filesystem::path& path);
void write_centroids_tsv(const std::vector<Point>& points,
                         const std::filesystem::path& path);

}  // namespace gradepipe

#endif  // GRADEPIPE_ROI_H_
