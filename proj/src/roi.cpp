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

#include "gradepipe/roi.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "gradepipe/error.h"
#include "gradepipe/rng.h"

namespace gradepipe {

void RoiConfig::validate() const {
  if (!(green_red_ratio > 0.0 && green_red_ratio < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "roi.green_red_ratio must be in (0, 1)");
  }
  if (median_disk_px < 1) fail(ErrorCode::kInvalidConfig, "roi.median_disk_px must be >= 1");
  if (work_factor < 1) fail(ErrorCode::kInvalidConfig, "roi.work_factor must be >= 1");
  if (patch_px < 1) fail(ErrorCode::kInvalidConfig, "roi.patch_px must be >= 1");
  if (num_patches < 1) fail(ErrorCode::kInvalidConfig, "roi.num_patches must be >= 1");
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

Patch::Patch(int px, Rgb fill)
    : size(px), pixels(static_cast<std::size_t>(px) * px * 3) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

BinaryMask threshold_mask(const Level& level, double ratio) {
  BinaryMask mask(static_cast<int>(level.width), static_cast<int>(level.height));
  const std::size_t n = mask.bits.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = level.pixels[3 * i];
    const double g = level.pixels[3 * i + 1];
    mask.bits[i] = g < ratio * r ? 1 : 0;
  }
  return mask;
}

BinaryMask median_filter_disk(const BinaryMask& mask, int disk_px) {
  if (disk_px < 1) fail(ErrorCode::kInvalidConfig, "disk_px must be >= 1");
  const int w = mask.width;
  const int h = mask.height;

  // Row half-widths of the disk; dx^2 + dy^2 <= (d/2)^2 <=> 4(dx^2+dy^2) <= d^2.
  const std::int64_t d2 = static_cast<std::int64_t>(disk_px) * disk_px;
  const int reach = disk_px / 2;
  std::vector<int> half_width(2 * reach + 1);
  std::int64_t disk_size = 0;
  for (int dy = -reach; dy <= reach; ++dy) {
    int hw = 0;
    while (4 * (static_cast<std::int64_t>(hw + 1) * (hw + 1) +
                static_cast<std::int64_t>(dy) * dy) <= d2) {
      ++hw;
    }
    half_width[dy + reach] = hw;
    disk_size += 2 * hw + 1;
  }

  std::vector<std::int32_t> prefix(static_cast<std::size_t>(h) * (w + 1), 0);
  for (int y = 0; y < h; ++y) {
    std::int32_t* row = &prefix[static_cast<std::size_t>(y) * (w + 1)];
    for (int x = 0; x < w; ++x) row[x + 1] = row[x] + (mask.at(x, y) ? 1 : 0);
  }

  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::int64_t count = 0;
      for (int dy = -reach; dy <= reach; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= h) continue;
        const int hw = half_width[dy + reach];
        const int lo = std::max(x - hw, 0);
        const int hi = std::min(x + hw + 1, w);
        if (hi <= lo) continue;
        const std::int32_t* row = &prefix[static_cast<std::size_t>(yy) * (w + 1)];
        count += row[hi] - row[lo];
      }
      out.set(x, y, 2 * count > disk_size);
    }
  }
  return out;
}

CentroidSample sample_centroids(const BinaryMask& mask, int n,
                                std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::kInvalidConfig, "centroid count must be >= 1");
  CentroidSample result;
  result.points.reserve(static_cast<std::size_t>(n));

  std::vector<std::uint32_t> pool;
  for (std::size_t i = 0; i < mask.bits.size(); ++i) {
    if (mask.bits[i]) pool.push_back(static_cast<std::uint32_t>(i));
  }
  if (pool.empty()) {
    result.fallback = true;
    result.points.assign(static_cast<std::size_t>(n),
                         Point{mask.width / 2, mask.height / 2});
    return result;
  }

  Rng rng(seed);
  const auto to_point = [&](std::uint32_t idx) {
    return Point{static_cast<int>(idx % static_cast<std::uint32_t>(mask.width)),
                 static_cast<int>(idx / static_cast<std::uint32_t>(mask.width))};
  };
  const std::size_t distinct = std::min(pool.size(), static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < distinct; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    result.points.push_back(to_point(pool[i]));
  }
  std::uniform_int_distribution<std::size_t> any(0, pool.size() - 1);
  while (result.points.size() < static_cast<std::size_t>(n)) {
    result.points.push_back(to_point(pool[any(rng)]));
  }
  return result;
}

BinaryMask compute_roi_mask(const SlidePyramid& pyramid, const RoiConfig& cfg) {
  if (const Level* level = find_level(pyramid, cfg.work_factor)) {
    return median_filter_disk(threshold_mask(*level, cfg.green_red_ratio),
                              cfg.median_disk_px);
  }
  const Level level = level_at_factor(pyramid, cfg.work_factor);
  return median_filter_disk(threshold_mask(level, cfg.green_red_ratio),
                            cfg.median_disk_px);
}

RoiMap compute_roi(const SlidePyramid& pyramid, const RoiConfig& cfg,
                   std::uint64_t seed) {
  RoiMap roi;
  roi.mask = compute_roi_mask(pyramid, cfg);
  roi.centroids = sample_centroids(roi.mask, cfg.num_patches, seed);
  return roi;
}

Patch extract_patch(const Level& level, const std::string& slide_id,
                    Point center, int patch_px) {
  Patch patch(patch_px);
  patch.source_slide = slide_id;
  patch.center = center;
  const int x0 = center.x - patch_px / 2;
  const int y0 = center.y - patch_px / 2;
  const int lw = static_cast<int>(level.width);
  const int lh = static_cast<int>(level.height);
  const int cx_lo = std::max(0, -x0);
  const int cx_hi = std::min(patch_px, lw - x0);
  if (cx_hi <= cx_lo) return patch;
  for (int py = 0; py < patch_px; ++py) {
    const int sy = y0 + py;
    if (sy < 0 || sy >= lh) continue;
    const std::uint8_t* src =
        level.pixels.data() + (static_cast<std::size_t>(sy) * lw + x0 + cx_lo) * 3;
    std::uint8_t* dst =
        patch.pixels.data() + (static_cast<std::size_t>(py) * patch_px + cx_lo) * 3;
    std::copy_n(src, static_cast<std::size_t>(cx_hi - cx_lo) * 3, dst);
  }
  return patch;
}

Patch extract_patch(const SlidePyramid& pyramid, Point center,
                    const RoiConfig& cfg) {
  if (const Level* level = find_level(pyramid, cfg.work_factor)) {
    return extract_patch(*level, pyramid.slide_id, center, cfg.patch_px);
  }
  return extract_patch(level_at_factor(pyramid, cfg.work_factor),
                       pyramid.slide_id, center, cfg.patch_px);
}

void write_mask_pbm(const BinaryMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot create " + path.string());
  out << "P4\n" << mask.width << ' ' << mask.height << '\n';
  const int row_bytes = (mask.width + 7) / 8;
  std::vector<char> row(static_cast<std::size_t>(row_bytes));
  for (int y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) row[x / 8] = static_cast<char>(row[x / 8] | (0x80 >> (x % 8)));
    }
    out.write(row.data(), row_bytes);
  }
  if (!out) fail(ErrorCode::kIoFailure, "write error on " + path.string());
}

BinaryMask read_mask_pbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::string magic;
  int w = 0;
  int h = 0;
  in >> magic >> w >> h;
  in.get();
  if (magic != "P4" || w <= 0 || h <= 0) {
    fail(ErrorCode::kParseError, path.string() + ": not a raw PBM");
  }
  BinaryMask mask(w, h);
  const int row_bytes = (w + 7) / 8;
  std::vector<char> row(static_cast<std::size_t>(row_bytes));
  for (int y = 0; y < h; ++y) {
    if (!in.read(row.data(), row_bytes)) {
      fail(ErrorCode::kTruncatedFile, path.string() + ": short PBM raster");
    }
    for (int x = 0; x < w; ++x) {
      mask.set(x, y, (static_cast<unsigned char>(row[x / 8]) >> (7 - x % 8)) & 1);
    }
  }
  return mask;
}

void write_centroids_tsv(const std::vector<Point>& points,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot create " + path.string());
  for (const Point& p : points) out << p.x << '\t' << p.y << '\n';
  if (!out) fail(ErrorCode::kIoFailure, "write error on " + path.string());
}

}  // namespace gradepipe
