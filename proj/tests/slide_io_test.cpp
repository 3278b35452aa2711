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

#include "gradepipe/slide_io.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "test_support.h"

namespace gradepipe {
namespace {

using testing::random_level;
using testing::random_pyramid;
using testing::TempDir;

SlidePyramid single_level(const std::string& id, Level level) {
  SlidePyramid p;
  p.slide_id = id;
  p.levels.push_back(std::move(level));
  return p;
}

TEST(SlideIo, RandomPyramidsRoundTripThroughFiles) {
  TempDir dir("slide_rt");
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const SlidePyramid p = random_pyramid(rng);
    const auto path = dir.path() / ("s" + std::to_string(i) + ".wsip");
    write_slide(p, path);
    EXPECT_EQ(read_slide(path), p) << "case " << i;
  }
}

TEST(SlideIo, FileSizeFollowsLayout) {
  // magic 4 + version 4 + id length 2 + id + level count 2 + 20 per level
  // directory entry, then the raw rasters.
  const auto expected_size = [](const SlidePyramid& p) {
    std::size_t n = 4 + 4 + 2 + p.slide_id.size() + 2 + 20 * p.levels.size();
    for (const auto& l : p.levels) n += static_cast<std::size_t>(l.width) * l.height * 3;
    return n;
  };
  const SlidePyramid tiny = single_level("s", Level(1, 2, 2, {1, 2, 3}));
  EXPECT_EQ(encode_slide(tiny).size(), 45u);
  EXPECT_EQ(expected_size(tiny), 45u);

  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const SlidePyramid p = random_pyramid(rng);
    EXPECT_EQ(encode_slide(p).size(), expected_size(p));
  }
}

TEST(SlideIo, DirectoryIsInAscendingFactorOrder) {
  SlidePyramid p;
  p.slide_id = "two";
  p.levels.push_back(Level(1, 128, 64));
  p.levels.push_back(Level(64, 2, 1));
  const auto bytes = encode_slide(p);
  const std::size_t dir = 4 + 4 + 2 + 3 + 2;
  std::uint32_t f0 = 0, f1 = 0;
  std::memcpy(&f0, bytes.data() + dir, 4);
  std::memcpy(&f1, bytes.data() + dir + 20, 4);
  EXPECT_EQ(f0, 1u);
  EXPECT_EQ(f1, 64u);
}

TEST(SlideIo, BadMagicIsRejected) {
  auto bytes = encode_slide(single_level("m", Level(1, 2, 2)));
  std::memcpy(bytes.data(), "XXXX", 4);
  EXPECT_GP_ERROR(decode_slide(bytes), ErrorCode::kBadMagic);
}

TEST(SlideIo, EveryTruncationIsDetected) {
  Rng rng(3);
  const SlidePyramid p = single_level("trunc", random_level(rng, 1, 5, 4));
  const auto bytes = encode_slide(p);
  for (std::size_t len = 4; len < bytes.size(); ++len) {
    EXPECT_GP_ERROR(decode_slide(std::span(bytes).first(len)), ErrorCode::kTruncatedFile)
        << "length " << len;
  }
}

TEST(SlideIo, TruncatedFileOnDisk) {
  TempDir dir("slide_trunc");
  Rng rng(4);
  const auto path = dir.path() / "t.wsip";
  write_slide(single_level("t", random_level(rng, 1, 8, 8)), path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 10);
  EXPECT_GP_ERROR(read_slide(path), ErrorCode::kTruncatedFile);
}

TEST(SlideIo, UnsortedDirectoryIsRejected) {
  SlidePyramid p;
  p.slide_id = "u";
  p.levels.push_back(Level(1, 8, 8));
  p.levels.push_back(Level(4, 2, 2));
  auto bytes = encode_slide(p);
  const std::size_t dir = 4 + 4 + 2 + 1 + 2;
  const std::uint32_t four = 4, one = 1;
  std::memcpy(bytes.data() + dir, &four, 4);
  std::memcpy(bytes.data() + dir + 20, &one, 4);
  EXPECT_GP_ERROR(decode_slide(bytes), ErrorCode::kUnsortedLevels);
}

TEST(SlideIo, WriteRejectsInvalidPyramids) {
  TempDir dir("slide_invalid");
  SlidePyramid empty;
  empty.slide_id = "e";
  EXPECT_GP_ERROR(write_slide(empty, dir.path() / "e.wsip"), ErrorCode::kInvalidPyramid);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "e.wsip"));

  SlidePyramid unsorted;
  unsorted.levels.push_back(Level(4, 2, 2));
  unsorted.levels.push_back(Level(1, 8, 8));
  EXPECT_GP_ERROR(validate_pyramid(unsorted), ErrorCode::kUnsortedLevels);

  SlidePyramid bad_dims;
  bad_dims.levels.push_back(Level(1, 64, 64));
  bad_dims.levels.push_back(Level(4, 40, 16));
  EXPECT_GP_ERROR(validate_pyramid(bad_dims), ErrorCode::kInvalidPyramid);
}

TEST(SlideIo, MissingFileIsIoFailure) {
  EXPECT_GP_ERROR(read_slide("/nonexistent/dir/none.wsip"), ErrorCode::kIoFailure);
}

TEST(LevelAtFactor, ExactHitIsReturnedUnchanged) {
  Rng rng(8);
  SlidePyramid p;
  p.levels.push_back(random_level(rng, 1, 64, 64));
  p.levels.push_back(random_level(rng, 64, 1, 1));
  EXPECT_EQ(level_at_factor(p, 64), p.levels[1]);
}

TEST(LevelAtFactor, ConstantLevelStaysConstant) {
  const SlidePyramid p = single_level("g", Level(32, 10, 6, {100, 100, 100}));
  const Level out = level_at_factor(p, 64);
  EXPECT_EQ(out.width, 5u);
  EXPECT_EQ(out.height, 3u);
  EXPECT_EQ(out.downsample_factor, 64u);
  for (std::uint32_t y = 0; y < out.height; ++y) {
    for (std::uint32_t x = 0; x < out.width; ++x) EXPECT_EQ(out.at(x, y), (Rgb{100, 100, 100}));
  }
}

TEST(LevelAtFactor, HalfValueRoundsUp) {
  Level l(32, 2, 1);
  l.set(0, 0, {0, 0, 0});
  l.set(1, 0, {255, 255, 255});
  const Level out = level_at_factor(single_level("h", l), 64);
  ASSERT_EQ(out.width, 1u);
  ASSERT_EQ(out.height, 1u);
  EXPECT_EQ(out.at(0, 0), (Rgb{128, 128, 128}));
}

TEST(LevelAtFactor, NoFinerLevelIsAnError) {
  const SlidePyramid p = single_level("c", Level(64, 2, 2));
  EXPECT_GP_ERROR(level_at_factor(p, 32), ErrorCode::kNoFinerLevel);
}

// Area-weighted box filter computed pixel by pixel: each source pixel
// contributes its overlap with the output pixel's footprint, clipped to the
// source extent.
Level box_filter_oracle(const Level& src, std::uint32_t target) {
  const double ratio = static_cast<double>(target) / src.downsample_factor;
  const auto out_w = static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(src.width) * src.downsample_factor + target - 1) / target);
  const auto out_h = static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(src.height) * src.downsample_factor + target - 1) / target);
  Level out(target, out_w, out_h);
  const auto overlap = [](double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  };
  for (std::uint32_t oy = 0; oy < out_h; ++oy) {
    for (std::uint32_t ox = 0; ox < out_w; ++ox) {
      double sum[3] = {0, 0, 0};
      double area = 0;
      for (std::uint32_t y = 0; y < src.height; ++y) {
        const double wy = overlap(oy * ratio, (oy + 1) * ratio, y, y + 1.0);
        if (wy == 0) continue;
        for (std::uint32_t x = 0; x < src.width; ++x) {
          const double wx = overlap(ox * ratio, (ox + 1) * ratio, x, x + 1.0);
          if (wx == 0) continue;
          const Rgb c = src.at(x, y);
          sum[0] += wx * wy * c.r;
          sum[1] += wx * wy * c.g;
          sum[2] += wx * wy * c.b;
          area += wx * wy;
        }
      }
      const auto q = [&](double v) {
        return static_cast<std::uint8_t>(std::floor(v / area + 0.5));
      };
      out.set(ox, oy, {q(sum[0]), q(sum[1]), q(sum[2])});
    }
  }
  return out;
}

TEST(LevelAtFactor, MatchesAreaOracleForIntegerAndFractionalRatios) {
  Rng rng(21);
  const std::pair<std::uint32_t, std::uint32_t> factors[] = {
      {1, 2}, {1, 4}, {16, 64}, {24, 64}, {3, 8}, {5, 7}, {40, 64}};
  int tally = 0;
  for (const auto& [from, to] : factors) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto w = std::uniform_int_distribution<std::uint32_t>(1, 23)(rng);
      const auto h = std::uniform_int_distribution<std::uint32_t>(1, 23)(rng);
      const Level src = random_level(rng, from, w, h);
      const Level got = resample_level(src, to);
      const Level want = box_filter_oracle(src, to);
      ASSERT_EQ(got.width, want.width);
      ASSERT_EQ(got.height, want.height);
      int mismatches = 0;
      for (std::size_t i = 0; i < got.pixels.size(); ++i) {
        if (std::abs(int(got.pixels[i]) - int(want.pixels[i])) > 0) ++mismatches;
      }
      EXPECT_EQ(mismatches, 0) << from << "->" << to << " " << w << "x" << h;
      ++tally;
    }
  }
  EXPECT_EQ(tally, 35);
}

TEST(LevelAtFactor, IsIdempotent) {
  Rng rng(2);
  SlidePyramid p = single_level("i", random_level(rng, 3, 40, 30));
  const Level once = level_at_factor(p, 16);
  SlidePyramid again = single_level("i", once);
  EXPECT_EQ(level_at_factor(again, once.downsample_factor), once);
}

TEST(LevelAtFactor, PreservesMeanWithinRounding) {
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    // Integer ratio with dimensions divisible by it: every output pixel has
    // full coverage, so the means agree up to per-pixel rounding.
    const Level src = random_level(rng, 1, 32, 24);
    const Level out = resample_level(src, 4);
    for (int c = 0; c < 3; ++c) {
      double a = 0, b = 0;
      for (std::size_t i = c; i < src.pixels.size(); i += 3) a += src.pixels[i];
      for (std::size_t i = c; i < out.pixels.size(); i += 3) b += out.pixels[i];
      a /= src.pixels.size() / 3;
      b /= out.pixels.size() / 3;
      EXPECT_LE(std::abs(a - b), 1.0);
    }
  }
}

TEST(LevelAtFactor, PrefersDivisorSources) {
  // A stored factor-24 level is closer to 64 than factor 16, but only 16
  // divides 64; the resample should come from the factor-16 level.
  SlidePyramid p;
  p.slide_id = "d";
  p.levels.push_back(Level(1, 96, 96, {0, 0, 0}));
  p.levels.push_back(Level(16, 6, 6, {10, 10, 10}));
  p.levels.push_back(Level(24, 4, 4, {200, 200, 200}));
  const Level out = level_at_factor(p, 64);
  EXPECT_EQ(out.at(0, 0), (Rgb{10, 10, 10}));
}

TEST(LabelSidecar, RoundTripsAndRejectsGarbage) {
  TempDir dir("label");
  for (SlideLabel l : kAllSlideLabels) {
    const auto path = dir.path() / "x.label";
    write_label_sidecar(path, "slide_7", l);
    const auto [id, back] = read_label_sidecar(path);
    EXPECT_EQ(id, "slide_7");
    EXPECT_EQ(back, l);
  }
  const auto bad = dir.path() / "bad.label";
  std::ofstream(bad) << "slide\tlarge\n";
  EXPECT_GP_ERROR(read_label_sidecar(bad), ErrorCode::kParseError);
}

}  // namespace
}  // namespace gradepipe
