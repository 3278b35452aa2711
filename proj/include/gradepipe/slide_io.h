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

#ifndef GRADEPIPE_SLIDE_IO_H_
#define GRADEPIPE_SLIDE_IO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gradepipe {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// One resolution of a slide: an RGB8 row-major raster plus the isotropic
/// downsample factor relative to the base (factor 1) resolution.
struct Level {
  std::uint32_t downsample_factor = 1;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  Level() = default;
  Level(std::uint32_t factor, std::uint32_t w, std::uint32_t h, Rgb fill = {});

  Rgb at(std::uint32_t x, std::uint32_t y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(std::uint32_t x, std::uint32_t y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }

  friend bool operator==(const Level&, const Level&) = default;
};

/// Severity-ordered slide class. The numeric value doubles as the network's
/// class index: 0=negative, 1=ITC, 2=micro, 3=macro.
enum class SlideLabel : std::uint8_t {
  kNegative = 0,
  kItc = 1,
  kMicro = 2,
  kMacro = 3,
};

inline constexpr int kNumSlideLabels = 4;
inline constexpr SlideLabel kAllSlideLabels[] = {
    SlideLabel::kNegative, SlideLabel::kItc, SlideLabel::kMicro,
    SlideLabel::kMacro};

constexpr int label_index(SlideLabel l) { return static_cast<int>(l); }
constexpr SlideLabel label_from_index(int i) {
  return static_cast<SlideLabel>(i);
}

/// Lower-case sidecar spelling: negative, itc, micro, macro.
std::string_view label_name(SlideLabel label);
std::optional<SlideLabel> parse_label(std::string_view name);

/// Multi-resolution slide. Levels are kept sorted by strictly increasing
/// downsample factor; `validate_pyramid` enforces the full set of invariants.
struct SlidePyramid {
  std::string slide_id;
  std::vector<Level> levels;

  friend bool operator==(const SlidePyramid&, const SlidePyramid&) = default;
};

/// Throws InvalidPyramid or UnsortedLevels when the structure is broken.
void validate_pyramid(const SlidePyramid& pyramid);

// Container codec. The byte layout is little-endian:
//   "WSIP" | version u32 | id_len u16 | id bytes | level_count u16 |
//   level_count x (factor u32, width u32, height u32, payload_offset u64) |
//   payloads (raw RGB8 rasters, in directory order)
inline constexpr std::uint32_t kSlideFormatVersion = 1;

std::vector<std::uint8_t> encode_slide(const SlidePyramid& pyramid);
SlidePyramid decode_slide(std::span<const std::uint8_t> bytes);

SlidePyramid read_slide(const std::filesystem::path& path);
void write_slide(const SlidePyramid& pyramid,
                 const std::filesystem::path& path);

/// Exact-factor lookup without copying; nullptr when absent.
const Level* find_level(const SlidePyramid& pyramid, std::uint32_t factor);

/// Returns the level at `target_factor`, resampling with area-weighted box
/// filtering when the pyramid has no exact match.
Level level_at_factor(const SlidePyramid& pyramid, std::uint32_t target_factor);

/// Box-filter resample of one level to a coarser factor. Output width is
/// ceil(width * factor / target_factor); each output pixel averages the
/// source rectangle it covers, weighting partial pixels by overlap area, and
/// rounds half up.
Level resample_level(const Level& source, std::uint32_t target_factor);

// Ground-truth sidecar: a single line "slide_id<TAB>label".
void write_label_sidecar(const std::filesystem::path& path,
                         std::string_view slide_id, SlideLabel label);
std::pair<std::string, SlideLabel> read_label_sidecar(
    const std::filesystem::path& path);

}  // namespace gradepipe

#endif  // GRADEPIPE_SLIDE_IO_H_
