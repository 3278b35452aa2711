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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "byte_io.h"
#include "gradepipe/error.h"

namespace gradepipe {
namespace detail {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kIoFailure, "read error on " + path);
  return bytes;
}

void write_file_bytes(const std::string& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorCode::kIoFailure, "write error on " + path);
}

}  // namespace detail

namespace {

constexpr char kMagic[4] = {'W', 'S', 'I', 'P'};
constexpr std::size_t kDirectoryEntryBytes = 4 + 4 + 4 + 8;

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

std::size_t raster_bytes(std::uint32_t w, std::uint32_t h) {
  return static_cast<std::size_t>(w) * h * 3;
}

// Overlap weights of source cells [i, i+1) against the real interval
// [lo, hi), clipped to [0, extent).
struct AxisTap {
  std::uint32_t index;
  double weight;
};

std::vector<std::vector<AxisTap>> axis_taps(std::uint32_t src_extent,
                                            std::uint32_t dst_extent,
                                            double ratio) {
  std::vector<std::vector<AxisTap>> taps(dst_extent);
  for (std::uint32_t o = 0; o < dst_extent; ++o) {
    const double lo = o * ratio;
    const double hi = std::min((o + 1) * ratio, static_cast<double>(src_extent));
    const auto first = static_cast<std::uint32_t>(std::floor(lo));
    const auto last = static_cast<std::uint32_t>(
        std::min<double>(std::ceil(hi), src_extent));
    for (std::uint32_t s = first; s < last; ++s) {
      const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (w > 0.0) taps[o].push_back({s, w});
    }
  }
  return taps;
}

}  // namespace

Level::Level(std::uint32_t factor, std::uint32_t w, std::uint32_t h, Rgb fill)
    : downsample_factor(factor), width(w), height(h), pixels(raster_bytes(w, h)) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

std::string_view label_name(SlideLabel label) {
  switch (label) {
    case SlideLabel::kNegative: return "negative";
    case SlideLabel::kItc: return "itc";
    case SlideLabel::kMicro: return "micro";
    case SlideLabel::kMacro: return "macro";
  }
  return "negative";
}

std::optional<SlideLabel> parse_label(std::string_view name) {
  for (SlideLabel l : kAllSlideLabels) {
    if (label_name(l) == name) return l;
  }
  return std::nullopt;
}

void validate_pyramid(const SlidePyramid& pyramid) {
  if (pyramid.levels.empty()) {
    fail(ErrorCode::kInvalidPyramid, "slide '" + pyramid.slide_id + "' has no levels");
  }
  if (pyramid.levels.size() > 0xFFFF) {
    fail(ErrorCode::kInvalidPyramid, "too many levels");
  }
  if (pyramid.slide_id.size() > 0xFFFF) {
    fail(ErrorCode::kInvalidPyramid, "slide id longer than 65535 bytes");
  }
  const Level& base = pyramid.levels.front();
  for (std::size_t i = 0; i < pyramid.levels.size(); ++i) {
    const Level& level = pyramid.levels[i];
    const std::string where = "level " + std::to_string(i);
    if (level.downsample_factor == 0) {
      fail(ErrorCode::kInvalidPyramid, where + " has downsample factor 0");
    }
    if (level.width == 0 || level.height == 0) {
      fail(ErrorCode::kInvalidPyramid, where + " has an empty raster");
    }
    if (level.pixels.size() != raster_bytes(level.width, level.height)) {
      fail(ErrorCode::kInvalidPyramid,
           where + " pixel buffer does not match width*height*3");
    }
    if (i > 0 &&
        level.downsample_factor <= pyramid.levels[i - 1].downsample_factor) {
      fail(ErrorCode::kUnsortedLevels,
           where + " factor " + std::to_string(level.downsample_factor) +
               " does not exceed level " + std::to_string(i - 1) + " factor " +
               std::to_string(pyramid.levels[i - 1].downsample_factor));
    }
    const auto expect = [&](std::uint32_t base_extent, std::uint32_t extent) {
      const auto e = static_cast<std::int64_t>(ceil_div(
          static_cast<std::uint64_t>(base_extent) * base.downsample_factor,
          level.downsample_factor));
      return std::llabs(e - static_cast<std::int64_t>(extent)) <= 1;
    };
    if (!expect(base.width, level.width) || !expect(base.height, level.height)) {
      fail(ErrorCode::kInvalidPyramid,
           where + " dimensions are inconsistent with level 0");
    }
  }
}

std::vector<std::uint8_t> encode_slide(const SlidePyramid& pyramid) {
  validate_pyramid(pyramid);
  std::vector<std::uint8_t> out;
  detail::ByteWriter w(out);
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.put<std::uint32_t>(kSlideFormatVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(pyramid.slide_id.size()));
  w.put_string(pyramid.slide_id);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(pyramid.levels.size()));

  std::uint64_t offset = w.size() + kDirectoryEntryBytes * pyramid.levels.size();
  for (const Level& level : pyramid.levels) {
    w.put<std::uint32_t>(level.downsample_factor);
    w.put<std::uint32_t>(level.width);
    w.put<std::uint32_t>(level.height);
    w.put<std::uint64_t>(offset);
    offset += level.pixels.size();
  }
  for (const Level& level : pyramid.levels) w.put_bytes(level.pixels);
  return out;
}

SlidePyramid decode_slide(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.require(4, "magic");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
    fail(ErrorCode::kBadMagic, "expected \"WSIP\" at offset 0");
  }
  r.get_bytes(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kSlideFormatVersion) {
    fail(ErrorCode::kBadMagic,
         "unsupported container version " + std::to_string(version) +
             " at offset 4");
  }
  SlidePyramid pyramid;
  const auto id_len = r.get<std::uint16_t>("slide id length");
  pyramid.slide_id = r.get_string(id_len, "slide id");
  const auto level_count = r.get<std::uint16_t>("level count");

  struct Entry {
    std::uint32_t factor, width, height;
    std::uint64_t offset;
  };
  std::vector<Entry> entries(level_count);
  for (std::uint16_t i = 0; i < level_count; ++i) {
    const std::string what = "directory entry " + std::to_string(i);
    entries[i].factor = r.get<std::uint32_t>(what);
    entries[i].width = r.get<std::uint32_t>(what);
    entries[i].height = r.get<std::uint32_t>(what);
    entries[i].offset = r.get<std::uint64_t>(what);
    if (i > 0 && entries[i].factor <= entries[i - 1].factor) {
      fail(ErrorCode::kUnsortedLevels,
           "level " + std::to_string(i) + " factor " +
               std::to_string(entries[i].factor) + " follows factor " +
               std::to_string(entries[i - 1].factor) + " (directory offset " +
               std::to_string(r.position() - kDirectoryEntryBytes) + ")");
    }
  }
  pyramid.levels.reserve(level_count);
  for (std::uint16_t i = 0; i < level_count; ++i) {
    const Entry& e = entries[i];
    const std::uint64_t n = static_cast<std::uint64_t>(e.width) * e.height * 3;
    if (e.offset > bytes.size() || bytes.size() - e.offset < n) {
      fail(ErrorCode::kTruncatedFile,
           "level " + std::to_string(i) + " raster needs " + std::to_string(n) +
               " bytes at offset " + std::to_string(e.offset) + ", file has " +
               std::to_string(bytes.size()));
    }
    Level level;
    level.downsample_factor = e.factor;
    level.width = e.width;
    level.height = e.height;
    level.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(e.offset),
                        bytes.begin() + static_cast<std::ptrdiff_t>(e.offset + n));
    pyramid.levels.push_back(std::move(level));
  }
  validate_pyramid(pyramid);
  return pyramid;
}

SlidePyramid read_slide(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path.string());
  try {
    return decode_slide(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_slide(const SlidePyramid& pyramid,
                 const std::filesystem::path& path) {
  const auto bytes = encode_slide(pyramid);
  detail::write_file_bytes(path.string(), bytes);
}

const Level* find_level(const SlidePyramid& pyramid, std::uint32_t factor) {
  for (const Level& level : pyramid.levels) {
    if (level.downsample_factor == factor) return &level;
  }
  return nullptr;
}

Level resample_level(const Level& source, std::uint32_t target_factor) {
  if (target_factor < source.downsample_factor) {
    fail(ErrorCode::kNoFinerLevel,
         "cannot upsample factor " + std::to_string(source.downsample_factor) +
             " to " + std::to_string(target_factor));
  }
  if (target_factor == source.downsample_factor) return source;

  const double ratio =
      static_cast<double>(target_factor) / source.downsample_factor;
  const auto out_w = static_cast<std::uint32_t>(ceil_div(
      static_cast<std::uint64_t>(source.width) * source.downsample_factor,
      target_factor));
  const auto out_h = static_cast<std::uint32_t>(ceil_div(
      static_cast<std::uint64_t>(source.height) * source.downsample_factor,
      target_factor));
  const auto xt = axis_taps(source.width, out_w, ratio);
  const auto yt = axis_taps(source.height, out_h, ratio);

  Level out(target_factor, out_w, out_h);
  for (std::uint32_t oy = 0; oy < out_h; ++oy) {
    for (std::uint32_t ox = 0; ox < out_w; ++ox) {
      double acc[3] = {0, 0, 0};
      double total = 0;
      for (const AxisTap& ty : yt[oy]) {
        const std::uint8_t* row =
            source.pixels.data() + static_cast<std::size_t>(ty.index) * source.width * 3;
        for (const AxisTap& tx : xt[ox]) {
          const double w = ty.weight * tx.weight;
          const std::uint8_t* p = row + static_cast<std::size_t>(tx.index) * 3;
          acc[0] += w * p[0];
          acc[1] += w * p[1];
          acc[2] += w * p[2];
          total += w;
        }
      }
      Rgb c;
      const auto round_half_up = [&](double v) {
        return static_cast<std::uint8_t>(
            std::clamp(std::floor(v / total + 0.5), 0.0, 255.0));
      };
      c.r = round_half_up(acc[0]);
      c.g = round_half_up(acc[1]);
      c.b = round_half_up(acc[2]);
      out.set(ox, oy, c);
    }
  }
  return out;
}

Level level_at_factor(const SlidePyramid& pyramid, std::uint32_t target_factor) {
  if (const Level* exact = find_level(pyramid, target_factor)) return *exact;
  // Prefer the closest stored level whose factor divides the target (whole
  // source pixels per output pixel), then the closest finer one.
  const Level* divisor = nullptr;
  const Level* finer = nullptr;
  for (const Level& level : pyramid.levels) {
    if (level.downsample_factor > target_factor) break;
    finer = &level;
    if (target_factor % level.downsample_factor == 0) divisor = &level;
  }
  const Level* source = divisor ? divisor : finer;
  if (source == nullptr) {
    fail(ErrorCode::kNoFinerLevel,
         "slide '" + pyramid.slide_id + "' has no level at or below factor " +
             std::to_string(target_factor));
  }
  return resample_level(*source, target_factor);
}

void write_label_sidecar(const std::filesystem::path& path,
                         std::string_view slide_id, SlideLabel label) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIoFailure, "cannot create " + path.string());
  out << slide_id << '\t' << label_name(label) << '\n';
  if (!out) fail(ErrorCode::kIoFailure, "write error on " + path.string());
}

std::pair<std::string, SlideLabel> read_label_sidecar(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto tab = line.find('\t');
  if (tab == std::string::npos) {
    fail(ErrorCode::kParseError, path.string() + ": expected slide_id<TAB>label");
  }
  const auto label = parse_label(std::string_view(line).substr(tab + 1));
  if (!label) {
    fail(ErrorCode::kParseError,
         path.string() + ": unknown label '" + line.substr(tab + 1) + "'");
  }
  return {line.substr(0, tab), *label};
}

}  // namespace gradepipe
