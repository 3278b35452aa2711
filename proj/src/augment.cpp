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

#include "gradepipe/augment.h"

#include <algorithm>
#include <cmath>

#include "gradepipe/error.h"

namespace gradepipe {
namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : k) v /= total;
  return k;
}

// Separable blur of a size x size field with clamped (replicated) edges.
void smooth_field(std::vector<double>& field, int size, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(field.size());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = std::clamp(x + k, 0, size - 1);
        s += kernel[static_cast<std::size_t>(k + radius)] * field[static_cast<std::size_t>(y) * size + xx];
      }
      tmp[static_cast<std::size_t>(y) * size + x] = s;
    }
  }
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, size - 1);
        s += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(yy) * size + x];
      }
      field[static_cast<std::size_t>(y) * size + x] = s;
    }
  }
}

}  // namespace

DihedralTransform DihedralTransform::compose(DihedralTransform first,
                                             DihedralTransform second) {
  // R^r2 F^f2 R^r1 F^f1 = R^(r2 -/+ r1) F^(f1 xor f2), using F R = R^-1 F.
  const int r = second.rotation() + (second.flipped() ? -first.rotation() : first.rotation());
  return DihedralTransform((r % 4 + 4) % 4, first.flipped() != second.flipped());
}

DihedralTransform DihedralTransform::inverse() const {
  if (flipped()) return *this;  // reflections are involutions
  return DihedralTransform((4 - rotation()) % 4, false);
}

Point DihedralTransform::map(Point p, int size) const {
  if (flipped()) p.x = size - 1 - p.x;
  for (int i = 0; i < rotation(); ++i) p = Point{size - 1 - p.y, p.x};
  return p;
}

Patch apply_dihedral(const Patch& patch, DihedralTransform t) {
  Patch out = patch;
  if (t == DihedralTransform::identity()) return out;
  const int s = patch.size;
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const Point q = t.map({x, y}, s);
      out.set(q.x, q.y, patch.at(x, y));
    }
  }
  return out;
}

void AugmentConfig::validate() const {
  if (!(color_shift_max >= 0 && elastic_alpha >= 0 && elastic_sigma >= 0)) {
    fail(ErrorCode::kInvalidConfig, "augment parameters must be nonnegative");
  }
}

Patch shift_colors(const Patch& patch, const std::array<int, 3>& offsets) {
  Patch out = patch;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(
        std::clamp(static_cast<int>(patch.pixels[i]) + offsets[i % 3], 0, 255));
  }
  return out;
}

Patch color_shift(const Patch& patch, const AugmentConfig& cfg, Rng& rng) {
  const int bound = static_cast<int>(std::floor(cfg.color_shift_max));
  std::uniform_int_distribution<int> draw(-bound, bound);
  std::array<int, 3> offsets{};
  for (int& o : offsets) o = draw(rng);
  return shift_colors(patch, offsets);
}

Patch elastic_deform(const Patch& patch, const AugmentConfig& cfg, Rng& rng) {
  const int s = patch.size;
  const std::size_t n = static_cast<std::size_t>(s) * s;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> dx(n), dy(n);
  for (double& v : dx) v = unit(rng);
  for (double& v : dy) v = unit(rng);
  if (cfg.elastic_alpha == 0.0) return patch;
  if (cfg.elastic_sigma > 0.0) {
    const auto kernel = gaussian_kernel(cfg.elastic_sigma);
    smooth_field(dx, s, kernel);
    smooth_field(dy, s, kernel);
  }

  Patch out = patch;
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * s + x;
      const double sx = std::clamp(x + cfg.elastic_alpha * dx[i], 0.0, s - 1.0);
      const double sy = std::clamp(y + cfg.elastic_alpha * dy[i], 0.0, s - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, s - 1);
      const int y1 = std::min(y0 + 1, s - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const Rgb c00 = patch.at(x0, y0), c10 = patch.at(x1, y0);
      const Rgb c01 = patch.at(x0, y1), c11 = patch.at(x1, y1);
      const auto blend = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        const double v = (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      };
      out.set(x, y, {blend(c00.r, c10.r, c01.r, c11.r), blend(c00.g, c10.g, c01.g, c11.g),
                     blend(c00.b, c10.b, c01.b, c11.b)});
    }
  }
  return out;
}

Patch augment_for_training(const Patch& patch, const AugmentConfig& cfg, Rng& rng) {
  const DihedralTransform t(std::uniform_int_distribution<int>(0, kDihedralOrder - 1)(rng));
  Patch out = apply_dihedral(patch, t);
  out = color_shift(out, cfg, rng);
  return elastic_deform(out, cfg, rng);
}

std::vector<std::size_t> balanced_epoch(const std::vector<LabeledItem>& dataset,
                                        std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumSlideLabels> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(label_index(dataset[i].label))].push_back(i);
  }
  std::size_t target = 0;
  for (int c = 0; c < kNumSlideLabels; ++c) {
    if (by_class[static_cast<std::size_t>(c)].empty()) {
      fail(ErrorCode::kMissingClass,
           "no examples of class '" + std::string(label_name(label_from_index(c))) + "'");
    }
    target = std::max(target, by_class[static_cast<std::size_t>(c)].size());
  }
  Rng rng(seed);
  std::vector<std::size_t> order;
  order.reserve(target * kNumSlideLabels);
  for (const auto& members : by_class) {
    order.insert(order.end(), members.begin(), members.end());
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t k = members.size(); k < target; ++k) order.push_back(members[pick(rng)]);
  }
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace gradepipe
