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

#ifndef GRADEPIPE_AUGMENT_H_
#define GRADEPIPE_AUGMENT_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gradepipe/rng.h"
#include "gradepipe/roi.h"
#include "gradepipe/slide_io.h"

namespace gradepipe {

/// One of the 8 symmetries of the square. Index = rotation + 4 * flip: the
/// patch is mirrored left-right when `flip` is set, then rotated clockwise by
/// `rotation` quarter turns.
class DihedralTransform {
 public:
  constexpr DihedralTransform() = default;
  constexpr explicit DihedralTransform(int index) : index_(index & 7) {}
  constexpr DihedralTransform(int rotation, bool flip)
      : index_((rotation & 3) + (flip ? 4 : 0)) {}

  static constexpr DihedralTransform identity() { return DihedralTransform(0); }

  constexpr int index() const { return index_; }
  constexpr int rotation() const { return index_ & 3; }
  constexpr bool flipped() const { return index_ >= 4; }

  /// Transform equal to applying `first`, then `second`.
  static DihedralTransform compose(DihedralTransform first, DihedralTransform second);
  DihedralTransform inverse() const;

  /// Destination of source pixel (x, y) in a size x size patch.
  Point map(Point p, int size) const;

  friend constexpr bool operator==(DihedralTransform, DihedralTransform) = default;

 private:
  int index_ = 0;
};

inline constexpr int kDihedralOrder = 8;

/// Lossless pixel permutation; the patch must be square.
Patch apply_dihedral(const Patch& patch, DihedralTransform t);

struct AugmentConfig {
  double color_shift_max = 20.0;
  double elastic_alpha = 20.0;
  double elastic_sigma = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Adds `offsets[c]` to channel c, clamping to [0, 255].
Patch shift_colors(const Patch& patch, const std::array<int, 3>& offsets);

/// Offsets drawn uniformly from [-color_shift_max, color_shift_max].
Patch color_shift(const Patch& patch, const AugmentConfig& cfg, Rng& rng);

/// Uniform[-1, 1] displacement fields smoothed by a Gaussian of
/// elastic_sigma (truncated at 3 sigma, edge-replicated), scaled by
/// elastic_alpha and applied with bilinear sampling and edge replication.
Patch elastic_deform(const Patch& patch, const AugmentConfig& cfg, Rng& rng);

/// Random dihedral transform, color shift and elastic deformation.
Patch augment_for_training(const Patch& patch, const AugmentConfig& cfg, Rng& rng);

struct LabeledItem {
  std::string id;
  SlideLabel label;
};

/// Class-balanced epoch ordering (indices into `dataset`). Every class is
/// brought up to the size of the largest one: each item once, minority
/// classes topped up by sampling with replacement. The result is shuffled.
/// Throws MissingClass when a class has no items.
std::vector<std::size_t> balanced_epoch(const std::vector<LabeledItem>& dataset,
                                        std::uint64_t seed);

}  // namespace gradepipe

#endif  // GRADEPIPE_AUGMENT_H_
