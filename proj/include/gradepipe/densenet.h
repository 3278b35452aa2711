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

#ifndef GRADEPIPE_DENSENET_H_
#define GRADEPIPE_DENSENET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "gradepipe/optim.h"
#include "gradepipe/tensor.h"

namespace gradepipe {

/// Patch classifier layout:
///   stem:   3x3 conv (3 -> stem_maps) + bias, per-channel PReLU
///   block_pairs x { dense block, downsampling block }
///     dense: extractors_per_block units of ReLU -> 3x3 conv (+bias) adding
///            growth_rate maps, each fed the concat of everything before it
///     down:  1x1 conv doubling the channels (+bias), 2x2 average pool
///   head:   GAP -> FC(hidden_units) -> ReLU -> FC(num_classes) -> softmax
struct DenseNetConfig {
  int stem_maps = 32;
  int extractors_per_block = 6;
  int growth_rate = 12;
  int block_pairs = 4;
  int hidden_units = 128;
  int num_classes = 4;
  int input_px = 512;

  /// Throws InvalidConfig.
  void validate() const;

  friend bool operator==(const DenseNetConfig&, const DenseNetConfig&) = default;
};

/// 64-px, two block pairs, growth rate 4 (matches configs/desk.cfg).
DenseNetConfig desk_preset();

struct StageShape {
  std::string stage;
  int channels;
  int spatial;
};

/// Channel and spatial extent after each stage, derived from the config
/// without building anything.
std::vector<StageShape> trace_shapes(const DenseNetConfig& cfg);

struct NetworkParams {
  DenseNetConfig config;
  nn::ParamStore store;
};

/// Fresh network: MSRA-initialized weights, zero biases, PReLU slopes 0.25.
NetworkParams build_network(const DenseNetConfig& cfg, std::uint64_t seed);

/// Wraps a loaded store, throwing ConfigMismatch unless every parameter
/// `build_network(cfg)` would create is present with the same shape.
NetworkParams attach_network(const DenseNetConfig& cfg, nn::ParamStore store);

/// Class probabilities [N, num_classes] for a batch [N, 3, px, px]. With
/// `train_mode` false no graph is recorded.
nn::Tensor forward(const NetworkParams& params, const nn::Tensor& batch,
                   bool train_mode);

}  // namespace gradepipe

#endif  // GRADEPIPE_DENSENET_H_
