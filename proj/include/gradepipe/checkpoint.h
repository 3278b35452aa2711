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

#ifndef GRADEPIPE_CHECKPOINT_H_
#define GRADEPIPE_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gradepipe/optim.h"

namespace gradepipe::nn {

// Checkpoint container, little-endian:
//   "TNCP" | version u32 | tensor_count u32 |
//   per tensor: name_len u16 | name | ndim u8 | dims u32 x ndim |
//               dtype u8 (1 = fp32, 2 = fp64) | raw values
// A ParamStore is written as each parameter followed by "<name>.m" and
// "<name>.v", then a 0-d tensor "t" holding the Adam step count.
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

struct NamedTensor {
  std::string name;
  Dims dims;
  std::vector<double> values;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

std::vector<std::uint8_t> encode_tensors(std::span<const NamedTensor> tensors,
                                         DType dtype = DType::kFloat64);
std::vector<NamedTensor> decode_tensors(std::span<const std::uint8_t> bytes);

std::vector<NamedTensor> to_named_tensors(const ParamStore& store);
ParamStore from_named_tensors(const std::vector<NamedTensor>& tensors);

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path,
                     DType dtype = DType::kFloat64);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace gradepipe::nn

#endif  // GRADEPIPE_CHECKPOINT_H_
