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

#ifndef GRADEPIPE_CONFIG_H_
#define GRADEPIPE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "gradepipe/augment.h"
#include "gradepipe/densenet.h"
#include "gradepipe/optim.h"
#include "gradepipe/roi.h"
#include "gradepipe/synth.h"

namespace gradepipe {

enum class SlideRule { kMaxScore, kRanked };

struct PipelineConfig {
  double train_fraction = 0.8;
  int epochs = 6;
  int batch_size = 10;
  RoiConfig roi;
  DenseNetConfig net;
  nn::AdamConfig adam;
  AugmentConfig augment;
  SynthConfig synth;
  int worker_threads = 1;
  int queue_capacity = 4;  // batches
  bool deterministic = false;
  std::uint64_t global_seed = 0;
  int infer_batch = 8;  // views per forward call at inference
  SlideRule slide_rule = SlideRule::kMaxScore;

  /// Checks every section plus cross-section constraints (patch size must
  /// equal the network input). Throws InvalidConfig.
  void validate() const;
};

/// Flat `key = value` file. `#` starts a comment; blank lines are ignored.
/// Keys carry a section prefix such as `roi.` or `pipeline.`.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Overlays the keys of `kv` on `base`. Unknown keys and malformed values
/// throw InvalidConfig.
PipelineConfig apply_config(const KeyValueConfig& kv, PipelineConfig base = {});

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Every key with its current value, in the file syntax.
std::string to_config_text(const PipelineConfig& cfg);

}  // namespace gradepipe

#endif  // GRADEPIPE_CONFIG_H_
