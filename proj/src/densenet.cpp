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

#include "gradepipe/densenet.h"

#include <optional>

#include "gradepipe/error.h"
#include "gradepipe/ops.h"
#include "gradepipe/rng.h"

namespace gradepipe {
namespace {

using nn::Dims;
using nn::Tensor;

std::string unit_name(int block, int unit) {
  return "dense" + std::to_string(block) + ".unit" + std::to_string(unit);
}

std::string down_name(int block) { return "down" + std::to_string(block); }

// Every parameter in creation order: (name, dims, fan_in or 0 for zeros,
// or -1 for PReLU slopes).
struct ParamSpec {
  std::string name;
  Dims dims;
  long fan_in;
};

std::vector<ParamSpec> parameter_specs(const DenseNetConfig& cfg) {
  std::vector<ParamSpec> specs;
  const auto s = static_cast<std::size_t>(cfg.stem_maps);
  specs.push_back({"stem.conv.w", {s, 3, 3, 3}, 27});
  specs.push_back({"stem.conv.b", {s}, 0});
  specs.push_back({"stem.prelu", {s}, -1});
  std::size_t c = s;
  const auto g = static_cast<std::size_t>(cfg.growth_rate);
  for (int b = 0; b < cfg.block_pairs; ++b) {
    for (int u = 0; u < cfg.extractors_per_block; ++u) {
      specs.push_back({unit_name(b, u) + ".w", {g, c, 3, 3}, static_cast<long>(c * 9)});
      specs.push_back({unit_name(b, u) + ".b", {g}, 0});
      c += g;
    }
    specs.push_back({down_name(b) + ".w", {2 * c, c, 1, 1}, static_cast<long>(c)});
    specs.push_back({down_name(b) + ".b", {2 * c}, 0});
    c *= 2;
  }
  const auto hidden = static_cast<std::size_t>(cfg.hidden_units);
  const auto classes = static_cast<std::size_t>(cfg.num_classes);
  specs.push_back({"head.fc1.w", {hidden, c}, static_cast<long>(c)});
  specs.push_back({"head.fc1.b", {hidden}, 0});
  specs.push_back({"head.fc2.w", {classes, hidden}, static_cast<long>(hidden)});
  specs.push_back({"head.fc2.b", {classes}, 0});
  return specs;
}

}  // namespace

void DenseNetConfig::validate() const {
  const auto positive = [](int v, const char* key) {
    if (v < 1) fail(ErrorCode::kInvalidConfig, std::string("net.") + key + " must be >= 1");
  };
  positive(stem_maps, "stem_maps");
  positive(extractors_per_block, "extractors_per_block");
  positive(growth_rate, "growth_rate");
  positive(block_pairs, "block_pairs");
  positive(hidden_units, "hidden_units");
  positive(num_classes, "num_classes");
  positive(input_px, "input_px");
  if (block_pairs > 20 || input_px % (1 << block_pairs) != 0) {
    fail(ErrorCode::kInvalidConfig,
         "net.input_px (" + std::to_string(input_px) + ") must be divisible by 2^block_pairs");
  }
}

DenseNetConfig desk_preset() {
  DenseNetConfig cfg;
  cfg.block_pairs = 2;
  cfg.growth_rate = 4;
  cfg.input_px = 64;
  return cfg;
}

std::vector<StageShape> trace_shapes(const DenseNetConfig& cfg) {
  cfg.validate();
  std::vector<StageShape> trace;
  int c = cfg.stem_maps;
  int px = cfg.input_px;
  trace.push_back({"stem", c, px});
  for (int b = 0; b < cfg.block_pairs; ++b) {
    c += cfg.extractors_per_block * cfg.growth_rate;
    trace.push_back({"dense" + std::to_string(b), c, px});
    c *= 2;
    px /= 2;
    trace.push_back({down_name(b), c, px});
  }
  trace.push_back({"gap", c, 1});
  trace.push_back({"fc1", cfg.hidden_units, 1});
  trace.push_back({"fc2", cfg.num_classes, 1});
  return trace;
}

NetworkParams build_network(const DenseNetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkParams net{cfg, {}};
  std::uint64_t index = 0;
  for (const ParamSpec& spec : parameter_specs(cfg)) {
    Tensor init;
    if (spec.fan_in > 0) {
      init = nn::msra_init(spec.dims, static_cast<std::size_t>(spec.fan_in),
                           derive_seed(seed, index));
    } else {
      init = Tensor(spec.dims, spec.fan_in < 0 ? 0.25 : 0.0);
    }
    net.store.add(spec.name, std::move(init));
    ++index;
  }
  return net;
}

NetworkParams attach_network(const DenseNetConfig& cfg, nn::ParamStore store) {
  cfg.validate();
  const auto specs = parameter_specs(cfg);
  for (const ParamSpec& spec : specs) {
    if (!store.contains(spec.name)) {
      fail(ErrorCode::kConfigMismatch, "checkpoint lacks parameter '" + spec.name + "'");
    }
    if (store.get(spec.name).dims() != spec.dims) {
      fail(ErrorCode::kConfigMismatch,
           "parameter '" + spec.name + "' is " + nn::dims_string(store.get(spec.name).dims()) +
               ", config expects " + nn::dims_string(spec.dims));
    }
  }
  if (store.entries().size() != specs.size()) {
    fail(ErrorCode::kConfigMismatch, "checkpoint has parameters the config does not define");
  }
  return NetworkParams{cfg, std::move(store)};
}

Tensor forward(const NetworkParams& params, const Tensor& batch, bool train_mode) {
  const DenseNetConfig& cfg = params.config;
  const auto px = static_cast<std::size_t>(cfg.input_px);
  if (batch.rank() != 4 || batch.dim(1) != 3 || batch.dim(2) != px || batch.dim(3) != px) {
    fail(ErrorCode::kShapeMismatch, "network expects [N,3," + std::to_string(px) + "," +
                                        std::to_string(px) + "], got " +
                                        nn::dims_string(batch.dims()));
  }
  std::optional<nn::NoGradGuard> no_grad;
  if (!train_mode) no_grad.emplace();

  const nn::ParamStore& p = params.store;
  Tensor x = nn::conv2d(batch, p.get("stem.conv.w"));
  x = nn::add_channel_bias(x, p.get("stem.conv.b"));
  x = nn::prelu(x, p.get("stem.prelu"));

  for (int b = 0; b < cfg.block_pairs; ++b) {
    // ReLU is elementwise, so relu(concat(parts)) is the concatenation of
    // parts that are each activated once.
    std::vector<Tensor> features{x};
    std::vector<Tensor> activated{nn::relu(x)};
    for (int u = 0; u < cfg.extractors_per_block; ++u) {
      Tensor y = nn::conv2d_concat(activated, p.get(unit_name(b, u) + ".w"));
      features.push_back(nn::add_channel_bias(y, p.get(unit_name(b, u) + ".b")));
      if (u + 1 < cfg.extractors_per_block) activated.push_back(nn::relu(features.back()));
    }
    // Pooling commutes with the 1x1 convolution and the bias; pooling first
    // does a quarter of the work.
    x = nn::avg_pool2x2(nn::concat_channels(features));
    x = nn::conv2d(x, p.get(down_name(b) + ".w"));
    x = nn::add_channel_bias(x, p.get(down_name(b) + ".b"));
  }

  x = nn::global_avg_pool(x);
  x = nn::relu(nn::fully_connected(x, p.get("head.fc1.w"), p.get("head.fc1.b")));
  x = nn::fully_connected(x, p.get("head.fc2.w"), p.get("head.fc2.b"));
  return nn::softmax(x);
}

}  // namespace gradepipe
