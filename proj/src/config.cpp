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

#include "gradepipe/config.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <type_traits>
#include <utility>
#include <sstream>
#include <vector>

#include "gradepipe/error.h"

namespace gradepipe {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorCode::kInvalidConfig, "bad value '" + value + "' for " + key);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Binds one key to a field: a parser and a printer.
struct Binding {
  std::string key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename Field>
Binding bind(std::string key, std::function<Field&(PipelineConfig&)> field) {
  Binding b;
  b.key = key;
  b.set = [key, field](PipelineConfig& c, const std::string& v) {
    Field& f = field(c);
    if constexpr (std::is_same_v<Field, bool>) {
      f = parse_bool(key, v);
    } else {
      f = parse_number<Field>(key, v);
    }
  };
  b.get = [field](const PipelineConfig& c) {
    const Field& f = field(const_cast<PipelineConfig&>(c));
    if constexpr (std::is_same_v<Field, bool>) {
      return std::string(f ? "true" : "false");
    } else if constexpr (std::is_floating_point_v<Field>) {
      return fmt_double(f);
    } else {
      return std::to_string(f);
    }
  };
  return b;
}

#define GP_BIND(key, expr)                                                        \
  bind<std::remove_reference_t<decltype(std::declval<PipelineConfig&>().expr)>>( \
      key, [](PipelineConfig& c) -> auto& { return c.expr; })

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t{
        GP_BIND("roi.green_red_ratio", roi.green_red_ratio),
        GP_BIND("roi.median_disk_px", roi.median_disk_px),
        GP_BIND("roi.work_factor", roi.work_factor),
        GP_BIND("roi.patch_px", roi.patch_px),
        GP_BIND("roi.num_patches", roi.num_patches),
        GP_BIND("roi.sampling_seed", roi.sampling_seed),
        GP_BIND("net.stem_maps", net.stem_maps),
        GP_BIND("net.extractors_per_block", net.extractors_per_block),
        GP_BIND("net.growth_rate", net.growth_rate),
        GP_BIND("net.block_pairs", net.block_pairs),
        GP_BIND("net.hidden_units", net.hidden_units),
        GP_BIND("net.num_classes", net.num_classes),
        GP_BIND("net.input_px", net.input_px),
        GP_BIND("adam.learning_rate", adam.learning_rate),
        GP_BIND("adam.beta1", adam.beta1),
        GP_BIND("adam.beta2", adam.beta2),
        GP_BIND("adam.epsilon", adam.epsilon),
        GP_BIND("augment.color_shift_max", augment.color_shift_max),
        GP_BIND("augment.elastic_alpha", augment.elastic_alpha),
        GP_BIND("augment.elastic_sigma", augment.elastic_sigma),
        GP_BIND("augment.seed", augment.seed),
        GP_BIND("synth.base_width", synth.base_width),
        GP_BIND("synth.base_height", synth.base_height),
        GP_BIND("synth.work_factor", synth.work_factor),
        GP_BIND("synth.tissue_blob_count", synth.tissue_blob_count),
        GP_BIND("synth.tissue_radius_min_px", synth.tissue_radius_min_px),
        GP_BIND("synth.tissue_radius_max_px", synth.tissue_radius_max_px),
        GP_BIND("synth.lesion_coverage", synth.lesion_coverage),
        GP_BIND("synth.noise_sigma", synth.noise_sigma),
        GP_BIND("pipeline.train_fraction", train_fraction),
        GP_BIND("pipeline.epochs", epochs),
        GP_BIND("pipeline.batch_size", batch_size),
        GP_BIND("pipeline.worker_threads", worker_threads),
        GP_BIND("pipeline.queue_capacity", queue_capacity),
        GP_BIND("pipeline.deterministic", deterministic),
        GP_BIND("pipeline.global_seed", global_seed),
        GP_BIND("pipeline.infer_batch", infer_batch),
    };
    Binding rule;
    rule.key = "pipeline.slide_rule";
    rule.set = [](PipelineConfig& c, const std::string& v) {
      if (v == "max") {
        c.slide_rule = SlideRule::kMaxScore;
      } else if (v == "ranked") {
        c.slide_rule = SlideRule::kRanked;
      } else {
        bad_value("pipeline.slide_rule", v);
      }
    };
    rule.get = [](const PipelineConfig& c) {
      return std::string(c.slide_rule == SlideRule::kRanked ? "ranked" : "max");
    };
    t.push_back(std::move(rule));
    return t;
  }();
  return table;
}

#undef GP_BIND

}  // namespace

void PipelineConfig::validate() const {
  roi.validate();
  net.validate();
  adam.validate();
  augment.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "pipeline.train_fraction must be in (0, 1)");
  }
  if (epochs < 0) fail(ErrorCode::kInvalidConfig, "pipeline.epochs must be >= 0");
  if (batch_size < 1) fail(ErrorCode::kInvalidConfig, "pipeline.batch_size must be >= 1");
  if (worker_threads < 1) fail(ErrorCode::kInvalidConfig, "pipeline.worker_threads must be >= 1");
  if (queue_capacity < 1) fail(ErrorCode::kInvalidConfig, "pipeline.queue_capacity must be >= 1");
  if (infer_batch < 1) fail(ErrorCode::kInvalidConfig, "pipeline.infer_batch must be >= 1");
  if (net.num_classes != kNumSlideLabels) {
    fail(ErrorCode::kInvalidConfig, "net.num_classes must be 4");
  }
  if (net.input_px != roi.patch_px) {
    fail(ErrorCode::kInvalidConfig,
         "net.input_px (" + std::to_string(net.input_px) + ") must equal roi.patch_px (" +
             std::to_string(roi.patch_px) + ")");
  }
}

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kInvalidConfig,
           origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      fail(ErrorCode::kInvalidConfig, origin + ":" + std::to_string(line_no) + ": empty key");
    }
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoFailure, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

PipelineConfig apply_config(const KeyValueConfig& kv, PipelineConfig base) {
  for (const auto& [key, value] : kv.values()) {
    const auto& table = bindings();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const Binding& b) { return b.key == key; });
    if (it == table.end()) fail(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
    it->set(base, value);
  }
  return base;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  PipelineConfig cfg = apply_config(KeyValueConfig::load(path));
  cfg.validate();
  return cfg;
}

std::string to_config_text(const PipelineConfig& cfg) {
  std::string out;
  for (const Binding& b : bindings()) out += b.key + " = " + b.get(cfg) + "\n";
  return out;
}

}  // namespace gradepipe
