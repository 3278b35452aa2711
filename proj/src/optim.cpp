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

#include "gradepipe/optim.h"

#include <cmath>
#include <random>

#include "gradepipe/error.h"
#include "gradepipe/rng.h"

namespace gradepipe::nn {

Tensor msra_init(const Dims& dims, std::size_t fan_in, std::uint64_t seed) {
  if (fan_in < 1) fail(ErrorCode::kInvalidConfig, "msra_init: fan_in must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Tensor t(dims);
  for (double& v : t.mutable_values()) v = normal(rng);
  return t;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0)) fail(ErrorCode::kInvalidConfig, "adam.learning_rate must be > 0");
  if (!(beta1 >= 0 && beta1 < 1)) fail(ErrorCode::kInvalidConfig, "adam.beta1 must be in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) fail(ErrorCode::kInvalidConfig, "adam.beta2 must be in [0, 1)");
  if (!(epsilon > 0)) fail(ErrorCode::kInvalidConfig, "adam.epsilon must be > 0");
}

namespace {

bool reserved_name(const std::string& name) {
  const auto ends_with = [&](const char* suffix) {
    const std::string s(suffix);
    return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
  };
  return name.empty() || name == "t" || ends_with(".m") || ends_with(".v");
}

}  // namespace

Tensor ParamStore::add(const std::string& name, Tensor init) {
  if (reserved_name(name)) {
    fail(ErrorCode::kInvalidConfig, "parameter name '" + name + "' is reserved");
  }
  if (index_.count(name)) {
    fail(ErrorCode::kInvalidConfig, "duplicate parameter '" + name + "'");
  }
  init.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.push_back({name, init, std::vector<double>(init.size(), 0.0),
                      std::vector<double>(init.size(), 0.0)});
  return init;
}

bool ParamStore::contains(const std::string& name) const { return index_.count(name) > 0; }

const Tensor& ParamStore::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::kConfigMismatch, "no parameter '" + name + "'");
  return entries_[it->second].param;
}

Tensor& ParamStore::get(const std::string& name) {
  return const_cast<Tensor&>(static_cast<const ParamStore&>(*this).get(name));
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.param.size();
  return n;
}

void ParamStore::zero_grad() {
  for (Entry& e : entries_) e.param.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore copy;
  for (const Entry& e : entries_) {
    copy.add(e.name, e.param.detach());
    copy.entries_.back().m = e.m;
    copy.entries_.back().v = e.v;
  }
  copy.step_ = step_;
  return copy;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.step_ != b.step_ || a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.name != y.name || x.param.dims() != y.param.dims() || x.m != y.m || x.v != y.v) {
      return false;
    }
    if (!std::equal(x.param.values().begin(), x.param.values().end(),
                    y.param.values().begin())) {
      return false;
    }
  }
  return true;
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  for (const auto& e : store.entries()) {
    if (!e.param.has_grad()) {
      fail(ErrorCode::kMissingGradient, "parameter '" + e.name + "' has no gradient");
    }
  }
  const std::int64_t t = store.step() + 1;
  store.set_step(t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& e : store.entries()) {
    auto theta = e.param.mutable_values();
    const auto g = e.param.grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
      e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = e.m[i] / bc1;
      const double v_hat = e.v[i] / bc2;
      theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace gradepipe::nn
