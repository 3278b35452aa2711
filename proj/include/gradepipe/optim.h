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

#ifndef GRADEPIPE_OPTIM_H_
#define GRADEPIPE_OPTIM_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gradepipe/tensor.h"

namespace gradepipe::nn {

/// Zero-mean Gaussian with standard deviation sqrt(2 / fan_in).
Tensor msra_init(const Dims& dims, std::size_t fan_in, std::uint64_t seed);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Named trainable tensors in insertion order, with Adam moments and the
/// shared step counter.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor param;
    std::vector<double> m;
    std::vector<double> v;
  };

  /// Registers `init` (marked as requiring grad) and returns its handle.
  /// Names ending in ".m"/".v", or equal to "t", are reserved for the
  /// checkpoint layout and rejected.
  Tensor add(const std::string& name, Tensor init);

  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t parameter_count() const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t t) { step_ = t; }

  void zero_grad();

  /// Deep copy: fresh tensors, same values and optimizer state.
  ParamStore clone() const;

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
  std::int64_t step_ = 0;
};

/// One Adam update with bias correction; epsilon is added outside the root.
/// Throws MissingGradient when a parameter has no gradient buffer.
void adam_step(ParamStore& store, const AdamConfig& cfg);

}  // namespace gradepipe::nn

#endif  // GRADEPIPE_OPTIM_H_
