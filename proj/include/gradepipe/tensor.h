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

#ifndef GRADEPIPE_TENSOR_H_
#define GRADEPIPE_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gradepipe::nn {

using Dims = std::vector<std::size_t>;

std::size_t element_count(const Dims& dims);
std::string dims_string(const Dims& dims);

namespace detail {

// Graph node. Values are fixed once an op returns; `grad` is allocated on
// demand. `propagate` pushes this node's grad into its parents' grads.
struct Node {
  Dims dims;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> propagate;
  // Set by softmax so cross_entropy can take the fused (p - y) route.
  std::shared_ptr<Node> softmax_logits;

  std::vector<double>& ensure_grad();
};

}  // namespace detail

/// Dense fp64 tensor with optional reverse-mode gradient tracking.
/// Layout is row-major; 4-D tensors are batch x channel x height x width.
/// Copies share storage (handle semantics), like the graph they belong to.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Dims dims, double fill = 0.0);
  Tensor(Dims dims, std::vector<double> values);

  static Tensor scalar(double value);

  const Dims& dims() const { return node_->dims; }
  std::size_t dim(std::size_t i) const { return node_->dims.at(i); }
  std::size_t rank() const { return node_->dims.size(); }
  std::size_t size() const { return node_->values.size(); }

  std::span<const double> values() const { return node_->values; }
  /// Mutating values of a tensor that already feeds a recorded graph
  /// invalidates that graph; intended for leaves (parameters, inputs).
  std::span<double> mutable_values() { return node_->values; }
  double item() const;

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();
  void clear_grad() { node_->grad.clear(); }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on);

  /// Copy of the values with no graph attached.
  Tensor detach() const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  // Used by op implementations.
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Whether new ops record the graph on this thread.
bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
/// intermediate gradients are recomputed from zero on every call.
/// Throws NoGraph when `loss` does not depend on anything requiring grad.
void backward(const Tensor& loss);

}  // namespace gradepipe::nn

#endif  // GRADEPIPE_TENSOR_H_
