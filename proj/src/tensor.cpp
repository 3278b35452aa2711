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

#include "gradepipe/tensor.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <unordered_set>

#include "gradepipe/error.h"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace gradepipe::nn {
namespace {

#if defined(__GLIBC__)
// Activation buffers are allocated and freed at a high rate. Serving them
// from the heap instead of fresh mmaps avoids a page-fault storm.
const bool kAllocatorTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 512 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();
#endif

thread_local bool tls_grad_enabled = true;

}  // namespace

std::size_t element_count(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string dims_string(const Dims& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  return grad;
}

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {}

Tensor::Tensor(Dims dims, double fill) : Tensor() {
  node_->values.assign(element_count(dims), fill);
  node_->dims = std::move(dims);
}

Tensor::Tensor(Dims dims, std::vector<double> values) : Tensor() {
  if (values.size() != element_count(dims)) {
    fail(ErrorCode::kShapeMismatch,
         std::to_string(values.size()) + " values for dims " + dims_string(dims));
  }
  node_->dims = std::move(dims);
  node_->values = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor(Dims{}, std::vector<double>{value}); }

double Tensor::item() const {
  if (size() != 1) {
    fail(ErrorCode::kShapeMismatch, "item() on tensor " + dims_string(dims()));
  }
  return node_->values[0];
}

void Tensor::zero_grad() { node_->grad.assign(node_->values.size(), 0.0); }

Tensor& Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  return *this;
}

Tensor Tensor::detach() const { return Tensor(node_->dims, node_->values); }

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

bool grad_enabled() { return tls_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(tls_grad_enabled) { tls_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { tls_grad_enabled = previous_; }

void backward(const Tensor& loss) {
  if (loss.size() != 1) {
    fail(ErrorCode::kShapeMismatch,
         "backward needs a scalar loss, got " + dims_string(loss.dims()));
  }
  if (!loss.requires_grad()) {
    fail(ErrorCode::kNoGraph, "loss does not depend on any tensor requiring grad");
  }

  // Post-order DFS gives a topological order (parents before children).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* node : order) {
    if (node->propagate) node->grad.assign(node->values.size(), 0.0);
  }
  detail::Node* root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->propagate) (*it)->propagate(**it);
  }
}

}  // namespace gradepipe::nn
