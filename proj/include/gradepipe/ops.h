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

#ifndef GRADEPIPE_OPS_H_
#define GRADEPIPE_OPS_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "gradepipe/tensor.h"

// Differentiable operators. All of them throw ShapeMismatch on inconsistent
// inputs and record the graph only when grad mode is on and some input
// requires grad.
namespace gradepipe::nn {

/// Cross-correlation of x [N,C,H,W] with weights [O,C,k,k], k in {1, 3}.
/// Same padding (k/2); output spatial extent is ceil(extent / stride).
Tensor conv2d(const Tensor& x, const Tensor& weights, int stride = 1);

/// conv2d(concat_channels(parts), weights) for a 3x3 kernel and stride 1,
/// computed without building the concatenation.
Tensor conv2d_concat(std::span<const Tensor> parts, const Tensor& weights);

/// Adds bias[c] to every element of channel c; x is [N,C,...].
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

/// x if x >= 0, slope[c] * x otherwise. The derivative at 0 is taken from the
/// x >= 0 branch.
Tensor prelu(const Tensor& x, const Tensor& slopes);

Tensor relu(const Tensor& x);

/// Non-overlapping 2x2 mean, stride 2. H and W must be even.
Tensor avg_pool2x2(const Tensor& x);

/// [N,C,H,W] -> [N,C].
Tensor global_avg_pool(const Tensor& x);

/// Concatenation along dim 1 of tensors that agree on every other dim.
Tensor concat_channels(std::span<const Tensor> parts);
Tensor concat_channels(std::initializer_list<Tensor> parts);

/// Channels [begin, begin + count) of x.
Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count);

/// x [N,K], weights [M,K], bias [M] -> x * weights^T + bias, [N,M].
Tensor fully_connected(const Tensor& x, const Tensor& weights, const Tensor& bias);

/// Row-wise softmax of [N,K] with max subtraction.
Tensor softmax(const Tensor& logits);

/// Mean over rows of -sum_k y_k log p_k. Rows of `probs` must sum to 1
/// within 1e-6 (InvalidDistribution otherwise). When `probs` comes straight
/// from softmax the gradient is routed to the logits as (p - y) / N.
Tensor cross_entropy(const Tensor& probs, const Tensor& targets);

Tensor sum(const Tensor& x);

/// Elementwise product of equally shaped tensors.
Tensor mul(const Tensor& a, const Tensor& b);

}  // namespace gradepipe::nn

#endif  // GRADEPIPE_OPS_H_
