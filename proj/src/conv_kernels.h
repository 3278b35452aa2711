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

#ifndef GRADEPIPE_SRC_CONV_KERNELS_H_
#define GRADEPIPE_SRC_CONV_KERNELS_H_

#include <cstddef>
#include <vector>

namespace gradepipe::nn::kernels {

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t out_channels, kernel, stride, pad;
  std::size_t out_height, out_width;

  std::size_t patch_rows() const { return channels * kernel * kernel; }
  std::size_t out_pixels() const { return out_height * out_width; }
};

ConvGeometry make_geometry(std::size_t channels, std::size_t height,
                           std::size_t width, std::size_t out_channels,
                           std::size_t kernel, std::size_t stride);

// Single-sample kernels; `in` is [C,H,W], `out` is [O,Ho,Wo].
void conv_forward(const ConvGeometry& g, const double* in, const double* weights,
                  double* out);

// d_weights += d_out * col(in)^T
void conv_backward_weights(const ConvGeometry& g, const double* in,
                           const double* d_out, double* d_weights);

// d_in += col2im(weights^T * d_out)
void conv_backward_input(const ConvGeometry& g, const double* weights,
                         const double* d_out, double* d_in);

// 3x3 / stride 1 variants reading input channel c from planes[c] (H*W
// values each), so a channel concatenation need not be materialized.
void conv3x3_forward_planes(const ConvGeometry& g, const double* const* planes,
                            const double* weights, double* out);
void conv3x3_backward_weights_planes(const ConvGeometry& g, const double* const* planes,
                                     const double* d_out, double* d_weights);

}  // namespace gradepipe::nn::kernels

#endif  // GRADEPIPE_SRC_CONV_KERNELS_H_
