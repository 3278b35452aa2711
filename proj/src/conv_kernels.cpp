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

#include "conv_kernels.h"

#include <algorithm>
#include <cstring>

#include <Eigen/Core>

namespace gradepipe::nn::kernels {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

// Column matrix [(c_end-c_begin)*k*k, Ho*Wo] for input channels
// [c_begin, c_end); zero outside the input.
void im2col(const ConvGeometry& g, const double* in, std::vector<double>& col,
            std::size_t c_begin, std::size_t c_end) {
  const std::size_t n = g.out_pixels();
  const std::size_t kk = g.kernel * g.kernel;
  col.resize((c_end - c_begin) * kk * n);
  for (std::size_t c = c_begin; c < c_end; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        double* dst = col.data() + ((c - c_begin) * kk + ky * g.kernel + kx) * n;
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const auto sy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          double* row = dst + oy * g.out_width;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.height)) {
            std::fill(row, row + g.out_width, 0.0);
            continue;
          }
          const double* src = in + (c * g.height + static_cast<std::size_t>(sy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const auto sx = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            row[ox] = (sx < 0 || sx >= static_cast<std::ptrdiff_t>(g.width))
                          ? 0.0
                          : src[sx];
          }
        }
      }
    }
  }
}

void im2col(const ConvGeometry& g, const double* in, std::vector<double>& col) {
  im2col(g, in, col, 0, g.channels);
}

void col2im_add(const ConvGeometry& g, const std::vector<double>& col, double* d_in) {
  const std::size_t n = g.out_pixels();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const double* src = col.data() + ((c * g.kernel + ky) * g.kernel + kx) * n;
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const auto sy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad);
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(g.height)) continue;
          double* dst = d_in + (c * g.height + static_cast<std::size_t>(sy)) * g.width;
          const double* row = src + oy * g.out_width;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const auto sx = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
            if (sx >= 0 && sx < static_cast<std::ptrdiff_t>(g.width)) dst[sx] += row[ox];
          }
        }
      }
    }
  }
}

// Copies the C input planes into [C,H+2,W+2] with a zero border.
void pad_planes(const ConvGeometry& g, const double* const* planes, std::vector<double>& pad) {
  const std::size_t pw = g.width + 2;
  const std::size_t plane = (g.height + 2) * pw;
  pad.resize(g.channels * plane);
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* dst = pad.data() + c * plane;
    std::fill(dst, dst + pw, 0.0);
    for (std::size_t y = 0; y < g.height; ++y) {
      double* row = dst + (y + 1) * pw;
      row[0] = 0.0;
      std::memcpy(row + 1, planes[c] + y * g.width, g.width * sizeof(double));
      row[pw - 1] = 0.0;
    }
    std::fill(dst + (g.height + 1) * pw, dst + plane, 0.0);
  }
}

const double* const* contiguous_planes(const ConvGeometry& g, const double* in) {
  thread_local std::vector<const double*> planes;
  planes.resize(g.channels);
  for (std::size_t c = 0; c < g.channels; ++c) planes[c] = in + c * g.height * g.width;
  return planes.data();
}

// Direct 3x3 / stride 1 kernel over a zero-padded copy of the input. A block
// of OB output channels x XB columns of one output row stays in registers
// while the reduction runs over channels and taps.
template <int OB, int XB, bool Accumulate>
void direct_rows(const ConvGeometry& g, const double* pad, const double* weights,
                 double* out, std::size_t o0, std::size_t x0) {
  using Lane = Eigen::Array<double, XB, 1>;
  const std::size_t pw = g.width + 2;
  const std::size_t plane = (g.height + 2) * pw;
  const std::size_t wstride = g.channels * 9;
  for (std::size_t y = 0; y < g.height; ++y) {
    Lane acc[OB];
    for (int b = 0; b < OB; ++b) acc[b].setZero();
    for (std::size_t c = 0; c < g.channels; ++c) {
      const double* wc = weights + o0 * wstride + c * 9;
      const double* base = pad + c * plane + y * pw + x0;
      for (int ky = 0; ky < 3; ++ky) {
        const double* src = base + ky * pw;
        for (int kx = 0; kx < 3; ++kx) {
          Eigen::Map<const Lane> v(src + kx);
          for (int b = 0; b < OB; ++b) acc[b] += wc[b * wstride + ky * 3 + kx] * v;
        }
      }
    }
    for (int b = 0; b < OB; ++b) {
      Eigen::Map<Lane> dst(out + ((o0 + b) * g.height + y) * g.width + x0);
      if constexpr (Accumulate) {
        dst += acc[b];
      } else {
        dst = acc[b];
      }
    }
  }
}

template <bool Accumulate>
void direct_scalar(const ConvGeometry& g, const double* pad, const double* weights,
                   double* out, std::size_t o, std::size_t x0, std::size_t x1) {
  const std::size_t pw = g.width + 2;
  const std::size_t plane = (g.height + 2) * pw;
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x = x0; x < x1; ++x) {
      double acc = 0.0;
      for (std::size_t c = 0; c < g.channels; ++c) {
        const double* wc = weights + (o * g.channels + c) * 9;
        const double* base = pad + c * plane + y * pw + x;
        for (int ky = 0; ky < 3; ++ky) {
          for (int kx = 0; kx < 3; ++kx) acc += wc[ky * 3 + kx] * base[ky * pw + kx];
        }
      }
      double& dst = out[(o * g.height + y) * g.width + x];
      dst = Accumulate ? dst + acc : acc;
    }
  }
}

// out (+)= conv3x3(in, weights), stride 1, zero padding 1.
template <bool Accumulate>
void conv3x3_direct(const ConvGeometry& g, const double* const* planes, const double* weights,
                    double* out) {
  constexpr std::size_t kLane = 32;
  thread_local std::vector<double> pad;
  pad_planes(g, planes, pad);
  const std::size_t full = g.width / kLane * kLane;
  for (std::size_t x0 = 0; x0 < full; x0 += kLane) {
    std::size_t o = 0;
    for (; o + 4 <= g.out_channels; o += 4) {
      direct_rows<4, kLane, Accumulate>(g, pad.data(), weights, out, o, x0);
    }
    for (; o + 2 <= g.out_channels; o += 2) {
      direct_rows<2, kLane, Accumulate>(g, pad.data(), weights, out, o, x0);
    }
    for (; o < g.out_channels; ++o) {
      direct_rows<1, kLane, Accumulate>(g, pad.data(), weights, out, o, x0);
    }
  }
  if (full < g.width) {
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      direct_scalar<Accumulate>(g, pad.data(), weights, out, o, full, g.width);
    }
  }
}

// dW[o, c, tap] for OB output channels of one input channel: 9 * OB
// lane accumulators run over the whole output plane.
template <int OB>
void weight_grad_block(const ConvGeometry& g, const double* pad, const double* d_out,
                       double* d_weights, std::size_t o0, std::size_t c) {
  constexpr int kLane = 8;
  using Lane = Eigen::Array<double, kLane, 1>;
  const std::size_t pw = g.width + 2;
  const double* pc = pad + c * (g.height + 2) * pw;
  const std::size_t plane = g.height * g.width;
  const std::size_t full = g.width / kLane * kLane;
  Lane acc[OB][9];
  double tail[OB][9] = {};
  for (int b = 0; b < OB; ++b) {
    for (int t = 0; t < 9; ++t) acc[b][t].setZero();
  }
  for (std::size_t y = 0; y < g.height; ++y) {
    for (std::size_t x0 = 0; x0 < full; x0 += kLane) {
      Lane dy[OB];
      for (int b = 0; b < OB; ++b) {
        dy[b] = Eigen::Map<const Lane>(d_out + (o0 + b) * plane + y * g.width + x0);
      }
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          Eigen::Map<const Lane> v(pc + (y + ky) * pw + x0 + kx);
          for (int b = 0; b < OB; ++b) acc[b][ky * 3 + kx] += dy[b] * v;
        }
      }
    }
    for (std::size_t x = full; x < g.width; ++x) {
      for (int b = 0; b < OB; ++b) {
        const double dy = d_out[(o0 + b) * plane + y * g.width + x];
        for (int t = 0; t < 9; ++t) tail[b][t] += dy * pc[(y + t / 3) * pw + x + t % 3];
      }
    }
  }
  for (int b = 0; b < OB; ++b) {
    double* dw = d_weights + ((o0 + b) * g.channels + c) * 9;
    for (int t = 0; t < 9; ++t) dw[t] += acc[b][t].sum() + tail[b][t];
  }
}

}  // namespace

ConvGeometry make_geometry(std::size_t channels, std::size_t height,
                           std::size_t width, std::size_t out_channels,
                           std::size_t kernel, std::size_t stride) {
  ConvGeometry g{};
  g.channels = channels;
  g.height = height;
  g.width = width;
  g.out_channels = out_channels;
  g.kernel = kernel;
  g.stride = stride;
  g.pad = kernel / 2;
  g.out_height = (height + 2 * g.pad - kernel) / stride + 1;
  g.out_width = (width + 2 * g.pad - kernel) / stride + 1;
  return g;
}

void conv3x3_forward_planes(const ConvGeometry& g, const double* const* planes,
                            const double* weights, double* out) {
  conv3x3_direct<false>(g, planes, weights, out);
}

void conv3x3_backward_weights_planes(const ConvGeometry& g, const double* const* planes,
                                     const double* d_out, double* d_weights) {
  thread_local std::vector<double> pad;
  pad_planes(g, planes, pad);
  for (std::size_t c = 0; c < g.channels; ++c) {
    std::size_t o = 0;
    for (; o + 2 <= g.out_channels; o += 2) {
      weight_grad_block<2>(g, pad.data(), d_out, d_weights, o, c);
    }
    for (; o < g.out_channels; ++o) weight_grad_block<1>(g, pad.data(), d_out, d_weights, o, c);
  }
}

void conv_forward(const ConvGeometry& g, const double* in, const double* weights,
                  double* out) {
  if (g.kernel == 3 && g.stride == 1) {
    conv3x3_direct<false>(g, contiguous_planes(g, in), weights, out);
    return;
  }
  MutMap result(out, static_cast<Eigen::Index>(g.out_channels),
                static_cast<Eigen::Index>(g.out_pixels()));
  ConstMap w(weights, static_cast<Eigen::Index>(g.out_channels),
             static_cast<Eigen::Index>(g.patch_rows()));
  if (g.kernel == 1 && g.stride == 1) {
    result.noalias() = w * ConstMap(in, static_cast<Eigen::Index>(g.channels),
                                    static_cast<Eigen::Index>(g.out_pixels()));
    return;
  }
  thread_local std::vector<double> col;
  im2col(g, in, col);
  result.noalias() = w * ConstMap(col.data(), static_cast<Eigen::Index>(g.patch_rows()),
                                  static_cast<Eigen::Index>(g.out_pixels()));
}

void conv_backward_weights(const ConvGeometry& g, const double* in,
                           const double* d_out, double* d_weights) {
  MutMap dw(d_weights, static_cast<Eigen::Index>(g.out_channels),
            static_cast<Eigen::Index>(g.patch_rows()));
  ConstMap dy(d_out, static_cast<Eigen::Index>(g.out_channels),
              static_cast<Eigen::Index>(g.out_pixels()));
  if (g.kernel == 1 && g.stride == 1) {
    dw.noalias() += dy * ConstMap(in, static_cast<Eigen::Index>(g.channels),
                                  static_cast<Eigen::Index>(g.out_pixels()))
                             .transpose();
    return;
  }
  if (g.kernel == 3 && g.stride == 1) {
    conv3x3_backward_weights_planes(g, contiguous_planes(g, in), d_out, d_weights);
    return;
  }
  // Column chunks small enough to stay in cache.
  constexpr std::size_t kChunkDoubles = std::size_t{1} << 16;
  const std::size_t kk = g.kernel * g.kernel;
  const std::size_t chunk =
      std::max<std::size_t>(1, kChunkDoubles / (kk * g.out_pixels()));
  thread_local std::vector<double> col;
  for (std::size_t c0 = 0; c0 < g.channels; c0 += chunk) {
    const std::size_t c1 = std::min(g.channels, c0 + chunk);
    const auto rows = static_cast<Eigen::Index>((c1 - c0) * kk);
    im2col(g, in, col, c0, c1);
    dw.middleCols(static_cast<Eigen::Index>(c0 * kk), rows).noalias() +=
        dy * ConstMap(col.data(), rows, static_cast<Eigen::Index>(g.out_pixels())).transpose();
  }
}

void conv_backward_input(const ConvGeometry& g, const double* weights,
                         const double* d_out, double* d_in) {
  ConstMap w(weights, static_cast<Eigen::Index>(g.out_channels),
             static_cast<Eigen::Index>(g.patch_rows()));
  ConstMap dy(d_out, static_cast<Eigen::Index>(g.out_channels),
              static_cast<Eigen::Index>(g.out_pixels()));
  if (g.kernel == 1 && g.stride == 1) {
    MutMap dx(d_in, static_cast<Eigen::Index>(g.channels),
              static_cast<Eigen::Index>(g.out_pixels()));
    dx.noalias() += w.transpose() * dy;
    return;
  }
  if (g.kernel == 3 && g.stride == 1) {
    // Transposed convolution = 3x3 convolution of d_out with the kernel
    // flipped in space and transposed in channels.
    thread_local std::vector<double> flipped;
    flipped.resize(g.out_channels * g.channels * 9);
    for (std::size_t o = 0; o < g.out_channels; ++o) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        const double* src = weights + (o * g.channels + c) * 9;
        double* dst = flipped.data() + (c * g.out_channels + o) * 9;
        for (int t = 0; t < 9; ++t) dst[t] = src[8 - t];
      }
    }
    const ConvGeometry gt = make_geometry(g.out_channels, g.height, g.width, g.channels, 3, 1);
    conv3x3_direct<true>(gt, contiguous_planes(gt, d_out), flipped.data(), d_in);
    return;
  }
  thread_local std::vector<double> col;
  col.resize(g.patch_rows() * g.out_pixels());
  MutMap dcol(col.data(), static_cast<Eigen::Index>(g.patch_rows()),
              static_cast<Eigen::Index>(g.out_pixels()));
  dcol.noalias() = w.transpose() * dy;
  col2im_add(g, col, d_in);
}

}  // namespace gradepipe::nn::kernels
