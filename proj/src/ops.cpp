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

#include "gradepipe/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "conv_kernels.h"
#include "gradepipe/error.h"

namespace gradepipe::nn {
namespace {

using detail::Node;

[[noreturn]] void shape_error(const std::string& op, const std::string& what) {
  fail(ErrorCode::kShapeMismatch, op + ": " + what);
}

void require_rank(const std::string& op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    shape_error(op, "expected rank " + std::to_string(rank) + ", got " +
                        dims_string(t.dims()));
  }
}

// Wraps computed values into a tensor, recording `propagate` only when some
// input needs a gradient and grad mode is on.
Tensor make_result(Dims dims, std::vector<double> values,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> propagate) {
  auto node = std::make_shared<Node>();
  node->dims = std::move(dims);
  node->values = std::move(values);
  const bool track =
      grad_enabled() &&
      std::any_of(parents.begin(), parents.end(),
                  [](const std::shared_ptr<Node>& p) { return p->requires_grad; });
  if (track) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->propagate = std::move(propagate);
  }
  return Tensor::from_node(std::move(node));
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weights, int stride) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", weights, 4);
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t o = weights.dim(0), k = weights.dim(2);
  if (weights.dim(1) != c) {
    shape_error("conv2d", "input has " + std::to_string(c) + " channels, weights expect " +
                              std::to_string(weights.dim(1)));
  }
  if (weights.dim(3) != k || (k != 1 && k != 3)) {
    shape_error("conv2d", "kernel must be 1x1 or 3x3, got " + dims_string(weights.dims()));
  }
  if (stride < 1) shape_error("conv2d", "stride must be >= 1");
  const auto g = kernels::make_geometry(c, h, w, o, k, static_cast<std::size_t>(stride));
  const std::size_t in_size = c * h * w;
  const std::size_t out_size = o * g.out_pixels();

  std::vector<double> out(n * out_size);
  const double* xv = x.values().data();
  const double* wv = weights.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    kernels::conv_forward(g, xv + i * in_size, wv, out.data() + i * out_size);
  }
  return make_result(
      {n, o, g.out_height, g.out_width}, std::move(out), {x.node(), weights.node()},
      [g, n, in_size, out_size](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        if (wn.requires_grad) {
          auto& dw = wn.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            kernels::conv_backward_weights(g, xn.values.data() + i * in_size,
                                           self.grad.data() + i * out_size, dw.data());
          }
        }
        if (xn.requires_grad) {
          auto& dx = xn.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            kernels::conv_backward_input(g, wn.values.data(),
                                         self.grad.data() + i * out_size,
                                         dx.data() + i * in_size);
          }
        }
      });
}

Tensor conv2d_concat(std::span<const Tensor> parts, const Tensor& weights) {
  if (parts.empty()) shape_error("conv2d_concat", "no inputs");
  require_rank("conv2d_concat", weights, 4);
  const Tensor& first = parts.front();
  require_rank("conv2d_concat", first, 4);
  const std::size_t n = first.dim(0), h = first.dim(2), w = first.dim(3);
  std::size_t c = 0;
  std::vector<std::size_t> channels;
  std::vector<std::shared_ptr<Node>> parents;
  for (const Tensor& t : parts) {
    require_rank("conv2d_concat", t, 4);
    if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w) {
      shape_error("conv2d_concat", "mismatched dims " + dims_string(t.dims()) + " vs " +
                                       dims_string(first.dims()));
    }
    channels.push_back(t.dim(1));
    c += t.dim(1);
    parents.push_back(t.node());
  }
  if (weights.dim(1) != c || weights.dim(2) != 3 || weights.dim(3) != 3) {
    shape_error("conv2d_concat", "weights " + dims_string(weights.dims()) + " for " +
                                     std::to_string(c) + " input channels");
  }
  parents.push_back(weights.node());
  const std::size_t o = weights.dim(0);
  const auto g = kernels::make_geometry(c, h, w, o, 3, 1);
  const std::size_t plane = h * w;
  const std::size_t out_size = o * plane;

  // Plane pointers of sample i, in concatenation order.
  auto planes_of = [channels, plane, n](const std::vector<const Node*>& nodes, std::size_t i,
                                        std::vector<const double*>& planes) {
    planes.clear();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double* base = nodes[k]->values.data() + i * channels[k] * plane;
      for (std::size_t ch = 0; ch < channels[k]; ++ch) planes.push_back(base + ch * plane);
    }
  };
  std::vector<const Node*> nodes;
  for (const Tensor& t : parts) nodes.push_back(t.node().get());

  std::vector<double> out(n * out_size);
  std::vector<const double*> planes;
  for (std::size_t i = 0; i < n; ++i) {
    planes_of(nodes, i, planes);
    kernels::conv3x3_forward_planes(g, planes.data(), weights.values().data(),
                                    out.data() + i * out_size);
  }
  return make_result(
      {n, o, h, w}, std::move(out), std::move(parents),
      [g, n, plane, out_size, channels, planes_of](Node& self) {
        const std::size_t k_parts = channels.size();
        Node& wn = *self.parents[k_parts];
        std::vector<const Node*> inputs;
        for (std::size_t k = 0; k < k_parts; ++k) inputs.push_back(self.parents[k].get());
        std::vector<const double*> planes;
        if (wn.requires_grad) {
          auto& dw = wn.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            planes_of(inputs, i, planes);
            kernels::conv3x3_backward_weights_planes(g, planes.data(),
                                                     self.grad.data() + i * out_size, dw.data());
          }
        }
        bool any_input = false;
        for (std::size_t k = 0; k < k_parts; ++k) any_input |= self.parents[k]->requires_grad;
        if (!any_input) return;
        std::vector<double> dx(g.channels * plane);
        for (std::size_t i = 0; i < n; ++i) {
          std::fill(dx.begin(), dx.end(), 0.0);
          kernels::conv_backward_input(g, wn.values.data(), self.grad.data() + i * out_size,
                                       dx.data());
          std::size_t offset = 0;
          for (std::size_t k = 0; k < k_parts; ++k) {
            Node& pn = *self.parents[k];
            const std::size_t chunk = channels[k] * plane;
            if (pn.requires_grad) {
              double* dst = pn.ensure_grad().data() + i * chunk;
              const double* src = dx.data() + offset;
              for (std::size_t j = 0; j < chunk; ++j) dst[j] += src[j];
            }
            offset += chunk;
          }
        }
      });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() < 2) shape_error("add_channel_bias", "input rank must be >= 2");
  require_rank("add_channel_bias", bias, 1);
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (bias.dim(0) != c) shape_error("add_channel_bias", "bias length != channel count");
  const std::size_t inner = x.size() / (n * c);
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto b = bias.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* p = out.data() + (i * c + ch) * inner;
      for (std::size_t j = 0; j < inner; ++j) p[j] += b[ch];
    }
  }
  return make_result(x.dims(), std::move(out), {x.node(), bias.node()},
                     [n, c, inner](Node& self) {
                       Node& xn = *self.parents[0];
                       Node& bn = *self.parents[1];
                       if (xn.requires_grad) {
                         auto& dx = xn.ensure_grad();
                         for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += self.grad[i];
                       }
                       if (bn.requires_grad) {
                         auto& db = bn.ensure_grad();
                         for (std::size_t i = 0; i < n; ++i) {
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             const double* g = self.grad.data() + (i * c + ch) * inner;
                             double s = 0.0;
                             for (std::size_t j = 0; j < inner; ++j) s += g[j];
                             db[ch] += s;
                           }
                         }
                       }
                     });
}

Tensor prelu(const Tensor& x, const Tensor& slopes) {
  if (x.rank() < 2) shape_error("prelu", "input rank must be >= 2");
  require_rank("prelu", slopes, 1);
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (slopes.dim(0) != c) {
    shape_error("prelu", std::to_string(slopes.dim(0)) + " slopes for " +
                             std::to_string(c) + " channels");
  }
  const std::size_t inner = x.size() / (n * c);
  const auto xv = x.values();
  const auto a = slopes.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t off = (i * c + ch) * inner;
      for (std::size_t j = 0; j < inner; ++j) {
        const double v = xv[off + j];
        out[off + j] = v >= 0.0 ? v : a[ch] * v;
      }
    }
  }
  return make_result(
      x.dims(), std::move(out), {x.node(), slopes.node()}, [n, c, inner](Node& self) {
        Node& xn = *self.parents[0];
        Node& an = *self.parents[1];
        const auto& xv = xn.values;
        const auto& av = an.values;
        if (xn.requires_grad) {
          auto& dx = xn.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t off = (i * c + ch) * inner;
              for (std::size_t j = 0; j < inner; ++j) {
                dx[off + j] += self.grad[off + j] * (xv[off + j] >= 0.0 ? 1.0 : av[ch]);
              }
            }
          }
        }
        if (an.requires_grad) {
          auto& da = an.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t ch = 0; ch < c; ++ch) {
              const std::size_t off = (i * c + ch) * inner;
              double s = 0.0;
              for (std::size_t j = 0; j < inner; ++j) {
                if (xv[off + j] < 0.0) s += self.grad[off + j] * xv[off + j];
              }
              da[ch] += s;
            }
          }
        }
      });
}

Tensor relu(const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return make_result(x.dims(), std::move(out), {x.node()}, [](Node& self) {
    Node& xn = *self.parents[0];
    auto& dx = xn.ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (xn.values[i] > 0.0) dx[i] += self.grad[i];
    }
  });
}

Tensor avg_pool2x2(const Tensor& x) {
  require_rank("avg_pool2x2", x, 4);
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    shape_error("avg_pool2x2", "spatial dims must be even, got " + dims_string(x.dims()));
  }
  const std::size_t ho = h / 2, wo = w / 2;
  const std::size_t planes = n * c;
  const auto xv = x.values();
  std::vector<double> out(planes * ho * wo);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = xv.data() + p * h * w;
    double* dst = out.data() + p * ho * wo;
    for (std::size_t y = 0; y < ho; ++y) {
      const double* r0 = src + (2 * y) * w;
      const double* r1 = r0 + w;
      for (std::size_t xo = 0; xo < wo; ++xo) {
        dst[y * wo + xo] =
            0.25 * (r0[2 * xo] + r0[2 * xo + 1] + r1[2 * xo] + r1[2 * xo + 1]);
      }
    }
  }
  return make_result({n, c, ho, wo}, std::move(out), {x.node()},
                     [planes, h, w, ho, wo](Node& self) {
                       auto& dx = self.parents[0]->ensure_grad();
                       for (std::size_t p = 0; p < planes; ++p) {
                         const double* g = self.grad.data() + p * ho * wo;
                         double* d = dx.data() + p * h * w;
                         for (std::size_t y = 0; y < ho; ++y) {
                           for (std::size_t xo = 0; xo < wo; ++xo) {
                             const double q = 0.25 * g[y * wo + xo];
                             d[(2 * y) * w + 2 * xo] += q;
                             d[(2 * y) * w + 2 * xo + 1] += q;
                             d[(2 * y + 1) * w + 2 * xo] += q;
                             d[(2 * y + 1) * w + 2 * xo + 1] += q;
                           }
                         }
                       }
                     });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank("global_avg_pool", x, 4);
  const std::size_t n = x.dim(0), c = x.dim(1);
  const std::size_t inner = x.dim(2) * x.dim(3);
  if (inner == 0) shape_error("global_avg_pool", "empty spatial extent");
  const auto xv = x.values();
  std::vector<double> out(n * c);
  for (std::size_t p = 0; p < n * c; ++p) {
    double s = 0.0;
    for (std::size_t j = 0; j < inner; ++j) s += xv[p * inner + j];
    out[p] = s / static_cast<double>(inner);
  }
  return make_result({n, c}, std::move(out), {x.node()}, [inner](Node& self) {
    auto& dx = self.parents[0]->ensure_grad();
    const double scale = 1.0 / static_cast<double>(inner);
    for (std::size_t p = 0; p < self.grad.size(); ++p) {
      const double g = self.grad[p] * scale;
      for (std::size_t j = 0; j < inner; ++j) dx[p * inner + j] += g;
    }
  });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) shape_error("concat_channels", "no inputs");
  const Tensor& first = parts.front();
  if (first.rank() < 2) shape_error("concat_channels", "input rank must be >= 2");
  const std::size_t n = first.dim(0);
  const std::size_t inner = first.size() / (n * first.dim(1));
  std::size_t total_c = 0;
  std::vector<std::size_t> channels;
  std::vector<std::shared_ptr<Node>> parents;
  for (const Tensor& t : parts) {
    if (t.rank() != first.rank() || t.dim(0) != n) {
      shape_error("concat_channels", "mismatched dims " + dims_string(t.dims()) +
                                         " vs " + dims_string(first.dims()));
    }
    for (std::size_t d = 2; d < t.rank(); ++d) {
      if (t.dim(d) != first.dim(d)) {
        shape_error("concat_channels", "mismatched dims " + dims_string(t.dims()) +
                                           " vs " + dims_string(first.dims()));
      }
    }
    channels.push_back(t.dim(1));
    total_c += t.dim(1);
    parents.push_back(t.node());
  }
  Dims dims = first.dims();
  dims[1] = total_c;
  std::vector<double> out(n * total_c * inner);
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = out.data() + i * total_c * inner;
    for (const Tensor& t : parts) {
      const std::size_t chunk = t.dim(1) * inner;
      std::copy_n(t.values().data() + i * chunk, chunk, dst);
      dst += chunk;
    }
  }
  return make_result(std::move(dims), std::move(out), std::move(parents),
                     [n, inner, total_c, channels](Node& self) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < channels.size(); ++k) {
                         Node& pn = *self.parents[k];
                         const std::size_t chunk = channels[k] * inner;
                         if (pn.requires_grad) {
                           auto& d = pn.ensure_grad();
                           for (std::size_t i = 0; i < n; ++i) {
                             const double* g = self.grad.data() + i * total_c * inner + offset;
                             double* dst = d.data() + i * chunk;
                             for (std::size_t j = 0; j < chunk; ++j) dst[j] += g[j];
                           }
                         }
                         offset += chunk;
                       }
                     });
}

Tensor concat_channels(std::initializer_list<Tensor> parts) {
  return concat_channels(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice_channels(const Tensor& x, std::size_t begin, std::size_t count) {
  if (x.rank() < 2) shape_error("slice_channels", "input rank must be >= 2");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (begin + count > c || count == 0) {
    shape_error("slice_channels", "range [" + std::to_string(begin) + ", " +
                                      std::to_string(begin + count) + ") outside " +
                                      std::to_string(c) + " channels");
  }
  const std::size_t inner = x.size() / (n * c);
  Dims dims = x.dims();
  dims[1] = count;
  std::vector<double> out(n * count * inner);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(x.values().data() + (i * c + begin) * inner, count * inner,
                out.data() + i * count * inner);
  }
  return make_result(std::move(dims), std::move(out), {x.node()},
                     [n, c, begin, count, inner](Node& self) {
                       auto& dx = self.parents[0]->ensure_grad();
                       for (std::size_t i = 0; i < n; ++i) {
                         const double* g = self.grad.data() + i * count * inner;
                         double* d = dx.data() + (i * c + begin) * inner;
                         for (std::size_t j = 0; j < count * inner; ++j) d[j] += g[j];
                       }
                     });
}

Tensor fully_connected(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  require_rank("fully_connected", x, 2);
  require_rank("fully_connected", weights, 2);
  require_rank("fully_connected", bias, 1);
  const std::size_t n = x.dim(0), k = x.dim(1), m = weights.dim(0);
  if (weights.dim(1) != k || bias.dim(0) != m) {
    shape_error("fully_connected", "x " + dims_string(x.dims()) + ", weights " +
                                       dims_string(weights.dims()) + ", bias " +
                                       dims_string(bias.dims()));
  }
  const auto xv = x.values();
  const auto wv = weights.values();
  const auto bv = bias.values();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < m; ++r) {
      double s = bv[r];
      for (std::size_t j = 0; j < k; ++j) s += xv[i * k + j] * wv[r * k + j];
      out[i * m + r] = s;
    }
  }
  return make_result(
      {n, m}, std::move(out), {x.node(), weights.node(), bias.node()},
      [n, k, m](Node& self) {
        Node& xn = *self.parents[0];
        Node& wn = *self.parents[1];
        Node& bn = *self.parents[2];
        const auto& g = self.grad;
        if (xn.requires_grad) {
          auto& dx = xn.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < m; ++r) {
              const double gi = g[i * m + r];
              for (std::size_t j = 0; j < k; ++j) dx[i * k + j] += gi * wn.values[r * k + j];
            }
          }
        }
        if (wn.requires_grad) {
          auto& dw = wn.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < m; ++r) {
              const double gi = g[i * m + r];
              for (std::size_t j = 0; j < k; ++j) dw[r * k + j] += gi * xn.values[i * k + j];
            }
          }
        }
        if (bn.requires_grad) {
          auto& db = bn.ensure_grad();
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < m; ++r) db[r] += g[i * m + r];
          }
        }
      });
}

Tensor softmax(const Tensor& logits) {
  require_rank("softmax", logits, 2);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  const auto lv = logits.values();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lv.data() + i * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[i * k + j] = std::exp(row[j] - mx);
      z += out[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= z;
  }
  Tensor result = make_result({n, k}, std::move(out), {logits.node()}, [n, k](Node& self) {
    auto& dx = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = self.values.data() + i * k;
      const double* g = self.grad.data() + i * k;
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += g[j] * p[j];
      for (std::size_t j = 0; j < k; ++j) dx[i * k + j] += p[j] * (g[j] - dot);
    }
  });
  if (result.requires_grad()) result.node()->softmax_logits = logits.node();
  return result;
}

Tensor cross_entropy(const Tensor& probs, const Tensor& targets) {
  require_rank("cross_entropy", probs, 2);
  if (targets.dims() != probs.dims()) {
    shape_error("cross_entropy", "targets " + dims_string(targets.dims()) + " vs probs " +
                                     dims_string(probs.dims()));
  }
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  if (n == 0) shape_error("cross_entropy", "empty batch");
  const auto pv = probs.values();
  const auto yv = targets.values();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double p = pv[i * k + j];
      if (p < 0.0) {
        fail(ErrorCode::kInvalidDistribution,
             "row " + std::to_string(i) + " has a negative probability");
      }
      row_sum += p;
      if (yv[i * k + j] != 0.0) loss -= yv[i * k + j] * std::log(p);
    }
    if (std::abs(row_sum - 1.0) > 1e-6) {
      fail(ErrorCode::kInvalidDistribution,
           "row " + std::to_string(i) + " sums to " + std::to_string(row_sum));
    }
  }
  loss /= static_cast<double>(n);

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> y(yv.begin(), yv.end());
  if (const auto& logits = probs.node()->softmax_logits) {
    std::vector<double> p(pv.begin(), pv.end());
    return make_result({}, {loss}, {logits, targets.node()},
                       [n, k, inv_n, p = std::move(p), y = std::move(y)](Node& self) {
                         Node& ln = *self.parents[0];
                         if (!ln.requires_grad) return;
                         auto& dl = ln.ensure_grad();
                         const double g = self.grad[0] * inv_n;
                         for (std::size_t i = 0; i < n; ++i) {
                           double mass = 0.0;
                           for (std::size_t j = 0; j < k; ++j) mass += y[i * k + j];
                           for (std::size_t j = 0; j < k; ++j) {
                             dl[i * k + j] += g * (p[i * k + j] * mass - y[i * k + j]);
                           }
                         }
                       });
  }
  return make_result({}, {loss}, {probs.node(), targets.node()},
                     [inv_n, y = std::move(y)](Node& self) {
                       Node& pn = *self.parents[0];
                       if (!pn.requires_grad) return;
                       auto& dp = pn.ensure_grad();
                       const double g = self.grad[0] * inv_n;
                       for (std::size_t i = 0; i < dp.size(); ++i) {
                         if (y[i] != 0.0) dp[i] -= g * y[i] / pn.values[i];
                       }
                     });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result({}, {s}, {x.node()}, [](Node& self) {
    auto& dx = self.parents[0]->ensure_grad();
    for (double& d : dx) d += self.grad[0];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) {
    shape_error("mul", dims_string(a.dims()) + " vs " + dims_string(b.dims()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.dims(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& an = *self.parents[0];
    Node& bn = *self.parents[1];
    // Read both value arrays before writing, so mul(x, x) works.
    if (an.requires_grad) {
      auto& da = an.ensure_grad();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += self.grad[i] * bn.values[i];
    }
    if (bn.requires_grad) {
      auto& db = bn.ensure_grad();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += self.grad[i] * an.values[i];
    }
  });
}

}  // namespace gradepipe::nn
