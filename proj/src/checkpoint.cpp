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

#include "gradepipe/checkpoint.h"

#include <algorithm>
#include <map>

#include "byte_io.h"
#include "gradepipe/error.h"

namespace gradepipe::nn {
namespace {

constexpr char kMagic[4] = {'T', 'N', 'C', 'P'};

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() > suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_tensors(std::span<const NamedTensor> tensors,
                                         DType dtype) {
  std::vector<std::uint8_t> out;
  gradepipe::detail::ByteWriter w(out);
  w.put_bytes({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    if (t.name.size() > 0xFFFF) fail(ErrorCode::kInvalidConfig, "tensor name too long");
    if (t.dims.size() > 0xFF) fail(ErrorCode::kInvalidConfig, "tensor rank too large");
    if (t.values.size() != element_count(t.dims)) {
      fail(ErrorCode::kShapeMismatch, "tensor '" + t.name + "' values do not match dims");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_string(t.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    for (std::size_t d : t.dims) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(dtype));
    for (double v : t.values) {
      if (dtype == DType::kFloat32) {
        w.put<float>(static_cast<float>(v));
      } else {
        w.put<double>(v);
      }
    }
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(std::span<const std::uint8_t> bytes) {
  gradepipe::detail::ByteReader r(bytes);
  r.require(4, "magic");
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
    fail(ErrorCode::kBadMagic, "expected \"TNCP\" at offset 0");
  }
  r.get_bytes(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kBadMagic, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  std::vector<NamedTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = r.get<std::uint16_t>("tensor name length");
    t.name = r.get_string(name_len, "tensor name");
    const auto ndim = r.get<std::uint8_t>("rank of '" + t.name + "'");
    for (std::uint8_t d = 0; d < ndim; ++d) {
      t.dims.push_back(r.get<std::uint32_t>("dims of '" + t.name + "'"));
    }
    const auto dtype = r.get<std::uint8_t>("dtype of '" + t.name + "'");
    const std::size_t n = element_count(t.dims);
    const std::size_t width = dtype == 1 ? 4 : dtype == 2 ? 8 : 0;
    if (width == 0) {
      fail(ErrorCode::kParseError, "tensor '" + t.name + "' has unknown dtype " +
                                       std::to_string(dtype) + " at offset " +
                                       std::to_string(r.position() - 1));
    }
    r.require(n * width, "values of '" + t.name + "'");
    t.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      t.values[k] = dtype == 1 ? static_cast<double>(r.get<float>("value"))
                               : r.get<double>("value");
    }
    tensors.push_back(std::move(t));
  }
  if (!r.at_end()) {
    fail(ErrorCode::kParseError, "trailing bytes after tensor " + std::to_string(count));
  }
  return tensors;
}

std::vector<NamedTensor> to_named_tensors(const ParamStore& store) {
  std::vector<NamedTensor> out;
  for (const auto& e : store.entries()) {
    const auto v = e.param.values();
    out.push_back({e.name, e.param.dims(), std::vector<double>(v.begin(), v.end())});
    out.push_back({e.name + ".m", e.param.dims(), e.m});
    out.push_back({e.name + ".v", e.param.dims(), e.v});
  }
  out.push_back({"t", {}, {static_cast<double>(store.step())}});
  return out;
}

ParamStore from_named_tensors(const std::vector<NamedTensor>& tensors) {
  ParamStore store;
  std::map<std::string, const NamedTensor*> moments;
  bool have_step = false;
  for (const NamedTensor& t : tensors) {
    if (t.name == "t") {
      if (t.values.size() != 1) fail(ErrorCode::kParseError, "step tensor 't' is not a scalar");
      store.set_step(static_cast<std::int64_t>(t.values[0]));
      have_step = true;
    } else if (has_suffix(t.name, ".m") || has_suffix(t.name, ".v")) {
      moments[t.name] = &t;
    } else {
      store.add(t.name, Tensor(t.dims, t.values));
    }
  }
  if (!have_step) fail(ErrorCode::kParseError, "checkpoint has no step tensor 't'");
  for (auto& e : store.entries()) {
    for (auto* slot : {&e.m, &e.v}) {
      const std::string key = e.name + (slot == &e.m ? ".m" : ".v");
      const auto it = moments.find(key);
      if (it == moments.end()) fail(ErrorCode::kParseError, "checkpoint lacks '" + key + "'");
      if (it->second->dims != e.param.dims()) {
        fail(ErrorCode::kShapeMismatch, "'" + key + "' shape differs from its parameter");
      }
      *slot = it->second->values;
      moments.erase(it);
    }
  }
  if (!moments.empty()) {
    fail(ErrorCode::kParseError, "orphan optimizer state '" + moments.begin()->first + "'");
  }
  return store;
}

void save_checkpoint(const ParamStore& store, const std::filesystem::path& path,
                     DType dtype) {
  const auto tensors = to_named_tensors(store);
  gradepipe::detail::write_file_bytes(path.string(), encode_tensors(tensors, dtype));
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = gradepipe::detail::read_file_bytes(path.string());
  try {
    return from_named_tensors(decode_tensors(bytes));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace gradepipe::nn
