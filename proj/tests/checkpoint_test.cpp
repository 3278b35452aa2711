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

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "test_support.h"

namespace gradepipe::nn {
namespace {

using testing::random_store;
using testing::random_tensor;
using testing::TempDir;

TEST(Checkpoint, RandomStoresRoundTripExactly) {
  TempDir dir("ckpt");
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    const ParamStore store = random_store(rng);
    save_checkpoint(store, dir.path() / "a.tncp");
    EXPECT_TRUE(load_checkpoint(dir.path() / "a.tncp") == store) << "store " << i;
  }
}

TEST(Checkpoint, Float32RoundTripsToSinglePrecision) {
  Rng rng(22);
  const ParamStore store = random_store(rng);
  const auto named = to_named_tensors(store);
  const auto back = decode_tensors(encode_tensors(named, DType::kFloat32));
  ASSERT_EQ(back.size(), named.size());
  for (std::size_t i = 0; i < named.size(); ++i) {
    EXPECT_EQ(back[i].name, named[i].name);
    EXPECT_EQ(back[i].dims, named[i].dims);
    for (std::size_t j = 0; j < named[i].values.size(); ++j) {
      EXPECT_EQ(back[i].values[j], static_cast<double>(static_cast<float>(named[i].values[j])));
    }
  }
}

TEST(Checkpoint, LayoutOfASingleScalar) {
  const std::vector<NamedTensor> one = {{"ab", {}, {1.5}}};
  const auto bytes = encode_tensors(one);
  // magic 4 + version 4 + count 4 + name_len 2 + name 2 + ndim 1 + dtype 1 + f64 8
  ASSERT_EQ(bytes.size(), 26u);
  EXPECT_EQ(std::memcmp(bytes.data(), "TNCP", 4), 0);
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 1);
  EXPECT_EQ(bytes[17], 2);
  EXPECT_EQ(decode_tensors(bytes), one);
}

TEST(Checkpoint, StoreLayoutNamesMomentsAndStep) {
  ParamStore store;
  store.add("w", Tensor({2}, 1.0));
  store.set_step(7);
  const auto named = to_named_tensors(store);
  ASSERT_EQ(named.size(), 4u);
  EXPECT_EQ(named[0].name, "w");
  EXPECT_EQ(named[1].name, "w.m");
  EXPECT_EQ(named[2].name, "w.v");
  EXPECT_EQ(named[3].name, "t");
  EXPECT_EQ(named[3].values, std::vector<double>{7.0});
}

TEST(Checkpoint, CorruptInputsAreRejected) {
  Rng rng(23);
  const auto bytes = encode_tensors(to_named_tensors(random_store(rng)));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_GP_ERROR(decode_tensors(bad), ErrorCode::kBadMagic);
  bad = bytes;
  bad[4] = 9;
  EXPECT_GP_ERROR(decode_tensors(bad), ErrorCode::kBadMagic);
  for (std::size_t len = 4; len < bytes.size(); ++len) {
    EXPECT_GP_ERROR(decode_tensors(std::span(bytes).first(len)), ErrorCode::kTruncatedFile)
        << "length " << len;
  }
  bad = bytes;
  bad.push_back(0);
  EXPECT_GP_ERROR(decode_tensors(bad), ErrorCode::kParseError);
}

TEST(Checkpoint, InconsistentStoresAreRejected) {
  std::vector<NamedTensor> named = {{"w", {2}, {1, 2}}, {"w.m", {2}, {0, 0}}, {"w.v", {2}, {0, 0}}};
  EXPECT_GP_ERROR(from_named_tensors(named), ErrorCode::kParseError);
  named.push_back({"t", {}, {3}});
  EXPECT_EQ(from_named_tensors(named).step(), 3);
  named[1].dims = {1, 2};
  EXPECT_GP_ERROR(from_named_tensors(named), ErrorCode::kShapeMismatch);
  named[1].dims = {2};
  named.push_back({"x.m", {1}, {0}});
  EXPECT_GP_ERROR(from_named_tensors(named), ErrorCode::kParseError);
  named.pop_back();
  named.erase(named.begin() + 2);
  EXPECT_GP_ERROR(from_named_tensors(named), ErrorCode::kParseError);
}

TEST(Checkpoint, MissingFileIsIoFailure) {
  EXPECT_GP_ERROR(load_checkpoint("/nonexistent/dir/x.tncp"), ErrorCode::kIoFailure);
}

}  // namespace
}  // namespace gradepipe::nn
