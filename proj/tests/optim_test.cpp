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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gradepipe/ops.h"
#include "oracles.h"
#include "test_support.h"

namespace gradepipe::nn {
namespace {

using testing::random_tensor;

void set_grad(Tensor& t, const std::vector<double>& g) {
  auto dst = t.mutable_grad();
  std::copy(g.begin(), g.end(), dst.begin());
}

TEST(Adam, SingleStepFromZero) {
  ParamStore store;
  Tensor theta = store.add("theta", Tensor({1}, 0.0));
  set_grad(theta, {1.0});
  adam_step(store, AdamConfig{});
  // lr * 1 / (1 + eps), the bias-corrected moments being exactly g and g^2.
  EXPECT_NEAR(theta.values()[0], -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(theta.values()[0], -0.0009999999900, 1e-12);
  EXPECT_EQ(store.step(), 1);
}

TEST(Adam, ZeroGradientLeavesParameter) {
  ParamStore store;
  Tensor theta = store.add("theta", Tensor({3}, 0.7));
  set_grad(theta, {0.0, 0.0, 0.0});
  adam_step(store, AdamConfig{});
  for (double v : theta.values()) EXPECT_EQ(v, 0.7);
}

TEST(Adam, IdenticalStateGivesIdenticalUpdates) {
  ParamStore store;
  Tensor a = store.add("a", Tensor({2}, 0.3));
  Tensor b = store.add("b", Tensor({2}, 0.3));
  for (int k = 0; k < 5; ++k) {
    set_grad(a, {0.1 * k, -0.2});
    set_grad(b, {0.1 * k, -0.2});
    adam_step(store, AdamConfig{});
  }
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST(Adam, TenStepsMatchClosedFormMoments) {
  const AdamConfig cfg{0.01, 0.8, 0.95, 1e-6};
  const std::vector<double> grads = {0.5, -1.2, 3.0, 0.0, -0.01, 2.5, -2.5, 1e-3, 0.7, -0.3};
  const auto got = testing::adam_trajectory(1.0, grads, cfg);
  const auto want = testing::adam_trajectory_oracle(1.0, grads, cfg);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t t = 0; t < got.size(); ++t) EXPECT_NEAR(got[t], want[t], 1e-12) << "step " << t + 1;
}

TEST(Adam, MissingGradientIsAnError) {
  ParamStore store;
  store.add("a", Tensor({2}, 0.0));
  EXPECT_GP_ERROR(adam_step(store, AdamConfig{}), ErrorCode::kMissingGradient);
  EXPECT_EQ(store.step(), 0);
}

TEST(AdamConfig, Validation) {
  EXPECT_NO_THROW(AdamConfig{}.validate());
  EXPECT_GP_ERROR((AdamConfig{0.0}).validate(), ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR((AdamConfig{0.1, 1.0}).validate(), ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR((AdamConfig{0.1, 0.9, -0.1}).validate(), ErrorCode::kInvalidConfig);
}

double sample_std(const Tensor& t) {
  const double n = static_cast<double>(t.size());
  const double mean = std::accumulate(t.values().begin(), t.values().end(), 0.0) / n;
  double ss = 0.0;
  for (double v : t.values()) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

TEST(MsraInit, StandardDeviation) {
  const Tensor a = msra_init({100000}, 2, 17);
  EXPECT_NEAR(sample_std(a), 1.0, 0.02);
  const Tensor b = msra_init({100000}, 200, 18);
  EXPECT_NEAR(sample_std(b), 0.1, 0.002);
  EXPECT_NEAR(std::accumulate(a.values().begin(), a.values().end(), 0.0) / 1e5, 0.0, 0.02);
}

TEST(MsraInit, DeterministicInSeed) {
  const Tensor a = msra_init({4, 3, 3, 3}, 27, 5);
  const Tensor b = msra_init({4, 3, 3, 3}, 27, 5);
  const Tensor c = msra_init({4, 3, 3, 3}, 27, 6);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  EXPECT_GP_ERROR(msra_init({2}, 0, 1), ErrorCode::kInvalidConfig);
}

TEST(ParamStore, RegistrationRules) {
  ParamStore store;
  const Tensor w = store.add("w", Tensor({2, 2}, 1.0));
  EXPECT_TRUE(w.requires_grad());
  EXPECT_TRUE(store.contains("w"));
  EXPECT_EQ(store.parameter_count(), 4u);
  EXPECT_TRUE(store.get("w").same_storage(w));
  EXPECT_GP_ERROR(store.add("w", Tensor({1})), ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(store.add("x.m", Tensor({1})), ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(store.add("x.v", Tensor({1})), ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(store.add("t", Tensor({1})), ErrorCode::kInvalidConfig);
  EXPECT_GP_ERROR(store.get("missing"), ErrorCode::kConfigMismatch);
}

TEST(ParamStore, CloneIsDeep) {
  Rng rng(3);
  ParamStore store;
  Tensor w = store.add("w", random_tensor(rng, {3}));
  set_grad(w, {1, 2, 3});
  adam_step(store, AdamConfig{});
  ParamStore copy = store.clone();
  EXPECT_TRUE(copy == store);
  EXPECT_FALSE(copy.get("w").same_storage(w));
  copy.get("w").mutable_values()[0] += 1.0;
  EXPECT_FALSE(copy == store);
}

TEST(ParamStore, ZeroGradClearsEveryParameter) {
  ParamStore store;
  Tensor a = store.add("a", Tensor({2}, 1.0));
  backward(sum(mul(a, a)));
  EXPECT_DOUBLE_EQ(a.grad()[0], 2.0);
  store.zero_grad();
  for (double g : a.grad()) EXPECT_EQ(g, 0.0);
}

}  // namespace
}  // namespace gradepipe::nn
