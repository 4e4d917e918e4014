// Copyright 2026 The stagerl Authors
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

#include "stagerl/mlp.h"

#include <stdexcept>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "stagerl/rng.h"
#include "test_util.h"

namespace stagerl {
namespace {

TEST(MlpTest, ZeroNetworkOutputsZero) {
  const Mlp net = Mlp::Zeros({5, 8, 3});
  Rng rng(1);
  const Eigen::MatrixXd x = testing::RandomMatrix(5, 4, rng);
  EXPECT_TRUE(net.Forward(x).isZero(0.0));
  EXPECT_EQ(net.NumParams(), 5 * 8 + 8 + 8 * 3 + 3);
}

TEST(MlpTest, DeterministicForward) {
  Rng rng(2);
  const Mlp net = Mlp::Create({4, 16, 16, 2}, rng, 1.0);
  const Eigen::MatrixXd x = testing::RandomMatrix(4, 3, rng);
  EXPECT_EQ(net.Forward(x), net.Forward(x));
  // Batched columns equal single-column passes.
  const Eigen::MatrixXd batch = net.Forward(x);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(net.Forward(x.col(c)), batch.col(c));
  }
}

TEST(MlpTest, OrthogonalInitialization) {
  Rng rng(3);
  const Mlp net = Mlp::Create({16, 16, 4}, rng, 0.5);
  const Eigen::MatrixXd wtw = net.weights[0].transpose() * net.weights[0];
  EXPECT_TRUE(wtw.isApprox(2.0 * Eigen::MatrixXd::Identity(16, 16), 1e-10));
  // Wide-to-narrow output layer has orthonormal rows scaled by the gain.
  const Eigen::MatrixXd wwt = net.weights[1] * net.weights[1].transpose();
  EXPECT_TRUE(wwt.isApprox(0.25 * Eigen::MatrixXd::Identity(4, 4), 1e-10));
  for (const auto& b : net.biases) EXPECT_TRUE(b.isZero(0.0));
}

TEST(MlpTest, FlattenRoundTrip) {
  Rng rng(4);
  const Mlp net = Mlp::Create({3, 5, 2}, rng, 1.0);
  Mlp copy = Mlp::Zeros({3, 5, 2});
  copy.Unflatten(net.Flatten());
  EXPECT_TRUE(copy == net);
  // Layout: first layer weights row-major come first.
  EXPECT_EQ(net.Flatten()[1], net.weights[0](0, 1));
}

TEST(MlpTest, RejectsWrongInputSize) {
  const Mlp net = Mlp::Zeros({3, 2});
  EXPECT_THROW(net.Forward(Eigen::MatrixXd::Zero(4, 1)),
               std::invalid_argument);
  Mlp other = Mlp::Zeros({3, 2});
  EXPECT_ANY_THROW(other.Unflatten(Eigen::VectorXd::Zero(3)));
}

// d(Σ w ⊙ f(x)) / dθ against central differences, 64-bit.
TEST(MlpTest, BackwardMatchesFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    Mlp net = Mlp::Create({4, 6, 5, 3}, rng, 1.0);
    for (auto& b : net.biases) b = Eigen::VectorXd::Random(b.size()) * 0.3;
    const Eigen::MatrixXd x = testing::RandomMatrix(4, 7, rng);
    const Eigen::MatrixXd w = testing::RandomMatrix(3, 7, rng);
    Mlp::Cache cache;
    net.Forward(x, &cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(net.NumParams());
    net.Backward(cache, w, grad);
    const Eigen::VectorXd theta = net.Flatten();
    const Eigen::VectorXd numeric = testing::NumericGradient(
        [&](const Eigen::VectorXd& p) {
          Mlp probe = net;
          probe.Unflatten(p);
          return (probe.Forward(x).array() * w.array()).sum();
        },
        theta);
    EXPECT_LT(testing::MaxRelativeError(grad, numeric, 1e-4), 1e-6);
  }
}

TEST(MlpTest, BackwardAccumulates) {
  Rng rng(6);
  const Mlp net = Mlp::Create({2, 3, 1}, rng, 1.0);
  const Eigen::MatrixXd x = testing::RandomMatrix(2, 2, rng);
  Mlp::Cache cache;
  net.Forward(x, &cache);
  Eigen::VectorXd once = Eigen::VectorXd::Zero(net.NumParams());
  net.Backward(cache, Eigen::MatrixXd::Ones(1, 2), once);
  Eigen::VectorXd twice = once;
  net.Backward(cache, Eigen::MatrixXd::Ones(1, 2), twice);
  EXPECT_TRUE(twice.isApprox(2.0 * once));
}

}  // namespace
}  // namespace stagerl
