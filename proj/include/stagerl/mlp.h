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

#ifndef STAGERL_MLP_H_
#define STAGERL_MLP_H_

#include <vector>

#include <Eigen/Core>

#include "stagerl/rng.h"

namespace stagerl {

// Fully-connected network with tanh hidden layers and a linear output.
// Batches are column-major: one sample per column.
struct Mlp {
  std::vector<int> sizes;  // input, hidden..., output
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;

  // Orthogonal init (QR of a Gaussian matrix) with gain sqrt(2) on hidden
  // layers and `output_gain` on the last layer; biases start at zero.
  static Mlp Create(const std::vector<int>& sizes, Rng& rng,
                    double output_gain);
  static Mlp Zeros(const std::vector<int>& sizes);

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int NumParams() const;

  // Activations of every layer, kept for the backward pass.
  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // activations[0] is the input
  };

  // Throws std::invalid_argument when x.rows() != input_dim().
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x,
                          Cache* cache = nullptr) const;

  // Given d loss / d output for the cached batch, adds d loss / d params to
  // `grad` (laid out like Flatten()).
  void Backward(const Cache& cache, const Eigen::MatrixXd& d_output,
                Eigen::Ref<Eigen::VectorXd> grad) const;

  // Layer by layer: weights row-major, then biases.
  Eigen::VectorXd Flatten() const;
  void Unflatten(const Eigen::Ref<const Eigen::VectorXd>& params);

  bool operator==(const Mlp& o) const;
};

}  // namespace stagerl

#endif  // STAGERL_MLP_H_
