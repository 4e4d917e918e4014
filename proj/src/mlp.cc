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

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/QR>

namespace stagerl {
namespace {

Eigen::MatrixXd Orthogonal(int rows, int cols, Rng& rng) {
  const int n = std::max(rows, cols);
  Eigen::MatrixXd g(n, std::min(rows, cols));
  for (int j = 0; j < g.cols(); ++j) {
    for (int i = 0; i < g.rows(); ++i) g(i, j) = rng.Normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, g.cols());
  // Sign fix so the factorization is unique.
  const Eigen::MatrixXd r = qr.matrixQR();
  for (int j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  if (rows >= cols) return q;
  return q.transpose();
}

}  // namespace

Mlp Mlp::Create(const std::vector<int>& sizes, Rng& rng, double output_gain) {
  Mlp m = Zeros(sizes);
  for (size_t l = 0; l < m.weights.size(); ++l) {
    const bool last = l + 1 == m.weights.size();
    const double gain = last ? output_gain : std::sqrt(2.0);
    m.weights[l] = gain * Orthogonal(sizes[l + 1], sizes[l], rng);
  }
  return m;
}

Mlp Mlp::Zeros(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp needs >= 2 sizes");
  Mlp m;
  m.sizes = sizes;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] < 1 || sizes[l + 1] < 1) {
      throw std::invalid_argument("mlp layer sizes must be positive");
    }
    m.weights.push_back(Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]));
    m.biases.push_back(Eigen::VectorXd::Zero(sizes[l + 1]));
  }
  return m;
}

int Mlp::NumParams() const {
  int n = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    n += weights[l].size() + biases[l].size();
  }
  return n;
}

Eigen::MatrixXd Mlp::Forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != input_dim()) {
    throw std::invalid_argument("mlp input has " + std::to_string(x.rows()) +
                                " rows, expected " +
                                std::to_string(input_dim()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Eigen::MatrixXd h = x;
  for (size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd z = weights[l] * h;
    z.colwise() += biases[l];
    if (l + 1 < weights.size()) z = z.array().tanh().matrix();
    h = std::move(z);
    if (cache) cache->activations.push_back(h);
  }
  return h;
}

void Mlp::Backward(const Cache& cache, const Eigen::MatrixXd& d_output,
                   Eigen::Ref<Eigen::VectorXd> grad) const {
  if (grad.size() != NumParams()) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
  // Offsets of each layer's block in the flat layout.
  std::vector<int> offsets(weights.size());
  int offset = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    offsets[l] = offset;
    offset += weights[l].size() + biases[l].size();
  }
  Eigen::MatrixXd delta = d_output;  // d loss / d pre-activation of layer l
  for (int l = static_cast<int>(weights.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = cache.activations[l];
    const Eigen::MatrixXd gw = delta * input.transpose();
    const int rows = weights[l].rows();
    const int cols = weights[l].cols();
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) grad[offsets[l] + i * cols + j] += gw(i, j);
    }
    grad.segment(offsets[l] + rows * cols, rows) += delta.rowwise().sum();
    if (l > 0) {
      // Through tanh: d/dz tanh(z) = 1 - tanh(z)^2.
      delta = (weights[l].transpose() * delta).array() *
              (1.0 - input.array().square());
    }
  }
}

Eigen::VectorXd Mlp::Flatten() const {
  Eigen::VectorXd out(NumParams());
  int k = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    for (int i = 0; i < weights[l].rows(); ++i) {
      for (int j = 0; j < weights[l].cols(); ++j) out[k++] = weights[l](i, j);
    }
    for (int i = 0; i < biases[l].size(); ++i) out[k++] = biases[l][i];
  }
  return out;
}

void Mlp::Unflatten(const Eigen::Ref<const Eigen::VectorXd>& params) {
  if (params.size() != NumParams()) {
    throw std::invalid_argument("parameter vector size mismatch");
  }
  int k = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    for (int i = 0; i < weights[l].rows(); ++i) {
      for (int j = 0; j < weights[l].cols(); ++j) weights[l](i, j) = params[k++];
    }
    for (int i = 0; i < biases[l].size(); ++i) biases[l][i] = params[k++];
  }
}

bool Mlp::operator==(const Mlp& o) const {
  if (sizes != o.sizes) return false;
  for (size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != o.weights[l] || biases[l] != o.biases[l]) return false;
  }
  return true;
}

}  // namespace stagerl
