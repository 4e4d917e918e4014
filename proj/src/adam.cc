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

#include "stagerl/adam.h"

#include <cmath>
#include <stdexcept>

namespace stagerl {

Adam::Adam(int num_params, double lr)
    : lr(lr),
      m(Eigen::VectorXd::Zero(num_params)),
      v(Eigen::VectorXd::Zero(num_params)) {}

void Adam::Step(Eigen::Ref<Eigen::VectorXd> params,
                const Eigen::VectorXd& grad) {
  if (params.size() != grad.size()) {
    throw std::invalid_argument("adam: gradient size mismatch");
  }
  if (m.size() == 0 && t == 0) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
  }
  if (m.size() != params.size()) {
    throw std::invalid_argument("adam: state size mismatch");
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  if (weight_decay != 0.0) params -= lr * weight_decay * params;
  params.array() -=
      lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

bool Adam::operator==(const Adam& o) const {
  return lr == o.lr && beta1 == o.beta1 && beta2 == o.beta2 && eps == o.eps &&
         weight_decay == o.weight_decay && m == o.m && v == o.v && t == o.t;
}

}  // namespace stagerl
