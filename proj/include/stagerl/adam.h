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

#ifndef STAGERL_ADAM_H_
#define STAGERL_ADAM_H_

#include <cstdint>

#include <Eigen/Core>

namespace stagerl {

// Bias-corrected adaptive-moment optimizer with decoupled weight decay.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  Eigen::VectorXd m;
  Eigen::VectorXd v;
  int64_t t = 0;

  Adam() = default;
  Adam(int num_params, double lr);

  // Moments are sized lazily on the first step. Throws on a size mismatch.
  void Step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad);

  bool operator==(const Adam& o) const;
};

}  // namespace stagerl

#endif  // STAGERL_ADAM_H_
