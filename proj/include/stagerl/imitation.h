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

#ifndef STAGERL_IMITATION_H_
#define STAGERL_IMITATION_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stagerl/checkpoint.h"
#include "stagerl/env.h"
#include "stagerl/policy.h"

namespace stagerl {

// −(1/N) Σ log π(a_i | s_i) over the batch columns.
LossAndGrad BcLoss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                   const Eigen::MatrixXd& actions);

// Drops transitions that neither move the end-effector (‖d_pos‖ < 1e-4 and
// ‖d_rot‖ < 1e-4) nor change the gripper command. The first transition is
// kept if everything would be dropped.
Trajectory FilterIdle(const Trajectory& traj);

struct SftConfig {
  int steps = 2000;
  int batch_size = 256;
  double lr = 1e-3;
  uint64_t seed = 0;
};

struct LossRow {
  int step = 0;
  double loss = 0.0;
};

struct SftResult {
  Checkpoint checkpoint;
  std::vector<LossRow> metrics;  // one row per optimizer step
};

// Minibatch maximum likelihood on the demos' (observation, action) pairs.
// Minibatches are drawn with replacement from the checkpoint's RNG stream.
SftResult TrainSft(const Checkpoint& init, std::span<const Trajectory> demos,
                   const TaskSpec& spec, const SftConfig& config);

void WriteLossCsv(std::ostream& out, std::span<const LossRow> rows);

}  // namespace stagerl

#endif  // STAGERL_IMITATION_H_
