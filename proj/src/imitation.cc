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

#include "stagerl/imitation.h"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "stagerl/autodiff.h"

namespace stagerl {

LossAndGrad BcLoss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                   const Eigen::MatrixXd& actions) {
  if (obs.cols() == 0) throw std::invalid_argument("bc_loss: empty batch");
  return PolicyLoss(policy, obs, actions,
                    [](Tape& tape, std::span<const Var> log_probs) {
                      return tape.Neg(tape.Mean(log_probs));
                    });
}

Trajectory FilterIdle(const Trajectory& traj) {
  Trajectory out = traj;
  out.steps.clear();
  for (const Transition& tr : traj.steps) {
    const bool idle = tr.action.d_pos.Norm() < 1e-4 &&
                      tr.action.d_rot.Norm() < 1e-4 &&
                      tr.action.gripper_cmd == tr.state.gripper;
    if (!idle) out.steps.push_back(tr);
  }
  if (out.steps.empty() && !traj.steps.empty()) {
    out.steps.push_back(traj.steps.front());
  }
  return out;
}

SftResult TrainSft(const Checkpoint& init, std::span<const Trajectory> demos,
                   const TaskSpec& spec, const SftConfig& config) {
  if (demos.empty()) throw std::invalid_argument("train_sft: no demos");
  int total = 0;
  for (const Trajectory& d : demos) total += d.size();
  if (total == 0) throw std::invalid_argument("train_sft: demos are empty");

  Eigen::MatrixXd obs(kObsDim, total);
  Eigen::MatrixXd actions(kActDim, total);
  int col = 0;
  for (const Trajectory& d : demos) {
    Eigen::MatrixXd o, a;
    TrajectoryMatrices(d, spec, &o, &a);
    obs.middleCols(col, d.size()) = o;
    actions.middleCols(col, d.size()) = a;
    col += d.size();
  }

  SftResult result;
  result.checkpoint = init;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.phase = "sft";
  ckpt.step = 0;
  ckpt.policy_opt = Adam(ckpt.policy.NumParams(), config.lr);
  Eigen::VectorXd params = ckpt.policy.Flatten();
  const int batch = std::min(config.batch_size, total);
  Eigen::MatrixXd batch_obs(kObsDim, batch);
  Eigen::MatrixXd batch_act(kActDim, batch);
  for (int step = 0; step < config.steps; ++step) {
    for (int i = 0; i < batch; ++i) {
      const int k = static_cast<int>(ckpt.rng.NextU64() % total);
      batch_obs.col(i) = obs.col(k);
      batch_act.col(i) = actions.col(k);
    }
    const LossAndGrad lg = BcLoss(ckpt.policy, batch_obs, batch_act);
    if (!std::isfinite(lg.value)) {
      throw std::runtime_error("train_sft: non-finite loss at step " +
                               std::to_string(step));
    }
    ckpt.policy_opt.Step(params, lg.grad);
    ckpt.policy.Unflatten(params);
    ++ckpt.step;
    result.metrics.push_back({step, lg.value});
  }
  return result;
}

void WriteLossCsv(std::ostream& out, std::span<const LossRow> rows) {
  out << "step,loss\n";
  char buf[64];
  for (const LossRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", r.step, r.loss);
    out << buf;
  }
}

}  // namespace stagerl
