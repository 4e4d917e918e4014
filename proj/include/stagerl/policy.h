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

#ifndef STAGERL_POLICY_H_
#define STAGERL_POLICY_H_

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stagerl/autodiff.h"
#include "stagerl/env.h"
#include "stagerl/mlp.h"
#include "stagerl/rng.h"

namespace stagerl {

inline constexpr int kObsDim = 20;
inline constexpr int kActDim = 7;

// ee_pos (3), gripper (1), obj_pos (3), first two columns of obj_rot (6),
// goal_pos (3), grasped/lifted/contact as 0/1 (3), t / horizon (1).
// Positions are centered and scaled by the workspace half-extents and the
// gripper is mapped to [-1, 1].
Eigen::VectorXd Observe(const SimState& state, const TaskSpec& spec);

// Normalized action u in R^7: d_pos / a_max (3), d_rot / ω_max (3) and the
// gripper command mapped to [-1, 1].
Eigen::VectorXd EncodeAction(const SimAction& action, const TaskSpec& spec);
// Inverse of EncodeAction; the simulator clips whatever falls out of bounds.
SimAction DecodeAction(const Eigen::Ref<const Eigen::VectorXd>& u,
                       const TaskSpec& spec);

// Diagonal Gaussian with a state-independent log standard deviation.
struct GaussianPolicy {
  static constexpr double kMinLogStd = -5.0;
  static constexpr double kMaxLogStd = 1.0;

  Mlp trunk;                // observation -> action mean
  Eigen::VectorXd log_std;  // raw; clamped to [kMinLogStd, kMaxLogStd] on use

  static GaussianPolicy Create(Rng& rng, const std::vector<int>& hidden = {64,
                                                                          64},
                               int obs_dim = kObsDim, int act_dim = kActDim);

  int obs_dim() const { return trunk.input_dim(); }
  int act_dim() const { return trunk.output_dim(); }
  int NumParams() const { return trunk.NumParams() + log_std.size(); }

  Eigen::VectorXd ClampedLogStd() const;
  Eigen::VectorXd Mean(const Eigen::Ref<const Eigen::VectorXd>& obs) const;

  double LogProb(const Eigen::Ref<const Eigen::VectorXd>& obs,
                 const Eigen::Ref<const Eigen::VectorXd>& action) const;

  // Draws mean + σ ⊙ ε and returns it with its log density.
  std::pair<Eigen::VectorXd, double> Sample(
      const Eigen::Ref<const Eigen::VectorXd>& obs, Rng& rng) const;

  // Batched log densities (one column per sample) with what the backward
  // pass needs.
  struct LogProbPass {
    Mlp::Cache cache;
    Eigen::MatrixXd mean;
    Eigen::MatrixXd actions;
    Eigen::VectorXd log_probs;
  };
  LogProbPass LogProbForward(const Eigen::MatrixXd& obs,
                             const Eigen::MatrixXd& actions) const;
  // Adds Σ_i d_log_prob[i] · ∂ log π(a_i | s_i) / ∂ params to `grad`.
  void LogProbBackward(const LogProbPass& pass,
                       const Eigen::VectorXd& d_log_prob,
                       Eigen::Ref<Eigen::VectorXd> grad) const;

  // Trunk parameters followed by log_std.
  Eigen::VectorXd Flatten() const;
  void Unflatten(const Eigen::Ref<const Eigen::VectorXd>& params);

  bool operator==(const GaussianPolicy& o) const {
    return trunk == o.trunk && log_std == o.log_std;
  }
};

struct ValueNet {
  Mlp net;  // observation -> scalar

  static ValueNet Create(Rng& rng, const std::vector<int>& hidden = {64, 64},
                         int obs_dim = kObsDim);

  double Value(const Eigen::Ref<const Eigen::VectorXd>& obs) const;
  Eigen::VectorXd Values(const Eigen::MatrixXd& obs) const;

  bool operator==(const ValueNet& o) const { return net == o.net; }
};

struct LossAndGrad {
  double value = 0.0;
  Eigen::VectorXd grad;  // laid out like the network's Flatten()
};

// Loss head over per-sample policy log densities. Receives one tape leaf per
// column of the batch and returns the scalar loss.
using LogProbHead = std::function<Var(Tape&, std::span<const Var>)>;

// Evaluates `head` on log π(actions | obs) and backpropagates into every
// policy parameter.
LossAndGrad PolicyLoss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                       const Eigen::MatrixXd& actions, const LogProbHead& head);

// Same for a loss over value predictions.
using ValueHead = std::function<Var(Tape&, std::span<const Var>)>;
LossAndGrad ValueLoss(const ValueNet& value, const Eigen::MatrixXd& obs,
                      const ValueHead& head);

// Observations and encoded actions of `traj`, one column per step.
void TrajectoryMatrices(const Trajectory& traj, const TaskSpec& spec,
                        Eigen::MatrixXd* obs, Eigen::MatrixXd* actions);

// Closed-loop controller that executes the policy mean.
StatePolicy GreedyController(const GaussianPolicy& policy,
                             const TaskSpec& spec);

}  // namespace stagerl

#endif  // STAGERL_POLICY_H_
