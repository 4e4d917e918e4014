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

#ifndef STAGERL_INTERACT_H_
#define STAGERL_INTERACT_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stagerl/checkpoint.h"
#include "stagerl/env.h"
#include "stagerl/policy.h"
#include "stagerl/rng.h"
#include "stagerl/stare.h"

namespace stagerl {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double policy_lr = 1e-4;
  double value_lr = 3e-3;
  int epochs = 1;
  int minibatches = 4;
  double entropy_coef = 0.0;
  int n_envs = 16;
  int64_t total_env_steps = 600000;
  // Steps per environment per rollout; 0 uses the task horizon.
  int rollout_steps = 0;
  // false trains on the sparse reward alone (plain PPO).
  bool shaping = true;
  // Stages whose shaping is disabled: r′ = r while the state is in them.
  std::set<StageId> stage_toggle;
  // Adds γ V(s_T) to the last reward of an episode cut by the horizon.
  bool time_limit_bootstrap = false;
  int64_t eval_every = 19200;  // env steps between learning-curve points
  int eval_episodes = 100;
  uint64_t eval_seed = 7;

  // Throws std::invalid_argument when a field is out of range.
  void Validate() const;
};

// Transitions of n_envs parallel environments, stored time-major: entry
// t * n_envs + e is step t of environment e.
struct RolloutBuffer {
  int n_envs = 0;
  int steps = 0;  // per environment

  Eigen::MatrixXd obs;      // kObsDim x N
  Eigen::MatrixXd actions;  // kActDim x N
  Eigen::VectorXd log_prob_old;
  Eigen::VectorXd reward;         // r
  Eigen::VectorXd shaped_reward;  // r′
  Eigen::VectorXd value;          // V(s_t)
  Eigen::VectorXd bootstrap;      // extra reward folded in at truncation
  std::vector<uint8_t> done;
  std::vector<StageId> stage;
  std::vector<uint64_t> episode_id;
  std::vector<SimState> state;
  std::vector<SimState> next_state;
  Eigen::VectorXd last_value;  // V(s) after the final step, per environment

  int size() const { return n_envs * steps; }
  int Index(int t, int env) const { return t * n_envs + env; }
};

// Environments that persist across rollouts and reset automatically.
struct VecEnv {
  TaskSpec spec;
  std::vector<SimState> states;
  std::vector<uint64_t> episode_ids;
  uint64_t stream = 0;         // seeds new episodes
  uint64_t episodes_started = 0;

  VecEnv(const TaskSpec& spec, int n_envs, uint64_t stream);
  void ResetEnv(int env);
};

// Samples `steps` actions per environment from the frozen policy snapshot,
// stores r and r′ (r′ = r for stages in the toggle mask, or everywhere when
// shaping is off) and evaluates the value net on every state.
RolloutBuffer CollectRollout(const GaussianPolicy& policy,
                             const ValueNet& value, VecEnv& envs,
                             const StageProfile& profile,
                             const PpoConfig& config, int steps, Rng& rng);

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

// Single sequence: values has one more entry than rewards (the bootstrap).
// δ_t = r_t + γ (1 − done_t) V_{t+1} − V_t,
// A_t = δ_t + γ λ (1 − done_t) A_{t+1}. Throws on misaligned lengths.
GaeResult ComputeGae(std::span<const double> rewards,
                     std::span<const double> values,
                     std::span<const uint8_t> dones, double gamma,
                     double lambda);

// Applies ComputeGae to every environment column of the buffer, using
// r′ + bootstrap as the reward.
GaeResult ComputeBufferGae(const RolloutBuffer& buffer, double gamma,
                           double lambda);

// (x − mean) / max(std, 1e-8), population std.
Eigen::VectorXd NormalizeAdvantages(const Eigen::VectorXd& advantages);

// −mean_i min(ρ_i A_i, clip(ρ_i, 1 − ε, 1 + ε) A_i) − c_H H[π],
// ρ_i = exp(log π′(a_i|s_i) − log π_old(a_i|s_i)).
LossAndGrad PpoLoss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                    const Eigen::MatrixXd& actions,
                    const Eigen::VectorXd& log_prob_old,
                    const Eigen::VectorXd& advantages, double clip_eps,
                    double entropy_coef = 0.0);

// mean ½ (V(s_i) − R_i)².
LossAndGrad ValueRegressionLoss(const ValueNet& value,
                                const Eigen::MatrixXd& obs,
                                const Eigen::VectorXd& returns);

struct CurveRow {
  int64_t env_steps = 0;
  double success_rate = 0.0;
  double grasp_rate = 0.0;
  std::vector<std::optional<double>> conditional;  // percent per stage
  double mean_shaped_return = 0.0;  // over episodes finished in the rollout
};

struct PpoResult {
  Checkpoint final_checkpoint;
  Checkpoint best_checkpoint;  // highest learning-curve success
  std::vector<CurveRow> curve;
};

// Collect → GAE → epochs × minibatch updates, repeated until the env-step
// budget is spent. A fresh value net is created when `init` has none.
// Training episode seeds come from `seed`; evaluation uses
// config.eval_seed. A non-finite loss aborts with a description of the
// offending minibatch.
PpoResult TrainPpo(const Checkpoint& init, const TaskSpec& spec,
                   const StageProfile& profile, const PpoConfig& config,
                   uint64_t seed);

void WriteCurveCsv(std::ostream& out, std::span<const CurveRow> rows,
                   const StageProfile& profile);

// Parses "reach,grasp,..." into stage ids; throws on unknown names.
std::set<StageId> ParseStageToggle(const std::string& text);

}  // namespace stagerl

#endif  // STAGERL_INTERACT_H_
