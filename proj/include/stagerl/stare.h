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

#ifndef STAGERL_STARE_H_
#define STAGERL_STARE_H_

// Stage separator, stage calculator and potential-based reward shaping.
//
// The separator labels every state with the manipulation stage it belongs
// to. Labels depend only on the state (its latched event flags included), so
// the composite potential Φ(s) = Φ_{stage(s)}(s) is a genuine state function
// and shaping with it leaves optimal policies unchanged.
//
// Per stage the calculator exposes a deviation d(s) with a scale d_max:
//
//   stage            d(s)                       d_max
//   Reach, Grasp     ‖x_ee − x_obj‖             L_obj
//   Transport, Push,
//   Pull             ‖x_obj − x_goal‖           ‖x_obj_init − x_goal‖
//   Place, Goal      ‖x_obj − x_goal‖           L_obj
//   Lift             |z_obj − z_goal|           z_goal − z_table
//   Upright          geodesic(R_obj, R_upright) π
//
// The segment cost ℓ_k is the mean of d over the segment and the potential
// is Φ_k(s) = σ(1 − d(s) / d_max).

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagerl/env.h"

namespace stagerl {

enum class StageId {
  kReach,
  kGrasp,
  kTransport,
  kPlace,
  kPush,
  kPull,
  kGoal,
  kLift,
  kUpright,
  kDone,
};

std::string_view StageName(StageId stage);
std::optional<StageId> ParseStageId(std::string_view name);

struct StageProfile {
  TaskKind task = TaskKind::kPickPlace;
  std::vector<StageId> stages;  // K entries, in execution order
  StageThresholds thresholds;
  double penalty_weight = 0.1;  // λ

  static StageProfile ForTask(const TaskSpec& spec,
                              double penalty_weight = 0.1);

  int size() const { return static_cast<int>(stages.size()); }
  // Position of `stage` in `stages`; kDone maps to size(); -1 when absent.
  int IndexOf(StageId stage) const;
};

// Half-open step range [start, end) of one stage within a trajectory.
struct StageSegment {
  StageId stage = StageId::kReach;
  int start = 0;
  int end = 0;
  double cost = 0.0;             // ℓ_k in meters (radians for Upright)
  double normalized_cost = 0.0;  // ℓ_k / d_max
  bool completed = false;

  int steps() const { return end - start; }
};

StageId StageOf(const SimState& state, const TaskSpec& spec,
                const StageProfile& profile);

double StageDeviation(const SimState& state, StageId stage,
                      const TaskSpec& spec);
double StageScale(const SimState& state, StageId stage, const TaskSpec& spec);

// Mean deviation over the segment's states. Throws on an empty span.
double StageCost(std::span<const SimState> states, StageId stage,
                 const TaskSpec& spec);

// σ(1 − d / d_max); 0 for kDone.
double StagePotential(const SimState& state, StageId stage,
                      const TaskSpec& spec);

// Φ(s) = Φ_{stage(s)}(s), with Φ = 0 on terminal states.
double CompositePotential(const SimState& state, const TaskSpec& spec,
                          const StageProfile& profile);

// r' = r + γ Φ(s') − Φ(s).
double ShapeReward(double reward, const SimState& state,
                   const SimState& next_state, const TaskSpec& spec,
                   const StageProfile& profile, double gamma);

// q̂ = q − λ ℓ.
inline double PenalizedScore(double q, double cost, double lambda) {
  return q - lambda * cost;
}

// Labels every step, groups contiguous labels and computes segment costs.
// Throws std::invalid_argument on an empty trajectory and std::logic_error
// if a label ever regresses.
std::vector<StageSegment> Segment(const Trajectory& traj, const TaskSpec& spec,
                                  const StageProfile& profile);

// Stage labels g(t) for t = 0..T-1.
std::vector<StageId> StageLabels(const Trajectory& traj, const TaskSpec& spec,
                                 const StageProfile& profile);

}  // namespace stagerl

#endif  // STAGERL_STARE_H_
