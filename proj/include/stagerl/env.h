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

#ifndef STAGERL_ENV_H_
#define STAGERL_ENV_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stagerl/geometry.h"

namespace stagerl {

enum class TaskKind { kPickPlace, kPush, kPull, kLiftPegUpright };

std::string_view TaskName(TaskKind kind);
// Accepts the names produced by TaskName ("pick_place", "push", "pull",
// "lift_peg_upright").
std::optional<TaskKind> ParseTaskKind(std::string_view name);
inline bool IsGraspTask(TaskKind kind) {
  return kind == TaskKind::kPickPlace || kind == TaskKind::kLiftPegUpright;
}

struct Box {
  Vec3 min;
  Vec3 max;

  bool Contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
  Vec3 Clamp(const Vec3& p) const;
  Vec3 Center() const { return (min + max) * 0.5; }
  bool Valid() const {
    return min.x <= max.x && min.y <= max.y && min.z <= max.z;
  }
};

struct TaskSpec {
  TaskKind kind = TaskKind::kPickPlace;
  double object_size = 0.03;  // L_obj, meters
  double table_height = 0.0;
  double lift_goal = 0.10;  // target object height, LiftPegUpright only
  Rotation upright_target;  // LiftPegUpright only
  int horizon = 60;
  Box workspace{{-0.25, -0.25, 0.0}, {0.25, 0.25, 0.30}};
  Box object_range;
  Box goal_range;
  Vec3 ee_home{0.0, 0.0, 0.10};
  double yaw_range = 0.0;  // initial peg yaw drawn from [-yaw_range, yaw_range]
  double max_step = 0.02;  // a_max, meters per axis per step
  double max_turn = 0.1;   // ω_max, radians per step
  uint64_t seed = 0;

  double GraspRadius() const { return 0.6 * object_size; }
  double ContactRadius() const { return 0.75 * object_size; }
  // Height of the object center when it rests on the table.
  double RestHeight() const { return table_height + 0.5 * object_size; }

  // Throws std::invalid_argument describing the first violated constraint.
  void Validate() const;

  static TaskSpec Default(TaskKind kind);
};

// Geometric event thresholds (δ_k). All derive from the task geometry so the
// simulator's event flags and the stage separator agree by construction.
struct StageThresholds {
  double reach_radius = 0.0;       // end-effector within this of the object
  double place_margin = 0.0;       // object within this of the goal
  double lift_clearance = 0.0;     // object raised this far above rest
  double height_tolerance = 0.0;   // |z_obj - z_goal| that ends Lift
  double goal_radius = 0.0;        // success region radius
  double final_height_tolerance = 0.0;
  double upright_tolerance = 0.1;  // radians
  int stable_steps = 5;

  static StageThresholds FromSpec(const TaskSpec& spec);
};

struct SimFlags {
  bool grasped = false;
  bool lifted = false;   // latched
  bool contact = false;  // instantaneous
  int released_stable_count = 0;
  // Latched milestone events; together with `lifted` they make the stage a
  // function of the state alone.
  bool reached = false;
  bool near_goal = false;
  bool at_height = false;

  bool operator==(const SimFlags&) const = default;
};

struct SimState {
  int t = 0;
  Vec3 ee_pos;
  Rotation ee_rot;
  double gripper = 1.0;  // 0 closed, 1 open
  Vec3 obj_pos;
  Rotation obj_rot;
  Vec3 goal_pos;
  Vec3 obj_init;  // captured at reset; fixes the per-episode scales
  SimFlags flags;
  bool terminal = false;

  bool operator==(const SimState&) const = default;
};

struct SimAction {
  Vec3 d_pos;
  Vec3 d_rot;  // axis-angle, world frame
  double gripper_cmd = 1.0;

  bool operator==(const SimAction&) const = default;
};

struct Transition {
  SimState state;
  SimAction action;
  double reward = 0.0;
  SimState next_state;
  bool done = false;
};

// Per-axis clip of d_pos to ±max_step, norm clip of d_rot to max_turn,
// gripper clamp to [0, 1].
SimAction ClipAction(const SimAction& action, const TaskSpec& spec);

// Deterministic in (spec, episode_seed).
SimState Reset(const TaskSpec& spec, uint64_t episode_seed);

// Throws std::logic_error when `state` is terminal.
Transition Step(const SimState& state, const SimAction& action,
                const TaskSpec& spec);

bool SuccessCondition(const SimState& state, const TaskSpec& spec);

// One episode of transitions under a fixed task instance.
struct Trajectory {
  TaskKind task = TaskKind::kPickPlace;
  uint64_t episode_id = 0;  // the episode seed passed to Reset
  std::string tag;          // producer, e.g. "expert" or a failure mode
  std::vector<Transition> steps;

  bool Succeeded() const { return !steps.empty() && steps.back().reward > 0.0; }
  int size() const { return static_cast<int>(steps.size()); }
};

using StatePolicy = std::function<SimAction(const SimState&)>;

// Runs `policy` from Reset(spec, episode_seed) until the episode is done.
Trajectory Rollout(const TaskSpec& spec, uint64_t episode_seed,
                   const StatePolicy& policy, std::string tag = "");

}  // namespace stagerl

#endif  // STAGERL_ENV_H_
