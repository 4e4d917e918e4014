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

#include "stagerl/env.h"

#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>

#include "stagerl/rng.h"

namespace stagerl {
namespace {

Vec3 SampleBox(const Box& box, Rng& rng) {
  return {rng.Uniform(box.min.x, box.max.x), rng.Uniform(box.min.y, box.max.y),
          rng.Uniform(box.min.z, box.max.z)};
}

// Smallest distance between two axis-aligned boxes.
double BoxGap(const Box& a, const Box& b) {
  auto gap = [](double lo1, double hi1, double lo2, double hi2) {
    return std::max({0.0, lo2 - hi1, lo1 - hi2});
  };
  Vec3 g{gap(a.min.x, a.max.x, b.min.x, b.max.x),
         gap(a.min.y, a.max.y, b.min.y, b.max.y),
         gap(a.min.z, a.max.z, b.min.z, b.max.z)};
  return g.Norm();
}

bool Inside(const Box& inner, const Box& outer) {
  return outer.Contains(inner.min) && outer.Contains(inner.max);
}

}  // namespace

std::string_view TaskName(TaskKind kind) {
  switch (kind) {
    case TaskKind::kPickPlace:
      return "pick_place";
    case TaskKind::kPush:
      return "push";
    case TaskKind::kPull:
      return "pull";
    case TaskKind::kLiftPegUpright:
      return "lift_peg_upright";
  }
  return "unknown";
}

std::optional<TaskKind> ParseTaskKind(std::string_view name) {
  for (TaskKind k : {TaskKind::kPickPlace, TaskKind::kPush, TaskKind::kPull,
                     TaskKind::kLiftPegUpright}) {
    if (name == TaskName(k)) return k;
  }
  return std::nullopt;
}

Vec3 Box::Clamp(const Vec3& p) const {
  return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y),
          std::clamp(p.z, min.z, max.z)};
}

void TaskSpec::Validate() const {
  if (!(object_size > 0.0)) {
    throw std::invalid_argument("object_size must be positive");
  }
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(max_step > 0.0) || !(max_turn > 0.0)) {
    throw std::invalid_argument("action bounds must be positive");
  }
  if (!workspace.Valid() || !object_range.Valid() || !goal_range.Valid()) {
    throw std::invalid_argument("box min must not exceed max");
  }
  if (!Inside(object_range, workspace)) {
    throw std::invalid_argument("object range leaves the workspace");
  }
  if (!workspace.Contains(ee_home)) {
    throw std::invalid_argument("ee_home outside the workspace");
  }
  if (!IsRotation(upright_target)) {
    throw std::invalid_argument("upright_target is not a rotation");
  }
  if (kind == TaskKind::kLiftPegUpright) {
    if (!(lift_goal > table_height)) {
      throw std::invalid_argument("lift_goal must exceed table_height");
    }
    if (lift_goal > workspace.max.z) {
      throw std::invalid_argument("lift_goal above the workspace");
    }
  } else {
    if (!Inside(goal_range, workspace)) {
      throw std::invalid_argument("goal range leaves the workspace");
    }
    // Keeps the transport scale ‖x_obj_init − x_goal‖ strictly positive.
    if (BoxGap(object_range, goal_range) <= 0.0) {
      throw std::invalid_argument("object and goal ranges must be disjoint");
    }
  }
}

TaskSpec TaskSpec::Default(TaskKind kind) {
  TaskSpec spec;
  spec.kind = kind;
  const double rest = spec.RestHeight();
  switch (kind) {
    case TaskKind::kPickPlace:
      spec.object_range = {{-0.15, -0.10, rest}, {-0.05, 0.10, rest}};
      spec.goal_range = {{0.05, -0.10, rest}, {0.15, 0.10, rest}};
      break;
    case TaskKind::kPush:
      spec.object_range = {{-0.10, -0.08, rest}, {0.00, 0.08, rest}};
      spec.goal_range = {{0.06, -0.08, rest}, {0.14, 0.08, rest}};
      break;
    case TaskKind::kPull:
      spec.object_range = {{0.00, -0.08, rest}, {0.10, 0.08, rest}};
      spec.goal_range = {{-0.14, -0.08, rest}, {-0.06, 0.08, rest}};
      break;
    case TaskKind::kLiftPegUpright:
      spec.object_range = {{-0.10, -0.10, rest}, {0.10, 0.10, rest}};
      spec.goal_range = spec.object_range;
      spec.yaw_range = 0.5;
      break;
  }
  return spec;
}

StageThresholds StageThresholds::FromSpec(const TaskSpec& spec) {
  StageThresholds th;
  const double l = spec.object_size;
  th.reach_radius = l;
  th.place_margin = l;
  th.lift_clearance = 0.25 * l;
  th.height_tolerance = 0.25 * (spec.lift_goal - spec.table_height);
  th.goal_radius = 0.5 * l;
  th.final_height_tolerance = 0.1 * l;
  th.upright_tolerance = 0.1;
  th.stable_steps = 5;
  return th;
}

SimAction ClipAction(const SimAction& action, const TaskSpec& spec) {
  SimAction out;
  const double a = spec.max_step;
  out.d_pos = {std::clamp(action.d_pos.x, -a, a),
               std::clamp(action.d_pos.y, -a, a),
               std::clamp(action.d_pos.z, -a, a)};
  out.d_rot = action.d_rot;
  const double turn = action.d_rot.Norm();
  if (turn > spec.max_turn) out.d_rot = action.d_rot * (spec.max_turn / turn);
  out.gripper_cmd = std::clamp(action.gripper_cmd, 0.0, 1.0);
  return out;
}

SimState Reset(const TaskSpec& spec, uint64_t episode_seed) {
  Rng rng(MixSeed(spec.seed, episode_seed));
  SimState s;
  s.ee_pos = spec.ee_home;
  s.obj_pos = SampleBox(spec.object_range, rng);
  if (spec.kind == TaskKind::kLiftPegUpright) {
    s.goal_pos = {s.obj_pos.x, s.obj_pos.y, spec.lift_goal};
    // The peg starts lying on its side.
    const double yaw = rng.Uniform(-spec.yaw_range, spec.yaw_range);
    s.obj_rot = AxisAngleToRotation({0, 0, 1}, yaw) *
                AxisAngleToRotation({1, 0, 0}, std::numbers::pi / 2.0);
  } else {
    s.goal_pos = SampleBox(spec.goal_range, rng);
  }
  s.obj_init = s.obj_pos;
  return s;
}

bool SuccessCondition(const SimState& state, const TaskSpec& spec) {
  const StageThresholds th = StageThresholds::FromSpec(spec);
  const SimFlags& f = state.flags;
  switch (spec.kind) {
    case TaskKind::kPickPlace:
      return Distance(state.obj_pos, state.goal_pos) <= th.goal_radius &&
             !f.grasped && f.released_stable_count >= th.stable_steps;
    case TaskKind::kPush:
    case TaskKind::kPull:
      return f.released_stable_count >= th.stable_steps;
    case TaskKind::kLiftPegUpright:
      return f.grasped &&
             std::abs(state.obj_pos.z - spec.lift_goal) <=
                 th.final_height_tolerance &&
             GeodesicDistance(state.obj_rot, spec.upright_target) <=
                 th.upright_tolerance;
  }
  return false;
}

Transition Step(const SimState& state, const SimAction& action,
                const TaskSpec& spec) {
  if (state.terminal) {
    throw std::logic_error("step called on a terminal state (t=" +
                           std::to_string(state.t) + ")");
  }
  const StageThresholds th = StageThresholds::FromSpec(spec);
  const SimAction a = ClipAction(action, spec);

  SimState next = state;
  next.t = state.t + 1;
  next.ee_pos = spec.workspace.Clamp(state.ee_pos + a.d_pos);
  const Vec3 moved = next.ee_pos - state.ee_pos;
  const Rotation turn = RotationFromVector(a.d_rot);
  next.ee_rot = turn * state.ee_rot;
  next.gripper = a.gripper_cmd;

  SimFlags& f = next.flags;
  const bool closing = a.gripper_cmd < 0.5;
  if (IsGraspTask(spec.kind)) {
    if (state.flags.grasped) {
      if (closing) {
        next.obj_pos = state.obj_pos + moved;
        next.obj_rot = turn * state.obj_rot;
      } else {
        // Released objects settle on the table below their release point.
        f.grasped = false;
        next.obj_pos.z = spec.RestHeight();
      }
    } else if (closing && state.gripper >= 0.5 &&
               Distance(next.ee_pos, state.obj_pos) <= spec.GraspRadius()) {
      f.grasped = true;
    }
    f.contact = Distance(next.ee_pos, next.obj_pos) <= spec.ContactRadius();
    f.reached = f.reached ||
                Distance(next.ee_pos, next.obj_pos) <= th.reach_radius;
    f.lifted = f.lifted ||
               (f.grasped &&
                next.obj_pos.z > spec.RestHeight() + th.lift_clearance);
  } else {
    // Quasi-static planar contact: the object mirrors the planar motion of
    // an end-effector that touched it at the start of the step.
    if (state.flags.contact) {
      next.obj_pos.x += moved.x;
      next.obj_pos.y += moved.y;
    }
    f.contact = Distance(next.ee_pos, next.obj_pos) <= spec.ContactRadius();
    f.reached = f.reached || f.contact;
  }

  const double goal_dist = Distance(next.obj_pos, next.goal_pos);
  switch (spec.kind) {
    case TaskKind::kPickPlace:
      f.near_goal = f.near_goal || (f.lifted && goal_dist <= th.place_margin);
      f.released_stable_count =
          (!f.grasped && goal_dist <= th.goal_radius)
              ? state.flags.released_stable_count + 1
              : 0;
      break;
    case TaskKind::kPush:
    case TaskKind::kPull:
      f.near_goal = f.near_goal || (f.reached && goal_dist <= th.place_margin);
      f.released_stable_count = goal_dist <= th.goal_radius
                                    ? state.flags.released_stable_count + 1
                                    : 0;
      break;
    case TaskKind::kLiftPegUpright:
      f.at_height = f.at_height ||
                    (f.lifted && std::abs(next.obj_pos.z - spec.lift_goal) <=
                                     th.height_tolerance);
      break;
  }

  Transition tr;
  tr.state = state;
  tr.action = a;
  const bool success = SuccessCondition(next, spec);
  tr.done = success || next.t >= spec.horizon;
  tr.reward = success ? 1.0 : 0.0;
  next.terminal = tr.done;
  tr.next_state = next;
  return tr;
}

Trajectory Rollout(const TaskSpec& spec, uint64_t episode_seed,
                   const StatePolicy& policy, std::string tag) {
  Trajectory traj;
  traj.task = spec.kind;
  traj.episode_id = episode_seed;
  traj.tag = std::move(tag);
  SimState s = Reset(spec, episode_seed);
  while (!s.terminal) {
    traj.steps.push_back(Step(s, policy(s), spec));
    s = traj.steps.back().next_state;
  }
  return traj;
}

}  // namespace stagerl
