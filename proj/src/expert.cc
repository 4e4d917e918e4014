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

#include "stagerl/expert.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stagerl {
namespace {

constexpr double kWrongGoalShift = 0.8;  // in units of L_obj
constexpr double kStallShortfall = 0.75;  // in units of L_obj
constexpr double kWrongUprightAngle = 0.3;

Vec3 StepToward(const Vec3& from, const Vec3& to, double max_len) {
  Vec3 delta = to - from;
  const double n = delta.Norm();
  if (n <= max_len) return delta;
  return delta * (max_len / n);
}

Vec3 Planar(const Vec3& v) { return {v.x, v.y, 0.0}; }

SimAction Hold(const SimState& s) {
  SimAction a;
  a.gripper_cmd = s.gripper;
  return a;
}

SimAction Retreat(const TaskSpec& spec) {
  SimAction a;
  a.d_pos = {0.0, 0.0, spec.max_step};
  a.gripper_cmd = 1.0;
  return a;
}

// Open-gripper approach to `target`, closing once the end-effector is on it.
SimAction ApproachAndGrasp(const SimState& s, const TaskSpec& spec,
                           const Vec3& target) {
  SimAction a;
  if (s.gripper < 0.5) {
    a.d_pos = StepToward(s.ee_pos, target, spec.max_step);
    a.gripper_cmd = 1.0;
    return a;
  }
  if (Distance(s.ee_pos, target) > 0.2 * spec.GraspRadius()) {
    a.d_pos = StepToward(s.ee_pos, target, spec.max_step);
    a.gripper_cmd = 1.0;
    return a;
  }
  a.gripper_cmd = 0.0;
  return a;
}

Vec3 PushApproachPoint(const SimState& s, const TaskSpec& spec) {
  Vec3 dir = Planar(s.goal_pos - s.obj_pos);
  const double n = dir.Norm();
  dir = n > 0.0 ? dir * (1.0 / n) : Vec3{1.0, 0.0, 0.0};
  const double offset = 0.5 * spec.ContactRadius();
  // Push from behind the object, pull from its goal side.
  return spec.kind == TaskKind::kPush ? s.obj_pos - dir * offset
                                      : s.obj_pos + dir * offset;
}

SimAction PickPlaceExpert(const SimState& s, const TaskSpec& spec,
                          const Vec3& goal) {
  const SimFlags& f = s.flags;
  SimAction a;
  if (f.grasped) {
    a.gripper_cmd = 0.0;
    if (!f.lifted) {
      a.d_pos = {0.0, 0.0, spec.max_step};
    } else if (Distance(s.obj_pos, goal) > 1e-9) {
      a.d_pos = StepToward(s.obj_pos, goal, spec.max_step);
    } else {
      a.gripper_cmd = 1.0;
    }
    return a;
  }
  if (Distance(s.obj_pos, goal) <= 0.5 * spec.object_size && f.lifted) {
    return Retreat(spec);
  }
  return ApproachAndGrasp(s, spec, s.obj_pos);
}

SimAction LiftUprightExpert(const SimState& s, const TaskSpec& spec,
                            const Rotation& target) {
  const SimFlags& f = s.flags;
  if (!f.grasped) return ApproachAndGrasp(s, spec, s.obj_pos);
  SimAction a;
  a.gripper_cmd = 0.0;
  if (!f.lifted) {
    a.d_pos = {0.0, 0.0, spec.max_step};
    return a;
  }
  a.d_pos = {0.0, 0.0,
             std::clamp(spec.lift_goal - s.obj_pos.z, -spec.max_step,
                        spec.max_step)};
  if (f.at_height) {
    // World-frame rotation that takes the object onto the target.
    a.d_rot = RotationToVector(target * s.obj_rot.Transpose());
  }
  return a;
}

SimAction PushPullExpert(const SimState& s, const TaskSpec& spec,
                         const Vec3& goal) {
  const SimFlags& f = s.flags;
  if (f.near_goal && Distance(s.obj_pos, goal) <= 0.25 * spec.object_size) {
    return Retreat(spec);
  }
  SimAction a;
  a.gripper_cmd = 1.0;
  if (!f.contact) {
    a.d_pos = StepToward(s.ee_pos, PushApproachPoint(s, spec), spec.max_step);
    return a;
  }
  a.d_pos = Planar(StepToward(Planar(s.obj_pos), Planar(goal), spec.max_step));
  return a;
}

SimAction ExpertToward(const SimState& s, const TaskSpec& spec,
                       const Vec3& goal, const Rotation& upright) {
  switch (spec.kind) {
    case TaskKind::kPickPlace:
      return PickPlaceExpert(s, spec, goal);
    case TaskKind::kPush:
    case TaskKind::kPull:
      return PushPullExpert(s, spec, goal);
    case TaskKind::kLiftPegUpright:
      return LiftUprightExpert(s, spec, upright);
  }
  return Hold(s);
}

}  // namespace

SimAction ScriptedExpert(const SimState& state, const TaskSpec& spec) {
  return ExpertToward(state, spec, state.goal_pos, spec.upright_target);
}

FailureMode FailureMode::Parse(std::string_view text) {
  FailureMode m;
  if (text == "early_release") {
    m.kind = Kind::kEarlyRelease;
  } else if (text == "miss_grasp") {
    m.kind = Kind::kMissGrasp;
  } else if (text == "wrong_goal") {
    m.kind = Kind::kWrongGoal;
  } else if (text.starts_with("stall:")) {
    auto stage = ParseStageId(text.substr(6));
    if (!stage || *stage == StageId::kDone) {
      throw std::invalid_argument("unknown stall stage: " + std::string(text));
    }
    m.kind = Kind::kStall;
    m.stall_stage = *stage;
  } else {
    throw std::invalid_argument("unknown failure mode: " + std::string(text));
  }
  return m;
}

std::string FailureMode::Name() const {
  switch (kind) {
    case Kind::kEarlyRelease:
      return "early_release";
    case Kind::kMissGrasp:
      return "miss_grasp";
    case Kind::kWrongGoal:
      return "wrong_goal";
    case Kind::kStall:
      return "stall:" + std::string(StageName(stall_stage));
  }
  return "unknown";
}

SimAction CorruptExpert(const SimState& s, const TaskSpec& spec,
                        const FailureMode& mode) {
  const SimFlags& f = s.flags;
  const bool grasp_task = IsGraspTask(spec.kind);
  const Vec3 shifted_goal =
      s.goal_pos + Vec3{0.0, kWrongGoalShift * spec.object_size, 0.0};

  switch (mode.kind) {
    case FailureMode::Kind::kEarlyRelease: {
      const double half_way = 0.5 * Distance(s.obj_init, s.goal_pos);
      if (grasp_task) {
        if (f.lifted && !f.grasped) return Hold(s);  // dropped: give up
        const bool release =
            f.grasped && f.lifted &&
            (spec.kind == TaskKind::kPickPlace
                 ? Distance(s.obj_pos, s.goal_pos) <= half_way
                 : !f.at_height);
        if (release) {
          SimAction a;
          a.gripper_cmd = 1.0;
          return a;
        }
        return ScriptedExpert(s, spec);
      }
      if (f.reached && (!f.contact ||
                        Distance(s.obj_pos, s.goal_pos) <= half_way)) {
        return Retreat(spec);
      }
      return ScriptedExpert(s, spec);
    }
    case FailureMode::Kind::kMissGrasp: {
      if (grasp_task) {
        const Vec3 beside =
            s.obj_pos + Vec3{0.0, 0.8 * spec.object_size, 0.0};
        if (s.gripper < 0.5) return Hold(s);  // closed on nothing: stays
        return ApproachAndGrasp(s, spec, beside);
      }
      SimAction a;
      a.gripper_cmd = 1.0;
      const Vec3 beside =
          s.obj_pos + Vec3{0.0, 1.5 * spec.ContactRadius(), 0.0};
      a.d_pos = StepToward(s.ee_pos, beside, spec.max_step);
      return a;
    }
    case FailureMode::Kind::kWrongGoal: {
      if (spec.kind == TaskKind::kLiftPegUpright) {
        const Rotation wrong =
            spec.upright_target *
            AxisAngleToRotation({1, 0, 0}, kWrongUprightAngle);
        return ExpertToward(s, spec, s.goal_pos, wrong);
      }
      return ExpertToward(s, spec, shifted_goal, spec.upright_target);
    }
    case FailureMode::Kind::kStall: {
      const StageProfile profile = StageProfile::ForTask(spec);
      const StageId stage = StageOf(s, spec, profile);
      if (!grasp_task && mode.stall_stage == profile.stages.back()) {
        // Stop short of the success region instead of freezing inside it.
        Vec3 away = Planar(s.obj_init - s.goal_pos);
        away = away * (1.0 / away.Norm());
        const Vec3 short_goal =
            s.goal_pos + away * (kStallShortfall * spec.object_size);
        return ExpertToward(s, spec, short_goal, spec.upright_target);
      }
      if (profile.IndexOf(stage) >= profile.IndexOf(mode.stall_stage)) {
        return Hold(s);
      }
      return ScriptedExpert(s, spec);
    }
  }
  return Hold(s);
}

}  // namespace stagerl
