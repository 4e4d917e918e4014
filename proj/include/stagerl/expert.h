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

#ifndef STAGERL_EXPERT_H_
#define STAGERL_EXPERT_H_

#include <string>
#include <string_view>

#include "stagerl/env.h"
#include "stagerl/stare.h"

namespace stagerl {

// Deterministic waypoint controller. In every stage it takes the bounded
// action that greedily reduces that stage's deviation.
SimAction ScriptedExpert(const SimState& state, const TaskSpec& spec);

// A controllable way for the expert to fail.
struct FailureMode {
  enum class Kind { kEarlyRelease, kMissGrasp, kWrongGoal, kStall };

  Kind kind = Kind::kStall;
  StageId stall_stage = StageId::kReach;  // kStall only

  // "early_release", "miss_grasp", "wrong_goal" or "stall:<stage>".
  // Throws std::invalid_argument for anything else.
  static FailureMode Parse(std::string_view text);
  std::string Name() const;
};

// Expert behavior perturbed so the episode fails in a predictable stage:
//   early_release  lets go of the object (breaks contact) partway through
//                  Transport, Push/Pull or Lift
//   miss_grasp     closes the gripper beside the object (never touches it
//                  for Push/Pull)
//   wrong_goal     completes transport toward a goal shifted by 0.8 L_obj
//                  (a rotation target 0.3 rad off for LiftPegUpright)
//   stall:<stage>  stops making progress once <stage> is entered
SimAction CorruptExpert(const SimState& state, const TaskSpec& spec,
                        const FailureMode& mode);

}  // namespace stagerl

#endif  // STAGERL_EXPERT_H_
