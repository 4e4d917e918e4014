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

#include "stagerl/stare.h"

#include <numbers>
#include <stdexcept>
#include <string>

namespace stagerl {
namespace {

constexpr StageId kAllStages[] = {
    StageId::kReach, StageId::kGrasp, StageId::kTransport,
    StageId::kPlace, StageId::kPush,  StageId::kPull,
    StageId::kGoal,  StageId::kLift,  StageId::kUpright,
    StageId::kDone};

}  // namespace

std::string_view StageName(StageId stage) {
  switch (stage) {
    case StageId::kReach:
      return "reach";
    case StageId::kGrasp:
      return "grasp";
    case StageId::kTransport:
      return "transport";
    case StageId::kPlace:
      return "place";
    case StageId::kPush:
      return "push";
    case StageId::kPull:
      return "pull";
    case StageId::kGoal:
      return "goal";
    case StageId::kLift:
      return "lift";
    case StageId::kUpright:
      return "upright";
    case StageId::kDone:
      return "done";
  }
  return "unknown";
}

std::optional<StageId> ParseStageId(std::string_view name) {
  for (StageId s : kAllStages) {
    if (name == StageName(s)) return s;
  }
  return std::nullopt;
}

StageProfile StageProfile::ForTask(const TaskSpec& spec,
                                   double penalty_weight) {
  StageProfile p;
  p.task = spec.kind;
  p.thresholds = StageThresholds::FromSpec(spec);
  p.penalty_weight = penalty_weight;
  switch (spec.kind) {
    case TaskKind::kPickPlace:
      p.stages = {StageId::kReach, StageId::kGrasp, StageId::kTransport,
                  StageId::kPlace};
      break;
    case TaskKind::kPush:
      p.stages = {StageId::kReach, StageId::kPush, StageId::kGoal};
      break;
    case TaskKind::kPull:
      p.stages = {StageId::kReach, StageId::kPull, StageId::kGoal};
      break;
    case TaskKind::kLiftPegUpright:
      p.stages = {StageId::kReach, StageId::kGrasp, StageId::kLift,
                  StageId::kUpright};
      break;
  }
  return p;
}

int StageProfile::IndexOf(StageId stage) const {
  if (stage == StageId::kDone) return size();
  for (int i = 0; i < size(); ++i) {
    if (stages[i] == stage) return i;
  }
  return -1;
}

StageId StageOf(const SimState& state, const TaskSpec& spec,
                const StageProfile& profile) {
  if (state.terminal && SuccessCondition(state, spec)) return StageId::kDone;
  const SimFlags& f = state.flags;
  switch (profile.task) {
    case TaskKind::kPickPlace:
      if (!f.reached) return StageId::kReach;
      if (!f.lifted) return StageId::kGrasp;
      if (!f.near_goal) return StageId::kTransport;
      return StageId::kPlace;
    case TaskKind::kPush:
    case TaskKind::kPull:
      if (!f.reached) return StageId::kReach;
      if (!f.near_goal) {
        return profile.task == TaskKind::kPush ? StageId::kPush
                                               : StageId::kPull;
      }
      return StageId::kGoal;
    case TaskKind::kLiftPegUpright:
      if (!f.reached) return StageId::kReach;
      if (!f.lifted) return StageId::kGrasp;
      if (!f.at_height) return StageId::kLift;
      return StageId::kUpright;
  }
  return StageId::kDone;
}

double StageDeviation(const SimState& state, StageId stage,
                      const TaskSpec& spec) {
  switch (stage) {
    case StageId::kReach:
    case StageId::kGrasp:
      return Distance(state.ee_pos, state.obj_pos);
    case StageId::kTransport:
    case StageId::kPlace:
    case StageId::kPush:
    case StageId::kPull:
    case StageId::kGoal:
      return Distance(state.obj_pos, state.goal_pos);
    case StageId::kLift:
      return std::abs(state.obj_pos.z - spec.lift_goal);
    case StageId::kUpright:
      return GeodesicDistance(state.obj_rot, spec.upright_target);
    case StageId::kDone:
      return 0.0;
  }
  return 0.0;
}

double StageScale(const SimState& state, StageId stage, const TaskSpec& spec) {
  switch (stage) {
    case StageId::kReach:
    case StageId::kGrasp:
    case StageId::kPlace:
    case StageId::kGoal:
      return spec.object_size;
    case StageId::kTransport:
    case StageId::kPush:
    case StageId::kPull:
      return Distance(state.obj_init, state.goal_pos);
    case StageId::kLift:
      return spec.lift_goal - spec.table_height;
    case StageId::kUpright:
      return std::numbers::pi;
    case StageId::kDone:
      return 1.0;
  }
  return 1.0;
}

double StageCost(std::span<const SimState> states, StageId stage,
                 const TaskSpec& spec) {
  if (states.empty()) throw std::invalid_argument("empty stage segment");
  double sum = 0.0;
  for (const SimState& s : states) sum += StageDeviation(s, stage, spec);
  return sum / static_cast<double>(states.size());
}

double StagePotential(const SimState& state, StageId stage,
                      const TaskSpec& spec) {
  if (stage == StageId::kDone) return 0.0;
  return Logistic(1.0 - StageDeviation(state, stage, spec) /
                            StageScale(state, stage, spec));
}

double CompositePotential(const SimState& state, const TaskSpec& spec,
                          const StageProfile& profile) {
  if (state.terminal) return 0.0;
  return StagePotential(state, StageOf(state, spec, profile), spec);
}

double ShapeReward(double reward, const SimState& state,
                   const SimState& next_state, const TaskSpec& spec,
                   const StageProfile& profile, double gamma) {
  return reward + gamma * CompositePotential(next_state, spec, profile) -
         CompositePotential(state, spec, profile);
}

std::vector<StageId> StageLabels(const Trajectory& traj, const TaskSpec& spec,
                                 const StageProfile& profile) {
  std::vector<StageId> labels;
  labels.reserve(traj.steps.size());
  for (const Transition& tr : traj.steps) {
    labels.push_back(StageOf(tr.state, spec, profile));
  }
  return labels;
}

std::vector<StageSegment> Segment(const Trajectory& traj, const TaskSpec& spec,
                                  const StageProfile& profile) {
  if (traj.steps.empty()) {
    throw std::invalid_argument("cannot segment an empty trajectory");
  }
  const std::vector<StageId> labels = StageLabels(traj, spec, profile);
  std::vector<SimState> states;
  states.reserve(traj.steps.size());
  for (const Transition& tr : traj.steps) states.push_back(tr.state);

  std::vector<StageSegment> segments;
  int prev_index = -1;
  for (int t = 0; t < traj.size(); ++t) {
    const int index = profile.IndexOf(labels[t]);
    if (index < prev_index) {
      throw std::logic_error("stage label regressed at t=" +
                             std::to_string(t));
    }
    if (index != prev_index) {
      if (!segments.empty()) segments.back().end = t;
      segments.push_back({labels[t], t, t, 0.0, 0.0, false});
      prev_index = index;
    }
  }
  segments.back().end = traj.size();

  // The final next_state may already belong to a later stage.
  const int final_index =
      profile.IndexOf(StageOf(traj.steps.back().next_state, spec, profile));
  for (size_t i = 0; i < segments.size(); ++i) {
    StageSegment& seg = segments[i];
    std::span<const SimState> span(states.data() + seg.start, seg.steps());
    seg.cost = StageCost(span, seg.stage, spec);
    seg.normalized_cost = seg.cost / StageScale(span.front(), seg.stage, spec);
    seg.completed = i + 1 < segments.size() || traj.Succeeded() ||
                    final_index > profile.IndexOf(seg.stage);
  }
  return segments;
}

}  // namespace stagerl
