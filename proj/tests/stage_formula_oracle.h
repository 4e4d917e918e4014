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

// A second, deliberately naive implementation of the stage labels, costs,
// potentials and shaped rewards. It shares only the simulator's data types
// with the library so disagreements point at a formula error on one side.

#ifndef STAGERL_TESTS_STAGE_FORMULA_ORACLE_H_
#define STAGERL_TESTS_STAGE_FORMULA_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stagerl/env.h"

namespace stagerl::formula_oracle {

inline double Dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Angle of aᵀb from its trace.
inline double Angle(const Rotation& a, const Rotation& b) {
  double trace = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) trace += a(k, i) * b(k, i);
  }
  const double c = std::min(1.0, std::max(-1.0, (trace - 1.0) / 2.0));
  return std::acos(c);
}

inline double Sigma(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Stage names in execution order for each task.
inline std::vector<std::string> Stages(TaskKind kind) {
  switch (kind) {
    case TaskKind::kPickPlace:
      return {"reach", "grasp", "transport", "place"};
    case TaskKind::kPush:
      return {"reach", "push", "goal"};
    case TaskKind::kPull:
      return {"reach", "pull", "goal"};
    case TaskKind::kLiftPegUpright:
      return {"reach", "grasp", "lift", "upright"};
  }
  return {};
}

// Index into Stages(kind); Stages(kind).size() once the task is solved.
inline int Label(const SimState& s, const TaskSpec& spec) {
  if (s.terminal && SuccessCondition(s, spec)) {
    return static_cast<int>(Stages(spec.kind).size());
  }
  const SimFlags& f = s.flags;
  if (!f.reached) return 0;
  switch (spec.kind) {
    case TaskKind::kPickPlace:
      return !f.lifted ? 1 : !f.near_goal ? 2 : 3;
    case TaskKind::kPush:
    case TaskKind::kPull:
      return !f.near_goal ? 1 : 2;
    case TaskKind::kLiftPegUpright:
      return !f.lifted ? 1 : !f.at_height ? 2 : 3;
  }
  return 0;
}

// Raw per-step deviation d_k(s).
inline double Deviation(const std::string& stage, const SimState& s,
                        const TaskSpec& spec) {
  if (stage == "reach" || stage == "grasp") return Dist(s.ee_pos, s.obj_pos);
  if (stage == "lift") return std::fabs(s.obj_pos.z - spec.lift_goal);
  if (stage == "upright") return Angle(s.obj_rot, spec.upright_target);
  return Dist(s.obj_pos, s.goal_pos);
}

// Normalization d_k^max.
inline double Scale(const std::string& stage, const SimState& s,
                    const TaskSpec& spec) {
  if (stage == "transport" || stage == "push" || stage == "pull") {
    return Dist(s.obj_init, s.goal_pos);
  }
  if (stage == "lift") return spec.lift_goal - spec.table_height;
  if (stage == "upright") return 3.14159265358979323846;
  return spec.object_size;
}

inline double Potential(const SimState& s, const TaskSpec& spec) {
  if (s.terminal) return 0.0;
  const int k = Label(s, spec);
  const auto stages = Stages(spec.kind);
  if (k >= static_cast<int>(stages.size())) return 0.0;
  return Sigma(1.0 - Deviation(stages[k], s, spec) / Scale(stages[k], s, spec));
}

struct Piece {
  std::string stage;
  int start = 0;
  int end = 0;
  double cost = 0.0;
  double normalized = 0.0;
};

// Maximal runs of equal labels over the visited states s_0 .. s_{T−1}.
inline std::vector<Piece> Pieces(const Trajectory& t, const TaskSpec& spec) {
  const auto stages = Stages(spec.kind);
  std::vector<Piece> out;
  int i = 0;
  while (i < t.size()) {
    const int k = Label(t.steps[i].state, spec);
    int j = i;
    double sum = 0.0;
    while (j < t.size() && Label(t.steps[j].state, spec) == k) {
      sum += Deviation(stages[k], t.steps[j].state, spec);
      ++j;
    }
    Piece p;
    p.stage = stages[k];
    p.start = i;
    p.end = j;
    p.cost = sum / (j - i);
    p.normalized = p.cost / Scale(stages[k], t.steps[i].state, spec);
    out.push_back(p);
    i = j;
  }
  return out;
}

inline std::vector<double> ShapedRewards(const Trajectory& t,
                                         const TaskSpec& spec, double gamma) {
  std::vector<double> out;
  for (const Transition& tr : t.steps) {
    out.push_back(tr.reward + gamma * Potential(tr.next_state, spec) -
                  Potential(tr.state, spec));
  }
  return out;
}

}  // namespace stagerl::formula_oracle

#endif  // STAGERL_TESTS_STAGE_FORMULA_ORACLE_H_
