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

#include <stdexcept>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "stagerl/geometry.h"
#include "stagerl/stare.h"
#include "test_util.h"

namespace stagerl {
namespace {

using ::testing::ElementsAreArray;

constexpr TaskKind kAllTasks[] = {TaskKind::kPickPlace, TaskKind::kPush,
                                  TaskKind::kPull, TaskKind::kLiftPegUpright};

Trajectory CorruptRollout(const TaskSpec& spec, uint64_t seed,
                          const std::string& mode_name) {
  const FailureMode mode = FailureMode::Parse(mode_name);
  return Rollout(
      spec, seed,
      [&](const SimState& s) { return CorruptExpert(s, spec, mode); },
      mode_name);
}

TEST(ScriptedExpertTest, FirstMoveHeadsForObjectAtFullSpeed) {
  const TaskSpec spec = TaskSpec::Default(TaskKind::kPickPlace);
  const SimState s = Reset(spec, 12);
  const SimAction a = ScriptedExpert(s, spec);
  EXPECT_NEAR(a.d_pos.Norm(), spec.max_step, 1e-15);
  const Vec3 dir = (s.obj_pos - s.ee_pos) * (1.0 / Distance(s.obj_pos, s.ee_pos));
  EXPECT_NEAR(a.d_pos.Dot(dir), spec.max_step, 1e-15);
  EXPECT_EQ(a.gripper_cmd, 1.0);
}

TEST(ScriptedExpertTest, PegEndsUprightWithinTolerance) {
  const TaskSpec spec = TaskSpec::Default(TaskKind::kLiftPegUpright);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Trajectory t = testing::ExpertRollout(spec, seed);
    ASSERT_TRUE(t.Succeeded());
    EXPECT_LE(GeodesicDistance(t.steps.back().next_state.obj_rot,
                               spec.upright_target),
              0.1);
  }
}

TEST(ScriptedExpertTest, SegmentsIntoFullStageSequence) {
  for (TaskKind kind : kAllTasks) {
    const TaskSpec spec = TaskSpec::Default(kind);
    const StageProfile profile = StageProfile::ForTask(spec);
    for (uint64_t seed = 0; seed < 100; ++seed) {
      const Trajectory t = testing::ExpertRollout(spec, seed);
      const auto segments = Segment(t, spec, profile);
      std::vector<StageId> stages;
      for (const StageSegment& s : segments) {
        stages.push_back(s.stage);
        EXPECT_TRUE(s.completed) << TaskName(kind) << " seed " << seed;
      }
      ASSERT_THAT(stages, ElementsAreArray(profile.stages))
          << TaskName(kind) << " seed " << seed;
    }
  }
}

TEST(FailureModeTest, ParseAndName) {
  for (const char* name : {"early_release", "miss_grasp", "wrong_goal",
                           "stall:reach", "stall:upright"}) {
    EXPECT_EQ(FailureMode::Parse(name).Name(), name);
  }
  EXPECT_THROW(FailureMode::Parse("stall"), std::invalid_argument);
  EXPECT_THROW(FailureMode::Parse("stall:nowhere"), std::invalid_argument);
  EXPECT_THROW(FailureMode::Parse("drop"), std::invalid_argument);
}

// Every stall mode must fail inside the requested stage.
TEST(CorruptExpertTest, StallEndsInRequestedStage) {
  for (TaskKind kind : kAllTasks) {
    const TaskSpec spec = TaskSpec::Default(kind);
    const StageProfile profile = StageProfile::ForTask(spec);
    for (size_t k = 0; k < profile.stages.size(); ++k) {
      const std::string mode =
          "stall:" + std::string(StageName(profile.stages[k]));
      for (uint64_t seed = 0; seed < 20; ++seed) {
        const Trajectory t = CorruptRollout(spec, seed, mode);
        ASSERT_FALSE(t.Succeeded()) << mode;
        EXPECT_EQ(t.size(), spec.horizon);
        const auto segments = Segment(t, spec, profile);
        ASSERT_EQ(segments.size(), k + 1) << TaskName(kind) << " " << mode;
        EXPECT_EQ(segments.back().stage, profile.stages[k]);
        EXPECT_FALSE(segments.back().completed);
        for (size_t j = 0; j < k; ++j) EXPECT_TRUE(segments[j].completed);
      }
    }
  }
}

TEST(CorruptExpertTest, MissGraspFailsEarly) {
  for (TaskKind kind : kAllTasks) {
    const TaskSpec spec = TaskSpec::Default(kind);
    const StageProfile profile = StageProfile::ForTask(spec);
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const Trajectory t = CorruptRollout(spec, seed, "miss_grasp");
      ASSERT_FALSE(t.Succeeded());
      const auto segments = Segment(t, spec, profile);
      const StageId last = segments.back().stage;
      EXPECT_TRUE(last == StageId::kReach || last == StageId::kGrasp)
          << TaskName(kind);
      EXPECT_FALSE(segments.back().completed);
    }
  }
}

TEST(CorruptExpertTest, WrongGoalFailsInFinalStage) {
  for (TaskKind kind : kAllTasks) {
    const TaskSpec spec = TaskSpec::Default(kind);
    const StageProfile profile = StageProfile::ForTask(spec);
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const Trajectory t = CorruptRollout(spec, seed, "wrong_goal");
      ASSERT_FALSE(t.Succeeded());
      const auto segments = Segment(t, spec, profile);
      EXPECT_EQ(segments.size(), profile.stages.size()) << TaskName(kind);
      EXPECT_EQ(segments.back().stage, profile.stages.back());
      EXPECT_FALSE(segments.back().completed);
    }
  }
}

TEST(CorruptExpertTest, EarlyReleaseNeverSucceeds) {
  for (TaskKind kind : kAllTasks) {
    const TaskSpec spec = TaskSpec::Default(kind);
    const StageProfile profile = StageProfile::ForTask(spec);
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const Trajectory t = CorruptRollout(spec, seed, "early_release");
      ASSERT_FALSE(t.Succeeded()) << TaskName(kind);
      const auto segments = Segment(t, spec, profile);
      EXPECT_GE(segments.size(), 2u);
      EXPECT_FALSE(segments.back().completed);
    }
  }
}

}  // namespace
}  // namespace stagerl
