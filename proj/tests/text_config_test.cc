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

#include "stagerl/text_config.h"

#include <sstream>
#include <stdexcept>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

namespace stagerl {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

KeyValueConfig FromText(const std::string& text) {
  std::istringstream in(text);
  return KeyValueConfig::Parse(in, "test.cfg");
}

TEST(KeyValueConfigTest, ParsesValuesAndComments) {
  const KeyValueConfig c = FromText(
      "# header\n"
      "name = run one  \n"
      "\n"
      "steps = 12 # trailing\n"
      "lr=0.5\n"
      "flag = true\n"
      "pos = 0.1, 0.2 0.3\n"
      "list = a, b ,c\n");
  EXPECT_EQ(c.GetString("name", ""), "run one");
  EXPECT_EQ(c.GetInt("steps", 0), 12);
  EXPECT_EQ(c.GetDouble("lr", 0.0), 0.5);
  EXPECT_TRUE(c.GetBool("flag", false));
  EXPECT_EQ(c.GetVec3("pos", {}), (Vec3{0.1, 0.2, 0.3}));
  EXPECT_THAT(c.GetList("list"), ElementsAre("a", "b", "c"));
  EXPECT_EQ(c.GetInt("missing", 7), 7);
}

TEST(KeyValueConfigTest, TracksUnusedKeys) {
  const KeyValueConfig c = FromText("a = 1\nb = 2\n");
  c.GetInt("a", 0);
  EXPECT_THAT(c.UnusedKeys(), ElementsAre("b"));
}

TEST(KeyValueConfigTest, ErrorsNameTheLine) {
  try {
    FromText("a = 1\nno equals sign\n");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_THAT(e.what(), HasSubstr("test.cfg:2"));
  }
  EXPECT_THROW(FromText("a = 1\na = 2\n"), std::runtime_error);
}

TEST(KeyValueConfigTest, BadNumbersThrow) {
  const KeyValueConfig c = FromText("x = 1.5q\nn = 2.5\nb = maybe\nv = 1 2\n");
  EXPECT_ANY_THROW(c.GetDouble("x", 0));
  EXPECT_ANY_THROW(c.GetInt("n", 0));
  EXPECT_ANY_THROW(c.GetBool("b", false));
  EXPECT_ANY_THROW(c.GetVec3("v", {}));
}

TEST(TaskSpecFromConfigTest, OverridesDefaults) {
  const KeyValueConfig c = FromText(
      "kind = lift_peg_upright\nobject_size = 0.04\nhorizon = 80\n"
      "lift_goal = 0.12\n");
  const TaskSpec spec = TaskSpecFromConfig(c);
  EXPECT_EQ(spec.kind, TaskKind::kLiftPegUpright);
  EXPECT_EQ(spec.object_size, 0.04);
  EXPECT_EQ(spec.horizon, 80);
  EXPECT_EQ(spec.lift_goal, 0.12);
  // Randomization ranges follow the new resting height.
  EXPECT_EQ(spec.object_range.min.z, spec.RestHeight());
}

TEST(TaskSpecFromConfigTest, RejectsInvalidSpec) {
  EXPECT_THROW(TaskSpecFromConfig(FromText("kind = push\nhorizon = 0\n")),
               std::invalid_argument);
  EXPECT_ANY_THROW(TaskSpecFromConfig(FromText("kind = stack\n")));
}

}  // namespace
}  // namespace stagerl
