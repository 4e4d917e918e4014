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

#ifndef STAGERL_TEXT_CONFIG_H_
#define STAGERL_TEXT_CONFIG_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stagerl/env.h"

namespace stagerl {

// Line-oriented `key = value` text. '#' starts a comment; blank lines are
// ignored. Vectors are written as three numbers separated by spaces or
// commas. Parse errors throw std::runtime_error with the line number.
class KeyValueConfig {
 public:
  static KeyValueConfig Parse(std::istream& in,
                              const std::string& source = "config");
  static KeyValueConfig ParseFile(const std::string& path);

  void Set(const std::string& key, const std::string& value);
  bool Has(const std::string& key) const;

  std::string GetString(const std::string& key,
                        const std::string& fallback) const;
  double GetDouble(const std::string& key, double fallback) const;
  int GetInt(const std::string& key, int fallback) const;
  uint64_t GetUint64(const std::string& key, uint64_t fallback) const;
  bool GetBool(const std::string& key, bool fallback) const;
  Vec3 GetVec3(const std::string& key, const Vec3& fallback) const;
  std::vector<std::string> GetList(const std::string& key) const;

  // Keys present in the file that no getter has asked for.
  std::vector<std::string> UnusedKeys() const;
  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

 private:
  const std::string* Find(const std::string& key) const;

  std::string source_ = "config";
  std::map<std::string, std::string> entries_;
  mutable std::set<std::string> used_;
};

// Recognized keys: kind, object_size, horizon, seed, table_height,
// lift_goal, ee_home, yaw_range, max_step, max_turn, workspace.min,
// workspace.max, rand.obj.min, rand.obj.max, rand.goal.min, rand.goal.max.
// Unset keys keep the task's defaults. The result is validated.
TaskSpec TaskSpecFromConfig(const KeyValueConfig& config);
TaskSpec TaskSpecFromConfig(const KeyValueConfig& config, TaskKind kind);

}  // namespace stagerl

#endif  // STAGERL_TEXT_CONFIG_H_
