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

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace stagerl {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& text, const std::string& key) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error("bad value for " + key + ": '" + text + "'");
  }
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(std::istream& in,
                                     const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = Trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) {
      throw std::runtime_error(where + "expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(where + "empty key");
    if (cfg.entries_.count(key)) {
      throw std::runtime_error(where + "duplicate key " + key);
    }
    cfg.entries_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::ParseFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Parse(in, path);
}

void KeyValueConfig::Set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

bool KeyValueConfig::Has(const std::string& key) const {
  return entries_.count(key) > 0;
}

const std::string* KeyValueConfig::Find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::string KeyValueConfig::GetString(const std::string& key,
                                      const std::string& fallback) const {
  const std::string* v = Find(key);
  return v ? *v : fallback;
}

double KeyValueConfig::GetDouble(const std::string& key,
                                 double fallback) const {
  const std::string* v = Find(key);
  return v ? ParseNumber<double>(*v, key) : fallback;
}

int KeyValueConfig::GetInt(const std::string& key, int fallback) const {
  const std::string* v = Find(key);
  return v ? ParseNumber<int>(*v, key) : fallback;
}

uint64_t KeyValueConfig::GetUint64(const std::string& key,
                                   uint64_t fallback) const {
  const std::string* v = Find(key);
  return v ? ParseNumber<uint64_t>(*v, key) : fallback;
}

bool KeyValueConfig::GetBool(const std::string& key, bool fallback) const {
  const std::string* v = Find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw std::runtime_error("bad value for " + key + ": '" + *v + "'");
}

Vec3 KeyValueConfig::GetVec3(const std::string& key,
                             const Vec3& fallback) const {
  const std::string* v = Find(key);
  if (!v) return fallback;
  std::string text = *v;
  for (char& c : text) {
    if (c == ',') c = ' ';
  }
  std::istringstream ss(text);
  std::vector<double> xs;
  std::string tok;
  while (ss >> tok) xs.push_back(ParseNumber<double>(tok, key));
  if (xs.size() != 3) {
    throw std::runtime_error("bad value for " + key + ": expected 3 numbers");
  }
  return {xs[0], xs[1], xs[2]};
}

std::vector<std::string> KeyValueConfig::GetList(const std::string& key) const {
  std::vector<std::string> out;
  const std::string* v = Find(key);
  if (!v) return out;
  std::string item;
  std::istringstream ss(*v);
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> KeyValueConfig::UnusedKeys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : entries_) {
    if (!used_.count(key)) out.push_back(key);
  }
  return out;
}

TaskSpec TaskSpecFromConfig(const KeyValueConfig& config) {
  const std::string name = config.GetString("kind", "");
  const auto kind = ParseTaskKind(name);
  if (!kind) throw std::runtime_error("unknown task kind '" + name + "'");
  return TaskSpecFromConfig(config, *kind);
}

TaskSpec TaskSpecFromConfig(const KeyValueConfig& config, TaskKind kind) {
  TaskSpec spec = TaskSpec::Default(kind);
  spec.object_size = config.GetDouble("object_size", spec.object_size);
  // Objects start resting on the table unless ranges say otherwise.
  spec.table_height = config.GetDouble("table_height", spec.table_height);
  for (Box* box : {&spec.object_range, &spec.goal_range}) {
    box->min.z = box->max.z = spec.RestHeight();
  }
  spec.horizon = config.GetInt("horizon", spec.horizon);
  spec.seed = config.GetUint64("seed", spec.seed);
  spec.lift_goal = config.GetDouble("lift_goal", spec.lift_goal);
  spec.ee_home = config.GetVec3("ee_home", spec.ee_home);
  spec.yaw_range = config.GetDouble("yaw_range", spec.yaw_range);
  spec.max_step = config.GetDouble("max_step", spec.max_step);
  spec.max_turn = config.GetDouble("max_turn", spec.max_turn);
  spec.workspace.min = config.GetVec3("workspace.min", spec.workspace.min);
  spec.workspace.max = config.GetVec3("workspace.max", spec.workspace.max);
  spec.object_range.min =
      config.GetVec3("rand.obj.min", spec.object_range.min);
  spec.object_range.max =
      config.GetVec3("rand.obj.max", spec.object_range.max);
  spec.goal_range.min = config.GetVec3("rand.goal.min", spec.goal_range.min);
  spec.goal_range.max = config.GetVec3("rand.goal.max", spec.goal_range.max);
  spec.Validate();
  return spec;
}

}  // namespace stagerl
