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

#include "stagerl/trajectory_io.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace stagerl {
namespace {

using nlohmann::json;

json VecToJson(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json RotToJson(const Rotation& r) {
  json a = json::array();
  for (double x : r.RowMajor()) a.push_back(x);
  return a;
}

Vec3 VecFromJson(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error("expected a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Rotation RotFromJson(const json& j) {
  if (!j.is_array() || j.size() != 9) {
    throw std::runtime_error("expected a row-major 3x3 rotation");
  }
  std::array<double, 9> m;
  for (int i = 0; i < 9; ++i) m[i] = j[i].get<double>();
  return Rotation(m);
}

json StateToJson(const SimState& s) {
  return json{{"t", s.t},
              {"ee_pos", VecToJson(s.ee_pos)},
              {"ee_rot", RotToJson(s.ee_rot)},
              {"gripper", s.gripper},
              {"obj_pos", VecToJson(s.obj_pos)},
              {"obj_rot", RotToJson(s.obj_rot)},
              {"goal_pos", VecToJson(s.goal_pos)},
              {"obj_init", VecToJson(s.obj_init)},
              {"grasped", s.flags.grasped},
              {"lifted", s.flags.lifted},
              {"contact", s.flags.contact},
              {"released_stable_count", s.flags.released_stable_count},
              {"reached", s.flags.reached},
              {"near_goal", s.flags.near_goal},
              {"at_height", s.flags.at_height},
              {"terminal", s.terminal}};
}

SimState StateFromJson(const json& j) {
  SimState s;
  s.t = j.at("t").get<int>();
  s.ee_pos = VecFromJson(j.at("ee_pos"));
  s.ee_rot = RotFromJson(j.at("ee_rot"));
  s.gripper = j.at("gripper").get<double>();
  s.obj_pos = VecFromJson(j.at("obj_pos"));
  s.obj_rot = RotFromJson(j.at("obj_rot"));
  s.goal_pos = VecFromJson(j.at("goal_pos"));
  s.obj_init = VecFromJson(j.at("obj_init"));
  s.flags.grasped = j.at("grasped").get<bool>();
  s.flags.lifted = j.at("lifted").get<bool>();
  s.flags.contact = j.at("contact").get<bool>();
  s.flags.released_stable_count = j.at("released_stable_count").get<int>();
  s.flags.reached = j.at("reached").get<bool>();
  s.flags.near_goal = j.at("near_goal").get<bool>();
  s.flags.at_height = j.at("at_height").get<bool>();
  s.terminal = j.at("terminal").get<bool>();
  return s;
}

}  // namespace

std::string TransitionToJsonLine(const Trajectory& traj, int index) {
  const Transition& tr = traj.steps.at(index);
  json j{{"episode_id", traj.episode_id},
         {"task", std::string(TaskName(traj.task))},
         {"tag", traj.tag},
         {"t", index},
         {"state", StateToJson(tr.state)},
         {"action",
          {{"d_pos", VecToJson(tr.action.d_pos)},
           {"d_rot", VecToJson(tr.action.d_rot)},
           {"gripper_cmd", tr.action.gripper_cmd}}},
         {"reward", tr.reward},
         {"next_state", StateToJson(tr.next_state)},
         {"done", tr.done}};
  return j.dump();
}

void WriteTrajectories(std::ostream& out,
                       std::span<const Trajectory> trajectories) {
  for (const Trajectory& traj : trajectories) {
    for (int i = 0; i < traj.size(); ++i) {
      out << TransitionToJsonLine(traj, i) << '\n';
    }
  }
}

void WriteTrajectoriesFile(const std::string& path,
                           std::span<const Trajectory> trajectories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  WriteTrajectories(out, trajectories);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Trajectory> ReadTrajectories(std::istream& in,
                                         const std::string& source) {
  std::vector<Trajectory> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto task = ParseTaskKind(j.at("task").get<std::string>());
      if (!task) throw std::runtime_error("unknown task");
      const uint64_t episode_id = j.at("episode_id").get<uint64_t>();
      const std::string tag = j.value("tag", "");
      const int t = j.at("t").get<int>();
      const bool fresh = out.empty() || t == 0 ||
                         out.back().episode_id != episode_id ||
                         out.back().tag != tag || out.back().task != *task;
      if (fresh) {
        Trajectory traj;
        traj.task = *task;
        traj.episode_id = episode_id;
        traj.tag = tag;
        out.push_back(std::move(traj));
      }
      Transition tr;
      tr.state = StateFromJson(j.at("state"));
      const json& a = j.at("action");
      tr.action.d_pos = VecFromJson(a.at("d_pos"));
      tr.action.d_rot = VecFromJson(a.at("d_rot"));
      tr.action.gripper_cmd = a.at("gripper_cmd").get<double>();
      tr.reward = j.at("reward").get<double>();
      tr.next_state = StateFromJson(j.at("next_state"));
      tr.done = j.at("done").get<bool>();
      out.back().steps.push_back(tr);
    } catch (const std::exception& e) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  if (out.empty()) throw std::runtime_error(source + ": no transitions");
  return out;
}

std::vector<Trajectory> ReadTrajectoriesFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return ReadTrajectories(in, path);
}

}  // namespace stagerl
