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

#ifndef STAGERL_TRAJECTORY_IO_H_
#define STAGERL_TRAJECTORY_IO_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stagerl/env.h"

namespace stagerl {

// JSON Lines, one transition per line:
//   {"episode_id":..,"task":..,"tag":..,"t":..,"state":{..},"action":{..},
//    "reward":..,"next_state":{..},"done":..}
// Rotations are flattened row-major. Doubles round-trip exactly.
std::string TransitionToJsonLine(const Trajectory& traj, int index);
void WriteTrajectories(std::ostream& out,
                       std::span<const Trajectory> trajectories);
void WriteTrajectoriesFile(const std::string& path,
                           std::span<const Trajectory> trajectories);

// A new trajectory starts whenever the (episode_id, tag) pair changes or t
// restarts at 0. Malformed input throws std::runtime_error naming the line.
std::vector<Trajectory> ReadTrajectories(std::istream& in,
                                         const std::string& source = "input");
std::vector<Trajectory> ReadTrajectoriesFile(const std::string& path);

}  // namespace stagerl

#endif  // STAGERL_TRAJECTORY_IO_H_
