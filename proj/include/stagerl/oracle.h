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

#ifndef STAGERL_ORACLE_H_
#define STAGERL_ORACLE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "stagerl/env.h"
#include "stagerl/stare.h"

namespace stagerl {

// Deterministic finite MDP. Entry s * num_actions + a of `next` and
// `reward` describes taking action a in state s.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  double gamma = 0.99;
  std::vector<int> next;
  std::vector<double> reward;
  std::vector<uint8_t> terminal;

  int Index(int s, int a) const { return s * num_actions + a; }
  // Throws std::invalid_argument unless the tables are total, targets are in
  // range and terminal states are absorbing with zero reward.
  void Validate() const;
};

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<int> greedy;  // lowest-index maximizer per state
  std::vector<double> residuals;  // ‖V_{k+1} − V_k‖_∞ per sweep
};

// Synchronous sweeps from V = 0 until the sup-norm change drops below tol.
ValueIterationResult ValueIteration(const TabularMdp& mdp, double tol,
                                    int max_sweeps = 1000000);

// Q(s, ·) under the given values.
std::vector<double> ActionValues(const TabularMdp& mdp,
                                 std::span<const double> values, int s);

// Actions within `tie_tol` of the best Q(s, ·), in index order.
std::vector<int> GreedySet(const TabularMdp& mdp, std::span<const double> values,
                           int s, double tie_tol);

// r′(s, a, s′) = r + γ Φ(s′) − Φ(s). Throws std::invalid_argument when a
// terminal state has nonzero potential or sizes disagree.
TabularMdp ShapedMdp(const TabularMdp& mdp, std::span<const double> potential);

// One-dimensional reach-and-grasp chain built on the PickPlace geometry:
// the end-effector moves between `bins` positions along x, may close on
// the object at its bin and must carry it to the goal bin.
// Actions: 0 left, 1 right, 2 close, 3 noop.
struct ReachGraspChain {
  TaskSpec spec;
  int bins = 0;
  int object_bin = 0;
  int goal_bin = 0;
  double x_min = 0.0;
  double x_max = 0.0;
  TabularMdp mdp;

  enum Action { kLeft = 0, kRight = 1, kClose = 2, kNoop = 3 };

  int StateIndex(int bin, bool grasped, bool terminal) const {
    return (bin * 2 + (grasped ? 1 : 0)) * 2 + (terminal ? 1 : 0);
  }
  double BinCenter(int bin) const;
  // The continuous state a tabular state stands for; flags are derived from
  // the tabular state so stage labels stay state functions.
  SimState Synthesize(int state) const;
};

ReachGraspChain BuildReachGraspChain(int bins = 200, double gamma = 0.99);

// Composite stage potential of every chain state.
std::vector<double> ChainStagePotential(const ReachGraspChain& chain);

// Potentials drawn uniformly from [-scale, scale] on non-terminal states.
std::vector<double> RandomPotential(const TabularMdp& mdp, uint64_t seed,
                                    double scale = 1.0);

struct InvarianceCheck {
  bool sets_equal = true;
  int mismatched_states = 0;
  int states_checked = 0;
  // max over (s, a) of |A′(s, a) − A(s, a)| with A = Q − max Q.
  double max_advantage_gap = 0.0;
  // max over s of |V′(s) − (V(s) − Φ(s))|.
  double max_value_shift_error = 0.0;
};

InvarianceCheck CheckShapingInvariance(const TabularMdp& mdp,
                                       std::span<const double> potential,
                                       double tol, double tie_tol = 1e-6);

}  // namespace stagerl

#endif  // STAGERL_ORACLE_H_
