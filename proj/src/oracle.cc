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

#include "stagerl/oracle.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stagerl/rng.h"

namespace stagerl {

void TabularMdp::Validate() const {
  const size_t n = static_cast<size_t>(num_states) * num_actions;
  if (num_states < 1 || num_actions < 1 || next.size() != n ||
      reward.size() != n || terminal.size() != static_cast<size_t>(num_states)) {
    throw std::invalid_argument("mdp tables have the wrong size");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in (0, 1)");
  }
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      const int t = next[Index(s, a)];
      if (t < 0 || t >= num_states) {
        throw std::invalid_argument("transition target out of range");
      }
      if (terminal[s] && (t != s || reward[Index(s, a)] != 0.0)) {
        throw std::invalid_argument("terminal states must absorb with 0 reward");
      }
    }
  }
}

std::vector<double> ActionValues(const TabularMdp& mdp,
                                 std::span<const double> values, int s) {
  std::vector<double> q(mdp.num_actions);
  for (int a = 0; a < mdp.num_actions; ++a) {
    const int i = mdp.Index(s, a);
    q[a] = mdp.reward[i] + mdp.gamma * values[mdp.next[i]];
  }
  return q;
}

ValueIterationResult ValueIteration(const TabularMdp& mdp, double tol,
                                    int max_sweeps) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  mdp.Validate();
  ValueIterationResult r;
  r.values.assign(mdp.num_states, 0.0);
  std::vector<double> next(mdp.num_states);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (int s = 0; s < mdp.num_states; ++s) {
      if (mdp.terminal[s]) {
        next[s] = 0.0;
        continue;
      }
      const std::vector<double> q = ActionValues(mdp, r.values, s);
      next[s] = *std::max_element(q.begin(), q.end());
      delta = std::max(delta, std::abs(next[s] - r.values[s]));
    }
    r.values.swap(next);
    r.residuals.push_back(delta);
    if (delta < tol) break;
  }
  r.greedy.resize(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    const std::vector<double> q = ActionValues(mdp, r.values, s);
    r.greedy[s] = static_cast<int>(std::max_element(q.begin(), q.end()) -
                                   q.begin());
  }
  return r;
}

std::vector<int> GreedySet(const TabularMdp& mdp, std::span<const double> values,
                           int s, double tie_tol) {
  const std::vector<double> q = ActionValues(mdp, values, s);
  const double best = *std::max_element(q.begin(), q.end());
  std::vector<int> out;
  for (int a = 0; a < mdp.num_actions; ++a) {
    if (q[a] >= best - tie_tol) out.push_back(a);
  }
  return out;
}

TabularMdp ShapedMdp(const TabularMdp& mdp, std::span<const double> potential) {
  if (static_cast<int>(potential.size()) != mdp.num_states) {
    throw std::invalid_argument("potential size != number of states");
  }
  for (int s = 0; s < mdp.num_states; ++s) {
    if (!std::isfinite(potential[s])) {
      throw std::invalid_argument("potential must be finite");
    }
    if (mdp.terminal[s] && potential[s] != 0.0) {
      throw std::invalid_argument("terminal states need zero potential");
    }
  }
  TabularMdp out = mdp;
  for (int s = 0; s < mdp.num_states; ++s) {
    if (mdp.terminal[s]) continue;
    for (int a = 0; a < mdp.num_actions; ++a) {
      const int i = mdp.Index(s, a);
      out.reward[i] = mdp.reward[i] + mdp.gamma * potential[mdp.next[i]] -
                      potential[s];
    }
  }
  return out;
}

double ReachGraspChain::BinCenter(int bin) const {
  return x_min + (bin + 0.5) * (x_max - x_min) / bins;
}

SimState ReachGraspChain::Synthesize(int state) const {
  const bool terminal = state % 2 == 1;
  const bool grasped = (state / 2) % 2 == 1;
  const int bin = state / 4;
  const double rest = spec.RestHeight();
  const StageThresholds th = StageThresholds::FromSpec(spec);
  SimState s;
  s.ee_pos = {BinCenter(bin), 0.0, rest};
  s.gripper = grasped ? 0.0 : 1.0;
  // A carried object rides clear of the table.
  s.obj_pos = grasped ? Vec3{s.ee_pos.x, 0.0, rest + 2.0 * th.lift_clearance}
                      : Vec3{BinCenter(object_bin), 0.0, rest};
  if (grasped) s.ee_pos = s.obj_pos;
  s.goal_pos = {BinCenter(goal_bin), 0.0, rest};
  s.obj_init = {BinCenter(object_bin), 0.0, rest};
  s.flags.grasped = grasped;
  s.flags.lifted = grasped;
  s.flags.reached = grasped || Distance(s.ee_pos, s.obj_pos) <= th.reach_radius;
  s.flags.contact = Distance(s.ee_pos, s.obj_pos) <= spec.ContactRadius();
  s.flags.near_goal =
      grasped && Distance(s.obj_pos, s.goal_pos) <= th.place_margin;
  s.terminal = terminal;
  return s;
}

ReachGraspChain BuildReachGraspChain(int bins, double gamma) {
  if (bins < 4) throw std::invalid_argument("need at least 4 bins");
  ReachGraspChain c;
  c.spec = TaskSpec::Default(TaskKind::kPickPlace);
  c.bins = bins;
  c.x_min = c.spec.workspace.min.x;
  c.x_max = c.spec.workspace.max.x;
  // Object and goal sit at the centers of the PickPlace sampling ranges.
  auto bin_of = [&](double x) {
    return std::clamp(static_cast<int>((x - c.x_min) / (c.x_max - c.x_min) *
                                       bins),
                      0, bins - 1);
  };
  c.object_bin = bin_of(c.spec.object_range.Center().x);
  c.goal_bin = bin_of(c.spec.goal_range.Center().x);

  TabularMdp& m = c.mdp;
  m.num_states = bins * 4;
  m.num_actions = 4;
  m.gamma = gamma;
  m.next.assign(m.num_states * m.num_actions, 0);
  m.reward.assign(m.num_states * m.num_actions, 0.0);
  m.terminal.assign(m.num_states, 0);
  for (int bin = 0; bin < bins; ++bin) {
    for (int g = 0; g < 2; ++g) {
      for (int term = 0; term < 2; ++term) {
        const int s = c.StateIndex(bin, g, term);
        m.terminal[s] = term;
        for (int a = 0; a < 4; ++a) {
          const int i = m.Index(s, a);
          if (term) {
            m.next[i] = s;
            continue;
          }
          int nb = bin;
          bool ng = g;
          if (a == ReachGraspChain::kLeft) nb = std::max(0, bin - 1);
          if (a == ReachGraspChain::kRight) nb = std::min(bins - 1, bin + 1);
          if (a == ReachGraspChain::kClose && bin == c.object_bin) ng = true;
          const bool success = ng && nb == c.goal_bin;
          m.next[i] = c.StateIndex(nb, ng, success);
          m.reward[i] = success ? 1.0 : 0.0;
        }
      }
    }
  }
  m.Validate();
  return c;
}

std::vector<double> ChainStagePotential(const ReachGraspChain& chain) {
  const StageProfile profile = StageProfile::ForTask(chain.spec);
  std::vector<double> phi(chain.mdp.num_states);
  for (int s = 0; s < chain.mdp.num_states; ++s) {
    phi[s] = CompositePotential(chain.Synthesize(s), chain.spec, profile);
  }
  return phi;
}

std::vector<double> RandomPotential(const TabularMdp& mdp, uint64_t seed,
                                    double scale) {
  Rng rng(seed);
  std::vector<double> phi(mdp.num_states, 0.0);
  for (int s = 0; s < mdp.num_states; ++s) {
    const double u = rng.Uniform(-scale, scale);
    if (!mdp.terminal[s]) phi[s] = u;
  }
  return phi;
}

InvarianceCheck CheckShapingInvariance(const TabularMdp& mdp,
                                       std::span<const double> potential,
                                       double tol, double tie_tol) {
  const TabularMdp shaped = ShapedMdp(mdp, potential);
  const ValueIterationResult base = ValueIteration(mdp, tol);
  const ValueIterationResult sh = ValueIteration(shaped, tol);
  InvarianceCheck out;
  for (int s = 0; s < mdp.num_states; ++s) {
    out.max_value_shift_error =
        std::max(out.max_value_shift_error,
                 std::abs(sh.values[s] - (base.values[s] - potential[s])));
    if (mdp.terminal[s]) continue;
    ++out.states_checked;
    if (GreedySet(mdp, base.values, s, tie_tol) !=
        GreedySet(shaped, sh.values, s, tie_tol)) {
      ++out.mismatched_states;
      out.sets_equal = false;
    }
    const std::vector<double> q = ActionValues(mdp, base.values, s);
    const std::vector<double> qs = ActionValues(shaped, sh.values, s);
    const double best = *std::max_element(q.begin(), q.end());
    const double best_s = *std::max_element(qs.begin(), qs.end());
    for (int a = 0; a < mdp.num_actions; ++a) {
      out.max_advantage_gap = std::max(
          out.max_advantage_gap, std::abs((qs[a] - best_s) - (q[a] - best)));
    }
  }
  return out;
}

}  // namespace stagerl
