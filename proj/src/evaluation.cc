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

#include "stagerl/evaluation.h"

#include <algorithm>
#include <stdexcept>

#include "stagerl/rng.h"

namespace stagerl {

std::optional<double> Ratio::Percent() const {
  if (den == 0) return std::nullopt;
  return 100.0 * num / den;
}

EpisodeLedger LedgerOf(const Trajectory& traj, const TaskSpec& spec,
                       const StageProfile& profile) {
  EpisodeLedger ledger;
  ledger.completed.assign(profile.size(), false);
  ledger.success = traj.Succeeded();
  ledger.length = traj.size();
  int deepest = 0;
  for (const Transition& tr : traj.steps) {
    ledger.grasped = ledger.grasped || tr.state.flags.grasped ||
                     tr.next_state.flags.grasped;
  }
  if (!traj.steps.empty()) {
    // Labels never regress, so the final state holds the deepest stage.
    deepest = profile.IndexOf(
        StageOf(traj.steps.back().next_state, spec, profile));
  }
  for (int k = 0; k < profile.size(); ++k) {
    ledger.completed[k] = deepest > k || ledger.success;
  }
  return ledger;
}

std::vector<Ratio> ConditionalStageSuccess(std::span<const EpisodeLedger> ledgers,
                                           int num_stages) {
  std::vector<int> counts(num_stages, 0);
  for (const EpisodeLedger& l : ledgers) {
    if (static_cast<int>(l.completed.size()) != num_stages) {
      throw std::invalid_argument("ledger stage count mismatch");
    }
    for (int k = 0; k < num_stages; ++k) counts[k] += l.completed[k] ? 1 : 0;
  }
  std::vector<Ratio> out(num_stages);
  for (int k = 0; k < num_stages; ++k) {
    out[k].num = counts[k];
    out[k].den = k == 0 ? static_cast<int>(ledgers.size()) : counts[k - 1];
  }
  return out;
}

bool EvalReport::CountingIdentityHolds() const {
  if (conditional.empty() || conditional.front().den != episodes) return false;
  for (size_t k = 1; k < conditional.size(); ++k) {
    if (conditional[k].den != conditional[k - 1].num) return false;
  }
  // The product telescopes to num_K / episodes.
  return conditional.back().num == success.num && success.den == episodes;
}

uint64_t EvalEpisodeSeed(uint64_t seed, int episode) {
  return MixSeed(MixSeed(seed, 0x6576616cULL), static_cast<uint64_t>(episode));
}

namespace {

EvalReport Summarize(std::vector<Trajectory> trajs, const TaskSpec& spec,
                     uint64_t seed) {
  const StageProfile profile = StageProfile::ForTask(spec);
  EvalReport r;
  r.episodes = static_cast<int>(trajs.size());
  r.seed = seed;
  r.success.den = r.grasp.den = r.episodes;
  long total_len = 0;
  for (const Trajectory& t : trajs) {
    EpisodeLedger l = LedgerOf(t, spec, profile);
    r.success.num += l.success ? 1 : 0;
    r.grasp.num += l.grasped ? 1 : 0;
    total_len += l.length;
    r.ledgers.push_back(std::move(l));
  }
  r.mean_length = static_cast<double>(total_len) / r.episodes;
  r.conditional = ConditionalStageSuccess(r.ledgers, profile.size());
  return r;
}

}  // namespace

EvalReport EvaluateController(const StatePolicy& controller,
                              const TaskSpec& spec, int episodes,
                              uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  std::vector<Trajectory> trajs;
  trajs.reserve(episodes);
  for (int i = 0; i < episodes; ++i) {
    trajs.push_back(Rollout(spec, EvalEpisodeSeed(seed, i), controller));
  }
  return Summarize(std::move(trajs), spec, seed);
}

EvalReport EvaluatePolicy(const GaussianPolicy& policy, const TaskSpec& spec,
                          int episodes, uint64_t seed, Rng* sampling) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  // All episodes advance in lockstep so the network runs batched.
  std::vector<Trajectory> trajs(episodes);
  std::vector<SimState> states(episodes);
  for (int i = 0; i < episodes; ++i) {
    trajs[i].task = spec.kind;
    trajs[i].episode_id = EvalEpisodeSeed(seed, i);
    states[i] = Reset(spec, trajs[i].episode_id);
  }
  std::vector<int> active(episodes);
  for (int i = 0; i < episodes; ++i) active[i] = i;
  while (!active.empty()) {
    Eigen::MatrixXd obs(kObsDim, active.size());
    for (size_t j = 0; j < active.size(); ++j) {
      obs.col(j) = Observe(states[active[j]], spec);
    }
    Eigen::MatrixXd mean = policy.trunk.Forward(obs);
    if (sampling) {
      const Eigen::VectorXd sigma = policy.ClampedLogStd().array().exp();
      for (int j = 0; j < mean.cols(); ++j) {
        for (int d = 0; d < mean.rows(); ++d) {
          mean(d, j) += sigma[d] * sampling->Normal();
        }
      }
    }
    std::vector<int> still;
    for (size_t j = 0; j < active.size(); ++j) {
      const int i = active[j];
      Transition tr = Step(states[i], DecodeAction(mean.col(j), spec), spec);
      states[i] = tr.next_state;
      trajs[i].steps.push_back(std::move(tr));
      if (!states[i].terminal) still.push_back(i);
    }
    active = std::move(still);
  }
  return Summarize(std::move(trajs), spec, seed);
}

}  // namespace stagerl
