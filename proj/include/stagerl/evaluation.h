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

#ifndef STAGERL_EVALUATION_H_
#define STAGERL_EVALUATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stagerl/env.h"
#include "stagerl/policy.h"
#include "stagerl/rng.h"
#include "stagerl/stare.h"

namespace stagerl {

// Exact count ratio; `den == 0` means undefined.
struct Ratio {
  int num = 0;
  int den = 0;

  bool defined() const { return den > 0; }
  // Percent; nullopt when undefined.
  std::optional<double> Percent() const;
  bool operator==(const Ratio&) const = default;
};

// Per-episode record of which stages were completed.
struct EpisodeLedger {
  std::vector<bool> completed;  // one entry per profile stage
  bool success = false;
  bool grasped = false;  // grasp event fired at any step
  int length = 0;
};

EpisodeLedger LedgerOf(const Trajectory& traj, const TaskSpec& spec,
                       const StageProfile& profile);

// Entry k is #completed(k) / #completed(k − 1); entry 0 is over all
// episodes.
std::vector<Ratio> ConditionalStageSuccess(std::span<const EpisodeLedger> ledgers,
                                           int num_stages);

struct EvalReport {
  int episodes = 0;
  Ratio success;
  Ratio grasp;
  std::vector<Ratio> conditional;  // per profile stage
  double mean_length = 0.0;
  uint64_t seed = 0;
  std::vector<EpisodeLedger> ledgers;

  double success_rate() const { return *success.Percent(); }
  double grasp_rate() const { return *grasp.Percent(); }
  // Π_k conditional[k] == success, checked on integer counts.
  bool CountingIdentityHolds() const;
};

// Seeds of the evaluation episodes; disjoint from training streams.
uint64_t EvalEpisodeSeed(uint64_t seed, int episode);

EvalReport EvaluateController(const StatePolicy& controller,
                              const TaskSpec& spec, int episodes,
                              uint64_t seed);

// Greedy (mean) decoding. When `sampling` is set, actions are drawn from the
// policy's Gaussian with it instead.
EvalReport EvaluatePolicy(const GaussianPolicy& policy, const TaskSpec& spec,
                          int episodes, uint64_t seed,
                          Rng* sampling = nullptr);

}  // namespace stagerl

#endif  // STAGERL_EVALUATION_H_
