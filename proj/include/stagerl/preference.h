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

#ifndef STAGERL_PREFERENCE_H_
#define STAGERL_PREFERENCE_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stagerl/checkpoint.h"
#include "stagerl/env.h"
#include "stagerl/policy.h"
#include "stagerl/stare.h"

namespace stagerl {

// Two rollouts of the same task instance; `chosen` is preferred.
struct PreferencePair {
  uint64_t episode_seed = 0;
  Trajectory chosen;
  Trajectory rejected;
  std::vector<StageSegment> chosen_segments;
  std::vector<StageSegment> rejected_segments;
  std::vector<StageId> eligible;  // stages compared by the stage-wise loss
};

// Stages 1..m present in both segmentations, where m − 1 is the number of
// leading stages completed by both trajectories (m capped at K).
std::vector<StageId> EligibleStages(std::span<const StageSegment> chosen,
                                    std::span<const StageSegment> rejected,
                                    const StageProfile& profile);

double TotalNormalizedCost(std::span<const StageSegment> segments);

// Pairs each trajectory in `failures` with the first trajectory in
// `successes` that shares its episode seed. A successful rollout beats a
// failed one; between two successes the lower total normalized stage cost
// wins (exact ties are dropped); two failures are dropped.
std::vector<PreferencePair> BuildPairs(std::span<const Trajectory> successes,
                                       std::span<const Trajectory> failures,
                                       const TaskSpec& spec,
                                       const StageProfile& profile);

// A pair in matrix form with frozen reference log densities cached.
struct ScoredPair {
  struct Side {
    Eigen::MatrixXd obs;
    Eigen::MatrixXd actions;
    Eigen::VectorXd ref_log_probs;
  };
  struct Term {
    StageId stage = StageId::kReach;
    int chosen_start = 0, chosen_end = 0;
    int rejected_start = 0, rejected_end = 0;
    double chosen_cost = 0.0;  // normalized ℓ
    double rejected_cost = 0.0;
  };
  Side chosen;
  Side rejected;
  std::vector<Term> terms;  // one per eligible stage, in stage order
};

ScoredPair PreparePair(const PreferencePair& pair,
                       const GaussianPolicy& reference, const TaskSpec& spec);

// Mean per-step log-ratio log π′ − log π_ref over [start, end).
double SegmentScore(const GaussianPolicy& policy, const ScoredPair::Side& side,
                    int start, int end);

// −mean over pairs of log σ(β (q(τ+) − q(τ−))) with q over whole
// trajectories.
LossAndGrad TpoLoss(const GaussianPolicy& policy,
                    std::span<const ScoredPair> pairs, double beta);

// −mean over pairs of the mean over eligible stages of
// log σ(β (q̂+ − q̂−)), q̂ = q − λ ℓ. Pairs without eligible stages are
// skipped and counted in `excluded`.
LossAndGrad StaTpoLoss(const GaussianPolicy& policy,
                       std::span<const ScoredPair> pairs, double beta,
                       double lambda, int* excluded = nullptr);

struct TpoConfig {
  bool stage_aware = true;
  // Short and gentle: with mean log-ratios and β = 0.1 the loss keeps
  // falling by pushing both sides of each pair down, so longer runs move the
  // policy far from the reference.
  int steps = 30;
  int batch_size = 16;  // pairs per minibatch
  double lr = 1e-5;
  double beta = 0.1;
  double lambda = 0.1;
};

struct TpoMetricsRow {
  int step = 0;
  double loss = 0.0;
  std::vector<double> stage_gap;  // mean q̂+ − q̂− per profile stage; NaN if
                                  // the stage had no term in the batch
};

struct TpoResult {
  Checkpoint checkpoint;
  std::vector<TpoMetricsRow> metrics;
  int excluded_pairs = 0;
};

// The reference is a frozen copy of `init.policy`.
TpoResult TrainTpo(const Checkpoint& init, std::span<const PreferencePair> pairs,
                   const TaskSpec& spec, const StageProfile& profile,
                   const TpoConfig& config);

// Mean q̂+ − q̂− per profile stage over `pairs` (NaN where no pair has the
// stage).
std::vector<double> MeanStageGaps(const GaussianPolicy& policy,
                                  std::span<const ScoredPair> pairs,
                                  const StageProfile& profile, double lambda);

void WriteTpoCsv(std::ostream& out, std::span<const TpoMetricsRow> rows,
                 const StageProfile& profile);

}  // namespace stagerl

#endif  // STAGERL_PREFERENCE_H_
