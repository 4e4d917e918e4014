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

#include "stagerl/preference.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "stagerl/autodiff.h"

namespace stagerl {
namespace {

int CompletedPrefix(std::span<const StageSegment> segments) {
  int n = 0;
  for (const StageSegment& s : segments) {
    if (!s.completed) break;
    ++n;
  }
  return n;
}

const StageSegment* FindSegment(std::span<const StageSegment> segments,
                                StageId stage) {
  for (const StageSegment& s : segments) {
    if (s.stage == stage) return &s;
  }
  return nullptr;
}

ScoredPair::Side MakeSide(const Trajectory& traj,
                          const GaussianPolicy& reference,
                          const TaskSpec& spec) {
  ScoredPair::Side side;
  TrajectoryMatrices(traj, spec, &side.obs, &side.actions);
  side.ref_log_probs =
      reference.LogProbForward(side.obs, side.actions).log_probs;
  return side;
}

// One compared term of a pair, located in the concatenated batch.
struct BatchTerm {
  int pair = 0;
  int chosen_begin = 0, chosen_end = 0;  // absolute columns
  int rejected_begin = 0, rejected_end = 0;
  double chosen_ref = 0.0;  // mean reference log density over the range
  double rejected_ref = 0.0;
  double chosen_cost = 0.0;
  double rejected_cost = 0.0;
};

double MeanRange(const Eigen::VectorXd& v, int start, int end) {
  return v.segment(start, end - start).mean();
}

// Shared by TPO and StA-TPO. When `whole` is set every pair contributes one
// term spanning both full trajectories and costs are ignored.
LossAndGrad PairwiseLoss(const GaussianPolicy& policy,
                         std::span<const ScoredPair> pairs, double beta,
                         double lambda, bool whole, int* excluded) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  int total = 0;
  for (const ScoredPair& p : pairs) {
    total += p.chosen.obs.cols() + p.rejected.obs.cols();
  }
  Eigen::MatrixXd obs(kObsDim, total);
  Eigen::MatrixXd actions(kActDim, total);
  std::vector<BatchTerm> terms;
  int skipped = 0;
  int col = 0;
  int pair_index = 0;
  for (const ScoredPair& p : pairs) {
    const int c0 = col;
    const int nc = p.chosen.obs.cols();
    obs.middleCols(col, nc) = p.chosen.obs;
    actions.middleCols(col, nc) = p.chosen.actions;
    col += nc;
    const int r0 = col;
    const int nr = p.rejected.obs.cols();
    obs.middleCols(col, nr) = p.rejected.obs;
    actions.middleCols(col, nr) = p.rejected.actions;
    col += nr;

    if (whole) {
      terms.push_back({pair_index, c0, c0 + nc, r0, r0 + nr,
                       MeanRange(p.chosen.ref_log_probs, 0, nc),
                       MeanRange(p.rejected.ref_log_probs, 0, nr), 0.0, 0.0});
      ++pair_index;
      continue;
    }
    if (p.terms.empty()) {
      ++skipped;
      continue;
    }
    for (const ScoredPair::Term& t : p.terms) {
      terms.push_back(
          {pair_index, c0 + t.chosen_start, c0 + t.chosen_end,
           r0 + t.rejected_start, r0 + t.rejected_end,
           MeanRange(p.chosen.ref_log_probs, t.chosen_start, t.chosen_end),
           MeanRange(p.rejected.ref_log_probs, t.rejected_start,
                     t.rejected_end),
           t.chosen_cost, t.rejected_cost});
    }
    ++pair_index;
  }
  if (excluded) *excluded = skipped;
  if (terms.empty()) {
    return {0.0, Eigen::VectorXd::Zero(policy.NumParams())};
  }
  const int num_pairs = pair_index;

  return PolicyLoss(
      policy, obs, actions, [&](Tape& tape, std::span<const Var> log_probs) {
        std::vector<std::vector<Var>> per_pair(num_pairs);
        for (const BatchTerm& t : terms) {
          const Var q_chosen =
              tape.Mean(log_probs.subspan(t.chosen_begin,
                                          t.chosen_end - t.chosen_begin)) -
              t.chosen_ref;
          const Var q_rejected =
              tape.Mean(log_probs.subspan(t.rejected_begin,
                                          t.rejected_end - t.rejected_begin)) -
              t.rejected_ref;
          // q̂ = q − λ ℓ; the penalties are constants.
          const Var margin =
              (q_chosen - lambda * t.chosen_cost) -
              (q_rejected - lambda * t.rejected_cost);
          per_pair[t.pair].push_back(tape.LogSigmoid(beta * margin));
        }
        std::vector<Var> pair_terms;
        for (const auto& v : per_pair) pair_terms.push_back(tape.Mean(v));
        return tape.Neg(tape.Mean(pair_terms));
      });
}

}  // namespace

std::vector<StageId> EligibleStages(std::span<const StageSegment> chosen,
                                    std::span<const StageSegment> rejected,
                                    const StageProfile& profile) {
  const int both = std::min(CompletedPrefix(chosen), CompletedPrefix(rejected));
  const int m = std::min(both + 1, profile.size());
  std::vector<StageId> out;
  for (int k = 0; k < m; ++k) {
    const StageId stage = profile.stages[k];
    if (FindSegment(chosen, stage) && FindSegment(rejected, stage)) {
      out.push_back(stage);
    }
  }
  return out;
}

double TotalNormalizedCost(std::span<const StageSegment> segments) {
  double total = 0.0;
  for (const StageSegment& s : segments) total += s.normalized_cost;
  return total;
}

std::vector<PreferencePair> BuildPairs(std::span<const Trajectory> successes,
                                       std::span<const Trajectory> failures,
                                       const TaskSpec& spec,
                                       const StageProfile& profile) {
  std::vector<PreferencePair> out;
  for (const Trajectory& f : failures) {
    const Trajectory* s = nullptr;
    for (const Trajectory& cand : successes) {
      if (cand.episode_id == f.episode_id && cand.task == f.task) {
        s = &cand;
        break;
      }
    }
    if (!s || s->steps.empty() || f.steps.empty()) continue;
    PreferencePair pair;
    pair.episode_seed = f.episode_id;
    auto s_segs = Segment(*s, spec, profile);
    auto f_segs = Segment(f, spec, profile);
    bool s_first;
    if (s->Succeeded() != f.Succeeded()) {
      s_first = s->Succeeded();
    } else if (s->Succeeded()) {
      const double cs = TotalNormalizedCost(s_segs);
      const double cf = TotalNormalizedCost(f_segs);
      if (cs == cf) continue;
      s_first = cs < cf;
    } else {
      continue;
    }
    pair.chosen = s_first ? *s : f;
    pair.rejected = s_first ? f : *s;
    pair.chosen_segments = s_first ? std::move(s_segs) : std::move(f_segs);
    pair.rejected_segments = s_first ? std::move(f_segs) : std::move(s_segs);
    pair.eligible = EligibleStages(pair.chosen_segments,
                                   pair.rejected_segments, profile);
    out.push_back(std::move(pair));
  }
  return out;
}

ScoredPair PreparePair(const PreferencePair& pair,
                       const GaussianPolicy& reference, const TaskSpec& spec) {
  ScoredPair out;
  out.chosen = MakeSide(pair.chosen, reference, spec);
  out.rejected = MakeSide(pair.rejected, reference, spec);
  for (StageId stage : pair.eligible) {
    const StageSegment* c = FindSegment(pair.chosen_segments, stage);
    const StageSegment* r = FindSegment(pair.rejected_segments, stage);
    if (!c || !r) {
      throw std::invalid_argument("eligible stage missing from a segmentation");
    }
    out.terms.push_back({stage, c->start, c->end, r->start, r->end,
                         c->normalized_cost, r->normalized_cost});
  }
  return out;
}

double SegmentScore(const GaussianPolicy& policy, const ScoredPair::Side& side,
                    int start, int end) {
  if (start < 0 || end > side.obs.cols() || start >= end) {
    throw std::invalid_argument("segment range out of bounds");
  }
  const Eigen::VectorXd lp =
      policy
          .LogProbForward(side.obs.middleCols(start, end - start),
                          side.actions.middleCols(start, end - start))
          .log_probs;
  return (lp - side.ref_log_probs.segment(start, end - start)).mean();
}

LossAndGrad TpoLoss(const GaussianPolicy& policy,
                    std::span<const ScoredPair> pairs, double beta) {
  return PairwiseLoss(policy, pairs, beta, 0.0, /*whole=*/true, nullptr);
}

LossAndGrad StaTpoLoss(const GaussianPolicy& policy,
                       std::span<const ScoredPair> pairs, double beta,
                       double lambda, int* excluded) {
  return PairwiseLoss(policy, pairs, beta, lambda, /*whole=*/false, excluded);
}

std::vector<double> MeanStageGaps(const GaussianPolicy& policy,
                                  std::span<const ScoredPair> pairs,
                                  const StageProfile& profile, double lambda) {
  std::vector<double> sum(profile.size(), 0.0);
  std::vector<int> count(profile.size(), 0);
  for (const ScoredPair& p : pairs) {
    for (const ScoredPair::Term& t : p.terms) {
      const double qc =
          SegmentScore(policy, p.chosen, t.chosen_start, t.chosen_end);
      const double qr =
          SegmentScore(policy, p.rejected, t.rejected_start, t.rejected_end);
      const int k = profile.IndexOf(t.stage);
      sum[k] += PenalizedScore(qc, t.chosen_cost, lambda) -
                PenalizedScore(qr, t.rejected_cost, lambda);
      ++count[k];
    }
  }
  std::vector<double> out(profile.size());
  for (int k = 0; k < profile.size(); ++k) {
    out[k] = count[k] ? sum[k] / count[k]
                      : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

TpoResult TrainTpo(const Checkpoint& init, std::span<const PreferencePair> pairs,
                   const TaskSpec& spec, const StageProfile& profile,
                   const TpoConfig& config) {
  if (pairs.empty()) throw std::invalid_argument("train_tpo: no pairs");
  const GaussianPolicy reference = init.policy;
  std::vector<ScoredPair> scored;
  scored.reserve(pairs.size());
  TpoResult result;
  for (const PreferencePair& p : pairs) {
    scored.push_back(PreparePair(p, reference, spec));
    if (config.stage_aware && scored.back().terms.empty()) {
      ++result.excluded_pairs;
    }
  }

  result.checkpoint = init;
  Checkpoint& ckpt = result.checkpoint;
  ckpt.phase = config.stage_aware ? "sta_tpo" : "tpo";
  ckpt.step = 0;
  ckpt.policy_opt = Adam(ckpt.policy.NumParams(), config.lr);
  Eigen::VectorXd params = ckpt.policy.Flatten();
  const int n = static_cast<int>(scored.size());
  const int batch = std::min(config.batch_size, n);
  std::vector<ScoredPair> minibatch(batch);
  for (int step = 0; step < config.steps; ++step) {
    for (int i = 0; i < batch; ++i) {
      minibatch[i] = scored[ckpt.rng.NextU64() % n];
    }
    const LossAndGrad lg =
        config.stage_aware
            ? StaTpoLoss(ckpt.policy, minibatch, config.beta, config.lambda)
            : TpoLoss(ckpt.policy, minibatch, config.beta);
    if (!std::isfinite(lg.value)) {
      throw std::runtime_error("train_tpo: non-finite loss at step " +
                               std::to_string(step));
    }
    TpoMetricsRow row{step, lg.value,
                      MeanStageGaps(ckpt.policy, minibatch, profile,
                                    config.lambda)};
    ckpt.policy_opt.Step(params, lg.grad);
    ckpt.policy.Unflatten(params);
    ++ckpt.step;
    result.metrics.push_back(std::move(row));
  }
  return result;
}

void WriteTpoCsv(std::ostream& out, std::span<const TpoMetricsRow> rows,
                 const StageProfile& profile) {
  out << "step,loss";
  for (StageId s : profile.stages) out << ",gap_" << StageName(s);
  out << "\n";
  char buf[64];
  for (const TpoMetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g", r.step, r.loss);
    out << buf;
    for (double g : r.stage_gap) {
      if (std::isnan(g)) {
        out << ",";
      } else {
        std::snprintf(buf, sizeof(buf), ",%.17g", g);
        out << buf;
      }
    }
    out << "\n";
  }
}

}  // namespace stagerl
