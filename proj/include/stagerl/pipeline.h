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

#ifndef STAGERL_PIPELINE_H_
#define STAGERL_PIPELINE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagerl/checkpoint.h"
#include "stagerl/env.h"
#include "stagerl/evaluation.h"
#include "stagerl/expert.h"
#include "stagerl/imitation.h"
#include "stagerl/interact.h"
#include "stagerl/preference.h"
#include "stagerl/text_config.h"

namespace stagerl {

// Git blob object id (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string GitBlobHash(std::string_view content);
std::string GitBlobHashFile(const std::string& path);

enum class Phase { kSft, kTpo, kStaTpo, kPpo, kStaPpo };

std::string_view PhaseName(Phase phase);  // "sft", "tpo", "sta_tpo", ...
std::optional<Phase> ParsePhase(std::string_view name);

// Imitation, then preference, then interaction. Throws std::invalid_argument
// naming the offending phase when `phases` is out of order or repeats a
// step.
void ValidatePhaseOrder(std::span<const Phase> phases);

struct RunConfig {
  std::string name = "run";
  TaskSpec task;
  std::vector<Phase> phases;
  std::vector<uint64_t> seeds;
  std::string out_dir = "runs";
  std::string init_checkpoint;  // starting point when sft is not run
  std::string demo_path;        // generated when empty
  std::string pairs_path;       // generated when empty
  int demos = 100;
  int pairs = 50;
  int eval_episodes = 300;
  uint64_t eval_seed = 7;
  std::vector<int> hidden = {64, 64};
  SftConfig sft;
  TpoConfig tpo;
  PpoConfig ppo;

  // Keys: name, phases, seeds, out, init.checkpoint, demos, demo.path,
  // pairs, pair.path, eval.episodes, eval.seed, sft.*, tpo.*, ppo.*, and
  // the task keys prefixed with "task." (task.kind, task.horizon, ...).
  // Unknown keys are rejected.
  static RunConfig FromConfig(const KeyValueConfig& config);
  void Validate() const;
  // Canonical key = value rendering; its hash identifies the run.
  std::string CanonicalText() const;
};

// `count` expert demonstrations with idle steps removed. Episode seeds are
// derived from `seed`; seeds where the expert fails are skipped and
// reported through `skipped`.
std::vector<Trajectory> GenerateDemos(const TaskSpec& spec, int count,
                                      uint64_t seed, int* skipped = nullptr);

// Failure modes cycled by pair generation for the task.
std::vector<FailureMode> PairFailureModes(TaskKind kind);

// `count` pairs of expert vs corrupted-expert rollouts on shared seeds,
// cycling through PairFailureModes.
std::vector<PreferencePair> GeneratePairs(const TaskSpec& spec, int count,
                                          uint64_t seed);

// Writes pairs.jsonl, chosen.jsonl and rejected.jsonl into `dir`.
void WritePairs(const std::string& dir, std::span<const PreferencePair> pairs,
                const StageProfile& profile);
// Reads a pairs.jsonl file and the trajectory files it points to (paths
// relative to the pairs file) and re-segments them.
std::vector<PreferencePair> ReadPairs(const std::string& pairs_path,
                                      const TaskSpec& spec,
                                      const StageProfile& profile);

struct SegmentRecord {
  TaskKind task = TaskKind::kPickPlace;
  uint64_t episode_id = 0;
  StageSegment segment;
};

std::vector<SegmentRecord> Annotate(std::span<const Trajectory> trajectories,
                                    const TaskSpec& spec);
void WriteAnnotation(std::ostream& out, std::span<const SegmentRecord> records);
// Stage name, segments seen, segments completed.
void WriteAnnotationSummary(std::ostream& out,
                            std::span<const SegmentRecord> records,
                            const StageProfile& profile);

// EvalReport as one JSON object (null for undefined conditionals).
std::string EvalReportJson(const EvalReport& report,
                           const StageProfile& profile);

struct PhaseOutcome {
  Phase phase = Phase::kSft;
  uint64_t seed = 0;
  std::string dir;
  Checkpoint checkpoint;
  EvalReport report;
};

struct IpiResult {
  std::vector<PhaseOutcome> outcomes;  // seed-major, phases in order
};

// Runs every phase for every seed, writing
//   <out>/<name>/seed-<seed>/<phase>/{checkpoint.json, metrics.csv,
//                                     manifest.json}
// plus <out>/<name>/report.csv. Progress lines go to `log` when set.
IpiResult RunIpi(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace stagerl

#endif  // STAGERL_PIPELINE_H_
