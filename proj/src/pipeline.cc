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

#include "stagerl/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <openssl/evp.h>

#include "stagerl/trajectory_io.h"

namespace stagerl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string Num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

int PhaseRank(Phase p) {
  switch (p) {
    case Phase::kSft:
      return 0;
    case Phase::kTpo:
    case Phase::kStaTpo:
      return 1;
    case Phase::kPpo:
    case Phase::kStaPpo:
      return 2;
  }
  return 0;
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

uint64_t ParseSeed(const std::string& text) {
  size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text[0] == '-') {
    throw std::invalid_argument("bad seed '" + text + "'");
  }
  return v;
}

}  // namespace

std::string GitBlobHash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok =
      EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
      EVP_DigestUpdate(ctx, header.data(), header.size() + 1) == 1 &&
      EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
      EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("sha1 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string GitBlobHashFile(const std::string& path) {
  return GitBlobHash(ReadFile(path));
}

std::string_view PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kSft:
      return "sft";
    case Phase::kTpo:
      return "tpo";
    case Phase::kStaTpo:
      return "sta_tpo";
    case Phase::kPpo:
      return "ppo";
    case Phase::kStaPpo:
      return "sta_ppo";
  }
  return "unknown";
}

std::optional<Phase> ParsePhase(std::string_view name) {
  for (Phase p : {Phase::kSft, Phase::kTpo, Phase::kStaTpo, Phase::kPpo,
                  Phase::kStaPpo}) {
    if (name == PhaseName(p)) return p;
  }
  return std::nullopt;
}

void ValidatePhaseOrder(std::span<const Phase> phases) {
  if (phases.empty()) throw std::invalid_argument("no phases given");
  for (size_t i = 1; i < phases.size(); ++i) {
    if (PhaseRank(phases[i]) <= PhaseRank(phases[i - 1])) {
      throw std::invalid_argument(
          "phase " + std::string(PhaseName(phases[i])) + " cannot follow " +
          std::string(PhaseName(phases[i - 1])) +
          " (order is sft, then tpo/sta_tpo, then ppo/sta_ppo)");
    }
  }
}

RunConfig RunConfig::FromConfig(const KeyValueConfig& config) {
  RunConfig rc;
  KeyValueConfig task_keys;
  for (const auto& [key, value] : config.entries()) {
    if (key.starts_with("task.")) {
      task_keys.Set(key.substr(5), config.GetString(key, ""));
    }
  }
  rc.task = TaskSpecFromConfig(task_keys);
  if (const auto unused = task_keys.UnusedKeys(); !unused.empty()) {
    throw std::invalid_argument("unknown key task." + unused.front());
  }

  rc.name = config.GetString("name", rc.name);
  for (const std::string& p : SplitList(config.GetString("phases", ""))) {
    const auto phase = ParsePhase(p);
    if (!phase) throw std::invalid_argument("unknown phase '" + p + "'");
    rc.phases.push_back(*phase);
  }
  for (const std::string& s : SplitList(config.GetString("seeds", "0"))) {
    rc.seeds.push_back(ParseSeed(s));
  }
  rc.out_dir = config.GetString("out", rc.out_dir);
  rc.init_checkpoint = config.GetString("init.checkpoint", "");
  rc.demo_path = config.GetString("demo.path", "");
  rc.pairs_path = config.GetString("pair.path", "");
  rc.demos = config.GetInt("demos", rc.demos);
  rc.pairs = config.GetInt("pairs", rc.pairs);
  rc.eval_episodes = config.GetInt("eval.episodes", rc.eval_episodes);
  rc.eval_seed = config.GetUint64("eval.seed", rc.eval_seed);
  if (config.Has("hidden")) {
    rc.hidden.clear();
    for (const std::string& h : SplitList(config.GetString("hidden", ""))) {
      rc.hidden.push_back(static_cast<int>(ParseSeed(h)));
    }
  }

  rc.sft.steps = config.GetInt("sft.steps", rc.sft.steps);
  rc.sft.batch_size = config.GetInt("sft.batch_size", rc.sft.batch_size);
  rc.sft.lr = config.GetDouble("sft.lr", rc.sft.lr);

  rc.tpo.steps = config.GetInt("tpo.steps", rc.tpo.steps);
  rc.tpo.batch_size = config.GetInt("tpo.batch_size", rc.tpo.batch_size);
  rc.tpo.lr = config.GetDouble("tpo.lr", rc.tpo.lr);
  rc.tpo.beta = config.GetDouble("tpo.beta", rc.tpo.beta);
  rc.tpo.lambda = config.GetDouble("tpo.lambda", rc.tpo.lambda);

  PpoConfig& p = rc.ppo;
  p.gamma = config.GetDouble("ppo.gamma", p.gamma);
  p.gae_lambda = config.GetDouble("ppo.gae_lambda", p.gae_lambda);
  p.clip_eps = config.GetDouble("ppo.clip_eps", p.clip_eps);
  p.policy_lr = config.GetDouble("ppo.policy_lr", p.policy_lr);
  p.value_lr = config.GetDouble("ppo.value_lr", p.value_lr);
  p.epochs = config.GetInt("ppo.epochs", p.epochs);
  p.minibatches = config.GetInt("ppo.minibatches", p.minibatches);
  p.entropy_coef = config.GetDouble("ppo.entropy_coef", p.entropy_coef);
  p.n_envs = config.GetInt("ppo.n_envs", p.n_envs);
  p.total_env_steps = static_cast<int64_t>(
      config.GetUint64("ppo.total_env_steps", p.total_env_steps));
  p.rollout_steps = config.GetInt("ppo.rollout_steps", p.rollout_steps);
  p.stage_toggle = ParseStageToggle(config.GetString("ppo.stage_toggle", ""));
  p.time_limit_bootstrap =
      config.GetBool("ppo.time_limit_bootstrap", p.time_limit_bootstrap);
  p.eval_every =
      static_cast<int64_t>(config.GetUint64("ppo.eval_every", p.eval_every));
  p.eval_episodes = config.GetInt("ppo.eval_episodes", p.eval_episodes);
  p.eval_seed = rc.eval_seed;

  for (const std::string& key : config.UnusedKeys()) {
    if (!key.starts_with("task.")) {
      throw std::invalid_argument("unknown key " + key);
    }
  }
  rc.Validate();
  return rc;
}

void RunConfig::Validate() const {
  ValidatePhaseOrder(phases);
  if (seeds.empty()) throw std::invalid_argument("seeds must be non-empty");
  if (phases.front() != Phase::kSft && init_checkpoint.empty()) {
    throw std::invalid_argument(
        "phase " + std::string(PhaseName(phases.front())) +
        " needs an upstream checkpoint: run sft first or set init.checkpoint");
  }
  if (demos < 1 || pairs < 1 || eval_episodes < 1) {
    throw std::invalid_argument("demos, pairs and eval.episodes must be >= 1");
  }
  if (!(tpo.beta > 0.0) || tpo.lambda < 0.0) {
    throw std::invalid_argument("tpo.beta must be > 0 and tpo.lambda >= 0");
  }
  ppo.Validate();
  task.Validate();
}

std::string RunConfig::CanonicalText() const {
  std::ostringstream s;
  auto vec = [](const Vec3& v) {
    return Num(v.x) + " " + Num(v.y) + " " + Num(v.z);
  };
  s << "name = " << name << "\n";
  s << "phases = ";
  for (size_t i = 0; i < phases.size(); ++i) {
    s << (i ? "," : "") << PhaseName(phases[i]);
  }
  s << "\nseeds = ";
  for (size_t i = 0; i < seeds.size(); ++i) s << (i ? "," : "") << seeds[i];
  s << "\ninit.checkpoint = " << init_checkpoint << "\n";
  s << "demo.path = " << demo_path << "\n";
  s << "pair.path = " << pairs_path << "\n";
  s << "demos = " << demos << "\npairs = " << pairs << "\n";
  s << "eval.episodes = " << eval_episodes << "\neval.seed = " << eval_seed
    << "\nhidden = ";
  for (size_t i = 0; i < hidden.size(); ++i) s << (i ? "," : "") << hidden[i];
  s << "\ntask.kind = " << TaskName(task.kind) << "\n";
  s << "task.object_size = " << Num(task.object_size) << "\n";
  s << "task.table_height = " << Num(task.table_height) << "\n";
  s << "task.lift_goal = " << Num(task.lift_goal) << "\n";
  s << "task.horizon = " << task.horizon << "\n";
  s << "task.seed = " << task.seed << "\n";
  s << "task.workspace.min = " << vec(task.workspace.min) << "\n";
  s << "task.workspace.max = " << vec(task.workspace.max) << "\n";
  s << "task.rand.obj.min = " << vec(task.object_range.min) << "\n";
  s << "task.rand.obj.max = " << vec(task.object_range.max) << "\n";
  s << "task.rand.goal.min = " << vec(task.goal_range.min) << "\n";
  s << "task.rand.goal.max = " << vec(task.goal_range.max) << "\n";
  s << "task.ee_home = " << vec(task.ee_home) << "\n";
  s << "task.yaw_range = " << Num(task.yaw_range) << "\n";
  s << "task.max_step = " << Num(task.max_step) << "\n";
  s << "task.max_turn = " << Num(task.max_turn) << "\n";
  s << "sft.steps = " << sft.steps << "\nsft.batch_size = " << sft.batch_size
    << "\nsft.lr = " << Num(sft.lr) << "\n";
  s << "tpo.steps = " << tpo.steps << "\ntpo.batch_size = " << tpo.batch_size
    << "\ntpo.lr = " << Num(tpo.lr) << "\ntpo.beta = " << Num(tpo.beta)
    << "\ntpo.lambda = " << Num(tpo.lambda) << "\n";
  s << "ppo.gamma = " << Num(ppo.gamma)
    << "\nppo.gae_lambda = " << Num(ppo.gae_lambda)
    << "\nppo.clip_eps = " << Num(ppo.clip_eps)
    << "\nppo.policy_lr = " << Num(ppo.policy_lr)
    << "\nppo.value_lr = " << Num(ppo.value_lr)
    << "\nppo.epochs = " << ppo.epochs
    << "\nppo.minibatches = " << ppo.minibatches
    << "\nppo.entropy_coef = " << Num(ppo.entropy_coef)
    << "\nppo.n_envs = " << ppo.n_envs
    << "\nppo.total_env_steps = " << ppo.total_env_steps
    << "\nppo.rollout_steps = " << ppo.rollout_steps << "\nppo.stage_toggle = ";
  bool first = true;
  for (StageId st : ppo.stage_toggle) {
    s << (first ? "" : ",") << StageName(st);
    first = false;
  }
  s << "\nppo.time_limit_bootstrap = "
    << (ppo.time_limit_bootstrap ? "true" : "false")
    << "\nppo.eval_every = " << ppo.eval_every
    << "\nppo.eval_episodes = " << ppo.eval_episodes << "\n";
  return s.str();
}

std::vector<Trajectory> GenerateDemos(const TaskSpec& spec, int count,
                                      uint64_t seed, int* skipped) {
  if (count < 1) throw std::invalid_argument("demo count must be >= 1");
  std::vector<Trajectory> out;
  int failures = 0;
  const uint64_t stream = MixSeed(seed, 0x64656d6f);
  for (uint64_t i = 0; static_cast<int>(out.size()) < count; ++i) {
    if (failures > 10 * count) {
      throw std::runtime_error("expert keeps failing; check the task spec");
    }
    Trajectory t = Rollout(
        spec, MixSeed(stream, i),
        [&spec](const SimState& s) { return ScriptedExpert(s, spec); },
        "expert");
    if (!t.Succeeded()) {
      ++failures;
      continue;
    }
    out.push_back(FilterIdle(t));
  }
  if (skipped) *skipped = failures;
  return out;
}

std::vector<FailureMode> PairFailureModes(TaskKind kind) {
  std::vector<std::string> names = {"stall:reach", "miss_grasp",
                                    "early_release", "wrong_goal"};
  if (!IsGraspTask(kind)) names = {"stall:reach", "early_release", "wrong_goal"};
  std::vector<FailureMode> out;
  for (const std::string& n : names) out.push_back(FailureMode::Parse(n));
  return out;
}

std::vector<PreferencePair> GeneratePairs(const TaskSpec& spec, int count,
                                          uint64_t seed) {
  if (count < 1) throw std::invalid_argument("pair count must be >= 1");
  const StageProfile profile = StageProfile::ForTask(spec);
  const std::vector<FailureMode> modes = PairFailureModes(spec.kind);
  const uint64_t stream = MixSeed(seed, 0x70616972);
  std::vector<PreferencePair> out;
  for (uint64_t i = 0; static_cast<int>(out.size()) < count; ++i) {
    if (i > static_cast<uint64_t>(10 * count)) {
      throw std::runtime_error("could not build enough preference pairs");
    }
    const FailureMode& mode = modes[out.size() % modes.size()];
    const uint64_t episode = MixSeed(stream, i);
    const Trajectory good = Rollout(
        spec, episode,
        [&spec](const SimState& s) { return ScriptedExpert(s, spec); },
        "expert");
    const Trajectory bad = Rollout(
        spec, episode,
        [&](const SimState& s) { return CorruptExpert(s, spec, mode); },
        mode.Name());
    auto pairs = BuildPairs(std::span(&good, 1), std::span(&bad, 1), spec,
                            profile);
    for (auto& p : pairs) out.push_back(std::move(p));
  }
  return out;
}

void WritePairs(const std::string& dir, std::span<const PreferencePair> pairs,
                const StageProfile& profile) {
  (void)profile;
  fs::create_directories(dir);
  std::vector<Trajectory> chosen, rejected;
  std::ostringstream index;
  for (size_t i = 0; i < pairs.size(); ++i) {
    chosen.push_back(pairs[i].chosen);
    rejected.push_back(pairs[i].rejected);
    json stages = json::array();
    for (StageId s : pairs[i].eligible) stages.push_back(StageName(s));
    json j{{"episode_seed", pairs[i].episode_seed},
           {"chosen_path", "chosen.jsonl"},
           {"chosen_tag", pairs[i].chosen.tag},
           {"rejected_path", "rejected.jsonl"},
           {"rejected_tag", pairs[i].rejected.tag},
           {"eligible_stages", stages}};
    index << j.dump() << "\n";
  }
  WriteTrajectoriesFile((fs::path(dir) / "chosen.jsonl").string(), chosen);
  WriteTrajectoriesFile((fs::path(dir) / "rejected.jsonl").string(), rejected);
  WriteFile((fs::path(dir) / "pairs.jsonl").string(), index.str());
}

std::vector<PreferencePair> ReadPairs(const std::string& pairs_path,
                                      const TaskSpec& spec,
                                      const StageProfile& profile) {
  const fs::path base = fs::path(pairs_path).parent_path();
  std::map<std::string, std::vector<Trajectory>> files;
  auto find = [&](const std::string& rel, uint64_t seed,
                  const std::string& tag) -> const Trajectory& {
    auto it = files.find(rel);
    if (it == files.end()) {
      it = files.emplace(rel, ReadTrajectoriesFile((base / rel).string())).first;
    }
    for (const Trajectory& t : it->second) {
      if (t.episode_id == seed && t.tag == tag) return t;
    }
    throw std::runtime_error("episode " + std::to_string(seed) + " (" + tag +
                             ") not found in " + rel);
  };
  std::ifstream in(pairs_path);
  if (!in) throw std::runtime_error("cannot open " + pairs_path);
  std::vector<PreferencePair> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      PreferencePair p;
      p.episode_seed = j.at("episode_seed").get<uint64_t>();
      p.chosen = find(j.at("chosen_path").get<std::string>(), p.episode_seed,
                      j.value("chosen_tag", ""));
      p.rejected = find(j.at("rejected_path").get<std::string>(),
                        p.episode_seed, j.value("rejected_tag", ""));
      p.chosen_segments = Segment(p.chosen, spec, profile);
      p.rejected_segments = Segment(p.rejected, spec, profile);
      p.eligible =
          EligibleStages(p.chosen_segments, p.rejected_segments, profile);
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error(pairs_path + ":" + std::to_string(line_no) +
                               ": " + e.what());
    }
  }
  if (out.empty()) throw std::runtime_error(pairs_path + ": no pairs");
  return out;
}

std::vector<SegmentRecord> Annotate(std::span<const Trajectory> trajectories,
                                    const TaskSpec& spec) {
  const StageProfile profile = StageProfile::ForTask(spec);
  std::vector<SegmentRecord> out;
  for (const Trajectory& t : trajectories) {
    if (t.task != spec.kind) {
      throw std::invalid_argument("trajectory task " +
                                  std::string(TaskName(t.task)) +
                                  " does not match the task spec");
    }
    for (const StageSegment& s : Segment(t, spec, profile)) {
      out.push_back({t.task, t.episode_id, s});
    }
  }
  return out;
}

void WriteAnnotation(std::ostream& out, std::span<const SegmentRecord> records) {
  for (const SegmentRecord& r : records) {
    json j{{"task", std::string(TaskName(r.task))},
           {"episode_id", r.episode_id},
           {"stage", std::string(StageName(r.segment.stage))},
           {"start", r.segment.start},
           {"end", r.segment.end},
           {"cost_raw", r.segment.cost},
           {"cost_normalized", r.segment.normalized_cost},
           {"completed", r.segment.completed}};
    out << j.dump() << "\n";
  }
}

void WriteAnnotationSummary(std::ostream& out,
                            std::span<const SegmentRecord> records,
                            const StageProfile& profile) {
  std::vector<int> seen(profile.size(), 0), done(profile.size(), 0);
  for (const SegmentRecord& r : records) {
    const int k = profile.IndexOf(r.segment.stage);
    if (k < 0 || k >= profile.size()) continue;
    ++seen[k];
    done[k] += r.segment.completed ? 1 : 0;
  }
  out << "stage,segments,completed\n";
  for (int k = 0; k < profile.size(); ++k) {
    out << StageName(profile.stages[k]) << "," << seen[k] << "," << done[k]
        << "\n";
  }
}

std::string EvalReportJson(const EvalReport& r, const StageProfile& profile) {
  json cond = json::object();
  for (int k = 0; k < profile.size(); ++k) {
    const auto pct = r.conditional.at(k).Percent();
    cond[std::string(StageName(profile.stages[k]))] =
        pct ? json(*pct) : json(nullptr);
  }
  json j{{"episodes", r.episodes},
         {"seed", r.seed},
         {"success_rate", r.success_rate()},
         {"grasp_rate", r.grasp_rate()},
         {"mean_length", r.mean_length},
         {"conditional_stage_success", cond},
         {"counting_identity", r.CountingIdentityHolds()}};
  return j.dump();
}

IpiResult RunIpi(const RunConfig& config, std::ostream* log) {
  config.Validate();
  const TaskSpec& spec = config.task;
  const StageProfile profile =
      StageProfile::ForTask(spec, config.tpo.lambda);
  const std::string config_text = config.CanonicalText();
  const std::string config_hash = GitBlobHash(config_text);
  const fs::path run_dir = fs::path(config.out_dir) / config.name;
  fs::create_directories(run_dir);
  WriteFile((run_dir / "config.txt").string(), config_text);

  IpiResult result;
  std::ostringstream report;
  report << "seed,phase,success_rate,grasp_rate";
  for (StageId s : profile.stages) report << ",cond_" << StageName(s);
  report << ",mean_length\n";

  for (uint64_t seed : config.seeds) {
    const fs::path seed_dir = run_dir / ("seed-" + std::to_string(seed));
    const fs::path data_dir = seed_dir / "data";
    fs::create_directories(data_dir);

    Checkpoint current;
    std::string current_hash;
    if (config.phases.front() == Phase::kSft) {
      current.rng = Rng(MixSeed(seed, 0x696e6974));
      current.policy = GaussianPolicy::Create(current.rng, config.hidden);
      current.phase = "init";
    } else {
      current = LoadCheckpoint(config.init_checkpoint);
      current_hash = GitBlobHashFile(config.init_checkpoint);
    }

    for (Phase phase : config.phases) {
      const std::string name(PhaseName(phase));
      const fs::path dir = seed_dir / name;
      fs::create_directories(dir);
      if (log) *log << "[" << config.name << "] seed " << seed << " " << name
                    << std::endl;
      json inputs = json::object();
      if (!current_hash.empty()) inputs["init_checkpoint"] = current_hash;
      std::ostringstream metrics;
      std::optional<Checkpoint> best;

      switch (phase) {
        case Phase::kSft: {
          std::string demo_file = config.demo_path;
          if (demo_file.empty()) {
            int skipped = 0;
            const auto demos =
                GenerateDemos(spec, config.demos, seed, &skipped);
            demo_file = (data_dir / "demos.jsonl").string();
            WriteTrajectoriesFile(demo_file, demos);
            if (log && skipped) {
              *log << "  skipped " << skipped << " failed expert seeds\n";
            }
          }
          const auto demos = ReadTrajectoriesFile(demo_file);
          inputs["demos"] = GitBlobHashFile(demo_file);
          SftConfig sc = config.sft;
          sc.seed = seed;
          SftResult r = TrainSft(current, demos, spec, sc);
          WriteLossCsv(metrics, r.metrics);
          current = std::move(r.checkpoint);
          break;
        }
        case Phase::kTpo:
        case Phase::kStaTpo: {
          std::string pairs_file = config.pairs_path;
          if (pairs_file.empty()) {
            const auto pairs = GeneratePairs(spec, config.pairs, seed);
            WritePairs((data_dir / "pairs").string(), pairs, profile);
            pairs_file = (data_dir / "pairs" / "pairs.jsonl").string();
          }
          const auto pairs = ReadPairs(pairs_file, spec, profile);
          inputs["pairs"] = GitBlobHashFile(pairs_file);
          const fs::path pdir = fs::path(pairs_file).parent_path();
          inputs["pairs_chosen"] = GitBlobHashFile((pdir / "chosen.jsonl").string());
          inputs["pairs_rejected"] =
              GitBlobHashFile((pdir / "rejected.jsonl").string());
          TpoConfig tc = config.tpo;
          tc.stage_aware = phase == Phase::kStaTpo;
          TpoResult r = TrainTpo(current, pairs, spec, profile, tc);
          WriteTpoCsv(metrics, r.metrics, profile);
          if (log && r.excluded_pairs) {
            *log << "  warning: " << r.excluded_pairs
                 << " pairs had no eligible stage\n";
          }
          current = std::move(r.checkpoint);
          break;
        }
        case Phase::kPpo:
        case Phase::kStaPpo: {
          PpoConfig pc = config.ppo;
          pc.shaping = phase == Phase::kStaPpo;
          PpoResult r = TrainPpo(current, spec, profile, pc, seed);
          WriteCurveCsv(metrics, r.curve, profile);
          best = std::move(r.best_checkpoint);
          current = std::move(r.final_checkpoint);
          break;
        }
      }

      const std::string ckpt_text = SerializeCheckpoint(current);
      WriteFile((dir / "checkpoint.json").string(), ckpt_text);
      WriteFile((dir / "metrics.csv").string(), metrics.str());
      json outputs{{"checkpoint.json", GitBlobHash(ckpt_text)},
                   {"metrics.csv", GitBlobHash(metrics.str())}};
      if (best) {
        const std::string best_text = SerializeCheckpoint(*best);
        WriteFile((dir / "checkpoint_best.json").string(), best_text);
        outputs["checkpoint_best.json"] = GitBlobHash(best_text);
      }
      current_hash = GitBlobHash(ckpt_text);

      EvalReport eval = EvaluatePolicy(current.policy, spec,
                                       config.eval_episodes, config.eval_seed);
      json manifest{{"name", config.name},
                    {"phase", name},
                    {"seed", seed},
                    {"task", std::string(TaskName(spec.kind))},
                    {"config_hash", config_hash},
                    {"inputs", inputs},
                    {"outputs", outputs},
                    {"eval", json::parse(EvalReportJson(eval, profile))}};
      WriteFile((dir / "manifest.json").string(), manifest.dump(1) + "\n");

      report << seed << "," << name << "," << Num(eval.success_rate()) << ","
             << Num(eval.grasp_rate());
      for (const Ratio& c : eval.conditional) {
        report << ",";
        if (auto p = c.Percent()) report << Num(*p);
      }
      report << "," << Num(eval.mean_length) << "\n";
      if (log) {
        *log << "  success " << eval.success_rate() << "% grasp "
             << eval.grasp_rate() << "%" << std::endl;
      }
      result.outcomes.push_back(
          {phase, seed, dir.string(), current, std::move(eval)});
    }
  }
  WriteFile((run_dir / "report.csv").string(), report.str());
  return result;
}

}  // namespace stagerl
