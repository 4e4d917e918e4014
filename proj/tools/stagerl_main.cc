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

// Command-line entry point. Every subcommand exits 0 on success; failures
// print one "error: <message>" line to stderr and exit 1.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stagerl/checkpoint.h"
#include "stagerl/evaluation.h"
#include "stagerl/expert.h"
#include "stagerl/oracle.h"
#include "stagerl/pipeline.h"
#include "stagerl/stare.h"
#include "stagerl/text_config.h"
#include "stagerl/trajectory_io.h"

namespace stagerl {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string task;
  std::string config;
  std::string seeds;
  std::optional<int> episodes;
  std::optional<std::string> stage_toggle;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::string out;
  std::string init;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags* f) {
  cmd->add_option("--task", f->task,
                  "pick_place, push, pull or lift_peg_upright");
  cmd->add_option("--config", f->config, "key = value config file");
  cmd->add_option("--seed", f->seeds, "seed or comma-separated seed list");
  cmd->add_option("--episodes", f->episodes, "episode or record count");
  cmd->add_option("--stage-toggle", f->stage_toggle,
                  "stages whose shaping is disabled, e.g. reach,grasp");
  cmd->add_option("--lambda", f->lambda, "stage penalty weight");
  cmd->add_option("--beta", f->beta, "preference temperature");
  cmd->add_option("--out", f->out, "output path");
}

std::string Format(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

KeyValueConfig LoadConfig(const CommonFlags& f) {
  KeyValueConfig cfg;
  if (!f.config.empty()) cfg = KeyValueConfig::ParseFile(f.config);
  if (!f.task.empty()) cfg.Set("task.kind", f.task);
  if (!f.seeds.empty()) cfg.Set("seeds", f.seeds);
  if (f.stage_toggle) cfg.Set("ppo.stage_toggle", *f.stage_toggle);
  if (f.lambda) cfg.Set("tpo.lambda", Format(*f.lambda));
  if (f.beta) cfg.Set("tpo.beta", Format(*f.beta));
  if (!f.init.empty()) cfg.Set("init.checkpoint", f.init);
  return cfg;
}

TaskSpec TaskFromFlags(const CommonFlags& f) {
  const KeyValueConfig cfg = LoadConfig(f);
  KeyValueConfig task;
  for (const auto& [key, value] : cfg.entries()) {
    if (key.starts_with("task.")) task.Set(key.substr(5), value);
  }
  return TaskSpecFromConfig(task);
}

uint64_t SingleSeed(const CommonFlags& f, uint64_t fallback) {
  if (f.seeds.empty()) return fallback;
  size_t used = 0;
  uint64_t seed = 0;
  try {
    seed = std::stoull(f.seeds, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != f.seeds.size() || f.seeds[0] == '-') {
    throw std::invalid_argument("this command takes a single --seed, got '" +
                                f.seeds + "'");
  }
  return seed;
}

int RunPhases(const CommonFlags& f, const std::string& phases) {
  KeyValueConfig cfg = LoadConfig(f);
  if (!phases.empty()) cfg.Set("phases", phases);
  if (f.episodes) cfg.Set("eval.episodes", std::to_string(*f.episodes));
  if (!f.out.empty()) cfg.Set("out", f.out);
  const RunConfig rc = RunConfig::FromConfig(cfg);
  const IpiResult result = RunIpi(rc, &std::cerr);
  const StageProfile profile = StageProfile::ForTask(rc.task);
  for (const PhaseOutcome& o : result.outcomes) {
    std::cout << o.dir << " " << EvalReportJson(o.report, profile) << "\n";
  }
  return 0;
}

int DemoGen(const CommonFlags& f) {
  if (f.out.empty()) throw std::invalid_argument("--out is required");
  const TaskSpec spec = TaskFromFlags(f);
  int skipped = 0;
  const auto demos =
      GenerateDemos(spec, f.episodes.value_or(100), SingleSeed(f, 0), &skipped);
  if (skipped) std::cerr << "skipped " << skipped << " failed expert seeds\n";
  WriteTrajectoriesFile(f.out, demos);
  return 0;
}

int PairGen(const CommonFlags& f) {
  if (f.out.empty()) throw std::invalid_argument("--out is required");
  const TaskSpec spec = TaskFromFlags(f);
  const auto pairs = GeneratePairs(spec, f.episodes.value_or(50),
                                   SingleSeed(f, 0));
  WritePairs(f.out, pairs, StageProfile::ForTask(spec));
  return 0;
}

int Eval(const CommonFlags& f, const std::string& checkpoint,
         bool stochastic) {
  const TaskSpec spec = TaskFromFlags(f);
  const int episodes = f.episodes.value_or(300);
  const uint64_t seed = SingleSeed(f, 7);
  EvalReport report;
  if (checkpoint == "expert") {
    report = EvaluateController(
        [&spec](const SimState& s) { return ScriptedExpert(s, spec); }, spec,
        episodes, seed);
  } else {
    Rng sampling(MixSeed(seed, 0x73616d70));
    report = EvaluatePolicy(LoadCheckpoint(checkpoint).policy, spec, episodes,
                            seed, stochastic ? &sampling : nullptr);
  }
  const std::string json =
      EvalReportJson(report, StageProfile::ForTask(spec)) + "\n";
  if (!f.out.empty()) {
    std::ofstream out(f.out);
    out << json;
    if (!out) throw std::runtime_error("cannot write " + f.out);
  }
  std::cout << json;
  return 0;
}

int AnnotateCmd(const CommonFlags& f, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("no trajectory files given");
  const TaskSpec spec = TaskFromFlags(f);
  std::vector<Trajectory> all;
  for (const std::string& path : inputs) {
    auto trajs = ReadTrajectoriesFile(path);
    for (auto& t : trajs) all.push_back(std::move(t));
  }
  std::vector<SegmentRecord> records;
  try {
    records = Annotate(all, spec);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("annotate: ") + e.what());
  }
  if (f.out.empty()) {
    WriteAnnotation(std::cout, records);
  } else {
    std::ostringstream body;
    WriteAnnotation(body, records);
    const fs::path tmp = f.out + ".partial";
    {
      std::ofstream out(tmp);
      out << body.str();
      if (!out) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw std::runtime_error("cannot write " + f.out);
      }
    }
    fs::rename(tmp, f.out);
  }
  WriteAnnotationSummary(std::cerr, records, StageProfile::ForTask(spec));
  return 0;
}

int OracleCheck(int bins, int random_potentials, double tol) {
  const ReachGraspChain chain = BuildReachGraspChain(bins);
  bool pass = true;
  double worst_gap = 0.0;
  double worst_shift = 0.0;
  int mismatched = 0;
  auto check = [&](const std::vector<double>& phi) {
    const InvarianceCheck c = CheckShapingInvariance(chain.mdp, phi, tol);
    pass = pass && c.sets_equal;
    mismatched += c.mismatched_states;
    worst_gap = std::max(worst_gap, c.max_advantage_gap);
    worst_shift = std::max(worst_shift, c.max_value_shift_error);
  };
  check(ChainStagePotential(chain));
  for (int i = 0; i < random_potentials; ++i) {
    check(RandomPotential(chain.mdp, 1000 + i));
  }
  std::cout << (pass ? "PASS" : "FAIL") << " states=" << chain.mdp.num_states
            << " potentials=" << random_potentials + 1
            << " mismatched_states=" << mismatched
            << " max_advantage_gap=" << Format(worst_gap)
            << " max_value_shift_error=" << Format(worst_shift) << "\n";
  return pass ? 0 : 2;
}

int Main(int argc, char** argv) {
  CLI::App app{"stage-aware policy training on a kinematic desk simulator"};
  app.require_subcommand(1);
  std::map<CLI::App*, CommonFlags> flags_of;
  std::string checkpoint;
  std::vector<std::string> inputs;
  int bins = 200;
  int potentials = 20;
  double tol = 1e-10;

  auto* demo = app.add_subcommand("demo-gen", "scripted expert demos (JSONL)");
  auto* pair = app.add_subcommand("pair-gen", "matched-seed preference pairs");
  std::vector<std::pair<CLI::App*, std::string>> phase_cmds;
  for (const char* p : {"sft", "tpo", "sta-tpo", "ppo", "sta-ppo"}) {
    std::string phase(p);
    for (char& c : phase) c = c == '-' ? '_' : c;
    auto* cmd = app.add_subcommand(p, "run the " + phase + " phase");
    cmd->add_option("--init", flags_of[cmd].init, "upstream checkpoint");
    phase_cmds.emplace_back(cmd, phase);
  }
  auto* ipi = app.add_subcommand("ipi", "phases from the config (default all)");
  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint path or 'expert'")
      ->required();
  bool stochastic = false;
  eval->add_flag("--stochastic", stochastic,
                 "sample actions instead of taking the mean");
  auto* annotate = app.add_subcommand("annotate", "stage segments of rollouts");
  annotate->add_option("inputs", inputs, "trajectory JSONL files");
  auto* oracle = app.add_subcommand("oracle-check", "tabular shaping check");
  oracle->add_option("--bins", bins, "position bins");
  oracle->add_option("--potentials", potentials, "random potentials");
  oracle->add_option("--tol", tol, "value iteration tolerance");

  for (CLI::App* cmd : {demo, pair, ipi, eval, annotate}) {
    AddCommonFlags(cmd, &flags_of[cmd]);
  }
  for (auto& [cmd, phase] : phase_cmds) AddCommonFlags(cmd, &flags_of[cmd]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (*demo) return DemoGen(flags_of[demo]);
  if (*pair) return PairGen(flags_of[pair]);
  for (auto& [cmd, phase] : phase_cmds) {
    if (*cmd) return RunPhases(flags_of[cmd], phase);
  }
  if (*ipi) {
    const CommonFlags& flags = flags_of[ipi];
    const bool has_phases =
        !flags.config.empty() &&
        KeyValueConfig::ParseFile(flags.config).Has("phases");
    return RunPhases(flags, has_phases ? "" : "sft,sta_tpo,sta_ppo");
  }
  if (*eval) return Eval(flags_of[eval], checkpoint, stochastic);
  if (*annotate) return AnnotateCmd(flags_of[annotate], inputs);
  if (*oracle) return OracleCheck(bins, potentials, tol);
  return 1;
}

}  // namespace
}  // namespace stagerl

int main(int argc, char** argv) {
  try {
    return stagerl::Main(argc, argv);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) c = c == '\n' ? ' ' : c;
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
}
