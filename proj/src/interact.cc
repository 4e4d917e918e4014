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

#include "stagerl/interact.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "stagerl/autodiff.h"
#include "stagerl/evaluation.h"

namespace stagerl {

void PpoConfig::Validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in (0, 1)");
  }
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("gae_lambda must be in [0, 1]");
  }
  if (!(clip_eps > 0.0)) throw std::invalid_argument("clip_eps must be > 0");
  if (n_envs < 1 || epochs < 1 || minibatches < 1) {
    throw std::invalid_argument("n_envs, epochs, minibatches must be >= 1");
  }
  if (rollout_steps < 0 || total_env_steps < 0 || eval_every < 1 ||
      eval_episodes < 1) {
    throw std::invalid_argument("bad rollout or evaluation sizes");
  }
}

VecEnv::VecEnv(const TaskSpec& spec, int n_envs, uint64_t stream)
    : spec(spec), states(n_envs), episode_ids(n_envs), stream(stream) {
  for (int e = 0; e < n_envs; ++e) ResetEnv(e);
}

void VecEnv::ResetEnv(int env) {
  episode_ids[env] = MixSeed(stream, episodes_started++);
  states[env] = Reset(spec, episode_ids[env]);
}

RolloutBuffer CollectRollout(const GaussianPolicy& policy,
                             const ValueNet& value, VecEnv& envs,
                             const StageProfile& profile,
                             const PpoConfig& config, int steps, Rng& rng) {
  const TaskSpec& spec = envs.spec;
  const int n_envs = static_cast<int>(envs.states.size());
  const int n = n_envs * steps;
  RolloutBuffer buf;
  buf.n_envs = n_envs;
  buf.steps = steps;
  buf.obs.resize(kObsDim, n);
  buf.actions.resize(kActDim, n);
  buf.log_prob_old.resize(n);
  buf.reward.resize(n);
  buf.shaped_reward.resize(n);
  buf.value.resize(n);
  buf.bootstrap = Eigen::VectorXd::Zero(n);
  buf.done.resize(n);
  buf.stage.resize(n);
  buf.episode_id.resize(n);
  buf.state.resize(n);
  buf.next_state.resize(n);

  const Eigen::ArrayXd sigma = policy.ClampedLogStd().array().exp();
  for (int t = 0; t < steps; ++t) {
    Eigen::MatrixXd obs(kObsDim, n_envs);
    for (int e = 0; e < n_envs; ++e) obs.col(e) = Observe(envs.states[e], spec);
    const Eigen::MatrixXd mean = policy.trunk.Forward(obs);
    Eigen::MatrixXd act(kActDim, n_envs);
    for (int e = 0; e < n_envs; ++e) {
      for (int d = 0; d < kActDim; ++d) {
        act(d, e) = mean(d, e) + sigma[d] * rng.Normal();
      }
    }
    const Eigen::VectorXd log_probs = policy.LogProbForward(obs, act).log_probs;
    const Eigen::VectorXd values = value.Values(obs);
    for (int e = 0; e < n_envs; ++e) {
      const int i = buf.Index(t, e);
      const SimState& s = envs.states[e];
      const Transition tr = Step(s, DecodeAction(act.col(e), spec), spec);
      const StageId stage = StageOf(s, spec, profile);
      buf.obs.col(i) = obs.col(e);
      buf.actions.col(i) = act.col(e);
      buf.log_prob_old[i] = log_probs[e];
      buf.value[i] = values[e];
      buf.reward[i] = tr.reward;
      const bool shaped = config.shaping && !config.stage_toggle.count(stage);
      buf.shaped_reward[i] =
          shaped ? ShapeReward(tr.reward, s, tr.next_state, spec, profile,
                               config.gamma)
                 : tr.reward;
      buf.done[i] = tr.done ? 1 : 0;
      buf.stage[i] = stage;
      buf.episode_id[i] = envs.episode_ids[e];
      buf.state[i] = s;
      buf.next_state[i] = tr.next_state;
      const bool truncated = tr.done && tr.reward == 0.0;
      if (truncated && config.time_limit_bootstrap) {
        buf.bootstrap[i] =
            config.gamma * value.Value(Observe(tr.next_state, spec));
      }
      if (tr.done) {
        envs.ResetEnv(e);
      } else {
        envs.states[e] = tr.next_state;
      }
    }
  }
  Eigen::MatrixXd last(kObsDim, n_envs);
  for (int e = 0; e < n_envs; ++e) last.col(e) = Observe(envs.states[e], spec);
  buf.last_value = value.Values(last);
  return buf;
}

GaeResult ComputeGae(std::span<const double> rewards,
                     std::span<const double> values,
                     std::span<const uint8_t> dones, double gamma,
                     double lambda) {
  const size_t n = rewards.size();
  if (values.size() != n + 1 || dones.size() != n) {
    throw std::invalid_argument(
        "compute_gae: need len(values) == len(rewards) + 1 == len(dones) + 1");
  }
  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_adv = 0.0;
  for (size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * live * values[k + 1] - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[k] = next_adv;
    out.returns[k] = next_adv + values[k];
  }
  return out;
}

GaeResult ComputeBufferGae(const RolloutBuffer& buffer, double gamma,
                           double lambda) {
  GaeResult out;
  out.advantages.resize(buffer.size());
  out.returns.resize(buffer.size());
  std::vector<double> r(buffer.steps);
  std::vector<double> v(buffer.steps + 1);
  std::vector<uint8_t> d(buffer.steps);
  for (int e = 0; e < buffer.n_envs; ++e) {
    for (int t = 0; t < buffer.steps; ++t) {
      const int i = buffer.Index(t, e);
      r[t] = buffer.shaped_reward[i] + buffer.bootstrap[i];
      v[t] = buffer.value[i];
      d[t] = buffer.done[i];
    }
    v[buffer.steps] = buffer.last_value[e];
    const GaeResult g = ComputeGae(r, v, d, gamma, lambda);
    for (int t = 0; t < buffer.steps; ++t) {
      out.advantages[buffer.Index(t, e)] = g.advantages[t];
      out.returns[buffer.Index(t, e)] = g.returns[t];
    }
  }
  return out;
}

Eigen::VectorXd NormalizeAdvantages(const Eigen::VectorXd& advantages) {
  if (advantages.size() == 0) return advantages;
  const double mean = advantages.mean();
  const double var = (advantages.array() - mean).square().mean();
  const double std = std::max(std::sqrt(var), 1e-8);
  return (advantages.array() - mean) / std;
}

LossAndGrad PpoLoss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                    const Eigen::MatrixXd& actions,
                    const Eigen::VectorXd& log_prob_old,
                    const Eigen::VectorXd& advantages, double clip_eps,
                    double entropy_coef) {
  if (obs.cols() == 0) throw std::invalid_argument("ppo_loss: empty batch");
  if (log_prob_old.size() != obs.cols() || advantages.size() != obs.cols()) {
    throw std::invalid_argument("ppo_loss: batch size mismatch");
  }
  LossAndGrad out = PolicyLoss(
      policy, obs, actions, [&](Tape& tape, std::span<const Var> log_probs) {
        std::vector<Var> terms;
        terms.reserve(log_probs.size());
        for (size_t i = 0; i < log_probs.size(); ++i) {
          const Var ratio = tape.Exp(log_probs[i] - log_prob_old[i]);
          const double a = advantages[i];
          const Var unclipped = ratio * a;
          const Var clipped =
              tape.Clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * a;
          terms.push_back(tape.Min(unclipped, clipped));
        }
        return tape.Neg(tape.Mean(terms));
      });
  if (entropy_coef != 0.0) {
    // H = Σ_d (log σ_d + ½ log 2πe) depends on log_std alone.
    const Eigen::VectorXd ls = policy.ClampedLogStd();
    const double entropy =
        ls.sum() + 0.5 * ls.size() * std::log(2.0 * std::numbers::pi * std::numbers::e);
    out.value -= entropy_coef * entropy;
    const int offset = policy.trunk.NumParams();
    for (int d = 0; d < ls.size(); ++d) {
      if (policy.log_std[d] >= GaussianPolicy::kMinLogStd &&
          policy.log_std[d] <= GaussianPolicy::kMaxLogStd) {
        out.grad[offset + d] -= entropy_coef;
      }
    }
  }
  return out;
}

LossAndGrad ValueRegressionLoss(const ValueNet& value,
                                const Eigen::MatrixXd& obs,
                                const Eigen::VectorXd& returns) {
  if (returns.size() != obs.cols()) {
    throw std::invalid_argument("value_loss: batch size mismatch");
  }
  return ValueLoss(value, obs, [&](Tape& tape, std::span<const Var> v) {
    std::vector<Var> terms;
    terms.reserve(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
      terms.push_back(0.5 * tape.Square(v[i] - returns[i]));
    }
    return tape.Mean(terms);
  });
}

namespace {

CurveRow CurvePoint(const GaussianPolicy& policy, const TaskSpec& spec,
                    const PpoConfig& config, int64_t env_steps,
                    double mean_shaped_return) {
  const EvalReport report = EvaluatePolicy(policy, spec, config.eval_episodes,
                                           config.eval_seed);
  CurveRow row;
  row.env_steps = env_steps;
  row.success_rate = report.success_rate();
  row.grasp_rate = report.grasp_rate();
  for (const Ratio& r : report.conditional) row.conditional.push_back(r.Percent());
  row.mean_shaped_return = mean_shaped_return;
  return row;
}

std::string DescribeMinibatch(int update, int mb, const Eigen::VectorXd& lp_old,
                              const Eigen::VectorXd& adv,
                              const GaussianPolicy& policy) {
  std::ostringstream ss;
  ss << "non-finite loss at update " << update << " minibatch " << mb
     << ": n=" << adv.size() << " adv[min,max]=[" << adv.minCoeff() << ","
     << adv.maxCoeff() << "] logp_old[min,max]=[" << lp_old.minCoeff() << ","
     << lp_old.maxCoeff() << "] log_std=[" << policy.log_std.transpose()
     << "]";
  return ss.str();
}

}  // namespace

PpoResult TrainPpo(const Checkpoint& init, const TaskSpec& spec,
                   const StageProfile& profile, const PpoConfig& config,
                   uint64_t seed) {
  config.Validate();
  const int steps = config.rollout_steps > 0 ? config.rollout_steps
                                             : spec.horizon;
  Checkpoint ckpt = init;
  ckpt.phase = config.shaping ? "sta_ppo" : "ppo";
  ckpt.step = 0;
  ckpt.rng = Rng(MixSeed(seed, 0x70706f));
  if (!ckpt.value) ckpt.value = ValueNet::Create(ckpt.rng);
  ckpt.policy_opt = Adam(ckpt.policy.NumParams(), config.policy_lr);
  ckpt.value_opt = Adam(ckpt.value->net.NumParams(), config.value_lr);

  VecEnv envs(spec, config.n_envs, MixSeed(seed, 0x747261696e));
  std::vector<double> episode_return(config.n_envs, 0.0);

  PpoResult result;
  result.curve.push_back(CurvePoint(ckpt.policy, spec, config, 0, 0.0));
  result.best_checkpoint = ckpt;
  double best_success = result.curve.back().success_rate;

  Eigen::VectorXd policy_params = ckpt.policy.Flatten();
  Eigen::VectorXd value_params = ckpt.value->net.Flatten();
  int64_t env_steps = 0;
  int64_t next_eval = config.eval_every;
  int update = 0;
  const int64_t per_rollout = static_cast<int64_t>(steps) * config.n_envs;
  while (env_steps + per_rollout <= config.total_env_steps) {
    // The policy is read-only while collecting.
    const RolloutBuffer buf = CollectRollout(ckpt.policy, *ckpt.value, envs,
                                             profile, config, steps, ckpt.rng);
    env_steps += buf.size();
    double return_sum = 0.0;
    int finished = 0;
    for (int t = 0; t < buf.steps; ++t) {
      for (int e = 0; e < buf.n_envs; ++e) {
        const int i = buf.Index(t, e);
        episode_return[e] += buf.shaped_reward[i];
        if (buf.done[i]) {
          return_sum += episode_return[e];
          ++finished;
          episode_return[e] = 0.0;
        }
      }
    }
    const GaeResult gae = ComputeBufferGae(buf, config.gamma, config.gae_lambda);

    const int n = buf.size();
    std::vector<int> order(n);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      for (int i = 0; i < n; ++i) order[i] = i;
      for (int i = n - 1; i > 0; --i) {
        std::swap(order[i], order[ckpt.rng.NextU64() % (i + 1)]);
      }
      const int mb_size = n / config.minibatches;
      for (int mb = 0; mb < config.minibatches; ++mb) {
        const int begin = mb * mb_size;
        const int count = mb + 1 == config.minibatches ? n - begin : mb_size;
        Eigen::MatrixXd obs(kObsDim, count);
        Eigen::MatrixXd act(kActDim, count);
        Eigen::VectorXd lp_old(count), adv(count), ret(count);
        for (int j = 0; j < count; ++j) {
          const int i = order[begin + j];
          obs.col(j) = buf.obs.col(i);
          act.col(j) = buf.actions.col(i);
          lp_old[j] = buf.log_prob_old[i];
          adv[j] = gae.advantages[i];
          ret[j] = gae.returns[i];
        }
        const Eigen::VectorXd norm_adv = NormalizeAdvantages(adv);
        const LossAndGrad pl = PpoLoss(ckpt.policy, obs, act, lp_old, norm_adv,
                                       config.clip_eps, config.entropy_coef);
        const LossAndGrad vl = ValueRegressionLoss(*ckpt.value, obs, ret);
        if (!std::isfinite(pl.value) || !std::isfinite(vl.value) ||
            !pl.grad.allFinite() || !vl.grad.allFinite()) {
          throw std::runtime_error(
              DescribeMinibatch(update, mb, lp_old, adv, ckpt.policy));
        }
        ckpt.policy_opt.Step(policy_params, pl.grad);
        ckpt.policy.Unflatten(policy_params);
        ckpt.value_opt->Step(value_params, vl.grad);
        ckpt.value->net.Unflatten(value_params);
      }
    }
    ++update;
    ckpt.step = env_steps;

    const bool last = env_steps + per_rollout > config.total_env_steps;
    if (env_steps >= next_eval || last) {
      while (next_eval <= env_steps) next_eval += config.eval_every;
      const double mean_return =
          finished ? return_sum / finished
                   : std::numeric_limits<double>::quiet_NaN();
      result.curve.push_back(
          CurvePoint(ckpt.policy, spec, config, env_steps, mean_return));
      if (result.curve.back().success_rate > best_success) {
        best_success = result.curve.back().success_rate;
        result.best_checkpoint = ckpt;
      }
    }
  }
  result.final_checkpoint = ckpt;
  return result;
}

void WriteCurveCsv(std::ostream& out, std::span<const CurveRow> rows,
                   const StageProfile& profile) {
  out << "env_steps,eval_success_rate,grasp_rate";
  for (StageId s : profile.stages) out << ",cond_" << StageName(s);
  out << ",mean_shaped_return\n";
  char buf[64];
  for (const CurveRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g",
                  static_cast<long long>(r.env_steps), r.success_rate,
                  r.grasp_rate);
    out << buf;
    for (const auto& c : r.conditional) {
      if (c) {
        std::snprintf(buf, sizeof(buf), ",%.17g", *c);
        out << buf;
      } else {
        out << ",";
      }
    }
    if (std::isnan(r.mean_shaped_return)) {
      out << ",\n";
    } else {
      std::snprintf(buf, sizeof(buf), ",%.17g\n", r.mean_shaped_return);
      out << buf;
    }
  }
}

std::set<StageId> ParseStageToggle(const std::string& text) {
  std::set<StageId> out;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto stage = ParseStageId(item);
    if (!stage || *stage == StageId::kDone) {
      throw std::invalid_argument("unknown stage in toggle: " + item);
    }
    out.insert(*stage);
  }
  return out;
}

}  // namespace stagerl
