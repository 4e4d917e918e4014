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

#include "stagerl/policy.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stagerl {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void PutPosition(const Vec3& p, const Box& ws, Eigen::VectorXd& out, int at) {
  const Vec3 c = ws.Center();
  const Vec3 h = (ws.max - ws.min) * 0.5;
  out[at + 0] = (p.x - c.x) / h.x;
  out[at + 1] = (p.y - c.y) / h.y;
  out[at + 2] = (p.z - c.z) / h.z;
}

}  // namespace

Eigen::VectorXd Observe(const SimState& s, const TaskSpec& spec) {
  Eigen::VectorXd o(kObsDim);
  PutPosition(s.ee_pos, spec.workspace, o, 0);
  o[3] = 2.0 * s.gripper - 1.0;
  PutPosition(s.obj_pos, spec.workspace, o, 4);
  const Vec3 c0 = s.obj_rot.Column(0);
  const Vec3 c1 = s.obj_rot.Column(1);
  o[7] = c0.x;
  o[8] = c0.y;
  o[9] = c0.z;
  o[10] = c1.x;
  o[11] = c1.y;
  o[12] = c1.z;
  PutPosition(s.goal_pos, spec.workspace, o, 13);
  o[16] = s.flags.grasped ? 1.0 : 0.0;
  o[17] = s.flags.lifted ? 1.0 : 0.0;
  o[18] = s.flags.contact ? 1.0 : 0.0;
  o[19] = static_cast<double>(s.t) / spec.horizon;
  return o;
}

Eigen::VectorXd EncodeAction(const SimAction& a, const TaskSpec& spec) {
  Eigen::VectorXd u(kActDim);
  u << a.d_pos.x / spec.max_step, a.d_pos.y / spec.max_step,
      a.d_pos.z / spec.max_step, a.d_rot.x / spec.max_turn,
      a.d_rot.y / spec.max_turn, a.d_rot.z / spec.max_turn,
      2.0 * a.gripper_cmd - 1.0;
  return u;
}

SimAction DecodeAction(const Eigen::Ref<const Eigen::VectorXd>& u,
                       const TaskSpec& spec) {
  if (u.size() != kActDim) throw std::invalid_argument("action size != 7");
  SimAction a;
  a.d_pos = Vec3{u[0], u[1], u[2]} * spec.max_step;
  a.d_rot = Vec3{u[3], u[4], u[5]} * spec.max_turn;
  a.gripper_cmd = std::clamp(0.5 * (u[6] + 1.0), 0.0, 1.0);
  return a;
}

GaussianPolicy GaussianPolicy::Create(Rng& rng, const std::vector<int>& hidden,
                                      int obs_dim, int act_dim) {
  std::vector<int> sizes = {obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(act_dim);
  GaussianPolicy p;
  p.trunk = Mlp::Create(sizes, rng, 0.01);
  p.log_std = Eigen::VectorXd::Zero(act_dim);
  return p;
}

Eigen::VectorXd GaussianPolicy::ClampedLogStd() const {
  return log_std.cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd);
}

Eigen::VectorXd GaussianPolicy::Mean(
    const Eigen::Ref<const Eigen::VectorXd>& obs) const {
  return trunk.Forward(Eigen::MatrixXd(obs)).col(0);
}

double GaussianPolicy::LogProb(
    const Eigen::Ref<const Eigen::VectorXd>& obs,
    const Eigen::Ref<const Eigen::VectorXd>& action) const {
  return LogProbForward(Eigen::MatrixXd(obs), Eigen::MatrixXd(action))
      .log_probs[0];
}

std::pair<Eigen::VectorXd, double> GaussianPolicy::Sample(
    const Eigen::Ref<const Eigen::VectorXd>& obs, Rng& rng) const {
  const Eigen::VectorXd mean = Mean(obs);
  const Eigen::VectorXd sigma = ClampedLogStd().array().exp();
  Eigen::VectorXd action(mean.size());
  for (int d = 0; d < mean.size(); ++d) {
    action[d] = mean[d] + sigma[d] * rng.Normal();
  }
  return {action, LogProb(obs, action)};
}

GaussianPolicy::LogProbPass GaussianPolicy::LogProbForward(
    const Eigen::MatrixXd& obs, const Eigen::MatrixXd& actions) const {
  if (actions.rows() != act_dim() || actions.cols() != obs.cols()) {
    throw std::invalid_argument("action batch shape mismatch");
  }
  LogProbPass pass;
  pass.mean = trunk.Forward(obs, &pass.cache);
  pass.actions = actions;
  const Eigen::VectorXd ls = ClampedLogStd();
  const Eigen::ArrayXd inv_var = (-2.0 * ls).array().exp();
  const double norm = ls.sum() + act_dim() * kHalfLog2Pi;
  pass.log_probs.resize(obs.cols());
  for (int i = 0; i < obs.cols(); ++i) {
    const Eigen::ArrayXd diff = (actions.col(i) - pass.mean.col(i)).array();
    pass.log_probs[i] = -0.5 * (diff.square() * inv_var).sum() - norm;
  }
  return pass;
}

void GaussianPolicy::LogProbBackward(const LogProbPass& pass,
                                     const Eigen::VectorXd& d_log_prob,
                                     Eigen::Ref<Eigen::VectorXd> grad) const {
  if (grad.size() != NumParams()) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
  const Eigen::VectorXd ls = ClampedLogStd();
  const Eigen::ArrayXd inv_var = (-2.0 * ls).array().exp();
  const int n = static_cast<int>(pass.log_probs.size());
  Eigen::MatrixXd d_mean(act_dim(), n);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(act_dim());
  for (int i = 0; i < n; ++i) {
    const Eigen::ArrayXd diff = (pass.actions.col(i) - pass.mean.col(i)).array();
    d_mean.col(i) = (d_log_prob[i] * diff * inv_var).matrix();
    d_log_std += (d_log_prob[i] * (diff.square() * inv_var - 1.0)).matrix();
  }
  trunk.Backward(pass.cache, d_mean, grad.head(trunk.NumParams()));
  for (int d = 0; d < act_dim(); ++d) {
    // The clamp is flat outside [kMinLogStd, kMaxLogStd].
    if (log_std[d] >= kMinLogStd && log_std[d] <= kMaxLogStd) {
      grad[trunk.NumParams() + d] += d_log_std[d];
    }
  }
}

Eigen::VectorXd GaussianPolicy::Flatten() const {
  Eigen::VectorXd out(NumParams());
  out << trunk.Flatten(), log_std;
  return out;
}

void GaussianPolicy::Unflatten(const Eigen::Ref<const Eigen::VectorXd>& params) {
  if (params.size() != NumParams()) {
    throw std::invalid_argument("parameter vector size mismatch");
  }
  trunk.Unflatten(params.head(trunk.NumParams()));
  log_std = params.tail(log_std.size());
}

ValueNet ValueNet::Create(Rng& rng, const std::vector<int>& hidden,
                          int obs_dim) {
  std::vector<int> sizes = {obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return {Mlp::Create(sizes, rng, 1.0)};
}

double ValueNet::Value(const Eigen::Ref<const Eigen::VectorXd>& obs) const {
  return net.Forward(Eigen::MatrixXd(obs))(0, 0);
}

Eigen::VectorXd ValueNet::Values(const Eigen::MatrixXd& obs) const {
  return net.Forward(obs).row(0).transpose();
}

LossAndGrad PolicyLoss(const GaussianPolicy& policy, const Eigen::MatrixXd& obs,
                       const Eigen::MatrixXd& actions, const LogProbHead& head) {
  const GaussianPolicy::LogProbPass pass = policy.LogProbForward(obs, actions);
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(pass.log_probs.size());
  for (int i = 0; i < pass.log_probs.size(); ++i) {
    leaves.push_back(tape.Leaf(pass.log_probs[i]));
  }
  const Var loss = head(tape, leaves);
  tape.Backward(loss);
  Eigen::VectorXd d_log_prob(leaves.size());
  for (size_t i = 0; i < leaves.size(); ++i) d_log_prob[i] = tape.Grad(leaves[i]);
  LossAndGrad out;
  out.value = loss.value();
  out.grad = Eigen::VectorXd::Zero(policy.NumParams());
  policy.LogProbBackward(pass, d_log_prob, out.grad);
  return out;
}

LossAndGrad ValueLoss(const ValueNet& value, const Eigen::MatrixXd& obs,
                      const ValueHead& head) {
  Mlp::Cache cache;
  const Eigen::MatrixXd v = value.net.Forward(obs, &cache);
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(v.cols());
  for (int i = 0; i < v.cols(); ++i) leaves.push_back(tape.Leaf(v(0, i)));
  const Var loss = head(tape, leaves);
  tape.Backward(loss);
  Eigen::MatrixXd d_v(1, v.cols());
  for (int i = 0; i < v.cols(); ++i) d_v(0, i) = tape.Grad(leaves[i]);
  LossAndGrad out;
  out.value = loss.value();
  out.grad = Eigen::VectorXd::Zero(value.net.NumParams());
  value.net.Backward(cache, d_v, out.grad);
  return out;
}

void TrajectoryMatrices(const Trajectory& traj, const TaskSpec& spec,
                        Eigen::MatrixXd* obs, Eigen::MatrixXd* actions) {
  obs->resize(kObsDim, traj.size());
  actions->resize(kActDim, traj.size());
  for (int t = 0; t < traj.size(); ++t) {
    obs->col(t) = Observe(traj.steps[t].state, spec);
    actions->col(t) = EncodeAction(traj.steps[t].action, spec);
  }
}

StatePolicy GreedyController(const GaussianPolicy& policy,
                             const TaskSpec& spec) {
  return [&policy, spec](const SimState& s) {
    return DecodeAction(policy.Mean(Observe(s, spec)), spec);
  };
}

}  // namespace stagerl
