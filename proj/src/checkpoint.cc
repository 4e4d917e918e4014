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

#include "stagerl/checkpoint.h"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace stagerl {
namespace {

using nlohmann::json;

constexpr char kFormat[] = "stagerl-checkpoint";
constexpr int kVersion = 1;

json VectorToJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd VectorFromJson(const json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(xs.data(), xs.size());
}

json MlpToJson(const Mlp& m) {
  return {{"sizes", m.sizes}, {"params", VectorToJson(m.Flatten())}};
}

Mlp MlpFromJson(const json& j) {
  Mlp m = Mlp::Zeros(j.at("sizes").get<std::vector<int>>());
  m.Unflatten(VectorFromJson(j.at("params")));
  return m;
}

json AdamToJson(const Adam& a) {
  return {{"lr", a.lr},       {"beta1", a.beta1},
          {"beta2", a.beta2}, {"eps", a.eps},
          {"weight_decay", a.weight_decay},
          {"t", a.t},         {"m", VectorToJson(a.m)},
          {"v", VectorToJson(a.v)}};
}

Adam AdamFromJson(const json& j) {
  Adam a;
  a.lr = j.at("lr").get<double>();
  a.beta1 = j.at("beta1").get<double>();
  a.beta2 = j.at("beta2").get<double>();
  a.eps = j.at("eps").get<double>();
  a.weight_decay = j.at("weight_decay").get<double>();
  a.t = j.at("t").get<int64_t>();
  a.m = VectorFromJson(j.at("m"));
  a.v = VectorFromJson(j.at("v"));
  return a;
}

}  // namespace

bool Checkpoint::operator==(const Checkpoint& o) const {
  return phase == o.phase && step == o.step && policy == o.policy &&
         policy_opt == o.policy_opt && value == o.value &&
         value_opt == o.value_opt && rng == o.rng;
}

std::string SerializeCheckpoint(const Checkpoint& c) {
  json j{{"format", kFormat},
         {"version", kVersion},
         {"phase", c.phase},
         {"step", c.step},
         {"policy",
          {{"trunk", MlpToJson(c.policy.trunk)},
           {"log_std", VectorToJson(c.policy.log_std)}}},
         {"policy_opt", AdamToJson(c.policy_opt)},
         {"rng", c.rng.Serialize()}};
  if (c.value) j["value"] = MlpToJson(c.value->net);
  if (c.value_opt) j["value_opt"] = AdamToJson(*c.value_opt);
  return j.dump(1) + "\n";
}

Checkpoint DeserializeCheckpoint(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != kFormat) throw std::runtime_error("not a checkpoint");
    if (j.at("version") != kVersion) {
      throw std::runtime_error("unsupported checkpoint version");
    }
    Checkpoint c;
    c.phase = j.at("phase").get<std::string>();
    c.step = j.at("step").get<int64_t>();
    c.policy.trunk = MlpFromJson(j.at("policy").at("trunk"));
    c.policy.log_std = VectorFromJson(j.at("policy").at("log_std"));
    if (c.policy.log_std.size() != c.policy.trunk.output_dim()) {
      throw std::runtime_error("log_std size does not match the trunk");
    }
    c.policy_opt = AdamFromJson(j.at("policy_opt"));
    c.rng = Rng::Deserialize(j.at("rng").get<std::string>());
    if (j.contains("value")) c.value = ValueNet{MlpFromJson(j.at("value"))};
    if (j.contains("value_opt")) c.value_opt = AdamFromJson(j.at("value_opt"));
    return c;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("bad checkpoint: ") + e.what());
  }
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << SerializeCheckpoint(ckpt);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeCheckpoint(ss.str());
}

}  // namespace stagerl
