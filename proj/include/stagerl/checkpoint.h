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

#ifndef STAGERL_CHECKPOINT_H_
#define STAGERL_CHECKPOINT_H_

#include <cstdint>
#include <optional>
#include <string>

#include "stagerl/adam.h"
#include "stagerl/policy.h"
#include "stagerl/rng.h"

namespace stagerl {

// Everything needed to resume a training phase bit-identically.
struct Checkpoint {
  std::string phase;  // producer, e.g. "sft"
  int64_t step = 0;
  GaussianPolicy policy;
  Adam policy_opt;
  std::optional<ValueNet> value;
  std::optional<Adam> value_opt;
  Rng rng;

  bool operator==(const Checkpoint& o) const;
};

// JSON text with a format tag and version; doubles round-trip exactly.
std::string SerializeCheckpoint(const Checkpoint& ckpt);
// Throws std::runtime_error on malformed or mismatched input.
Checkpoint DeserializeCheckpoint(const std::string& text);

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace stagerl

#endif  // STAGERL_CHECKPOINT_H_
