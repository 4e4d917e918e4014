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

#ifndef STAGERL_RNG_H_
#define STAGERL_RNG_H_

#include <cstdint>
#include <random>
#include <string>

namespace stagerl {

// splitmix64 finalizer; used to derive independent stream seeds.
uint64_t MixSeed(uint64_t a, uint64_t b);

// Seeded generator with a serializable state. Distributions are written out
// explicitly so draws do not depend on the standard library's choices and
// carry no hidden cached values.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }
  // Uniform on [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal via Box-Muller (one value per call).
  double Normal();

  std::string Serialize() const;
  static Rng Deserialize(const std::string& text);

  bool operator==(const Rng& o) const { return engine_ == o.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stagerl

#endif  // STAGERL_RNG_H_
