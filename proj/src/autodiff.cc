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

#include "stagerl/autodiff.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stagerl/geometry.h"

namespace stagerl {

Var Tape::Push(Node node) {
  nodes_.push_back(node);
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Leaf(double value) { return Push({Op::kLeaf, value}); }
Var Tape::Constant(double value) { return Push({Op::kConst, value}); }

Var Tape::Add(Var a, Var b) {
  return Push({Op::kAdd, Value(a) + Value(b), a.id, b.id});
}
Var Tape::Sub(Var a, Var b) {
  return Push({Op::kSub, Value(a) - Value(b), a.id, b.id});
}
Var Tape::Mul(Var a, Var b) {
  return Push({Op::kMul, Value(a) * Value(b), a.id, b.id});
}
Var Tape::Div(Var a, Var b) {
  return Push({Op::kDiv, Value(a) / Value(b), a.id, b.id});
}
Var Tape::Neg(Var a) { return Push({Op::kNeg, -Value(a), a.id}); }
Var Tape::Scale(Var a, double s) {
  return Push({Op::kScale, s * Value(a), a.id, -1, s});
}
Var Tape::AddScalar(Var a, double s) {
  return Push({Op::kAddScalar, Value(a) + s, a.id});
}
Var Tape::Exp(Var a) { return Push({Op::kExp, std::exp(Value(a)), a.id}); }
Var Tape::Log(Var a) { return Push({Op::kLog, std::log(Value(a)), a.id}); }
Var Tape::Tanh(Var a) { return Push({Op::kTanh, std::tanh(Value(a)), a.id}); }
Var Tape::Sigmoid(Var a) {
  return Push({Op::kSigmoid, Logistic(Value(a)), a.id});
}
Var Tape::LogSigmoid(Var a) {
  const double x = Value(a);
  // log σ(x) = −log(1 + e^{−x}) = min(x, 0) − log1p(e^{−|x|}).
  const double v = std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
  return Push({Op::kLogSigmoid, v, a.id});
}
Var Tape::Square(Var a) {
  return Push({Op::kSquare, Value(a) * Value(a), a.id});
}
Var Tape::Clip(Var a, double lo, double hi) {
  return Push({Op::kClip, std::clamp(Value(a), lo, hi), a.id, -1, lo, hi});
}
Var Tape::Min(Var a, Var b) {
  const bool take_a = Value(a) <= Value(b);
  return Push({Op::kMin, take_a ? Value(a) : Value(b), a.id, b.id,
               take_a ? 0.0 : 1.0});
}
Var Tape::Sum(std::span<const Var> xs) {
  Node node{Op::kSum, 0.0};
  node.first = static_cast<int>(operands_.size());
  node.count = static_cast<int>(xs.size());
  for (const Var& x : xs) {
    node.value += Value(x);
    operands_.push_back(x.id);
  }
  return Push(node);
}
Var Tape::Mean(std::span<const Var> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty set");
  return Scale(Sum(xs), 1.0 / static_cast<double>(xs.size()));
}
Var Tape::Floor(Var a) {
  return Push({Op::kFloor, std::floor(Value(a)), a.id});
}

void Tape::Backward(Var output) {
  grads_.assign(nodes_.size(), 0.0);
  grads_.at(output.id) = 1.0;
  std::vector<char> reachable(nodes_.size(), 0);
  reachable[output.id] = 1;
  for (int i = output.id; i >= 0; --i) {
    if (!reachable[i]) continue;
    const double g = grads_[i];
    const Node& n = nodes_[i];
    if (n.a >= 0) reachable[n.a] = 1;
    if (n.b >= 0) reachable[n.b] = 1;
    for (int k = 0; k < n.count; ++k) reachable[operands_[n.first + k]] = 1;
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConst:
        break;
      case Op::kAdd:
        grads_[n.a] += g;
        grads_[n.b] += g;
        break;
      case Op::kSub:
        grads_[n.a] += g;
        grads_[n.b] -= g;
        break;
      case Op::kMul:
        grads_[n.a] += g * nodes_[n.b].value;
        grads_[n.b] += g * nodes_[n.a].value;
        break;
      case Op::kDiv: {
        const double bv = nodes_[n.b].value;
        grads_[n.a] += g / bv;
        grads_[n.b] -= g * nodes_[n.a].value / (bv * bv);
        break;
      }
      case Op::kNeg:
        grads_[n.a] -= g;
        break;
      case Op::kScale:
        grads_[n.a] += g * n.c;
        break;
      case Op::kAddScalar:
        grads_[n.a] += g;
        break;
      case Op::kExp:
        grads_[n.a] += g * n.value;
        break;
      case Op::kLog:
        grads_[n.a] += g / nodes_[n.a].value;
        break;
      case Op::kTanh:
        grads_[n.a] += g * (1.0 - n.value * n.value);
        break;
      case Op::kSigmoid:
        grads_[n.a] += g * n.value * (1.0 - n.value);
        break;
      case Op::kLogSigmoid:
        // d/dx log σ(x) = σ(−x).
        grads_[n.a] += g * Logistic(-nodes_[n.a].value);
        break;
      case Op::kSquare:
        grads_[n.a] += 2.0 * g * nodes_[n.a].value;
        break;
      case Op::kClip: {
        const double x = nodes_[n.a].value;
        if (x >= n.c && x <= n.d) grads_[n.a] += g;
        break;
      }
      case Op::kMin:
        grads_[n.c == 0.0 ? n.a : n.b] += g;
        break;
      case Op::kSum:
        for (int k = 0; k < n.count; ++k) grads_[operands_[n.first + k]] += g;
        break;
      case Op::kFloor:
        throw std::logic_error("backward: unsupported op (floor)");
    }
  }
}

double Tape::Grad(Var v) const {
  if (grads_.empty()) throw std::logic_error("Grad() before Backward()");
  return grads_.at(v.id);
}

}  // namespace stagerl
