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

#ifndef STAGERL_AUTODIFF_H_
#define STAGERL_AUTODIFF_H_

#include <span>
#include <vector>

namespace stagerl {

class Tape;

// Handle to a scalar node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  double value() const;
};

// Scalar reverse-mode differentiation for loss heads. Every op records its
// value eagerly; Backward() sweeps the tape once in reverse.
class Tape {
 public:
  Var Leaf(double value);
  Var Constant(double value);

  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Div(Var a, Var b);
  Var Neg(Var a);
  Var Scale(Var a, double s);
  Var AddScalar(Var a, double s);
  Var Exp(Var a);
  Var Log(Var a);
  Var Tanh(Var a);
  Var Sigmoid(Var a);
  Var LogSigmoid(Var a);  // log σ(a), stable for large |a|
  Var Square(Var a);
  // Gradient 1 on [lo, hi], 0 outside.
  Var Clip(Var a, double lo, double hi);
  // Gradient flows to the selected branch; ties select `a`.
  Var Min(Var a, Var b);
  Var Sum(std::span<const Var> xs);
  Var Mean(std::span<const Var> xs);
  // Recorded for completeness; it has no usable derivative and Backward()
  // throws std::logic_error if it is reachable from the output.
  Var Floor(Var a);

  // Adjoints d output / d node for every node; throws on unsupported ops.
  void Backward(Var output);
  double Grad(Var v) const;
  double Value(Var v) const { return nodes_.at(v.id).value; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kLeaf, kConst, kAdd, kSub, kMul, kDiv, kNeg, kScale, kAddScalar, kExp,
    kLog, kTanh, kSigmoid, kLogSigmoid, kSquare, kClip, kMin, kSum, kFloor,
  };
  struct Node {
    Op op;
    double value;
    int a = -1;
    int b = -1;
    double c = 0.0;  // op constant (scale, or the selected branch for Min)
    double d = 0.0;
    int first = 0;   // kSum operand range in operands_
    int count = 0;
  };

  Var Push(Node node);

  std::vector<Node> nodes_;
  std::vector<int> operands_;
  std::vector<double> grads_;
};

inline double Var::value() const { return tape->Value(*this); }

inline Var operator+(Var a, Var b) { return a.tape->Add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->Sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->Mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->Div(a, b); }
inline Var operator-(Var a) { return a.tape->Neg(a); }
inline Var operator*(double s, Var a) { return a.tape->Scale(a, s); }
inline Var operator*(Var a, double s) { return a.tape->Scale(a, s); }
inline Var operator+(Var a, double s) { return a.tape->AddScalar(a, s); }
inline Var operator-(Var a, double s) { return a.tape->AddScalar(a, -s); }

}  // namespace stagerl

#endif  // STAGERL_AUTODIFF_H_
