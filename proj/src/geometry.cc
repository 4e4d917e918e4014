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

#include "stagerl/geometry.h"

#include <algorithm>
#include <numbers>
#include <stdexcept>

namespace stagerl {

Rotation Rotation::Transpose() const {
  const auto& m = m_;
  return Rotation({m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]});
}

Rotation Rotation::operator*(const Rotation& o) const {
  std::array<double, 9> out{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      out[3 * r + c] = m_[3 * r] * o.m_[c] + m_[3 * r + 1] * o.m_[3 + c] +
                       m_[3 * r + 2] * o.m_[6 + c];
    }
  }
  return Rotation(out);
}

Vec3 Rotation::operator*(const Vec3& v) const {
  return {m_[0] * v.x + m_[1] * v.y + m_[2] * v.z,
          m_[3] * v.x + m_[4] * v.y + m_[5] * v.z,
          m_[6] * v.x + m_[7] * v.y + m_[8] * v.z};
}

bool IsRotation(const Rotation& r, double tol) {
  for (double v : r.RowMajor()) {
    if (!std::isfinite(v)) return false;
  }
  Rotation rtr = r.Transpose() * r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > tol) return false;
    }
  }
  double det = r.Column(0).Dot(r.Column(1).Cross(r.Column(2)));
  return std::abs(det - 1.0) <= tol;
}

double GeodesicDistance(const Rotation& a, const Rotation& b) {
  // tr(aᵀb) is the Frobenius inner product of a and b.
  double trace = 0.0;
  for (int i = 0; i < 9; ++i) trace += a.RowMajor()[i] * b.RowMajor()[i];
  double c = std::clamp((trace - 1.0) / 2.0, -1.0, 1.0);
  return std::clamp(std::acos(c), 0.0, std::numbers::pi);
}

double Logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

Rotation AxisAngleToRotation(const Vec3& axis, double angle) {
  if (!axis.IsFinite() || std::abs(axis.Norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("rotation axis must be a unit vector");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  const double x = axis.x, y = axis.y, z = axis.z;
  return Rotation({t * x * x + c, t * x * y - s * z, t * x * z + s * y,
                   t * x * y + s * z, t * y * y + c, t * y * z - s * x,
                   t * x * z - s * y, t * y * z + s * x, t * z * z + c});
}

Rotation RotationFromVector(const Vec3& rotation_vector) {
  const double angle = rotation_vector.Norm();
  if (angle < 1e-15) return Rotation::Identity();
  Vec3 axis = rotation_vector * (1.0 / angle);
  // Renormalize so the unit-axis precondition survives rounding.
  axis = axis * (1.0 / axis.Norm());
  return AxisAngleToRotation(axis, angle);
}

Vec3 RotationToVector(const Rotation& r) {
  const double angle = GeodesicDistance(Rotation::Identity(), r);
  if (angle < 1e-12) return {};
  Vec3 skew{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  const double s = std::sin(angle);
  if (s > 1e-6) return skew * (angle / (2.0 * s));
  // Near π the skew part vanishes; recover the axis from the symmetric part
  // R = 2uuᵀ - I using the largest diagonal entry.
  int k = 0;
  for (int i = 1; i < 3; ++i) {
    if (r(i, i) > r(k, k)) k = i;
  }
  std::array<double, 3> u{};
  u[k] = std::sqrt(std::max(0.0, (r(k, k) + 1.0) / 2.0));
  for (int i = 0; i < 3; ++i) {
    if (i != k) u[i] = (r(i, k) + r(k, i)) / (4.0 * u[k]);
  }
  Vec3 axis{u[0], u[1], u[2]};
  axis = axis * (1.0 / axis.Norm());
  // Pick the sign consistent with the (small) skew part when available.
  if (axis.Dot(skew) < 0.0) axis = -axis;
  return axis * angle;
}

}  // namespace stagerl
