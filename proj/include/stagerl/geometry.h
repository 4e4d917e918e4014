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

#ifndef STAGERL_GEOMETRY_H_
#define STAGERL_GEOMETRY_H_

#include <array>
#include <cmath>

namespace stagerl {

// Cartesian vector in meters (or an axis-angle vector in radians).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Vec3&) const = default;

  double Dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 Cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double Norm() const { return std::sqrt(Dot(*this)); }
  bool IsFinite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double Distance(const Vec3& a, const Vec3& b) { return (a - b).Norm(); }

// 3x3 rotation matrix, row-major.
class Rotation {
 public:
  Rotation() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
  explicit Rotation(const std::array<double, 9>& row_major) : m_(row_major) {}

  static Rotation Identity() { return Rotation(); }

  double operator()(int r, int c) const { return m_[3 * r + c]; }
  const std::array<double, 9>& RowMajor() const { return m_; }

  Rotation Transpose() const;
  Rotation operator*(const Rotation& o) const;
  Vec3 operator*(const Vec3& v) const;
  Vec3 Column(int c) const { return {m_[c], m_[3 + c], m_[6 + c]}; }
  double Trace() const { return m_[0] + m_[4] + m_[8]; }
  bool operator==(const Rotation&) const = default;

 private:
  std::array<double, 9> m_;
};

// True when RᵀR = I and det R = 1 within `tol` per entry.
bool IsRotation(const Rotation& r, double tol = 1e-9);

// Angle of the relative rotation aᵀb, arccos((tr(aᵀb) - 1) / 2) in [0, π].
double GeodesicDistance(const Rotation& a, const Rotation& b);

// 1 / (1 + e^-z), evaluated without overflow for large |z|.
double Logistic(double z);

// Rodrigues construction. Throws std::invalid_argument unless |axis| = 1
// within 1e-9.
Rotation AxisAngleToRotation(const Vec3& axis, double angle);

// Exponential map of a rotation vector (axis * angle); zero maps to identity.
Rotation RotationFromVector(const Vec3& rotation_vector);

// Logarithm map; returns axis * angle with angle in [0, π].
Vec3 RotationToVector(const Rotation& r);

}  // namespace stagerl

#endif  // STAGERL_GEOMETRY_H_
