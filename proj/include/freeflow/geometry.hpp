// Copyright 2026 The freeflow Authors
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

#ifndef FREEFLOW_GEOMETRY_HPP
#define FREEFLOW_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <cmath>

namespace freeflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
/// Counter-clockwise quarter turn.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(Vec3, Vec3) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }

/// 2x2 matrix stored by columns: cols[j] is the j-th column.
struct Mat2 {
  std::array<Vec2, 2> cols{};

  static Mat2 identity() { return {{Vec2{1.0, 0.0}, Vec2{0.0, 1.0}}}; }
  double operator()(int row, int col) const { return row == 0 ? cols[col].x : cols[col].y; }
  Vec2 operator*(Vec2 v) const { return v.x * cols[0] + v.y * cols[1]; }
  Mat2 transposed() const {
    return {{Vec2{cols[0].x, cols[1].x}, Vec2{cols[0].y, cols[1].y}}};
  }
  friend Mat2 operator*(const Mat2& a, const Mat2& b) { return {{a * b.cols[0], a * b.cols[1]}}; }
  double determinant() const { return cross(cols[0], cols[1]); }
};

/// Eigenvalue ratio of a symmetric 2x2 matrix; infinite when singular or indefinite.
inline double spd_condition_number(const Mat2& m) {
  const double a = m(0, 0);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double d = m(1, 1);
  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), b);
  const double lo = mean - radius;
  const double hi = mean + radius;
  if (!(lo > 0.0)) return INFINITY;
  return hi / lo;
}

/// Triangle area from side lengths (Kahan's ordering of Heron's formula).
inline double heron_area(double a, double b, double c) {
  std::array<double, 3> s{a, b, c};
  std::sort(s.begin(), s.end(), std::greater<>());
  const double x = s[0], y = s[1], z = s[2];
  const double p = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
  return p > 0.0 ? 0.25 * std::sqrt(p) : 0.0;
}

}  // namespace freeflow

#endif  // FREEFLOW_GEOMETRY_HPP
