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

#ifndef FREEFLOW_PRIMITIVES_HPP
#define FREEFLOW_PRIMITIVES_HPP

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freeflow/error.hpp"
#include "freeflow/mesh.hpp"

namespace freeflow {

enum class PrimitiveKind {
  FlatRect,
  Icosphere,
  Annulus,
  Torus,
  PoincareDiskPatch,
  CircleGraph,
  IntervalGraph,
};

inline std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::FlatRect: return "flat_rect";
    case PrimitiveKind::Icosphere: return "icosphere";
    case PrimitiveKind::Annulus: return "annulus";
    case PrimitiveKind::Torus: return "torus";
    case PrimitiveKind::PoincareDiskPatch: return "poincare_disk_patch";
    case PrimitiveKind::CircleGraph: return "circle_graph";
    case PrimitiveKind::IntervalGraph: return "interval_graph";
  }
  return "unknown";
}

inline PrimitiveKind primitive_kind_from_string(std::string_view name) {
  for (auto k : {PrimitiveKind::FlatRect, PrimitiveKind::Icosphere, PrimitiveKind::Annulus,
                 PrimitiveKind::Torus, PrimitiveKind::PoincareDiskPatch,
                 PrimitiveKind::CircleGraph, PrimitiveKind::IntervalGraph}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::InvalidParams, "unknown primitive kind '" + std::string(name) + "'");
}

/// Parameters for generate_primitive. Unset fields take per-kind defaults;
/// `level` is a convenience that sets the resolution fields:
///   flat_rect           nx = 2^level * width, ny = 2^level * height (rounded)
///   icosphere           subdivision depth
///   annulus             n_radial = 2^(level+1), n_angular = 12 * 2^level
///   torus               nx = ny = 4 * 2^level
///   poincare_disk_patch n_radial = 2^(level+1), n_angular = 12 * 2^level
struct PrimitiveParams {
  std::optional<int> level;
  std::optional<int> nx, ny;
  std::optional<double> width, height;
  std::optional<double> radius;
  std::optional<double> r_inner, r_outer;
  std::optional<int> n_radial, n_angular;
  std::optional<double> major_radius, minor_radius;
  std::optional<int> n;
  std::optional<double> length;
  bool alternate_diagonals = false;
  std::optional<VertexId> base_vertex;
};

namespace detail {

using LengthFn = std::function<double(const Vec3&, const Vec3&)>;

inline double euclidean_length(const Vec3& a, const Vec3& b) { return norm(a - b); }

inline TriMesh surface_from_positions(std::vector<Triangle> triangles, std::vector<Vec3> positions,
                                      const LengthFn& length, VertexId base) {
  MeshInput in;
  in.dimension = 2;
  in.base_vertex = base;
  std::map<std::uint64_t, bool> seen;
  for (const Triangle& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      const VertexId a = t[k], b = t[(k + 1) % 3];
      if (seen.emplace(edge_key(a, b), true).second) {
        in.edges.push_back({a, b, length(positions[a], positions[b])});
      }
    }
  }
  in.triangles = std::move(triangles);
  return build_mesh(in).with_positions(std::move(positions));
}

inline int require_at_least(std::optional<int> v, int fallback, int minimum, const char* what) {
  const int value = v.value_or(fallback);
  if (value < minimum) {
    fail(ErrorKind::InvalidParams, std::string(what) + " must be at least " +
                                       std::to_string(minimum));
  }
  return value;
}

inline double require_positive(std::optional<double> v, double fallback, const char* what) {
  const double value = v.value_or(fallback);
  if (!(value > 0.0) || !std::isfinite(value)) {
    fail(ErrorKind::InvalidParams, std::string(what) + " must be positive");
  }
  return value;
}

inline int level_of(const PrimitiveParams& p) {
  const int level = p.level.value_or(0);
  if (level < 0 || level > 12) fail(ErrorKind::InvalidParams, "level must be in [0, 12]");
  return level;
}

inline TriMesh flat_rect(const PrimitiveParams& p) {
  const double w = require_positive(p.width, 1.0, "width");
  const double h = require_positive(p.height, 1.0, "height");
  int nx = 2, ny = 2;
  if (p.level) {
    const int per_unit = 1 << level_of(p);
    nx = std::max(1, static_cast<int>(std::lround(per_unit * w)));
    ny = std::max(1, static_cast<int>(std::lround(per_unit * h)));
  }
  nx = require_at_least(p.nx, nx, 1, "nx");
  ny = require_at_least(p.ny, ny, 1, "ny");
  std::vector<Vec3> pos;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) pos.push_back({w * i / nx, h * j / ny, 0.0});
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const VertexId v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      if (p.alternate_diagonals && (i + j) % 2 == 1) {
        tris.push_back({v00, v10, v01});
        tris.push_back({v10, v11, v01});
      } else {
        tris.push_back({v00, v10, v11});
        tris.push_back({v00, v11, v01});
      }
    }
  }
  return surface_from_positions(std::move(tris), std::move(pos), euclidean_length,
                                p.base_vertex.value_or(0));
}

inline TriMesh icosphere(const PrimitiveParams& p) {
  const int level = level_of(p);
  const double radius = require_positive(p.radius, 1.0, "radius");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> pos = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                           {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                           {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& v : pos) v = radius * normalized(v);
  std::vector<Triangle> tris = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::uint64_t, VertexId> midpoint;
    auto mid = [&](VertexId a, VertexId b) {
      auto key = edge_key(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      pos.push_back(radius * normalized(0.5 * (pos[a] + pos[b])));
      const VertexId id = static_cast<VertexId>(pos.size() - 1);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    next.reserve(tris.size() * 4);
    for (const Triangle& t : tris) {
      const VertexId a = mid(t[0], t[1]), b = mid(t[1], t[2]), c = mid(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    tris = std::move(next);
  }
  return surface_from_positions(std::move(tris), std::move(pos), euclidean_length,
                                p.base_vertex.value_or(0));
}

/// Concentric-ring triangulation of a planar annulus, or a disk when r_inner
/// is zero. Vertex 0 is on the inner ring at angle 0 (the centre for a disk).
inline TriMesh polar_mesh(double r_inner, double r_outer, int n_radial, int n_angular,
                          const LengthFn& length, VertexId base) {
  std::vector<Vec3> pos;
  const bool disk = r_inner == 0.0;
  auto ring_radius = [&](int k) { return r_inner + (r_outer - r_inner) * k / n_radial; };
  if (disk) pos.push_back({0.0, 0.0, 0.0});
  for (int k = disk ? 1 : 0; k <= n_radial; ++k) {
    const double r = ring_radius(k);
    for (int m = 0; m < n_angular; ++m) {
      const double theta = 2.0 * std::numbers::pi * m / n_angular;
      pos.push_back({r * std::cos(theta), r * std::sin(theta), 0.0});
    }
  }
  auto id = [&](int k, int m) -> VertexId {
    m %= n_angular;
    if (disk) return k == 0 ? 0 : 1 + (k - 1) * n_angular + m;
    return k * n_angular + m;
  };
  std::vector<Triangle> tris;
  for (int k = 0; k < n_radial; ++k) {
    for (int m = 0; m < n_angular; ++m) {
      if (disk && k == 0) {
        tris.push_back({0, id(1, m), id(1, m + 1)});
        continue;
      }
      const VertexId a = id(k, m), b = id(k + 1, m), c = id(k + 1, m + 1), d = id(k, m + 1);
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  }
  return surface_from_positions(std::move(tris), std::move(pos), length, base);
}

inline TriMesh annulus(const PrimitiveParams& p) {
  const double r_in = p.r_inner.value_or(0.5);
  const double r_out = require_positive(p.r_outer, 1.0, "r_outer");
  if (!(r_in >= 0.0) || !(r_in < r_out)) {
    fail(ErrorKind::InvalidParams, "need 0 <= r_inner < r_outer");
  }
  const int level = level_of(p);
  const int n_radial = require_at_least(p.n_radial, p.level ? 2 << level : 4, 1, "n_radial");
  const int n_angular =
      require_at_least(p.n_angular, p.level ? 12 << level : 24, 3, "n_angular");
  return polar_mesh(r_in, r_out, n_radial, n_angular, euclidean_length,
                    p.base_vertex.value_or(0));
}

inline TriMesh torus(const PrimitiveParams& p) {
  const int level = level_of(p);
  const int nx = require_at_least(p.nx, p.level ? 4 << level : 8, 3, "nx");
  const int ny = require_at_least(p.ny, p.level ? 4 << level : 8, 3, "ny");
  const bool embedded = p.major_radius.has_value() || p.minor_radius.has_value();
  auto id = [&](int i, int j) { return ((j + ny) % ny) * nx + ((i + nx) % nx); };
  std::vector<Triangle> tris;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  std::vector<Vec3> pos;
  const VertexId base = p.base_vertex.value_or(0);
  if (embedded) {
    const double big = require_positive(p.major_radius, 2.0, "major_radius");
    const double small = require_positive(p.minor_radius, 0.5, "minor_radius");
    if (!(small < big)) fail(ErrorKind::InvalidParams, "need minor_radius < major_radius");
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double u = 2.0 * std::numbers::pi * i / nx;
        const double v = 2.0 * std::numbers::pi * j / ny;
        pos.push_back({(big + small * std::cos(v)) * std::cos(u),
                       (big + small * std::cos(v)) * std::sin(u), small * std::sin(v)});
      }
    }
    return surface_from_positions(std::move(tris), std::move(pos), euclidean_length, base);
  }
  // Flat torus: lengths come from the periodic grid, positions are the
  // unwrapped grid coordinates of the fundamental domain.
  const double w = require_positive(p.width, 1.0, "width");
  const double h = require_positive(p.height, 1.0, "height");
  const double dx = w / nx, dy = h / ny;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) pos.push_back({i * dx, j * dy, 0.0});
  }
  auto periodic = [w, h](const Vec3& a, const Vec3& b) {
    double x = std::fabs(a.x - b.x), y = std::fabs(a.y - b.y);
    x = std::min(x, w - x);
    y = std::min(y, h - y);
    return std::hypot(x, y);
  };
  return surface_from_positions(std::move(tris), std::move(pos), periodic, base);
}

/// Disk of Euclidean chart radius `radius` < 1 in the Poincare model, with
/// hyperbolic edge lengths. Positions are the chart coordinates.
inline TriMesh poincare_disk_patch(const PrimitiveParams& p) {
  const double radius = require_positive(p.radius, 0.8, "radius");
  if (!(radius < 1.0)) fail(ErrorKind::InvalidParams, "chart radius must be below 1");
  const int level = level_of(p);
  const int n_radial = require_at_least(p.n_radial, p.level ? 2 << level : 6, 1, "n_radial");
  const int n_angular =
      require_at_least(p.n_angular, p.level ? 12 << level : 24, 3, "n_angular");
  auto hyperbolic = [](const Vec3& a, const Vec3& b) {
    const double diff = dot(a - b, a - b);
    return std::acosh(1.0 + 2.0 * diff / ((1.0 - dot(a, a)) * (1.0 - dot(b, b))));
  };
  return polar_mesh(0.0, radius, n_radial, n_angular, hyperbolic, p.base_vertex.value_or(0));
}

inline TriMesh graph_from_polyline(int n_edges, double edge_length, bool closed, VertexId base,
                                   std::vector<Vec3> pos) {
  MeshInput in;
  in.dimension = 1;
  in.base_vertex = base;
  const int nv = closed ? n_edges : n_edges + 1;
  for (int i = 0; i < n_edges; ++i) in.edges.push_back({i, (i + 1) % nv, edge_length});
  return build_mesh(in).with_positions(std::move(pos));
}

inline TriMesh circle_graph(const PrimitiveParams& p) {
  const int n = require_at_least(p.n, 4, 3, "n");
  const double total = require_positive(p.length, 2.0 * std::numbers::pi, "length");
  const double radius = total / (2.0 * std::numbers::pi);
  std::vector<Vec3> pos;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * i / n;
    pos.push_back({radius * std::cos(t), radius * std::sin(t), 0.0});
  }
  return graph_from_polyline(n, total / n, true, p.base_vertex.value_or(0), std::move(pos));
}

inline TriMesh interval_graph(const PrimitiveParams& p) {
  const int n = require_at_least(p.n, 2, 1, "n");
  const double total = require_positive(p.length, static_cast<double>(n), "length");
  std::vector<Vec3> pos;
  for (int i = 0; i <= n; ++i) pos.push_back({total * i / n, 0.0, 0.0});
  return graph_from_polyline(n, total / n, false, p.base_vertex.value_or(0), std::move(pos));
}

}  // namespace detail

/// Build one of the bundled test manifolds. Edge lengths are intrinsic:
/// Euclidean for planar pieces, chordal for the icosphere and the embedded
/// torus (a metric approximation of the smooth surface), hyperbolic for the
/// Poincare disk patch, periodic-grid lengths for the flat torus.
inline TriMesh generate_primitive(PrimitiveKind kind, const PrimitiveParams& params = {}) {
  switch (kind) {
    case PrimitiveKind::FlatRect: return detail::flat_rect(params);
    case PrimitiveKind::Icosphere: return detail::icosphere(params);
    case PrimitiveKind::Annulus: return detail::annulus(params);
    case PrimitiveKind::Torus: return detail::torus(params);
    case PrimitiveKind::PoincareDiskPatch: return detail::poincare_disk_patch(params);
    case PrimitiveKind::CircleGraph: return detail::circle_graph(params);
    case PrimitiveKind::IntervalGraph: return detail::interval_graph(params);
  }
  fail(ErrorKind::InvalidParams, "unknown primitive kind");
}

}  // namespace freeflow

#endif  // FREEFLOW_PRIMITIVES_HPP
