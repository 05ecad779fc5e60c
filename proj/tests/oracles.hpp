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

// Reference computations for the tests. Each one takes a different route
// from the library code it checks.

#ifndef FREEFLOW_TESTS_ORACLES_HPP
#define FREEFLOW_TESTS_ORACLES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "freeflow/freeflow.hpp"

namespace oracle {

using namespace freeflow;

/// All-pairs shortest paths by Floyd-Warshall.
inline std::vector<std::vector<double>> floyd(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (int v = 0; v < n; ++v) d[v][v] = 0.0;
  for (const Edge& e : mesh.edges()) {
    d[e.tail][e.head] = std::min(d[e.tail][e.head], e.length);
    d[e.head][e.tail] = std::min(d[e.head][e.tail], e.length);
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  return d;
}

/// Gradient of the affine interpolant on an embedded face, in ambient
/// coordinates: solve <grad, p_k - p_0> = f_k - f_0 within the face plane.
inline Vec3 ambient_gradient(const TriMesh& mesh, FaceId t, const ScalarField& f) {
  const auto& p = *mesh.positions();
  const auto& tri = mesh.triangle(t);
  Eigen::Matrix<double, 3, 2> e;
  const Vec3 a = p[tri[1]] - p[tri[0]];
  const Vec3 b = p[tri[2]] - p[tri[0]];
  e << a.x, b.x, a.y, b.y, a.z, b.z;
  Eigen::Vector2d rhs(f[tri[1]] - f[tri[0]], f[tri[2]] - f[tri[0]]);
  // grad = E (E^T E)^{-1} rhs lies in the plane and matches both differences.
  const Eigen::Vector3d g = e * (e.transpose() * e).ldlt().solve(rhs);
  return {g[0], g[1], g[2]};
}

/// Rank of the face-edge boundary matrix by dense full-pivot LU.
inline int boundary_rank(const TriMesh& mesh) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(mesh.face_count(), mesh.edge_count());
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) {
      const VertexId a = tri[k], b = tri[(k + 1) % 3];
      const EdgeId e = *mesh.find_edge(a, b);
      d(t, e) = mesh.edge(e).tail == a ? 1.0 : -1.0;
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(d);
  return static_cast<int>(lu.rank());
}

/// Minimum-cost flow value by the dense LP over arc variables. Used as an
/// independent check of the network simplex.
inline double lp_min_cost_flow(int nodes, const std::vector<Arc>& arcs, const std::vector<double>& supply) {
  LinearProgram lp;
  lp.rows = nodes;
  lp.cols = static_cast<int>(arcs.size());
  lp.a.assign(static_cast<size_t>(lp.rows) * lp.cols, 0.0);
  lp.b = supply;
  for (int j = 0; j < lp.cols; ++j) {
    lp.at(arcs[j].source, j) += 1.0;
    lp.at(arcs[j].target, j) -= 1.0;
    lp.c.push_back(arcs[j].cost);
  }
  return solve_lp(lp).objective;
}

/// Random canonical molecule with up to `max_atoms` atoms and coefficients in
/// [-3, 3].
inline Molecule random_molecule(const TriMesh& mesh, std::mt19937_64& rng, int max_atoms) {
  std::uniform_int_distribution<int> count(1, max_atoms);
  std::uniform_int_distribution<int> vertex(0, mesh.vertex_count() - 1);
  std::uniform_real_distribution<double> coeff(-3.0, 3.0);
  Molecule mu;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) mu.atoms.push_back({vertex(rng), coeff(rng)});
  return canonicalize(mu, mesh.base_vertex());
}

inline ScalarField random_scalar(const TriMesh& mesh, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ScalarField f = ScalarField::zeros(mesh);
  for (double& x : f.values) x = u(rng);
  return f;
}

inline VectorField random_vector(const TriMesh& mesh, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField g = VectorField::zeros(mesh);
  for (double& x : g.data()) x = u(rng);
  if (mesh.dimension() == 1) {
    for (int c = 0; c < g.cell_count(); ++c) g.set(c, {g.get(c).x, 0.0});
  }
  return g;
}

inline TriMesh make(PrimitiveKind kind, std::optional<int> level = std::nullopt) {
  PrimitiveParams p;
  p.level = level;
  return generate_primitive(kind, p);
}

inline TriMesh disk(int n_radial = 4, int n_angular = 24) {
  PrimitiveParams p;
  p.r_inner = 0.0;
  p.n_radial = n_radial;
  p.n_angular = n_angular;
  return generate_primitive(PrimitiveKind::Annulus, p);
}

}  // namespace oracle

#endif  // FREEFLOW_TESTS_ORACLES_HPP
