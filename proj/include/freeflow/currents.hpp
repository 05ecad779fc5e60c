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

#ifndef FREEFLOW_CURRENTS_HPP
#define FREEFLOW_CURRENTS_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "freeflow/calculus.hpp"
#include "freeflow/error.hpp"
#include "freeflow/mesh.hpp"

namespace freeflow {

/// Discrete 1-current: the circulation along each stored edge, tail to head.
struct EdgeForm {
  std::vector<double> values;

  static EdgeForm zeros(const TriMesh& mesh) {
    return {std::vector<double>(mesh.edge_count(), 0.0)};
  }
  double operator[](EdgeId e) const { return values[e]; }
  double& operator[](EdgeId e) { return values[e]; }

  /// Circulation from u to v; negated when traversed against the stored edge.
  double circulation(const TriMesh& mesh, VertexId u, VertexId v) const {
    const auto e = mesh.find_edge(u, v);
    if (!e) fail(ErrorKind::InvalidParams, "vertices are not adjacent");
    return mesh.edge(*e).tail == u ? values[*e] : -values[*e];
  }
};

namespace detail {
inline void require_form(const TriMesh& mesh, const EdgeForm& w) {
  if (static_cast<int>(w.values.size()) != mesh.edge_count()) {
    fail(ErrorKind::InvalidParams, "edge form size does not match edge count");
  }
  for (double x : w.values) {
    if (!std::isfinite(x)) fail(ErrorKind::InvalidParams, "edge form has non-finite values");
  }
}
}  // namespace detail

/// Potential differences along edges.
inline EdgeForm d0(const TriMesh& mesh, const ScalarField& f) {
  detail::require_scalar(mesh, f);
  EdgeForm w = EdgeForm::zeros(mesh);
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) w[e] = f[mesh.edge(e).head] - f[mesh.edge(e).tail];
  return w;
}

/// Oriented sum of circulations around each face boundary.
inline std::vector<double> d1(const TriMesh& mesh, const EdgeForm& w) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "d1 needs a surface");
  detail::require_form(mesh, w);
  std::vector<double> out(mesh.face_count(), 0.0);
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& geo = mesh.face(t);
    for (int k = 0; k < 3; ++k) out[t] += geo.signs[k] * w[geo.edges[k]];
  }
  return out;
}

/// Rooted spanning tree of the edge graph: parent edge per vertex (-1 at the
/// root) and a root-first vertex order.
struct SpanningTree {
  VertexId root = 0;
  std::vector<EdgeId> parent_edge;
  std::vector<VertexId> order;
};

inline SpanningTree bfs_spanning_tree(const TriMesh& mesh, VertexId root) {
  SpanningTree tree;
  tree.root = root;
  tree.parent_edge.assign(mesh.vertex_count(), -1);
  std::vector<bool> seen(mesh.vertex_count(), false);
  std::queue<VertexId> queue;
  queue.push(root);
  seen[root] = true;
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop();
    tree.order.push_back(v);
    for (const auto& n : mesh.neighbors(v)) {
      if (!seen[n.vertex]) {
        seen[n.vertex] = true;
        tree.parent_edge[n.vertex] = n.edge;
        queue.push(n.vertex);
      }
    }
  }
  return tree;
}

/// Spanning tree from randomized Kruskal over a shuffled edge order.
inline SpanningTree random_spanning_tree(const TriMesh& mesh, VertexId root, std::uint64_t seed) {
  std::vector<EdgeId> order(mesh.edge_count());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> uf(mesh.vertex_count());
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::vector<std::vector<TriMesh::Neighbor>> adj(mesh.vertex_count());
  for (EdgeId e : order) {
    const Edge& ed = mesh.edge(e);
    const int a = find(ed.tail), b = find(ed.head);
    if (a == b) continue;
    uf[a] = b;
    adj[ed.tail].push_back({ed.head, e});
    adj[ed.head].push_back({ed.tail, e});
  }
  SpanningTree tree;
  tree.root = root;
  tree.parent_edge.assign(mesh.vertex_count(), -1);
  std::vector<bool> seen(mesh.vertex_count(), false);
  std::vector<VertexId> stack{root};
  seen[root] = true;
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    tree.order.push_back(v);
    for (const auto& n : adj[v]) {
      if (!seen[n.vertex]) {
        seen[n.vertex] = true;
        tree.parent_edge[n.vertex] = n.edge;
        stack.push_back(n.vertex);
      }
    }
  }
  return tree;
}

struct PotentialSolution {
  ScalarField potential;
  /// Largest mismatch |g(head) - g(tail) - w_e| over the edges off the tree.
  double exactness_residual = 0.0;
};

/// Integrate w along a spanning tree from its root, where the potential is 0.
inline PotentialSolution solve_potential(const TriMesh& mesh, const EdgeForm& w,
                                         const SpanningTree& tree) {
  detail::require_form(mesh, w);
  PotentialSolution sol{ScalarField::zeros(mesh), 0.0};
  auto& g = sol.potential;
  for (VertexId v : tree.order) {
    const EdgeId e = tree.parent_edge[v];
    if (e < 0) continue;
    const Edge& ed = mesh.edge(e);
    g[v] = ed.head == v ? g[ed.tail] + w[e] : g[ed.head] - w[e];
  }
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
    const Edge& ed = mesh.edge(e);
    sol.exactness_residual =
        std::max(sol.exactness_residual, std::fabs(g[ed.head] - g[ed.tail] - w[e]));
  }
  return sol;
}

inline PotentialSolution solve_potential(const TriMesh& mesh, const EdgeForm& w) {
  return solve_potential(mesh, w, bfs_spanning_tree(mesh, mesh.base_vertex()));
}

enum class CurrentKind { Exact, ClosedNotExact, NotClosed };

inline std::string_view to_string(CurrentKind kind) {
  switch (kind) {
    case CurrentKind::Exact: return "exact";
    case CurrentKind::ClosedNotExact: return "closed_not_exact";
    case CurrentKind::NotClosed: return "not_closed";
  }
  return "unknown";
}

struct CurrentClass {
  CurrentKind kind = CurrentKind::Exact;
  double closedness_residual = 0.0;
  double exactness_residual = 0.0;
  std::optional<ScalarField> witness_potential;
};

inline constexpr double kDefaultCurrentTolerance = 1e-8;

/// Sort a 1-current into exact / closed-but-not-exact / not closed.
inline CurrentClass classify(const TriMesh& mesh, const EdgeForm& w,
                             double tol = kDefaultCurrentTolerance) {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidParams, "tolerance must be positive");
  CurrentClass out;
  if (mesh.dimension() == 2) {
    for (double c : d1(mesh, w)) out.closedness_residual = std::max(out.closedness_residual, std::fabs(c));
  } else {
    detail::require_form(mesh, w);
  }
  PotentialSolution sol = solve_potential(mesh, w);
  out.exactness_residual = sol.exactness_residual;
  if (out.closedness_residual > tol) {
    out.kind = CurrentKind::NotClosed;
  } else if (out.exactness_residual <= tol) {
    out.kind = CurrentKind::Exact;
    out.witness_potential = std::move(sol.potential);
  } else {
    out.kind = CurrentKind::ClosedNotExact;
  }
  return out;
}

inline constexpr double kRankPivotThreshold = 1e-9;
inline constexpr double kRankZeroThreshold = 1e-11;

/// First Betti number (E - V + 1) - rank(face boundary matrix), with the rank
/// from floating-point elimination. Pivots in [1e-11, 1e-9) are ambiguous and
/// raise RankUnstable.
inline int betti1(const TriMesh& mesh) {
  const int cycle_rank = mesh.edge_count() - mesh.vertex_count() + 1;
  if (mesh.dimension() == 1) return cycle_rank;
  using Row = std::vector<std::pair<int, double>>;  // sorted by column
  std::unordered_map<int, Row> pivots;
  int rank = 0;
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& geo = mesh.face(t);
    Row row;
    for (int k = 0; k < 3; ++k) row.emplace_back(geo.edges[k], static_cast<double>(geo.signs[k]));
    std::sort(row.begin(), row.end());
    while (true) {
      row.erase(std::remove_if(row.begin(), row.end(),
                               [](const auto& p) { return std::fabs(p.second) < kRankZeroThreshold; }),
                row.end());
      if (row.empty()) break;
      const auto [col, lead] = row.front();
      if (std::fabs(lead) < kRankPivotThreshold) {
        fail(ErrorKind::RankUnstable, "pivot magnitude " + std::to_string(std::fabs(lead)));
      }
      auto it = pivots.find(col);
      if (it == pivots.end()) {
        pivots.emplace(col, std::move(row));
        ++rank;
        break;
      }
      const Row& p = it->second;
      const double factor = lead / p.front().second;
      Row merged;
      merged.reserve(row.size() + p.size());
      size_t i = 0, j = 0;
      while (i < row.size() || j < p.size()) {
        if (j == p.size() || (i < row.size() && row[i].first < p[j].first)) {
          merged.push_back(row[i++]);
        } else if (i == row.size() || p[j].first < row[i].first) {
          merged.emplace_back(p[j].first, -factor * p[j].second);
          ++j;
        } else {
          const double v = row[i].second - factor * p[j].second;
          if (row[i].first != col) merged.emplace_back(row[i].first, v);
          ++i;
          ++j;
        }
      }
      row = std::move(merged);
    }
  }
  return cycle_rank - rank;
}

/// Least-squares projection onto closed forms: w - d1^T (d1 d1^T)^+ d1 w.
inline EdgeForm project_closed(const TriMesh& mesh, const EdgeForm& w) {
  const std::vector<double> curl = d1(mesh, w);
  // On a closed oriented surface the face rows sum to zero; dropping one keeps
  // the same kernel and makes d1 d1^T invertible.
  const int rows = mesh.is_closed() ? mesh.face_count() - 1 : mesh.face_count();
  std::vector<Eigen::Triplet<double>> trips;
  for (FaceId t = 0; t < rows; ++t) {
    const auto& geo = mesh.face(t);
    for (int k = 0; k < 3; ++k) trips.emplace_back(t, geo.edges[k], geo.signs[k]);
  }
  Eigen::SparseMatrix<double> d(rows, mesh.edge_count());
  d.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseMatrix<double> ddt = d * d.transpose();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(ddt);
  if (solver.info() != Eigen::Success) fail(ErrorKind::SolverFailure, "d1 d1^T factorization");
  Eigen::VectorXd rhs(rows);
  for (int t = 0; t < rows; ++t) rhs[t] = curl[t];
  const Eigen::VectorXd y = solver.solve(rhs);
  const Eigen::VectorXd correction = d.transpose() * y;
  EdgeForm out = w;
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) out[e] -= correction[e];
  return out;
}

/// Winding form around a centre point: each edge carries the change of the
/// polar angle divided by 2 pi. Closed away from the centre; its integral
/// around a loop enclosing the centre once is 1.
inline EdgeForm angular_form(const TriMesh& mesh, Vec3 center = {}) {
  if (!mesh.positions()) fail(ErrorKind::InvalidParams, "angular form needs positions");
  const auto& p = *mesh.positions();
  EdgeForm w = EdgeForm::zeros(mesh);
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
    const Vec3 a = p[mesh.edge(e).tail] - center;
    const Vec3 b = p[mesh.edge(e).head] - center;
    double delta = std::atan2(b.y, b.x) - std::atan2(a.y, a.x);
    if (delta > std::numbers::pi) delta -= 2.0 * std::numbers::pi;
    if (delta <= -std::numbers::pi) delta += 2.0 * std::numbers::pi;
    w[e] = delta / (2.0 * std::numbers::pi);
  }
  return w;
}

struct OneFormConversion {
  OneForm form;
  /// Largest per-face least-squares residual; zero exactly when w is closed.
  double max_residual = 0.0;
};

/// Per-face least-squares covector reproducing the three edge circulations.
/// Lossless on closed forms.
inline OneFormConversion one_form_from_edge_form(const TriMesh& mesh, const EdgeForm& w) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "conversion needs a surface");
  detail::require_form(mesh, w);
  detail::require_nondegenerate(mesh);
  OneFormConversion out{OneForm::zeros(mesh), 0.0};
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& geo = mesh.face(t);
    // Normal equations for c minimising sum_k (<c, edge_k> - circ_k)^2.
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    std::array<Vec2, 3> vecs{};
    std::array<double, 3> circ{};
    for (int k = 0; k < 3; ++k) {
      vecs[k] = geo.layout[(k + 1) % 3] - geo.layout[k];
      circ[k] = geo.signs[k] * w[geo.edges[k]];
      a11 += vecs[k].x * vecs[k].x;
      a12 += vecs[k].x * vecs[k].y;
      a22 += vecs[k].y * vecs[k].y;
      b1 += vecs[k].x * circ[k];
      b2 += vecs[k].y * circ[k];
    }
    const double det = a11 * a22 - a12 * a12;
    const Vec2 c{(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
    out.form.set(t, c);
    for (int k = 0; k < 3; ++k) {
      out.max_residual = std::max(out.max_residual, std::fabs(dot(c, vecs[k]) - circ[k]));
    }
  }
  return out;
}

/// Edge circulations of a per-face covector field, averaged over the faces
/// sharing each edge (lossy when neighbouring faces disagree).
inline EdgeForm edge_form_from_one_form(const TriMesh& mesh, const OneForm& f) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "conversion needs a surface");
  detail::require_cells(mesh, f);
  EdgeForm w = EdgeForm::zeros(mesh);
  std::vector<int> count(mesh.edge_count(), 0);
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& geo = mesh.face(t);
    for (int k = 0; k < 3; ++k) {
      const Vec2 v = geo.layout[(k + 1) % 3] - geo.layout[k];
      w[geo.edges[k]] += geo.signs[k] * dot(f.get(t), v);
      ++count[geo.edges[k]];
    }
  }
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) w[e] /= count[e];
  return w;
}

}  // namespace freeflow

#endif  // FREEFLOW_CURRENTS_HPP
