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

#ifndef FREEFLOW_MESH_HPP
#define FREEFLOW_MESH_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freeflow/error.hpp"
#include "freeflow/geometry.hpp"

namespace freeflow {

using VertexId = int;
using EdgeId = int;
using FaceId = int;
using Triangle = std::array<VertexId, 3>;

/// An undirected edge length as supplied by the user; orientation is irrelevant.
struct EdgeSpec {
  VertexId a = 0;
  VertexId b = 0;
  double length = 0.0;
};

/// Raw mesh description, mirroring the mesh file schema.
struct MeshInput {
  int dimension = 2;
  std::vector<Triangle> triangles;
  std::vector<EdgeSpec> edges;
  VertexId base_vertex = 0;
};

/// Stored edge, always with tail < head. Circulations and flows on the edge
/// are measured from tail to head.
struct Edge {
  VertexId tail = 0;
  VertexId head = 0;
  double length = 0.0;
};

/// Per-face geometry derived from the three edge lengths.
///
/// The face is laid out in the plane with corner 0 at the origin and corner 1
/// on the positive x axis; corner 2 lands in the upper half plane. These are
/// exactly the coordinates of the Gram-Schmidt frame of the chart basis
/// (corner1 - corner0, corner2 - corner0), so every per-face vector quantity
/// in the library is expressed in an orthonormal, orientation-preserving frame.
struct FaceGeometry {
  // edges[k] joins corner k to corner (k+1)%3; signs[k] is +1 when the stored
  // edge runs in that direction.
  std::array<EdgeId, 3> edges{};
  std::array<int, 3> signs{};
  std::array<Vec2, 3> layout{};
  std::array<Vec2, 3> hat_gradients{};
  Mat2 metric{};
  double area = 0.0;
  bool degenerate = false;
};

class TriMesh;
TriMesh build_mesh(const MeshInput& input);

/// Intrinsic metric simplicial surface (dimension 2) or metric graph
/// (dimension 1). Immutable once built; obtain instances from build_mesh.
class TriMesh {
 public:
  /// A neighbour entry in the vertex adjacency list.
  struct Neighbor {
    VertexId vertex;
    EdgeId edge;
  };

  int dimension() const { return dimension_; }
  int vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int face_count() const { return static_cast<int>(triangles_.size()); }
  VertexId base_vertex() const { return base_vertex_; }

  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const Edge> edges() const { return edges_; }
  const Triangle& triangle(FaceId f) const { return triangles_.at(f); }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  const FaceGeometry& face(FaceId f) const { return faces_.at(f); }
  std::span<const Neighbor> neighbors(VertexId v) const { return adjacency_.at(v); }

  /// Faces incident to an edge (one for boundary edges, two for interior).
  std::span<const FaceId> edge_faces(EdgeId e) const { return edge_faces_.at(e); }
  std::span<const EdgeId> boundary_edges() const { return boundary_edges_; }
  const std::vector<bool>& boundary_vertices() const { return boundary_vertex_; }
  bool is_closed() const { return dimension_ == 2 && boundary_edges_.empty(); }

  /// Edge joining u and v, if any.
  std::optional<EdgeId> find_edge(VertexId u, VertexId v) const {
    if (u < 0 || u >= vertex_count_) return std::nullopt;
    for (const Neighbor& n : adjacency_[u]) {
      if (n.vertex == v) return n.edge;
    }
    return std::nullopt;
  }

  /// Number of cells carrying vector data: faces in dimension 2, edges in dimension 1.
  int cell_count() const { return dimension_ == 2 ? face_count() : edge_count(); }
  /// Volume of a cell (face area or edge length).
  double cell_measure(int cell) const {
    return dimension_ == 2 ? faces_.at(cell).area : edges_.at(cell).length;
  }
  double total_measure() const {
    double total = 0.0;
    for (int c = 0; c < cell_count(); ++c) total += cell_measure(c);
    return total;
  }

  int euler_characteristic() const { return vertex_count_ - edge_count() + face_count(); }

  /// Optional embedding coordinates recorded by the primitive generators. The
  /// metric never depends on them; they only locate points for experiments.
  const std::optional<std::vector<Vec3>>& positions() const { return positions_; }
  TriMesh with_positions(std::vector<Vec3> positions) const {
    if (static_cast<int>(positions.size()) != vertex_count_) {
      fail(ErrorKind::InvalidParams, "position count does not match vertex count");
    }
    TriMesh copy = *this;
    copy.positions_ = std::move(positions);
    return copy;
  }

  TriMesh with_base_vertex(VertexId v) const {
    if (v < 0 || v >= vertex_count_) fail(ErrorKind::InvalidParams, "base vertex out of range");
    TriMesh copy = *this;
    copy.base_vertex_ = v;
    return copy;
  }

  /// Reconstruct the raw description (oriented triangles, one entry per edge).
  MeshInput to_input() const {
    MeshInput in;
    in.dimension = dimension_;
    in.triangles = triangles_;
    in.base_vertex = base_vertex_;
    for (const Edge& e : edges_) in.edges.push_back({e.tail, e.head, e.length});
    return in;
  }

  /// Vertex nearest to a point of the embedding (requires positions).
  VertexId nearest_vertex(Vec3 p) const {
    if (!positions_) fail(ErrorKind::InvalidParams, "mesh has no embedding positions");
    VertexId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (VertexId v = 0; v < vertex_count_; ++v) {
      const double d = norm((*positions_)[v] - p);
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    return best;
  }

 private:
  friend TriMesh build_mesh(const MeshInput& input);

  int dimension_ = 2;
  int vertex_count_ = 0;
  VertexId base_vertex_ = 0;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<FaceGeometry> faces_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<std::vector<FaceId>> edge_faces_;
  std::vector<EdgeId> boundary_edges_;
  std::vector<bool> boundary_vertex_;
  std::optional<std::vector<Vec3>> positions_;
};

/// Faces whose metric condition number exceeds this are treated as degenerate.
inline constexpr double kMaxFaceCondition = 1e12;

namespace detail {

inline std::uint64_t edge_key(VertexId a, VertexId b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

inline FaceGeometry face_geometry(double a, double b, double c) {
  // a = |c0c1|, b = |c0c2|, c = |c1c2|
  FaceGeometry g;
  g.area = heron_area(a, b, c);
  const double off = 0.5 * (a * a + b * b - c * c);
  g.metric = Mat2{{Vec2{a * a, off}, Vec2{off, b * b}}};
  g.degenerate = !(spd_condition_number(g.metric) <= kMaxFaceCondition) || g.area <= 0.0;
  const double x = off / a;
  const double y = 2.0 * g.area / a;
  g.layout = {Vec2{0.0, 0.0}, Vec2{a, 0.0}, Vec2{x, y}};
  if (!g.degenerate) {
    const double twice_area = 2.0 * g.area;
    for (int k = 0; k < 3; ++k) {
      const Vec2 opposite = g.layout[(k + 2) % 3] - g.layout[(k + 1) % 3];
      g.hat_gradients[k] = perp(opposite) / twice_area;
    }
  }
  return g;
}

}  // namespace detail

/// Validate a raw description and derive all intrinsic quantities.
///
/// Triangles may be given in any orientation; a globally consistent
/// orientation is searched for, seeded by the first triangle of each
/// component as given.
inline TriMesh build_mesh(const MeshInput& input) {
  if (input.dimension != 1 && input.dimension != 2) {
    fail(ErrorKind::InvalidMesh, "dimension must be 1 or 2");
  }
  if (input.dimension == 1 && !input.triangles.empty()) {
    fail(ErrorKind::InvalidMesh, "a metric graph carries no triangles");
  }
  if (input.dimension == 2 && input.triangles.empty()) {
    fail(ErrorKind::InvalidMesh, "a surface needs at least one triangle");
  }

  TriMesh mesh;
  mesh.dimension_ = input.dimension;

  VertexId max_vertex = -1;
  auto check_vertex = [&](VertexId v) {
    if (v < 0) fail(ErrorKind::InvalidMesh, "negative vertex id");
    max_vertex = std::max(max_vertex, v);
  };
  for (const Triangle& t : input.triangles) {
    for (VertexId v : t) check_vertex(v);
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      fail(ErrorKind::InvalidMesh, "triangle with repeated vertex");
    }
  }
  for (const EdgeSpec& e : input.edges) {
    check_vertex(e.a);
    check_vertex(e.b);
  }
  mesh.vertex_count_ = max_vertex + 1;
  if (mesh.vertex_count_ == 0) fail(ErrorKind::InvalidMesh, "empty mesh");

  // Edge lengths, keyed by unordered pair.
  std::map<std::uint64_t, double> lengths;
  for (const EdgeSpec& e : input.edges) {
    if (e.a == e.b) fail(ErrorKind::InvalidMesh, "self-loop edge");
    if (!(e.length > 0.0) || !std::isfinite(e.length)) {
      fail(ErrorKind::InvalidMesh, "edge lengths must be positive and finite");
    }
    auto [it, inserted] = lengths.emplace(detail::edge_key(e.a, e.b), e.length);
    if (!inserted && it->second != e.length) {
      fail(ErrorKind::InvalidMesh, "conflicting lengths for edge " + std::to_string(e.a) + "-" +
                                       std::to_string(e.b));
    }
  }

  std::map<std::uint64_t, EdgeId> edge_index;
  auto add_edge = [&](VertexId a, VertexId b) -> EdgeId {
    const auto key = detail::edge_key(a, b);
    if (auto it = edge_index.find(key); it != edge_index.end()) return it->second;
    auto len = lengths.find(key);
    if (len == lengths.end()) {
      fail(ErrorKind::InvalidMesh,
           "missing length for edge " + std::to_string(a) + "-" + std::to_string(b));
    }
    const EdgeId id = static_cast<EdgeId>(mesh.edges_.size());
    mesh.edges_.push_back({std::min(a, b), std::max(a, b), len->second});
    edge_index.emplace(key, id);
    return id;
  };

  if (input.dimension == 1) {
    for (const EdgeSpec& e : input.edges) add_edge(e.a, e.b);
  } else {
    for (const Triangle& t : input.triangles) {
      for (int k = 0; k < 3; ++k) add_edge(t[k], t[(k + 1) % 3]);
    }
    if (edge_index.size() != lengths.size()) {
      fail(ErrorKind::InvalidMesh, "edge lengths given for edges that belong to no triangle");
    }
  }

  // Triangle inequality, before anything else uses the lengths.
  const int nf = static_cast<int>(input.triangles.size());
  for (FaceId f = 0; f < nf; ++f) {
    const Triangle& t = input.triangles[f];
    const double a = lengths[detail::edge_key(t[0], t[1])];
    const double b = lengths[detail::edge_key(t[0], t[2])];
    const double c = lengths[detail::edge_key(t[1], t[2])];
    if (!(a < b + c && b < a + c && c < a + b)) {
      fail(ErrorKind::TriangleInequalityViolated, "face " + std::to_string(f));
    }
  }

  // Edge-face incidence and manifoldness.
  mesh.edge_faces_.assign(mesh.edges_.size(), {});
  for (FaceId f = 0; f < nf; ++f) {
    const Triangle& t = input.triangles[f];
    for (int k = 0; k < 3; ++k) {
      const EdgeId e = edge_index.at(detail::edge_key(t[k], t[(k + 1) % 3]));
      mesh.edge_faces_[e].push_back(f);
      if (mesh.edge_faces_[e].size() > 2) {
        fail(ErrorKind::NonManifold, "edge shared by more than two faces");
      }
    }
  }

  // Orientation search: breadth-first over faces, flipping neighbours so each
  // interior edge is traversed once in each direction.
  mesh.triangles_ = input.triangles;
  if (nf > 0) {
    auto traverses = [](const Triangle& t, VertexId a, VertexId b) {
      for (int k = 0; k < 3; ++k) {
        if (t[k] == a && t[(k + 1) % 3] == b) return true;
      }
      return false;
    };
    std::vector<int> state(nf, 0);  // 0 = unvisited, 1 = visited
    for (FaceId seed = 0; seed < nf; ++seed) {
      if (state[seed]) continue;
      state[seed] = 1;
      std::queue<FaceId> queue;
      queue.push(seed);
      while (!queue.empty()) {
        const FaceId f = queue.front();
        queue.pop();
        const Triangle& t = mesh.triangles_[f];
        for (int k = 0; k < 3; ++k) {
          const VertexId a = t[k];
          const VertexId b = t[(k + 1) % 3];
          const EdgeId e = edge_index.at(detail::edge_key(a, b));
          for (FaceId g : mesh.edge_faces_[e]) {
            if (g == f) continue;
            Triangle& u = mesh.triangles_[g];
            const bool same_direction = traverses(u, a, b);
            if (!state[g]) {
              if (same_direction) std::swap(u[1], u[2]);
              state[g] = 1;
              queue.push(g);
            } else if (same_direction) {
              fail(ErrorKind::NonOrientable, "no consistent orientation exists");
            }
          }
        }
      }
    }
  }

  // Adjacency and connectivity of the edge graph.
  mesh.adjacency_.assign(mesh.vertex_count_, {});
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
    const Edge& ed = mesh.edges_[e];
    mesh.adjacency_[ed.tail].push_back({ed.head, e});
    mesh.adjacency_[ed.head].push_back({ed.tail, e});
  }
  {
    std::vector<bool> seen(mesh.vertex_count_, false);
    std::vector<VertexId> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
      const VertexId v = stack.back();
      stack.pop_back();
      for (const auto& n : mesh.adjacency_[v]) {
        if (!seen[n.vertex]) {
          seen[n.vertex] = true;
          ++count;
          stack.push_back(n.vertex);
        }
      }
    }
    if (count != mesh.vertex_count_) fail(ErrorKind::Disconnected, "edge graph is not connected");
  }

  if (input.base_vertex < 0 || input.base_vertex >= mesh.vertex_count_) {
    fail(ErrorKind::InvalidMesh, "base vertex out of range");
  }
  mesh.base_vertex_ = input.base_vertex;

  // Face geometry.
  mesh.faces_.resize(nf);
  for (FaceId f = 0; f < nf; ++f) {
    const Triangle& t = mesh.triangles_[f];
    std::array<EdgeId, 3> ids{};
    for (int k = 0; k < 3; ++k) ids[k] = edge_index.at(detail::edge_key(t[k], t[(k + 1) % 3]));
    const double a = mesh.edges_[ids[0]].length;  // c0c1
    const double c = mesh.edges_[ids[1]].length;  // c1c2
    const double b = mesh.edges_[ids[2]].length;  // c2c0
    FaceGeometry g = detail::face_geometry(a, b, c);
    g.edges = ids;
    for (int k = 0; k < 3; ++k) g.signs[k] = mesh.edges_[ids[k]].tail == t[k] ? 1 : -1;
    mesh.faces_[f] = g;
  }

  mesh.boundary_vertex_.assign(mesh.vertex_count_, false);
  if (mesh.dimension_ == 2) {
    for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
      if (mesh.edge_faces_[e].size() == 1) {
        mesh.boundary_edges_.push_back(e);
        mesh.boundary_vertex_[mesh.edges_[e].tail] = true;
        mesh.boundary_vertex_[mesh.edges_[e].head] = true;
      }
    }
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Geodesic distances
// ---------------------------------------------------------------------------

struct GeodesicTable {
  VertexId source = 0;
  std::vector<double> distance;
};

/// Shortest-path distances in the edge graph (Dijkstra; ties broken by vertex id).
inline GeodesicTable geodesic_distances(const TriMesh& mesh, VertexId source) {
  if (source < 0 || source >= mesh.vertex_count()) {
    fail(ErrorKind::InvalidParams, "source vertex out of range");
  }
  GeodesicTable table;
  table.source = source;
  table.distance.assign(mesh.vertex_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  table.distance[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > table.distance[v]) continue;
    for (const auto& n : mesh.neighbors(v)) {
      const double nd = d + mesh.edge(n.edge).length;
      if (nd < table.distance[n.vertex]) {
        table.distance[n.vertex] = nd;
        queue.push({nd, n.vertex});
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Frames and patchworks
// ---------------------------------------------------------------------------

/// Gram-Schmidt orthonormalisation of the chart basis under a metric.
///
/// Returns the frame as coefficient columns with respect to the chart basis,
/// so that frame^T * metric * frame is the identity. The result is upper
/// triangular with positive diagonal and hence orientation preserving.
inline Mat2 gram_schmidt(const Mat2& metric) {
  if (!(spd_condition_number(metric) <= kMaxFaceCondition)) {
    fail(ErrorKind::DegenerateFace, "metric is numerically singular");
  }
  const double g11 = metric(0, 0);
  const double g12 = metric(0, 1);
  const double g22 = metric(1, 1);
  const double n1 = std::sqrt(g11);
  const Vec2 first{1.0 / n1, 0.0};
  // e2 - <e2, x1> x1, expressed in chart coefficients
  const double proj = g12 / n1;
  const Vec2 residual{-proj / n1, 1.0};
  const double residual_sq = g22 - proj * proj;
  const double n2 = std::sqrt(residual_sq);
  return Mat2{{first, residual / n2}};
}

struct FaceFrame {
  FaceId face = 0;
  /// Chart metric in the basis (corner1 - corner0, corner2 - corner0).
  Mat2 metric{};
  /// Orthonormal frame as coefficients of the chart basis.
  Mat2 frame{};
  /// Chart basis vectors in frame coordinates.
  std::array<Vec2, 2> chart_basis{};
};

inline FaceFrame face_frame(const TriMesh& mesh, FaceId f) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "frames need a surface");
  const FaceGeometry& g = mesh.face(f);
  if (g.degenerate) fail(ErrorKind::DegenerateFace, "face " + std::to_string(f));
  FaceFrame fr;
  fr.face = f;
  fr.metric = g.metric;
  fr.frame = gram_schmidt(g.metric);
  fr.chart_basis = {g.layout[1] - g.layout[0], g.layout[2] - g.layout[0]};
  return fr;
}

inline double face_area(const TriMesh& mesh, FaceId f) { return mesh.face(f).area; }

struct Patch {
  std::vector<FaceId> faces;
  FaceFrame frame;
};

/// Disjoint chart domains covering the surface up to its edge skeleton.
struct Patchwork {
  std::vector<Patch> patches;
};

/// One patch per face, each carrying the face's Gram-Schmidt frame.
inline Patchwork build_patchwork(const TriMesh& mesh) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "patchworks need a surface");
  Patchwork pw;
  pw.patches.reserve(mesh.face_count());
  for (FaceId f = 0; f < mesh.face_count(); ++f) pw.patches.push_back({{f}, face_frame(mesh, f)});
  return pw;
}

/// Orthonormal frame of a face in the ambient embedding, matching the
/// intrinsic layout: first axis along corner1 - corner0, second axis a
/// quarter turn counter-clockwise about the oriented normal.
inline std::array<Vec3, 2> embedded_frame(const TriMesh& mesh, FaceId f) {
  if (!mesh.positions()) fail(ErrorKind::InvalidParams, "mesh has no embedding positions");
  const auto& p = *mesh.positions();
  const Triangle& t = mesh.triangle(f);
  const Vec3 e1 = p[t[1]] - p[t[0]];
  const Vec3 e2 = p[t[2]] - p[t[0]];
  const Vec3 x1 = normalized(e1);
  const Vec3 n = normalized(cross(e1, e2));
  return {x1, cross(n, x1)};
}

// ---------------------------------------------------------------------------
// Sub-meshes
// ---------------------------------------------------------------------------

struct SubMesh {
  TriMesh mesh;
  std::vector<VertexId> to_parent_vertex;
  std::vector<FaceId> to_parent_face;
  std::vector<VertexId> from_parent_vertex;  // -1 when absent
};

/// Restrict a surface to a set of faces, renumbering vertices compactly.
inline SubMesh submesh(const TriMesh& mesh, std::span<const FaceId> faces) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "submesh needs a surface");
  SubMesh sub;
  sub.from_parent_vertex.assign(mesh.vertex_count(), -1);
  MeshInput in;
  in.dimension = 2;
  std::vector<bool> edge_used(mesh.edge_count(), false);
  for (FaceId f : faces) {
    const Triangle& t = mesh.triangle(f);
    Triangle local{};
    for (int k = 0; k < 3; ++k) {
      VertexId& id = sub.from_parent_vertex[t[k]];
      if (id < 0) {
        id = static_cast<VertexId>(sub.to_parent_vertex.size());
        sub.to_parent_vertex.push_back(t[k]);
      }
      local[k] = id;
    }
    in.triangles.push_back(local);
    sub.to_parent_face.push_back(f);
    for (EdgeId e : mesh.face(f).edges) edge_used[e] = true;
  }
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
    if (!edge_used[e]) continue;
    const Edge& ed = mesh.edge(e);
    in.edges.push_back(
        {sub.from_parent_vertex[ed.tail], sub.from_parent_vertex[ed.head], ed.length});
  }
  const VertexId parent_base = sub.from_parent_vertex[mesh.base_vertex()];
  in.base_vertex = parent_base >= 0 ? parent_base : 0;
  sub.mesh = build_mesh(in);
  if (mesh.positions()) {
    std::vector<Vec3> pos;
    for (VertexId v : sub.to_parent_vertex) pos.push_back((*mesh.positions())[v]);
    sub.mesh = sub.mesh.with_positions(std::move(pos));
  }
  return sub;
}

}  // namespace freeflow

#endif  // FREEFLOW_MESH_HPP
