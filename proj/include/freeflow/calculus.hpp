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

#ifndef FREEFLOW_CALCULUS_HPP
#define FREEFLOW_CALCULUS_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "freeflow/error.hpp"
#include "freeflow/mesh.hpp"

namespace freeflow {

/// Piecewise-affine function: one value per vertex.
struct ScalarField {
  std::vector<double> values;

  static ScalarField zeros(const TriMesh& mesh) {
    return {std::vector<double>(mesh.vertex_count(), 0.0)};
  }
  double operator[](VertexId v) const { return values[v]; }
  double& operator[](VertexId v) { return values[v]; }
  int size() const { return static_cast<int>(values.size()); }
};

/// Distributional 0-current: coefficient of each vertex's hat test function.
struct ScalarDistribution {
  std::vector<double> values;

  double operator[](VertexId v) const { return values[v]; }
  double max_abs() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::fabs(x));
    return m;
  }
};

/// Piecewise-constant per-cell data. On surfaces each cell is a face and the
/// value is a 2-vector in that face's orthonormal frame; on metric graphs each
/// cell is an edge and the value is a single component along tail -> head.
template <typename Tag>
class CellField {
 public:
  CellField() = default;
  CellField(int stride, int cells) : stride_(stride), data_(static_cast<size_t>(stride) * cells) {}

  static CellField zeros(const TriMesh& mesh) {
    return CellField(mesh.dimension(), mesh.cell_count());
  }

  int stride() const { return stride_; }
  int cell_count() const { return stride_ == 0 ? 0 : static_cast<int>(data_.size()) / stride_; }

  Vec2 get(int cell) const {
    if (stride_ == 1) return {data_[cell], 0.0};
    return {data_[2 * cell], data_[2 * cell + 1]};
  }
  void set(int cell, Vec2 v) {
    if (stride_ == 1) {
      data_[cell] = v.x;
    } else {
      data_[2 * cell] = v.x;
      data_[2 * cell + 1] = v.y;
    }
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool compatible(const TriMesh& mesh) const {
    return stride_ == mesh.dimension() && cell_count() == mesh.cell_count();
  }

 private:
  int stride_ = 2;
  std::vector<double> data_;
};

struct VectorFieldTag {};
struct OneFormTag {};

/// Integrable tangent field (per-cell frame coordinates).
using VectorField = CellField<VectorFieldTag>;
/// Essentially bounded covector field (per-cell frame coordinates).
using OneForm = CellField<OneFormTag>;

// In orthonormal frame coordinates the metric is the identity, so raising and
// lowering indices only changes the type.
inline VectorField sharp(const OneForm& f) {
  VectorField g(f.stride(), f.cell_count());
  std::copy(f.data().begin(), f.data().end(), g.data().begin());
  return g;
}
inline OneForm flat(const VectorField& g) {
  OneForm f(g.stride(), g.cell_count());
  std::copy(g.data().begin(), g.data().end(), f.data().begin());
  return f;
}

template <typename Tag>
CellField<Tag> linear_combination(double a, const CellField<Tag>& x, double b,
                                  const CellField<Tag>& y) {
  CellField<Tag> out(x.stride(), x.cell_count());
  for (size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a * x.data()[i] + b * y.data()[i];
  return out;
}

inline ScalarField linear_combination(double a, const ScalarField& x, double b,
                                      const ScalarField& y) {
  ScalarField out{std::vector<double>(x.values.size())};
  for (size_t i = 0; i < x.values.size(); ++i) out.values[i] = a * x.values[i] + b * y.values[i];
  return out;
}

namespace detail {

inline void require_scalar(const TriMesh& mesh, const ScalarField& f) {
  if (f.size() != mesh.vertex_count()) {
    fail(ErrorKind::InvalidParams, "scalar field size does not match vertex count");
  }
  for (double x : f.values) {
    if (!std::isfinite(x)) fail(ErrorKind::InvalidParams, "scalar field has non-finite values");
  }
}

template <typename Tag>
void require_cells(const TriMesh& mesh, const CellField<Tag>& g) {
  if (!g.compatible(mesh)) fail(ErrorKind::InvalidParams, "cell field does not match mesh");
  for (double x : g.data()) {
    if (!std::isfinite(x)) fail(ErrorKind::InvalidParams, "cell field has non-finite values");
  }
}

inline void require_nondegenerate(const TriMesh& mesh) {
  if (mesh.dimension() != 2) return;
  for (FaceId f = 0; f < mesh.face_count(); ++f) {
    if (mesh.face(f).degenerate) fail(ErrorKind::DegenerateFace, "face " + std::to_string(f));
  }
}

}  // namespace detail

/// Differential of the piecewise-affine interpolant, one covector per cell.
inline OneForm gradient(const TriMesh& mesh, const ScalarField& f) {
  detail::require_scalar(mesh, f);
  detail::require_nondegenerate(mesh);
  OneForm df = OneForm::zeros(mesh);
  if (mesh.dimension() == 1) {
    for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
      const Edge& ed = mesh.edge(e);
      df.set(e, {(f[ed.head] - f[ed.tail]) / ed.length, 0.0});
    }
    return df;
  }
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto& geo = mesh.face(t);
    Vec2 g{};
    for (int k = 0; k < 3; ++k) g = g + f[tri[k]] * geo.hat_gradients[k];
    df.set(t, g);
  }
  return df;
}

/// Divergence tested against hat functions:
///   div(g)(v) = -sum_cells measure * <grad hat_v, g>.
/// Positive values mark net outflow.
inline ScalarDistribution divergence(const TriMesh& mesh, const VectorField& g) {
  detail::require_cells(mesh, g);
  ScalarDistribution div{std::vector<double>(mesh.vertex_count(), 0.0)};
  if (mesh.dimension() == 1) {
    for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
      const Edge& ed = mesh.edge(e);
      const double flux = g.get(e).x;
      div.values[ed.tail] += flux;
      div.values[ed.head] -= flux;
    }
    return div;
  }
  detail::require_nondegenerate(mesh);
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    const auto& geo = mesh.face(t);
    const Vec2 gt = g.get(t);
    for (int k = 0; k < 3; ++k) div.values[tri[k]] -= geo.area * dot(geo.hat_gradients[k], gt);
  }
  return div;
}

/// Integral of <f, g> over the mesh.
inline double pairing(const TriMesh& mesh, const OneForm& f, const VectorField& g) {
  detail::require_cells(mesh, f);
  detail::require_cells(mesh, g);
  double sum = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) sum += mesh.cell_measure(c) * dot(f.get(c), g.get(c));
  return sum;
}

/// Evaluation of a distribution on a piecewise-affine function.
inline double evaluate(const ScalarDistribution& mu, const ScalarField& f) {
  double sum = 0.0;
  for (size_t v = 0; v < mu.values.size(); ++v) sum += mu.values[v] * f.values[v];
  return sum;
}

template <typename Tag>
double l1_norm(const TriMesh& mesh, const CellField<Tag>& g) {
  detail::require_cells(mesh, g);
  double sum = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) sum += mesh.cell_measure(c) * norm(g.get(c));
  return sum;
}

template <typename Tag>
double linf_norm(const TriMesh& mesh, const CellField<Tag>& f) {
  detail::require_cells(mesh, f);
  double m = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) m = std::max(m, norm(f.get(c)));
  return m;
}

enum class LipMode { Edgewise, PairwiseGeodesic };

/// Lipschitz constant of a vertex function with respect to the graph metric.
inline double lip_constant(const TriMesh& mesh, const ScalarField& f, LipMode mode) {
  detail::require_scalar(mesh, f);
  double lip = 0.0;
  if (mode == LipMode::Edgewise) {
    for (const Edge& e : mesh.edges()) lip = std::max(lip, std::fabs(f[e.head] - f[e.tail]) / e.length);
    return lip;
  }
  for (VertexId s = 0; s < mesh.vertex_count(); ++s) {
    const GeodesicTable table = geodesic_distances(mesh, s);
    for (VertexId v = s + 1; v < mesh.vertex_count(); ++v) {
      lip = std::max(lip, std::fabs(f[v] - f[s]) / table.distance[v]);
    }
  }
  return lip;
}

/// Largest ratio |grad f| / Lip(f) a single face admits, maximised over faces.
///
/// On a face the gradient is a linear function of the edge increments, which
/// a 1-Lipschitz function constrains to a polygon; the maximum of the norm is
/// attained at one of its corners.
inline double p1_comparability_constant(const TriMesh& mesh) {
  if (mesh.dimension() == 1) return 1.0;
  double worst = 0.0;
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& geo = mesh.face(t);
    if (geo.degenerate) fail(ErrorKind::DegenerateFace, "face " + std::to_string(t));
    const double a = norm(geo.layout[1] - geo.layout[0]);
    const double b = norm(geo.layout[2] - geo.layout[0]);
    const double c = norm(geo.layout[2] - geo.layout[1]);
    // increments x = f1 - f0, y = f2 - f0 with |x| <= a, |y| <= b, |y - x| <= c
    struct Line {
      double p, q, r;  // p x + q y = r
    };
    const Line lines[6] = {{1, 0, a}, {1, 0, -a}, {0, 1, b}, {0, 1, -b}, {-1, 1, c}, {-1, 1, -c}};
    auto feasible = [&](double x, double y) {
      const double eps = 1e-12 * (a + b + c);
      return std::fabs(x) <= a + eps && std::fabs(y) <= b + eps && std::fabs(y - x) <= c + eps;
    };
    for (int i = 0; i < 6; ++i) {
      for (int j = i + 1; j < 6; ++j) {
        const double det = lines[i].p * lines[j].q - lines[i].q * lines[j].p;
        if (std::fabs(det) < 1e-15) continue;
        const double x = (lines[i].r * lines[j].q - lines[i].q * lines[j].r) / det;
        const double y = (lines[i].p * lines[j].r - lines[i].r * lines[j].p) / det;
        if (!feasible(x, y)) continue;
        const Vec2 g = x * geo.hat_gradients[1] + y * geo.hat_gradients[2];
        worst = std::max(worst, norm(g));
      }
    }
  }
  return worst;
}

/// Quarter turn of every face vector (Hodge star on 1-forms in frame
/// coordinates). Rotated gradients of functions that are constant on each
/// boundary component are divergence-free at every vertex.
inline VectorField rotate(const TriMesh& mesh, const VectorField& g) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "rotation needs a surface");
  detail::require_cells(mesh, g);
  VectorField out = VectorField::zeros(mesh);
  for (FaceId t = 0; t < mesh.face_count(); ++t) out.set(t, perp(g.get(t)));
  return out;
}

/// Mean of a vertex function over each cell's corners.
inline std::vector<double> cell_average(const TriMesh& mesh, const ScalarField& f) {
  detail::require_scalar(mesh, f);
  std::vector<double> avg(mesh.cell_count());
  if (mesh.dimension() == 1) {
    for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
      avg[e] = 0.5 * (f[mesh.edge(e).tail] + f[mesh.edge(e).head]);
    }
    return avg;
  }
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    avg[t] = (f[tri[0]] + f[tri[1]] + f[tri[2]]) / 3.0;
  }
  return avg;
}

/// Multiply each cell's vector by a per-cell scalar.
inline VectorField scale_cells(const VectorField& g, std::span<const double> factors) {
  VectorField out = g;
  for (int c = 0; c < g.cell_count(); ++c) out.set(c, factors[c] * g.get(c));
  return out;
}

/// Express an ambient vector field, sampled at face centroids, in face frames.
inline VectorField vector_field_from_ambient(const TriMesh& mesh,
                                             const std::function<Vec3(const Vec3&)>& field) {
  if (mesh.dimension() != 2 || !mesh.positions()) {
    fail(ErrorKind::InvalidParams, "ambient fields need an embedded surface");
  }
  const auto& p = *mesh.positions();
  VectorField g = VectorField::zeros(mesh);
  for (FaceId t = 0; t < mesh.face_count(); ++t) {
    const auto& tri = mesh.triangle(t);
    const Vec3 centroid = (1.0 / 3.0) * (p[tri[0]] + p[tri[1]] + p[tri[2]]);
    const auto frame = embedded_frame(mesh, t);
    const Vec3 v = field(centroid);
    g.set(t, {dot(v, frame[0]), dot(v, frame[1])});
  }
  return g;
}

/// P1 stiffness matrix K with (K u)(v) = sum_cells measure <grad hat_v, grad u>,
/// so that divergence(gradient(u)) = -K u.
inline Eigen::SparseMatrix<double> stiffness_matrix(const TriMesh& mesh) {
  detail::require_nondegenerate(mesh);
  std::vector<Eigen::Triplet<double>> trips;
  if (mesh.dimension() == 1) {
    for (const Edge& e : mesh.edges()) {
      const double w = 1.0 / e.length;
      trips.emplace_back(e.tail, e.tail, w);
      trips.emplace_back(e.head, e.head, w);
      trips.emplace_back(e.tail, e.head, -w);
      trips.emplace_back(e.head, e.tail, -w);
    }
  } else {
    for (FaceId t = 0; t < mesh.face_count(); ++t) {
      const auto& tri = mesh.triangle(t);
      const auto& geo = mesh.face(t);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          trips.emplace_back(tri[i], tri[j],
                             geo.area * dot(geo.hat_gradients[i], geo.hat_gradients[j]));
        }
      }
    }
  }
  Eigen::SparseMatrix<double> k(mesh.vertex_count(), mesh.vertex_count());
  k.setFromTriplets(trips.begin(), trips.end());
  return k;
}

/// Remove the divergence of g at the selected vertices by adding the gradient
/// of a function supported there (an L2 least-squares correction). When every
/// vertex is selected, one vertex is pinned; the total divergence always
/// vanishes, so the pinned equation holds automatically.
inline VectorField project_divergence_free(const TriMesh& mesh, const VectorField& g,
                                           const std::vector<bool>& constrained) {
  detail::require_cells(mesh, g);
  const int n = mesh.vertex_count();
  std::vector<int> index(n, -1);
  int count = 0;
  bool all = true;
  for (VertexId v = 0; v < n; ++v) all = all && constrained[v];
  for (VertexId v = 0; v < n; ++v) {
    if (constrained[v] && !(all && v == mesh.base_vertex())) index[v] = count++;
  }
  if (count == 0) return g;
  const Eigen::SparseMatrix<double> k = stiffness_matrix(mesh);
  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < k.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
      const int r = index[it.row()], c = index[it.col()];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  }
  Eigen::SparseMatrix<double> kc(count, count);
  kc.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(kc);
  if (solver.info() != Eigen::Success) fail(ErrorKind::SolverFailure, "projection factorization");
  const ScalarDistribution div = divergence(mesh, g);
  Eigen::VectorXd rhs(count);
  for (VertexId v = 0; v < n; ++v) {
    if (index[v] >= 0) rhs[index[v]] = div[v];
  }
  const Eigen::VectorXd u = solver.solve(rhs);
  ScalarField correction = ScalarField::zeros(mesh);
  for (VertexId v = 0; v < n; ++v) {
    if (index[v] >= 0) correction[v] = u[index[v]];
  }
  return linear_combination(1.0, g, 1.0, sharp(gradient(mesh, correction)));
}

}  // namespace freeflow

#endif  // FREEFLOW_CALCULUS_HPP
