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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"

using namespace freeflow;

namespace {

// Six unit equilateral triangles around vertex 0.
TriMesh hexagon() {
  std::vector<Vec3> p{{0, 0, 0}};
  std::vector<Triangle> tris;
  for (int k = 0; k < 6; ++k) {
    const double t = std::numbers::pi * k / 3.0;
    p.push_back({std::cos(t), std::sin(t), 0.0});
    tris.push_back({0, 1 + k, 1 + (k + 1) % 6});
  }
  return detail::surface_from_positions(tris, p, detail::euclidean_length, 0);
}

TriMesh equilateral() {
  MeshInput in;
  in.triangles = {{0, 1, 2}};
  in.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}};
  return build_mesh(in);
}

std::vector<TriMesh> five_meshes() {
  return {oracle::make(PrimitiveKind::FlatRect, 2), oracle::make(PrimitiveKind::Icosphere, 1),
          oracle::make(PrimitiveKind::Annulus), oracle::make(PrimitiveKind::Torus),
          oracle::make(PrimitiveKind::PoincareDiskPatch)};
}

ScalarField distance_from_base(const TriMesh& m) {
  return ScalarField{geodesic_distances(m, m.base_vertex()).distance};
}

}  // namespace

TEST(Gradient, ConstantFieldHasZeroGradient) {
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 1);
  ScalarField f{std::vector<double>(m.vertex_count(), 3.5)};
  EXPECT_LE(linf_norm(m, gradient(m, f)), 1e-13);
}

TEST(Gradient, CoordinateFunctionOnFlatRect) {
  const TriMesh m = oracle::make(PrimitiveKind::FlatRect, 2);
  ScalarField f = ScalarField::zeros(m);
  for (VertexId v = 0; v < m.vertex_count(); ++v) f[v] = (*m.positions())[v].x;
  const OneForm df = gradient(m, f);
  for (FaceId t = 0; t < m.face_count(); ++t) {
    const auto frame = embedded_frame(m, t);
    const Vec2 g = df.get(t);
    const Vec3 ambient = g.x * frame[0] + g.y * frame[1];
    EXPECT_NEAR(ambient.x, 1.0, 1e-12);
    EXPECT_NEAR(ambient.y, 0.0, 1e-12);
    EXPECT_NEAR(norm(g), 1.0, 1e-12);
  }
  EXPECT_NEAR(linf_norm(m, df), lip_constant(m, f, LipMode::Edgewise), 1e-9);
}

TEST(Gradient, HatFunctionOnEquilateralFan) {
  const TriMesh m = hexagon();
  ScalarField hat = ScalarField::zeros(m);
  hat[0] = 1.0;
  const OneForm df = gradient(m, hat);
  for (FaceId t = 0; t < m.face_count(); ++t) EXPECT_NEAR(norm(df.get(t)), 2.0 / std::sqrt(3.0), 1e-13);
}

TEST(Gradient, MatchesAmbientLeastSquaresOnCurvedSurfaces) {
  std::mt19937_64 rng(11);
  PrimitiveParams emb;
  emb.major_radius = 2.0;
  emb.minor_radius = 0.7;
  for (const TriMesh& m : {oracle::make(PrimitiveKind::Icosphere, 2),
                           generate_primitive(PrimitiveKind::Torus, emb)}) {
    const ScalarField f = oracle::random_scalar(m, rng);
    const OneForm df = gradient(m, f);
    for (FaceId t = 0; t < m.face_count(); ++t) {
      const Vec3 g = oracle::ambient_gradient(m, t, f);
      const auto frame = embedded_frame(m, t);
      EXPECT_NEAR(df.get(t).x, dot(g, frame[0]), 1e-10);
      EXPECT_NEAR(df.get(t).y, dot(g, frame[1]), 1e-10);
    }
  }
}

TEST(Gradient, IsLinear) {
  std::mt19937_64 rng(3);
  const TriMesh m = oracle::make(PrimitiveKind::Torus);
  const ScalarField a = oracle::random_scalar(m, rng), b = oracle::random_scalar(m, rng);
  const OneForm lhs = gradient(m, linear_combination(2.0, a, -0.5, b));
  const OneForm rhs = linear_combination(2.0, gradient(m, a), -0.5, gradient(m, b));
  for (size_t i = 0; i < lhs.data().size(); ++i) EXPECT_NEAR(lhs.data()[i], rhs.data()[i], 1e-12);

  const VectorField g = oracle::random_vector(m, rng), h = oracle::random_vector(m, rng);
  const auto dl = divergence(m, linear_combination(1.5, g, 3.0, h));
  const auto dg = divergence(m, g), dh = divergence(m, h);
  for (VertexId v = 0; v < m.vertex_count(); ++v) EXPECT_NEAR(dl[v], 1.5 * dg[v] + 3.0 * dh[v], 1e-12);
}

TEST(Divergence, ZeroFieldAndSingleFace) {
  const TriMesh tri = equilateral();
  EXPECT_EQ(divergence(tri, VectorField::zeros(tri)).max_abs(), 0.0);
  VectorField g = VectorField::zeros(tri);
  g.set(0, {1.0, 0.0});
  const auto div = divergence(tri, g);
  const auto& geo = tri.face(0);
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(div[tri.triangle(0)[k]], -geo.area * geo.hat_gradients[k].x, 1e-15);
    sum += div[tri.triangle(0)[k]];
  }
  EXPECT_NEAR(sum, 0.0, 1e-15);
}

TEST(Divergence, ConstantFieldOnFlatTorusVanishes) {
  const TriMesh m = oracle::make(PrimitiveKind::Torus, 1);
  // Frames follow each face's first edge; build the constant ambient field (1, 0.3).
  VectorField g = VectorField::zeros(m);
  const auto& p = *m.positions();
  for (FaceId t = 0; t < m.face_count(); ++t) {
    // On the flat torus every face frame is a rigid image of the grid, so use
    // the layout edge from corner 0 to corner 1 to recover the rotation.
    const auto& tri = m.triangle(t);
    const auto& geo = m.face(t);
    Vec3 d = p[tri[1]] - p[tri[0]];
    if (d.x > 0.5) d.x -= 1.0;
    if (d.x < -0.5) d.x += 1.0;
    if (d.y > 0.5) d.y -= 1.0;
    if (d.y < -0.5) d.y += 1.0;
    const Vec2 e = geo.layout[1] - geo.layout[0];
    const double c = (e.x * d.x + e.y * d.y) / dot(e, e), s = (e.x * d.y - e.y * d.x) / dot(e, e);
    // frame = rotation by angle with cos c, sin s; ambient (1, 0.3) in frame coordinates
    g.set(t, {c * 1.0 + s * 0.3, -s * 1.0 + c * 0.3});
  }
  EXPECT_LE(divergence(m, g).max_abs(), 1e-12);
}

TEST(Divergence, TotalDivergenceVanishesOnClosedSurfaces) {
  std::mt19937_64 rng(5);
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 2);
  const auto div = divergence(m, oracle::random_vector(m, rng));
  double sum = 0.0;
  for (double x : div.values) sum += x;
  EXPECT_NEAR(sum, 0.0, 1e-12);
}

TEST(Divergence, IsMinusStiffnessOnGradients) {
  std::mt19937_64 rng(9);
  for (const TriMesh& m : five_meshes()) {
    const ScalarField u = oracle::random_scalar(m, rng);
    const auto div = divergence(m, sharp(gradient(m, u)));
    const Eigen::SparseMatrix<double> k = stiffness_matrix(m);
    const Eigen::VectorXd ku = k * Eigen::Map<const Eigen::VectorXd>(u.values.data(), m.vertex_count());
    for (VertexId v = 0; v < m.vertex_count(); ++v) EXPECT_NEAR(div[v], -ku[v], 1e-11);
  }
}

TEST(Pairing, SingleFaceAndZero) {
  const TriMesh tri = equilateral();
  OneForm f = OneForm::zeros(tri);
  VectorField g = VectorField::zeros(tri);
  g.set(0, {1.0, 0.0});
  EXPECT_EQ(pairing(tri, f, g), 0.0);
  f.set(0, {1.0, 0.0});
  EXPECT_NEAR(pairing(tri, f, g), std::sqrt(3.0) / 4.0, 1e-15);
}

TEST(Pairing, HolderInequality) {
  std::mt19937_64 rng(21);
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 1);
  for (int i = 0; i < 100; ++i) {
    const OneForm f = flat(oracle::random_vector(m, rng));
    const VectorField g = oracle::random_vector(m, rng);
    EXPECT_LE(std::fabs(pairing(m, f, g)), linf_norm(m, f) * l1_norm(m, g) + 1e-12);
  }
}

TEST(Pairing, AdjointnessForBoundaryVanishingFunctions) {
  std::mt19937_64 rng(17);
  for (const TriMesh& m : {oracle::disk(), oracle::make(PrimitiveKind::Torus),
                           oracle::make(PrimitiveKind::CircleGraph)}) {
    for (int i = 0; i < 20; ++i) {
      ScalarField f = oracle::random_scalar(m, rng);
      for (VertexId v = 0; v < m.vertex_count(); ++v) {
        if (m.boundary_vertices()[v]) f[v] = 0.0;
      }
      const VectorField g = oracle::random_vector(m, rng);
      EXPECT_NEAR(pairing(m, gradient(m, f), g) + evaluate(divergence(m, g), f), 0.0, 1e-12);
    }
  }
}

TEST(Norms, ZeroConstantAndHomogeneity) {
  const TriMesh m = oracle::make(PrimitiveKind::FlatRect, 3);
  VectorField g = VectorField::zeros(m);
  EXPECT_EQ(l1_norm(m, g), 0.0);
  EXPECT_EQ(linf_norm(m, g), 0.0);
  for (FaceId t = 0; t < m.face_count(); ++t) g.set(t, {0.6, 0.8});
  EXPECT_NEAR(l1_norm(m, g), 1.0, 1e-12);
  std::mt19937_64 rng(1);
  const VectorField r = oracle::random_vector(m, rng), s = oracle::random_vector(m, rng);
  EXPECT_NEAR(l1_norm(m, linear_combination(-3.0, r, 0.0, r)), 3.0 * l1_norm(m, r), 1e-12);
  EXPECT_LE(l1_norm(m, linear_combination(1.0, r, 1.0, s)), l1_norm(m, r) + l1_norm(m, s) + 1e-12);
  EXPECT_LE(linf_norm(m, linear_combination(1.0, r, 1.0, s)), linf_norm(m, r) + linf_norm(m, s) + 1e-12);
}

TEST(Lipschitz, ConstantAndIntervalExamples) {
  const TriMesh line = generate_primitive(PrimitiveKind::IntervalGraph);
  EXPECT_EQ(lip_constant(line, ScalarField{{2, 2, 2}}, LipMode::Edgewise), 0.0);
  const ScalarField f{{0, 1, 1}};
  EXPECT_DOUBLE_EQ(lip_constant(line, f, LipMode::Edgewise), 1.0);
  EXPECT_DOUBLE_EQ(lip_constant(line, f, LipMode::PairwiseGeodesic), 1.0);
}

TEST(Lipschitz, EdgewiseEqualsPairwise) {
  std::mt19937_64 rng(8);
  for (const TriMesh& m : five_meshes()) {
    for (int i = 0; i < 5; ++i) {
      const ScalarField f = oracle::random_scalar(m, rng);
      EXPECT_NEAR(lip_constant(m, f, LipMode::Edgewise), lip_constant(m, f, LipMode::PairwiseGeodesic), 1e-12);
    }
    const ScalarField d = distance_from_base(m);
    EXPECT_NEAR(lip_constant(m, d, LipMode::Edgewise), 1.0, 1e-12);
    EXPECT_NEAR(lip_constant(m, d, LipMode::PairwiseGeodesic), 1.0, 1e-12);
  }
}

TEST(Lipschitz, GradientBoundedByComparabilityConstant) {
  std::mt19937_64 rng(4);
  for (const TriMesh& m : five_meshes()) {
    const double c = p1_comparability_constant(m);
    EXPECT_GE(c, 1.0 - 1e-12);
    for (int i = 0; i < 10; ++i) {
      const ScalarField f = oracle::random_scalar(m, rng);
      EXPECT_LE(linf_norm(m, gradient(m, f)), lip_constant(m, f, LipMode::Edgewise) * c * (1 + 1e-12));
    }
  }
}

TEST(Lipschitz, ComparabilityConstantIsAttainedOnRightTriangles) {
  // On a right isoceles triangle with legs h, increments (h, h) along the
  // legs give gradient norm sqrt(2) while every edge is 1-Lipschitz.
  MeshInput in;
  in.triangles = {{0, 1, 2}};
  in.edges = {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, std::sqrt(2.0)}};
  EXPECT_NEAR(p1_comparability_constant(build_mesh(in)), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(p1_comparability_constant(equilateral()), 2.0 / std::sqrt(3.0), 1e-12);
}

TEST(Rotation, RotatedGradientsOfBoundaryConstantFunctionsAreDivergenceFree) {
  std::mt19937_64 rng(2);
  for (const TriMesh& m : {oracle::make(PrimitiveKind::Icosphere, 2), oracle::disk()}) {
    ScalarField psi = oracle::random_scalar(m, rng);
    for (VertexId v = 0; v < m.vertex_count(); ++v) {
      if (m.boundary_vertices()[v]) psi[v] = 0.25;
    }
    EXPECT_LE(divergence(m, rotate(m, sharp(gradient(m, psi)))).max_abs(), 1e-12);
  }
}

TEST(Projection, RemovesDivergenceAtSelectedVertices) {
  std::mt19937_64 rng(6);
  const TriMesh m = oracle::disk();
  const VectorField g = oracle::random_vector(m, rng);
  std::vector<bool> interior(m.vertex_count());
  for (VertexId v = 0; v < m.vertex_count(); ++v) interior[v] = !m.boundary_vertices()[v];
  const auto div = divergence(m, project_divergence_free(m, g, interior));
  for (VertexId v = 0; v < m.vertex_count(); ++v) {
    if (interior[v]) EXPECT_NEAR(div[v], 0.0, 1e-10);
  }
  const TriMesh s = oracle::make(PrimitiveKind::Icosphere, 1);
  const VectorField h = oracle::random_vector(s, rng);
  EXPECT_LE(divergence(s, project_divergence_free(s, h, std::vector<bool>(s.vertex_count(), true))).max_abs(),
            1e-10);
}

TEST(Graphs, GradientAndDivergenceOnMetricGraphs) {
  const TriMesh m = generate_primitive(PrimitiveKind::IntervalGraph);
  const OneForm df = gradient(m, ScalarField{{0.0, 2.0, 3.0}});
  EXPECT_DOUBLE_EQ(df.get(0).x, 2.0);
  EXPECT_DOUBLE_EQ(df.get(1).x, 1.0);
  VectorField g = VectorField::zeros(m);
  g.set(0, {1.0, 0.0});
  g.set(1, {1.0, 0.0});
  const auto div = divergence(m, g);
  EXPECT_DOUBLE_EQ(div[0], 1.0);
  EXPECT_DOUBLE_EQ(div[1], 0.0);
  EXPECT_DOUBLE_EQ(div[2], -1.0);
  EXPECT_THROW(rotate(m, g), Error);
}

TEST(Fields, MismatchedFieldIsRejected) {
  const TriMesh a = oracle::make(PrimitiveKind::Icosphere, 0);
  const TriMesh b = oracle::make(PrimitiveKind::Icosphere, 1);
  EXPECT_THROW(gradient(a, ScalarField::zeros(b)), Error);
  EXPECT_THROW(divergence(a, VectorField::zeros(b)), Error);
}
