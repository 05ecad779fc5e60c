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

TEST(Cutoff, ProfileEndpointsAndSlope) {
  EXPECT_EQ(cutoff_profile(-1.0), 1.0);
  EXPECT_EQ(cutoff_profile(0.0), 1.0);
  EXPECT_EQ(cutoff_profile(1.0), 0.0);
  EXPECT_EQ(cutoff_profile(3.0), 0.0);
  EXPECT_NEAR(cutoff_profile(0.5), 0.5, 1e-15);
  EXPECT_NEAR(sampled_profile_slope(), 15.0 / 8.0, 1e-12);
  // Slope against a central difference.
  for (double t : {0.1, 0.3, 0.7, 0.95}) {
    const double h = 1e-6;
    EXPECT_NEAR(cutoff_profile_slope(t), (cutoff_profile(t + h) - cutoff_profile(t - h)) / (2 * h), 1e-8);
  }
}

TEST(Cutoff, FieldIsOneNearAndZeroFar) {
  const TriMesh strip = flat_strip(8.0, 4);
  const auto d = geodesic_distances(strip, strip.base_vertex()).distance;
  for (double k : {0.5, 1.0, 2.0}) {
    const ScalarField h = cutoff_field(strip, {k, std::nullopt});
    EXPECT_EQ(h[strip.base_vertex()], 1.0);
    for (VertexId v = 0; v < strip.vertex_count(); ++v) {
      EXPECT_GE(h[v], 0.0);
      EXPECT_LE(h[v], 1.0);
      if (d[v] <= k) { EXPECT_EQ(h[v], 1.0); }
      if (d[v] >= 2 * k) { EXPECT_EQ(h[v], 0.0); }
    }
    // Mean value theorem along each edge: |dh| <= (15/8) |dd| / k <= (15/8) l / k.
    EXPECT_LE(lip_constant(strip, h, LipMode::Edgewise), 15.0 / (8.0 * k) * (1 + 1e-12));
  }
  EXPECT_THROW(cutoff_field(strip, {0.0, std::nullopt}), Error);
}

TEST(Cutoff, ZeroFieldGivesZeroRows) {
  const TriMesh strip = flat_strip(8.0, 4);
  const ScalarField f{geodesic_distances(strip, 0).distance};
  const ExperimentReport r = cutoff_decay(strip, VectorField::zeros(strip), f, {1, 2, 4});
  ASSERT_EQ(r.rows.size(), 3u);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(r.column(i, "measured"), 0.0);
    EXPECT_EQ(r.column(i, "bound"), 0.0);
  }
}

TEST(Cutoff, RequiresDivergenceFreeField) {
  std::mt19937_64 rng(1);
  const TriMesh strip = flat_strip(4.0, 4);
  try {
    cutoff_decay(strip, oracle::random_vector(strip, rng), ScalarField::zeros(strip), {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolated);
  }
}

TEST(Cutoff, StripFieldIsDivergenceFreeAndIntegrable) {
  const TriMesh strip = flat_strip(16.0, 4);
  const VectorField g = strip_circulation_field(strip);
  EXPECT_LE(divergence(strip, g).max_abs(), 1e-8);
  EXPECT_GT(l1_norm(strip, g), 0.1);
}

TEST(Cutoff, DefaultExperimentDecaysBelowTheBound) {
  const ExperimentReport r = run_cutoff_experiment({});
  EXPECT_TRUE(r.passed);
  EXPECT_GE(r.summary_value("faces"), 2000);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_LE(r.column(i, "measured"), 1.1 * r.column(i, "bound"));
    if (i > 0) {
      EXPECT_LT(r.column(i, "measured"), r.column(i - 1, "measured"));
      EXPECT_LE(r.column(i, "bound"), r.column(i - 1, "bound"));
    }
  }
}

TEST(Extension, ZeroFieldStaysDivergenceFree) {
  const ExtensionSetup s = extension_setup({});
  const ExtensionResult r = extend_by_zero(s.disk, s.region, VectorField::zeros(s.region.mesh));
  EXPECT_EQ(r.max_divergence, 0.0);
  EXPECT_FALSE(r.interface_vertices.empty());
}

TEST(Extension, TangentialFieldExtendsAndRadialFieldDoesNot) {
  const ExperimentReport r = run_extension_experiment({});
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.column(0, "max_div_all"), 1e-8);
  EXPECT_GE(r.column(1, "max_div_all"), 0.01);
  EXPECT_LE(r.column(0, "locality_error"), 1e-12);
  EXPECT_LE(r.column(1, "locality_error"), 1e-12);
  // Inside M the radial field is divergence-free too; only the interface sees the flux.
  EXPECT_LE(r.column(1, "region_interior_div"), 1e-10);
}

TEST(Extension, InterfaceDivergenceCarriesTheFlux) {
  const ExtensionSetup s = extension_setup({});
  const ExtensionResult r = extend_by_zero(s.disk, s.region, s.radial);
  // Unit flux enters through the inner ring and leaves through the outer one.
  double inner = 0.0, outer = 0.0;
  const auto& p = *s.disk.positions();
  for (VertexId v : r.interface_vertices) {
    (std::hypot(p[v].x, p[v].y) < 0.5 ? inner : outer) += r.divergence[v];
  }
  EXPECT_NEAR(std::fabs(inner), 1.0, 1e-9);
  EXPECT_NEAR(inner + outer, 0.0, 1e-9);
}

TEST(Extension, RejectsMismatchedField) {
  const ExtensionSetup s = extension_setup({});
  EXPECT_THROW(extend_by_zero(s.disk, s.region, VectorField::zeros(s.disk)), Error);
  EXPECT_THROW(extension_setup({8, 32, 0.8, 0.5}), Error);
}

TEST(Weakstar, ConstantSequenceGivesZeroColumn) {
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 1);
  const ScalarField f{geodesic_distances(m, 0).distance};
  const ExperimentReport r = weakstar_probe(m, {f, f, f}, f, smooth_gradient_field(m), 1.0);
  for (std::size_t i = 0; i < r.rows.size(); ++i) EXPECT_EQ(r.column(i, "measured"), 0.0);
  EXPECT_TRUE(r.passed);
}

TEST(Weakstar, ShiftSequenceDecaysLikeOneOverK) {
  std::mt19937_64 rng(2);
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 2);
  const VectorField g = oracle::random_vector(m, rng);
  const ScalarField f = ScalarField::zeros(m);
  const ExperimentReport r = weakstar_probe(m, shift_sequence(m, f, 16), f, g, 1.0);
  const double l1 = l1_norm(m, g);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_LE(r.column(i, "measured"), l1 / static_cast<double>(i + 1) * (1 + 1e-9));
    EXPECT_LE(r.column(i, "measured"), r.column(i, "holder_bound") * (1 + 1e-12));
  }
}

TEST(Weakstar, AlignedFieldOnChordalSphereExceedsTheUnitEstimate) {
  // On chordal faces the P1 gradient of the graph distance can exceed 1, so
  // a field aligned with it beats l1(g) / k; the exact Hoelder column holds.
  WeakstarExperimentConfig shift;
  shift.sequence = "shift";
  shift.field = "smooth";
  const ExperimentReport r = run_weakstar_experiment(shift);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.summary_value("within_one_over_k"), 0.0);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_LE(r.column(i, "measured"), r.column(i, "holder_bound") * (1 + 1e-12));
  }
  shift.kind = "flat_rect";
  EXPECT_TRUE(run_weakstar_experiment(shift).passed);
}

TEST(Weakstar, LipschitzBoundIsEnforced) {
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 1);
  const ScalarField f{geodesic_distances(m, 0).distance};
  try {
    weakstar_probe(m, {linear_combination(3.0, f, 0.0, f)}, f, smooth_gradient_field(m), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnboundedSequence);
  }
}

TEST(Weakstar, DefaultExperimentsPass) {
  EXPECT_TRUE(run_weakstar_experiment({}).passed);
  WeakstarExperimentConfig shift;
  shift.sequence = "shift";
  shift.field = "random";
  EXPECT_TRUE(run_weakstar_experiment(shift).passed);
  shift.field = "divergence_free";
  EXPECT_TRUE(run_weakstar_experiment(shift).passed);
  WeakstarExperimentConfig bad;
  bad.sequence = "spiral";
  EXPECT_THROW(run_weakstar_experiment(bad), Error);
}

TEST(Weakstar, MovingSequenceEndsAtItsLimit) {
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 2);
  const auto seq = moving_point_sequence(m, 40, 0, 4.0);
  ASSERT_GE(seq.size(), 2u);
  for (VertexId v = 0; v < m.vertex_count(); ++v) {
    EXPECT_NEAR(seq.back()[v], geodesic_distances(m, 0).distance[v], 1e-15);
  }
  for (const ScalarField& f : seq) EXPECT_LE(lip_constant(m, f, LipMode::Edgewise), 1.0 + 1e-12);
}

TEST(Refinement, GraphDualityHoldsAtEveryLevel) {
  RefinementConfig cfg;
  cfg.kind = PrimitiveKind::Torus;
  cfg.levels = {0, 1, 2};
  cfg.field = false;
  cfg.atoms = {{{0.5, 0.5, 0.0}, 1.0}, {{0.25, 0.75, 0.0}, -2.0}};
  const ExperimentReport r = refinement_study(cfg);
  EXPECT_TRUE(r.passed);
  for (std::size_t i = 0; i < r.rows.size(); ++i) EXPECT_LE(std::fabs(r.column(i, "gap")), 1e-9);
}

TEST(Refinement, IcospherePolesStayAboveTheChord) {
  RefinementConfig cfg;
  cfg.kind = PrimitiveKind::Icosphere;
  cfg.levels = {1, 2, 3};
  cfg.field = false;
  cfg.atoms = {{{0.0, 0.0, 1.0}, 1.0}, {{0.0, 0.0, -1.0}, -1.0}};
  const ExperimentReport r = refinement_study(cfg);
  EXPECT_TRUE(r.passed);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    PrimitiveParams p;
    p.level = static_cast<int>(r.column(i, "level"));
    const TriMesh m = generate_primitive(PrimitiveKind::Icosphere, p);
    const auto& pos = *m.positions();
    const Vec3 a = pos[m.nearest_vertex({0, 0, 1})], b = pos[m.nearest_vertex({0, 0, -1})];
    // A polygonal path is never shorter than the straight segment.
    EXPECT_GE(r.column(i, "dual"), norm(a - b) - 1e-12);
  }
}

TEST(Refinement, FlatDipoleFieldValueMatchesDual) {
  RefinementConfig cfg;
  cfg.levels = {3, 4};
  const ExperimentReport r = refinement_study(cfg);
  EXPECT_TRUE(r.passed);
  EXPECT_NEAR(r.column(1, "dual"), 0.5, 1e-12);
  EXPECT_NEAR(r.column(1, "field"), 0.5, 0.025);
}
