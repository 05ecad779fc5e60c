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

#ifndef FREEFLOW_FREENORM_HPP
#define FREEFLOW_FREENORM_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "freeflow/calculus.hpp"
#include "freeflow/dense_simplex.hpp"
#include "freeflow/error.hpp"
#include "freeflow/mesh.hpp"
#include "freeflow/network_simplex.hpp"

namespace freeflow {

struct Atom {
  VertexId vertex = 0;
  double coefficient = 0.0;

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finitely supported signed measure sum_i a_i delta(x_i). The base vertex of
/// the mesh it is used with plays the role of the distinguished point, where
/// the evaluation functional is zero.
struct Molecule {
  std::vector<Atom> atoms;

  friend bool operator==(const Molecule&, const Molecule&) = default;
};

/// Merge repeated vertices and drop zero coefficients and atoms at the base
/// vertex. Atoms come out sorted by vertex.
inline Molecule canonicalize(const Molecule& mu, VertexId base_vertex) {
  std::map<VertexId, double> merged;
  for (const Atom& a : mu.atoms) {
    if (!std::isfinite(a.coefficient)) fail(ErrorKind::InvalidParams, "non-finite coefficient");
    merged[a.vertex] += a.coefficient;
  }
  Molecule out;
  for (const auto& [v, c] : merged) {
    if (v != base_vertex && c != 0.0) out.atoms.push_back({v, c});
  }
  return out;
}

inline bool is_canonical(const Molecule& mu, VertexId base_vertex) {
  return canonicalize(mu, base_vertex) == mu;
}

inline Molecule scaled(const Molecule& mu, double factor) {
  Molecule out = mu;
  for (Atom& a : out.atoms) a.coefficient *= factor;
  return out;
}

inline Molecule sum(const Molecule& mu, const Molecule& nu) {
  Molecule out = mu;
  out.atoms.insert(out.atoms.end(), nu.atoms.begin(), nu.atoms.end());
  return out;
}

/// <F, mu> for a vertex function F.
inline double evaluate(const Molecule& mu, const ScalarField& f) {
  double s = 0.0;
  for (const Atom& a : mu.atoms) s += a.coefficient * f[a.vertex];
  return s;
}

namespace detail {

inline void require_molecule(const TriMesh& mesh, const Molecule& mu) {
  for (const Atom& a : mu.atoms) {
    if (a.vertex < 0 || a.vertex >= mesh.vertex_count()) {
      fail(ErrorKind::InvalidParams, "atom vertex out of range");
    }
  }
  if (!is_canonical(mu, mesh.base_vertex())) {
    fail(ErrorKind::InvalidParams, "molecule is not canonical");
  }
}

}  // namespace detail

/// Net outflow per vertex demanded by mu: the atom coefficients, with the base
/// vertex absorbing minus the total mass.
inline std::vector<double> supply_vector(const TriMesh& mesh, const Molecule& mu) {
  std::vector<double> b(mesh.vertex_count(), 0.0);
  double total = 0.0;
  for (const Atom& a : mu.atoms) {
    b[a.vertex] += a.coefficient;
    total += a.coefficient;
  }
  b[mesh.base_vertex()] -= total;
  return b;
}

/// Net outflow of an edge flow (signed, tail to head) at every vertex.
inline std::vector<double> flow_outflow(const TriMesh& mesh, std::span<const double> flow) {
  std::vector<double> out(mesh.vertex_count(), 0.0);
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
    out[mesh.edge(e).tail] += flow[e];
    out[mesh.edge(e).head] -= flow[e];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dual: 1-Lipschitz potentials
// ---------------------------------------------------------------------------

struct DualSolution {
  double value = 0.0;
  /// Vertex potential, zero at the base vertex, |f(u) - f(v)| <= length(u, v)
  /// on every edge.
  ScalarField potential;
  int lp_iterations = 0;
};

/// Maximise sum_i a_i f(x_i) over 1-Lipschitz f vanishing at the base vertex.
///
/// A Lipschitz function on the support extends to the whole mesh with the
/// same constant (f(v) = min_i f(x_i) + d(x_i, v)), so the program is solved on
/// the support points with pairwise geodesic distances. That reduced problem
/// is handed to the dense simplex in its transport form; the simplex
/// multipliers are the optimal potential.
inline DualSolution dual_lp(const TriMesh& mesh, const Molecule& mu) {
  detail::require_molecule(mesh, mu);
  DualSolution sol;
  sol.potential = ScalarField::zeros(mesh);
  if (mu.atoms.empty()) return sol;

  std::vector<VertexId> support;
  std::vector<double> b;
  double total = 0.0;
  for (const Atom& a : mu.atoms) {
    support.push_back(a.vertex);
    b.push_back(a.coefficient);
    total += a.coefficient;
  }
  support.push_back(mesh.base_vertex());
  b.push_back(-total);
  const int m = static_cast<int>(support.size());

  std::vector<GeodesicTable> dist;
  dist.reserve(m);
  for (VertexId s : support) dist.push_back(geodesic_distances(mesh, s));

  LinearProgram lp;
  lp.rows = m;
  lp.cols = m * (m - 1);
  lp.a.assign(static_cast<size_t>(lp.rows) * lp.cols, 0.0);
  lp.b = b;
  lp.c.reserve(lp.cols);
  int col = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      lp.at(i, col) = 1.0;
      lp.at(j, col) = -1.0;
      lp.c.push_back(dist[i].distance[support[j]]);
      ++col;
    }
  }
  const LpSolution lps = solve_lp(lp);
  sol.lp_iterations = lps.iterations;

  std::vector<double> u(m);
  for (int i = 0; i < m; ++i) u[i] = lps.duals[i] - lps.duals[m - 1];
  // Clamp round-off so the extension reproduces u exactly where it is tight.
  for (VertexId v = 0; v < mesh.vertex_count(); ++v) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) best = std::min(best, u[i] + dist[i].distance[v]);
    sol.potential[v] = best;
  }
  const double shift = sol.potential[mesh.base_vertex()];
  for (double& x : sol.potential.values) x -= shift;
  sol.value = evaluate(mu, sol.potential);
  return sol;
}

// ---------------------------------------------------------------------------
// Independent oracle: transport between the support points
// ---------------------------------------------------------------------------

inline constexpr int kOracleMaxAtoms = 12;

/// Exact discrete free norm by min-cost transport among the atoms and the
/// base vertex, using pairwise geodesic distances and successive shortest
/// augmenting paths (Bellman-Ford on the residual graph). Shares no solver
/// code with dual_lp or beckmann_graph.
inline double transport_oracle(const TriMesh& mesh, const Molecule& mu) {
  const Molecule canon = canonicalize(mu, mesh.base_vertex());
  for (const Atom& a : canon.atoms) {
    if (a.vertex < 0 || a.vertex >= mesh.vertex_count()) {
      fail(ErrorKind::InvalidParams, "atom vertex out of range");
    }
  }
  if (static_cast<int>(canon.atoms.size()) > kOracleMaxAtoms) {
    fail(ErrorKind::TooManyAtoms, std::to_string(canon.atoms.size()) + " atoms");
  }
  if (canon.atoms.empty()) return 0.0;
  std::vector<VertexId> nodes;
  std::vector<double> excess;
  double total = 0.0;
  for (const Atom& a : canon.atoms) {
    nodes.push_back(a.vertex);
    excess.push_back(a.coefficient);
    total += a.coefficient;
  }
  nodes.push_back(mesh.base_vertex());
  excess.push_back(-total);
  const int m = static_cast<int>(nodes.size());
  std::vector<std::vector<double>> d(m);
  for (int i = 0; i < m; ++i) {
    const GeodesicTable t = geodesic_distances(mesh, nodes[i]);
    for (int j = 0; j < m; ++j) d[i].push_back(t.distance[nodes[j]]);
  }
  // flow[i][j] >= 0 units shipped i -> j; residual arcs: i -> j at cost d, and
  // j -> i at cost -d with capacity flow[i][j].
  std::vector<std::vector<double>> flow(m, std::vector<double>(m, 0.0));
  double scale = 0.0;
  for (double x : excess) scale = std::max(scale, std::fabs(x));
  const double eps = 1e-13 * std::max(1.0, scale);
  for (int guard = 0; guard < 100000; ++guard) {
    int s = -1;
    for (int i = 0; i < m; ++i) {
      if (excess[i] > eps) {
        s = i;
        break;
      }
    }
    if (s < 0) break;
    std::vector<double> dist(m, std::numeric_limits<double>::infinity());
    std::vector<int> prev(m, -1);
    std::vector<bool> reverse(m, false);
    dist[s] = 0.0;
    for (int round = 0; round < m; ++round) {
      bool changed = false;
      for (int i = 0; i < m; ++i) {
        if (dist[i] == std::numeric_limits<double>::infinity()) continue;
        for (int j = 0; j < m; ++j) {
          if (i == j) continue;
          if (dist[i] + d[i][j] < dist[j] - 1e-15) {
            dist[j] = dist[i] + d[i][j];
            prev[j] = i;
            reverse[j] = false;
            changed = true;
          }
          if (flow[j][i] > eps && dist[i] - d[j][i] < dist[j] - 1e-15) {
            dist[j] = dist[i] - d[j][i];
            prev[j] = i;
            reverse[j] = true;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    int t = -1;
    for (int j = 0; j < m; ++j) {
      if (excess[j] < -eps && (t < 0 || dist[j] < dist[t])) t = j;
    }
    if (t < 0) fail(ErrorKind::SolverFailure, "oracle found no deficit node");
    double amount = std::min(excess[s], -excess[t]);
    for (int v = t; v != s; v = prev[v]) {
      if (reverse[v]) amount = std::min(amount, flow[v][prev[v]]);
    }
    for (int v = t; v != s; v = prev[v]) {
      const int u = prev[v];
      if (reverse[v]) {
        flow[v][u] -= amount;
      } else {
        flow[u][v] += amount;
      }
    }
    excess[s] -= amount;
    excess[t] += amount;
  }
  double cost = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) cost += flow[i][j] * d[i][j];
  }
  return cost;
}

// ---------------------------------------------------------------------------
// Primal: graph flows
// ---------------------------------------------------------------------------

struct GraphFlowSolution {
  double value = 0.0;
  /// Signed flow along each stored edge, tail to head.
  std::vector<double> edge_flow;
  /// Potential read off the final simplex basis (zero at the base vertex).
  ScalarField potential;
  int iterations = 0;
};

/// Minimise sum_e length_e |flow_e| subject to net outflow = mu at every
/// vertex, the base vertex absorbing the total mass. Each edge becomes a pair
/// of opposite arcs for the network simplex. `arc_seed` permutes the arc order
/// (optimal flows need not be unique; the value is).
inline GraphFlowSolution beckmann_graph(const TriMesh& mesh, const Molecule& mu,
                                        std::optional<std::uint64_t> arc_seed = std::nullopt) {
  detail::require_molecule(mesh, mu);
  GraphFlowSolution sol;
  sol.edge_flow.assign(mesh.edge_count(), 0.0);
  sol.potential = ScalarField::zeros(mesh);
  if (mu.atoms.empty()) return sol;

  std::vector<int> order(2 * mesh.edge_count());
  std::iota(order.begin(), order.end(), 0);
  if (arc_seed) {
    std::mt19937_64 rng(*arc_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Arc> arcs;
  arcs.reserve(order.size());
  for (int k : order) {
    const Edge& e = mesh.edge(k / 2);
    if (k % 2 == 0) {
      arcs.push_back({e.tail, e.head, e.length});
    } else {
      arcs.push_back({e.head, e.tail, e.length});
    }
  }
  NetworkSimplex ns(mesh.vertex_count(), std::move(arcs));
  const std::vector<double> b = supply_vector(mesh, mu);
  const NetworkFlowResult res = ns.solve(b);
  for (size_t i = 0; i < order.size(); ++i) {
    const int k = order[i];
    sol.edge_flow[k / 2] += (k % 2 == 0 ? 1.0 : -1.0) * res.flow[i];
  }
  for (EdgeId e = 0; e < mesh.edge_count(); ++e) {
    sol.value += mesh.edge(e).length * std::fabs(sol.edge_flow[e]);
  }
  const double base_pi = res.potential[mesh.base_vertex()];
  for (VertexId v = 0; v < mesh.vertex_count(); ++v) sol.potential[v] = base_pi - res.potential[v];
  sol.iterations = res.iterations;
  return sol;
}

// ---------------------------------------------------------------------------
// Primal: face vector fields
// ---------------------------------------------------------------------------

struct FieldSolverParams {
  int max_iter = 5000;
  /// Initial penalty parameter; adapted by residual balancing.
  double step = 1.0;
  /// Divergence feasibility tolerance (max-abs over vertices).
  double tol = 1e-6;
  /// Stop once (best value - best lower bound) <= gap_tol * best value.
  double gap_tol = 1e-3;
};

struct FieldSolution {
  double value = 0.0;
  VectorField field;
  /// Certified lower bound from the scaled dual potential.
  double lower_bound = 0.0;
  double divergence_residual = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimise l1_norm(g) subject to divergence(g) = mu at every vertex.
///
/// Operator splitting (ADMM) on g = z: the g-update is the area-weighted
/// projection onto {divergence(g) = mu}, which needs one solve with the
/// stiffness matrix (factored once); the z-update is per-face vector
/// shrinkage. Every g iterate is feasible, so the best one seen is returned.
/// The projection multiplier is a potential whose normalised pairing with mu
/// gives a lower bound, and the gap between the two drives termination.
inline FieldSolution beckmann_field(const TriMesh& mesh, const Molecule& mu,
                                    const FieldSolverParams& params = {}) {
  if (mesh.dimension() != 2) fail(ErrorKind::InvalidParams, "field solver needs a surface");
  detail::require_molecule(mesh, mu);
  if (params.max_iter < 1 || !(params.step > 0.0) || !(params.tol > 0.0) || !(params.gap_tol > 0.0)) {
    fail(ErrorKind::InvalidParams, "invalid field solver parameters");
  }
  FieldSolution sol;
  sol.field = VectorField::zeros(mesh);
  if (mu.atoms.empty()) {
    sol.converged = true;
    return sol;
  }

  const int nv = mesh.vertex_count();
  const int nf = mesh.face_count();
  const VertexId base = mesh.base_vertex();
  const std::vector<double> b = supply_vector(mesh, mu);

  // Reduced stiffness matrix with the base vertex pinned.
  const Eigen::SparseMatrix<double> k = stiffness_matrix(mesh);
  std::vector<int> index(nv);
  for (int v = 0, c = 0; v < nv; ++v) index[v] = v == base ? -1 : c++;
  std::vector<Eigen::Triplet<double>> trips;
  for (int col = 0; col < k.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
      if (index[it.row()] >= 0 && index[it.col()] >= 0) {
        trips.emplace_back(index[it.row()], index[it.col()], it.value());
      }
    }
  }
  Eigen::SparseMatrix<double> kr(nv - 1, nv - 1);
  kr.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(kr);
  if (solver.info() != Eigen::Success) fail(ErrorKind::SolverFailure, "stiffness factorization");

  VectorField z = VectorField::zeros(mesh);
  VectorField u = VectorField::zeros(mesh);
  VectorField g = VectorField::zeros(mesh);
  double rho = params.step;
  double best_value = std::numeric_limits<double>::infinity();
  double best_lower = 0.0;
  VectorField best_field = g;
  double best_div = 0.0;
  Eigen::VectorXd rhs(nv - 1);
  ScalarField lambda = ScalarField::zeros(mesh);
  const double total_area = mesh.total_measure();

  auto weighted_norm = [&](const VectorField& x) {
    double s = 0.0;
    for (int t = 0; t < nf; ++t) {
      const Vec2 v = x.get(t);
      s += mesh.face(t).area * dot(v, v);
    }
    return std::sqrt(s);
  };

  for (int iter = 1; iter <= params.max_iter; ++iter) {
    // g-update: area-weighted projection of z - u onto the constraint set.
    const VectorField v = linear_combination(1.0, z, -1.0, u);
    const ScalarDistribution dv = divergence(mesh, v);
    for (int w = 0; w < nv; ++w) {
      if (index[w] >= 0) rhs[index[w]] = dv[w] - b[w];
    }
    const Eigen::VectorXd sol_lambda = solver.solve(rhs);
    for (int w = 0; w < nv; ++w) lambda[w] = index[w] >= 0 ? sol_lambda[index[w]] : 0.0;
    const OneForm grad_lambda = gradient(mesh, lambda);
    g = linear_combination(1.0, v, 1.0, sharp(grad_lambda));

    // Feasible iterate: candidate for the returned field.
    const double value = l1_norm(mesh, g);
    if (value < best_value) {
      const ScalarDistribution dg = divergence(mesh, g);
      double div_err = 0.0;
      for (int w = 0; w < nv; ++w) div_err = std::max(div_err, std::fabs(dg[w] - b[w]));
      if (div_err <= params.tol) {
        best_value = value;
        best_field = g;
        best_div = div_err;
      }
    }
    // Dual potential rho * lambda, normalised to be 1-Lipschitz per face.
    const double grad_max = linf_norm(mesh, grad_lambda);
    if (grad_max > 0.0) {
      double pairing_b = 0.0;
      for (int w = 0; w < nv; ++w) pairing_b += b[w] * lambda[w];
      best_lower = std::max(best_lower, std::fabs(pairing_b) / grad_max);
    }

    // z-update: vector shrinkage with threshold 1 / rho.
    const VectorField z_old = z;
    for (int t = 0; t < nf; ++t) {
      const Vec2 w = g.get(t) + u.get(t);
      const double len = norm(w);
      const double keep = len > 1.0 / rho ? 1.0 - 1.0 / (rho * len) : 0.0;
      z.set(t, keep * w);
    }
    // scaled dual update
    for (int t = 0; t < nf; ++t) u.set(t, u.get(t) + g.get(t) - z.get(t));

    sol.primal_residual = weighted_norm(linear_combination(1.0, g, -1.0, z)) / std::sqrt(total_area);
    sol.dual_residual = rho * weighted_norm(linear_combination(1.0, z, -1.0, z_old)) / std::sqrt(total_area);
    sol.iterations = iter;

    if (best_value < std::numeric_limits<double>::infinity() &&
        best_value - best_lower <= params.gap_tol * best_value) {
      sol.converged = true;
      break;
    }
    // Residual balancing.
    if (iter % 10 == 0) {
      if (sol.primal_residual > 10.0 * sol.dual_residual) {
        rho *= 2.0;
        for (double& x : u.data()) x *= 0.5;
      } else if (sol.dual_residual > 10.0 * sol.primal_residual) {
        rho *= 0.5;
        for (double& x : u.data()) x *= 2.0;
      }
    }
  }
  if (best_value == std::numeric_limits<double>::infinity()) {
    fail(ErrorKind::NotConverged, "no iterate met the divergence tolerance");
  }
  sol.value = best_value;
  sol.field = std::move(best_field);
  sol.lower_bound = best_lower;
  sol.divergence_residual = best_div;
  if (!sol.converged) {
    fail(ErrorKind::NotConverged,
         "after " + std::to_string(sol.iterations) + " iterations: value " +
             std::to_string(sol.value) + ", lower bound " + std::to_string(sol.lower_bound) +
             ", primal residual " + std::to_string(sol.primal_residual) + ", dual residual " +
             std::to_string(sol.dual_residual));
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

enum class NormMethod { Dual, Graph, Field, All };

inline std::string_view to_string(NormMethod m) {
  switch (m) {
    case NormMethod::Dual: return "dual";
    case NormMethod::Graph: return "graph";
    case NormMethod::Field: return "field";
    case NormMethod::All: return "all";
  }
  return "unknown";
}

inline NormMethod norm_method_from_string(std::string_view name) {
  for (auto m : {NormMethod::Dual, NormMethod::Graph, NormMethod::Field, NormMethod::All}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorKind::InvalidParams, "unknown method '" + std::string(name) + "'");
}

struct FreeNormReport {
  NormMethod method = NormMethod::All;
  std::optional<double> dual_value;
  std::optional<double> primal_graph_value;
  std::optional<double> primal_field_value;
  /// primal_graph_value - dual_value, when both were computed.
  std::optional<double> duality_gap;
  std::optional<ScalarField> optimal_potential;
  std::optional<std::vector<double>> optimal_flow;
  std::optional<VectorField> optimal_field;
  std::optional<double> field_lower_bound;
  // diagnostics
  int dual_lp_iterations = 0;
  int graph_iterations = 0;
  int field_iterations = 0;
  double flow_feasibility = 0.0;
  double field_divergence_residual = 0.0;
};

inline constexpr double kWeakDualityTolerance = 1e-9;

/// Run the requested solvers on a canonical molecule and cross-check them.
inline FreeNormReport free_norm(const TriMesh& mesh, const Molecule& mu, NormMethod method,
                                const FieldSolverParams& field_params = {}) {
  detail::require_molecule(mesh, mu);
  FreeNormReport r;
  r.method = method;
  const bool all = method == NormMethod::All;
  if (all || method == NormMethod::Dual) {
    DualSolution d = dual_lp(mesh, mu);
    r.dual_value = d.value;
    r.optimal_potential = std::move(d.potential);
    r.dual_lp_iterations = d.lp_iterations;
  }
  if (all || method == NormMethod::Graph) {
    GraphFlowSolution gsol = beckmann_graph(mesh, mu);
    r.primal_graph_value = gsol.value;
    const std::vector<double> b = supply_vector(mesh, mu);
    const std::vector<double> out = flow_outflow(mesh, gsol.edge_flow);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      r.flow_feasibility = std::max(r.flow_feasibility, std::fabs(out[v] - b[v]));
    }
    r.optimal_flow = std::move(gsol.edge_flow);
    r.graph_iterations = gsol.iterations;
    if (!r.optimal_potential) r.optimal_potential = std::move(gsol.potential);
  }
  if ((all && mesh.dimension() == 2) || method == NormMethod::Field) {
    FieldSolution fsol = beckmann_field(mesh, mu, field_params);
    r.primal_field_value = fsol.value;
    r.optimal_field = std::move(fsol.field);
    r.field_lower_bound = fsol.lower_bound;
    r.field_iterations = fsol.iterations;
    r.field_divergence_residual = fsol.divergence_residual;
  }
  if (r.dual_value && r.primal_graph_value) {
    r.duality_gap = *r.primal_graph_value - *r.dual_value;
    if (*r.dual_value > *r.primal_graph_value + kWeakDualityTolerance * std::max(1.0, *r.primal_graph_value)) {
      fail(ErrorKind::SolverFailure, "weak duality violated");
    }
  }
  return r;
}

}  // namespace freeflow

#endif  // FREEFLOW_FREENORM_HPP
