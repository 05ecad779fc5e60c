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

#ifndef FREEFLOW_DENSE_SIMPLEX_HPP
#define FREEFLOW_DENSE_SIMPLEX_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "freeflow/error.hpp"

namespace freeflow {

struct LinearProgram {
  // minimize c^T x subject to A x = b, x >= 0; A is rows x cols, row-major.
  int rows = 0;
  int cols = 0;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;

  double& at(int r, int col) { return a[static_cast<size_t>(r) * cols + col]; }
};

struct LpSolution {
  double objective = 0.0;
  std::vector<double> x;
  /// Simplex multipliers y = c_B B^{-1}, one per constraint row; dual feasible
  /// (y^T A <= c) at optimality, including rows found redundant in phase one.
  std::vector<double> duals;
  int iterations = 0;
};

/// Two-phase tableau simplex with Bland's rule. Small dense problems only.
inline LpSolution solve_lp(const LinearProgram& lp, double eps = 1e-11) {
  const int m = lp.rows, n = lp.cols;
  if (static_cast<int>(lp.a.size()) != m * n || static_cast<int>(lp.b.size()) != m ||
      static_cast<int>(lp.c.size()) != n) {
    fail(ErrorKind::SolverFailure, "malformed linear program");
  }
  // Columns: n structural, m artificial, then the right-hand side.
  const int width = n + m + 1;
  std::vector<double> t(static_cast<size_t>(m + 1) * width, 0.0);
  auto cell = [&](int r, int col) -> double& { return t[static_cast<size_t>(r) * width + col]; };
  std::vector<double> row_sign(m, 1.0);
  std::vector<int> basis(m);
  std::vector<bool> active(m, true);
  for (int r = 0; r < m; ++r) {
    row_sign[r] = lp.b[r] < 0 ? -1.0 : 1.0;
    for (int col = 0; col < n; ++col) cell(r, col) = row_sign[r] * lp.a[static_cast<size_t>(r) * n + col];
    cell(r, n + r) = 1.0;
    cell(r, width - 1) = row_sign[r] * lp.b[r];
    basis[r] = n + r;
  }
  const int obj = m;
  int iterations = 0;

  auto pivot_on = [&](int pr, int pc) {
    const double p = cell(pr, pc);
    for (int col = 0; col < width; ++col) cell(pr, col) /= p;
    for (int r = 0; r <= m; ++r) {
      if (r == pr) continue;
      const double f = cell(r, pc);
      if (f == 0.0) continue;
      for (int col = 0; col < width; ++col) cell(r, col) -= f * cell(pr, col);
    }
    basis[pr] = pc;
  };

  // Runs simplex iterations on the objective row; columns >= limit never enter.
  auto run = [&](int limit) {
    const long cap = 100000L + 50L * (static_cast<long>(m) + n) * (m + 1);
    while (true) {
      int enter = -1;
      for (int col = 0; col < limit; ++col) {
        if (cell(obj, col) < -eps) {
          enter = col;
          break;
        }
      }
      if (enter < 0) return;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m; ++r) {
        if (active[r] && cell(r, enter) > eps) best = std::min(best, cell(r, width - 1) / cell(r, enter));
      }
      int leave = -1;
      for (int r = 0; r < m; ++r) {
        if (!active[r] || cell(r, enter) <= eps) continue;
        if (cell(r, width - 1) / cell(r, enter) > best + eps) continue;
        if (leave < 0 || basis[r] < basis[leave]) leave = r;
      }
      if (leave < 0) fail(ErrorKind::SolverFailure, "linear program is unbounded");
      pivot_on(leave, enter);
      if (++iterations > cap) fail(ErrorKind::SolverFailure, "dense simplex iteration cap");
    }
  };

  // Phase one: minimise the sum of artificials.
  for (int col = 0; col < width; ++col) cell(obj, col) = 0.0;
  for (int r = 0; r < m; ++r) {
    for (int col = 0; col < width; ++col) {
      if (col < n || col == width - 1) cell(obj, col) -= cell(r, col);
    }
  }
  run(n);
  double scale = 1.0;
  for (double v : lp.b) scale = std::max(scale, std::fabs(v));
  if (-cell(obj, width - 1) > 1e-9 * scale) fail(ErrorKind::SolverFailure, "linear program is infeasible");

  // Drive artificials out of the basis; rows where that is impossible are redundant.
  for (int r = 0; r < m; ++r) {
    if (basis[r] < n) continue;
    int pc = -1;
    for (int col = 0; col < n; ++col) {
      if (std::fabs(cell(r, col)) > 1e-9) {
        pc = col;
        break;
      }
    }
    if (pc >= 0) {
      pivot_on(r, pc);
    } else {
      active[r] = false;
    }
  }

  // Phase two objective row: reduced costs c_j - c_B B^{-1} A_j.
  for (int col = 0; col < width; ++col) cell(obj, col) = col < n ? lp.c[col] : 0.0;
  for (int r = 0; r < m; ++r) {
    if (!active[r]) continue;
    const int bcol = basis[r];
    const double cb = bcol < n ? lp.c[bcol] : 0.0;
    if (cb == 0.0) continue;
    for (int col = 0; col < width; ++col) cell(obj, col) -= cb * cell(r, col);
  }
  run(n);

  LpSolution sol;
  sol.iterations = iterations;
  sol.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r) {
    if (active[r] && basis[r] < n) sol.x[basis[r]] = cell(r, width - 1);
  }
  for (int col = 0; col < n; ++col) sol.objective += lp.c[col] * sol.x[col];
  // Reduced cost of artificial column r is -row_sign[r] * y_r.
  sol.duals.assign(m, 0.0);
  for (int r = 0; r < m; ++r) sol.duals[r] = -row_sign[r] * cell(obj, n + r);
  return sol;
}

}  // namespace freeflow

#endif  // FREEFLOW_DENSE_SIMPLEX_HPP
