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

#ifndef FREEFLOW_NETWORK_SIMPLEX_HPP
#define FREEFLOW_NETWORK_SIMPLEX_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "freeflow/error.hpp"

namespace freeflow {

struct Arc {
  int source = 0;
  int target = 0;
  double cost = 0.0;
};

struct NetworkFlowResult {
  std::vector<double> flow;       // per arc
  std::vector<double> potential;  // per node; reduced costs cost + pi[s] - pi[t] >= 0
  double cost = 0.0;
  int iterations = 0;
};

/// Primal network simplex for uncapacitated min-cost flow with real supplies.
///
/// Node u must send out supply[u] units net (negative values are demands);
/// supplies must sum to zero. Costs must be nonnegative. An artificial root
/// joined to every node provides the initial strongly feasible spanning tree;
/// the leaving arc is the last blocking arc on the pivot cycle, which rules
/// out cycling on degenerate pivots. Entering arcs come from a block search.
///
/// Tree bookkeeping is a parent array; depths and potentials are rebuilt in
/// O(n) after each basis change.
class NetworkSimplex {
 public:
  NetworkSimplex(int node_count, std::vector<Arc> arcs)
      : n_(node_count), m_(static_cast<int>(arcs.size())), arcs_(std::move(arcs)) {
    for (const Arc& a : arcs_) {
      if (a.source < 0 || a.source >= n_ || a.target < 0 || a.target >= n_) {
        fail(ErrorKind::SolverFailure, "arc endpoint out of range");
      }
      if (!(a.cost >= 0.0) || !std::isfinite(a.cost)) {
        fail(ErrorKind::SolverFailure, "arc costs must be nonnegative and finite");
      }
    }
  }

  NetworkFlowResult solve(std::span<const double> supply) {
    if (static_cast<int>(supply.size()) != n_) fail(ErrorKind::SolverFailure, "supply size mismatch");
    double total = 0.0, scale = 0.0;
    for (double s : supply) {
      total += s;
      scale = std::max(scale, std::fabs(s));
    }
    if (std::fabs(total) > 1e-9 * std::max(1.0, scale) * n_) {
      fail(ErrorKind::SolverFailure, "supplies do not balance");
    }
    init(supply);
    const long max_iter = 50L * (n_ + m_) + 10000;
    int iterations = 0;
    while (find_entering_arc()) {
      if (++iterations > max_iter) fail(ErrorKind::SolverFailure, "network simplex iteration cap");
      pivot();
    }
    const double feas_tol = 1e-9 * std::max(1.0, scale);
    for (int e = m_; e < m_ + n_; ++e) {
      if (flow_[e] > feas_tol) fail(ErrorKind::SolverFailure, "infeasible supplies");
    }
    NetworkFlowResult result;
    result.flow.assign(flow_.begin(), flow_.begin() + m_);
    for (double& f : result.flow) f = std::max(f, 0.0);
    result.potential.assign(pi_.begin(), pi_.begin() + n_);
    for (int e = 0; e < m_; ++e) result.cost += arcs_[e].cost * result.flow[e];
    result.iterations = iterations;
    return result;
  }

 private:
  int source(int e) const { return e < m_ ? arcs_[e].source : art_source_[e - m_]; }
  int target(int e) const { return e < m_ ? arcs_[e].target : art_target_[e - m_]; }
  double cost(int e) const { return e < m_ ? arcs_[e].cost : art_cost_[e - m_]; }
  double reduced_cost(int e) const { return cost(e) + pi_[source(e)] - pi_[target(e)]; }

  void init(std::span<const double> supply) {
    const int root = n_;
    double max_cost = 0.0;
    for (const Arc& a : arcs_) max_cost = std::max(max_cost, a.cost);
    const double art = (max_cost + 1.0) * (n_ + 1);
    flow_.assign(m_ + n_, 0.0);
    in_tree_.assign(m_ + n_, false);
    art_source_.assign(n_, 0);
    art_target_.assign(n_, 0);
    art_cost_.assign(n_, 0.0);
    parent_.assign(n_ + 1, -1);
    pred_.assign(n_ + 1, -1);
    up_.assign(n_ + 1, false);
    pi_.assign(n_ + 1, 0.0);
    depth_.assign(n_ + 1, 0);
    for (int u = 0; u < n_; ++u) {
      const int e = m_ + u;
      parent_[u] = root;
      pred_[u] = e;
      depth_[u] = 1;
      in_tree_[e] = true;
      if (supply[u] >= 0) {
        up_[u] = true;
        art_source_[u] = u;
        art_target_[u] = root;
        art_cost_[u] = 0.0;
        flow_[e] = supply[u];
        pi_[u] = 0.0;
      } else {
        up_[u] = false;
        art_source_[u] = root;
        art_target_[u] = u;
        art_cost_[u] = art;
        flow_[e] = -supply[u];
        pi_[u] = art;
      }
    }
    block_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(m_))));
    next_arc_ = 0;
    cost_scale_ = art;
  }

  bool find_entering_arc() {
    if (m_ == 0) return false;
    double best = 0.0;
    int count = block_;
    int e = next_arc_;
    in_arc_ = -1;
    const double eps = 1e-12 * cost_scale_;
    for (int scanned = 0; scanned < m_; ++scanned, ++e) {
      if (e == m_) e = 0;
      if (!in_tree_[e]) {
        const double rc = reduced_cost(e);
        if (rc < best) {
          best = rc;
          in_arc_ = e;
        }
      }
      if (--count == 0) {
        if (best < -eps) {
          next_arc_ = e + 1 == m_ ? 0 : e + 1;
          return true;
        }
        count = block_;
      }
    }
    if (best < -eps) {
      next_arc_ = e % m_;
      return true;
    }
    return false;
  }

  void pivot() {
    const int first = source(in_arc_);
    const int second = target(in_arc_);
    // join node
    int a = first, b = second;
    while (a != b) {
      if (depth_[a] > depth_[b]) {
        a = parent_[a];
      } else if (depth_[b] > depth_[a]) {
        b = parent_[b];
      } else {
        a = parent_[a];
        b = parent_[b];
      }
    }
    const int join = a;

    // leaving arc: last blocking arc along the cycle oriented by the entering arc
    const double inf = std::numeric_limits<double>::infinity();
    double delta = inf;
    int u_out = -1;
    int side = 0;
    for (int u = first; u != join; u = parent_[u]) {
      const double d = up_[u] ? flow_[pred_[u]] : inf;
      if (d < delta) {
        delta = d;
        u_out = u;
        side = 1;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = up_[u] ? inf : flow_[pred_[u]];
      if (d <= delta) {
        delta = d;
        u_out = u;
        side = 2;
      }
    }
    if (side == 0 || delta == inf) fail(ErrorKind::SolverFailure, "unbounded min-cost flow");
    delta = std::max(delta, 0.0);

    if (delta > 0.0) {
      flow_[in_arc_] += delta;
      for (int u = first; u != join; u = parent_[u]) flow_[pred_[u]] += up_[u] ? -delta : delta;
      for (int u = second; u != join; u = parent_[u]) flow_[pred_[u]] += up_[u] ? delta : -delta;
    }
    const int leaving = pred_[u_out];
    flow_[leaving] = 0.0;
    in_tree_[leaving] = false;
    in_tree_[in_arc_] = true;

    const int u_in = side == 1 ? first : second;
    const int v_in = side == 1 ? second : first;
    // Re-hang the detached subtree: reverse the parent chain from u_in to u_out.
    int stem = u_in;
    int new_parent = v_in;
    int new_pred = in_arc_;
    bool new_up = source(in_arc_) == u_in;
    while (true) {
      const int old_parent = parent_[stem];
      const int old_pred = pred_[stem];
      const bool old_up = up_[stem];
      parent_[stem] = new_parent;
      pred_[stem] = new_pred;
      up_[stem] = new_up;
      if (stem == u_out) break;
      new_parent = stem;
      new_pred = old_pred;
      new_up = !old_up;
      stem = old_parent;
    }
    rebuild_tree();
  }

  void rebuild_tree() {
    const int root = n_;
    first_child_.assign(n_ + 1, -1);
    next_sibling_.assign(n_ + 1, -1);
    for (int u = 0; u < n_; ++u) {
      next_sibling_[u] = first_child_[parent_[u]];
      first_child_[parent_[u]] = u;
    }
    stack_.clear();
    stack_.push_back(root);
    depth_[root] = 0;
    pi_[root] = 0.0;
    while (!stack_.empty()) {
      const int v = stack_.back();
      stack_.pop_back();
      for (int c = first_child_[v]; c >= 0; c = next_sibling_[c]) {
        depth_[c] = depth_[v] + 1;
        pi_[c] = up_[c] ? pi_[v] - cost(pred_[c]) : pi_[v] + cost(pred_[c]);
        stack_.push_back(c);
      }
    }
  }

  int n_;
  int m_;
  std::vector<Arc> arcs_;
  std::vector<int> art_source_, art_target_;
  std::vector<double> art_cost_;
  std::vector<double> flow_;
  std::vector<bool> in_tree_;
  std::vector<int> parent_, pred_, depth_;
  std::vector<bool> up_;
  std::vector<double> pi_;
  std::vector<int> first_child_, next_sibling_, stack_;
  int block_ = 10;
  int next_arc_ = 0;
  int in_arc_ = -1;
  double cost_scale_ = 1.0;
};

}  // namespace freeflow

#endif  // FREEFLOW_NETWORK_SIMPLEX_HPP
