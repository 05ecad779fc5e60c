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

// JSON and CSV serialization. Objects are written with a fixed key order so
// that identical inputs give byte-identical files.

#ifndef FREEFLOW_IO_HPP
#define FREEFLOW_IO_HPP

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "freeflow/calculus.hpp"
#include "freeflow/currents.hpp"
#include "freeflow/error.hpp"
#include "freeflow/experiments.hpp"
#include "freeflow/freenorm.hpp"
#include "freeflow/mesh.hpp"

namespace freeflow {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Files and parsing helpers
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::ParseError, "cannot write '" + path + "'");
  out << text;
}

inline Json parse_json(std::string_view text, std::string_view what = "input") {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string(what) + ": " + e.what());
  }
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

namespace detail {

inline const Json& require_key(const Json& j, std::string_view key, std::string_view what) {
  if (!j.is_object()) fail(ErrorKind::ParseError, std::string(what) + " must be an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::ParseError, std::string(what) + " lacks '" + std::string(key) + "'");
  return *it;
}

inline void reject_unknown_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                                std::string_view what) {
  if (!j.is_object()) fail(ErrorKind::ParseError, std::string(what) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (std::string_view a : allowed) known = known || key == a;
    if (!known) fail(ErrorKind::ParseError, std::string(what) + ": unknown key '" + key + "'");
  }
}

inline double as_number(const Json& j, std::string_view what) {
  if (!j.is_number()) fail(ErrorKind::ParseError, std::string(what) + " must be a number");
  return j.get<double>();
}

inline int as_int(const Json& j, std::string_view what) {
  if (!j.is_number_integer()) fail(ErrorKind::ParseError, std::string(what) + " must be an integer");
  const auto v = j.get<long long>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    fail(ErrorKind::ParseError, std::string(what) + " out of range");
  }
  return static_cast<int>(v);
}

inline const Json& as_array(const Json& j, std::string_view what) {
  if (!j.is_array()) fail(ErrorKind::ParseError, std::string(what) + " must be an array");
  return j;
}

/// Numbers that may be NaN are written as null.
inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline double number_from_nullable(const Json& j, std::string_view what) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return as_number(j, what);
}

inline std::vector<double> number_list(const Json& j, std::string_view what) {
  std::vector<double> out;
  for (const Json& x : as_array(j, what)) out.push_back(as_number(x, what));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Meshes
// ---------------------------------------------------------------------------

/// {"dimension", "base_vertex", "triangles", "edges": [[a, b, length]...],
/// "positions" (optional)}
inline Json mesh_to_json(const TriMesh& mesh) {
  Json j;
  j["dimension"] = mesh.dimension();
  j["base_vertex"] = mesh.base_vertex();
  Json tris = Json::array();
  for (const Triangle& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
  j["triangles"] = std::move(tris);
  Json edges = Json::array();
  for (const Edge& e : mesh.edges()) edges.push_back({e.tail, e.head, e.length});
  j["edges"] = std::move(edges);
  if (mesh.positions()) {
    Json pos = Json::array();
    for (const Vec3& p : *mesh.positions()) pos.push_back({p.x, p.y, p.z});
    j["positions"] = std::move(pos);
  }
  return j;
}

inline TriMesh mesh_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"dimension", "base_vertex", "triangles", "edges", "positions"}, "mesh");
  MeshInput in;
  in.dimension = detail::as_int(detail::require_key(j, "dimension", "mesh"), "dimension");
  if (j.contains("base_vertex")) in.base_vertex = detail::as_int(j["base_vertex"], "base_vertex");
  if (j.contains("triangles")) {
    for (const Json& t : detail::as_array(j["triangles"], "triangles")) {
      if (!t.is_array() || t.size() != 3) fail(ErrorKind::ParseError, "triangle must have 3 vertices");
      in.triangles.push_back({detail::as_int(t[0], "vertex"), detail::as_int(t[1], "vertex"),
                              detail::as_int(t[2], "vertex")});
    }
  }
  for (const Json& e : detail::as_array(detail::require_key(j, "edges", "mesh"), "edges")) {
    if (!e.is_array() || e.size() != 3) fail(ErrorKind::ParseError, "edge must be [a, b, length]");
    in.edges.push_back({detail::as_int(e[0], "vertex"), detail::as_int(e[1], "vertex"),
                        detail::as_number(e[2], "length")});
  }
  TriMesh mesh = build_mesh(in);
  if (j.contains("positions")) {
    std::vector<Vec3> pos;
    for (const Json& p : detail::as_array(j["positions"], "positions")) {
      if (!p.is_array() || p.size() != 3) fail(ErrorKind::ParseError, "position must be [x, y, z]");
      pos.push_back({detail::as_number(p[0], "x"), detail::as_number(p[1], "y"),
                     detail::as_number(p[2], "z")});
    }
    if (static_cast<int>(pos.size()) != mesh.vertex_count()) {
      fail(ErrorKind::ParseError, "positions do not match the vertex count");
    }
    mesh = mesh.with_positions(std::move(pos));
  }
  return mesh;
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::SolverFailure, "sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

/// Content hash of the combinatorics, lengths and base vertex (not the
/// embedding, which no computation depends on).
inline std::string mesh_hash(const TriMesh& mesh) {
  Json j = mesh_to_json(mesh);
  j.erase("positions");
  return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

enum class FieldKind { Scalar, Distribution, Vector, OneForm, EdgeForm };

inline std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Scalar: return "scalar";
    case FieldKind::Distribution: return "distribution";
    case FieldKind::Vector: return "vector";
    case FieldKind::OneForm: return "one_form";
    case FieldKind::EdgeForm: return "edge_form";
  }
  return "unknown";
}

inline FieldKind field_kind_from_string(std::string_view s) {
  for (auto k : {FieldKind::Scalar, FieldKind::Distribution, FieldKind::Vector, FieldKind::OneForm,
                 FieldKind::EdgeForm}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorKind::ParseError, "unknown field kind '" + std::string(s) + "'");
}

/// Any field variant, as stored in a field file.
struct FieldData {
  FieldKind kind = FieldKind::Scalar;
  std::vector<double> values;  // cells: stride values per cell
  int stride = 1;
};

namespace detail {

inline Json field_json(const TriMesh& mesh, FieldKind kind, std::span<const double> values, int stride) {
  Json j;
  j["kind"] = to_string(kind);
  j["mesh_hash"] = mesh_hash(mesh);
  Json vals = Json::array();
  if (stride == 1) {
    for (double x : values) vals.push_back(x);
  } else {
    for (std::size_t i = 0; i < values.size(); i += stride) vals.push_back({values[i], values[i + 1]});
  }
  j["values"] = std::move(vals);
  return j;
}

}  // namespace detail

inline Json to_json(const TriMesh& mesh, const ScalarField& f) {
  return detail::field_json(mesh, FieldKind::Scalar, f.values, 1);
}
inline Json to_json(const TriMesh& mesh, const ScalarDistribution& f) {
  return detail::field_json(mesh, FieldKind::Distribution, f.values, 1);
}
inline Json to_json(const TriMesh& mesh, const VectorField& g) {
  return detail::field_json(mesh, FieldKind::Vector, g.data(), g.stride());
}
inline Json to_json(const TriMesh& mesh, const OneForm& g) {
  return detail::field_json(mesh, FieldKind::OneForm, g.data(), g.stride());
}
inline Json to_json(const TriMesh& mesh, const EdgeForm& w) {
  return detail::field_json(mesh, FieldKind::EdgeForm, w.values, 1);
}

/// Parse a field file against a mesh. A "mesh_hash" entry, when present, must
/// match the mesh.
inline FieldData field_from_json(const TriMesh& mesh, const Json& j) {
  detail::reject_unknown_keys(j, {"kind", "mesh_hash", "values"}, "field");
  const Json& kind = detail::require_key(j, "kind", "field");
  if (!kind.is_string()) fail(ErrorKind::ParseError, "field kind must be a string");
  FieldData out;
  out.kind = field_kind_from_string(kind.get<std::string>());
  if (j.contains("mesh_hash")) {
    if (!j["mesh_hash"].is_string() || j["mesh_hash"].get<std::string>() != mesh_hash(mesh)) {
      fail(ErrorKind::ParseError, "field was written for a different mesh");
    }
  }
  const bool cells = out.kind == FieldKind::Vector || out.kind == FieldKind::OneForm;
  out.stride = cells && mesh.dimension() == 2 ? 2 : 1;
  int expected = mesh.vertex_count();
  if (cells) expected = mesh.cell_count();
  if (out.kind == FieldKind::EdgeForm) expected = mesh.edge_count();
  const Json& vals = detail::as_array(detail::require_key(j, "values", "field"), "values");
  if (static_cast<int>(vals.size()) != expected) {
    fail(ErrorKind::ParseError, "field has " + std::to_string(vals.size()) + " entries, expected " +
                                    std::to_string(expected));
  }
  for (const Json& v : vals) {
    if (out.stride == 2) {
      if (!v.is_array() || v.size() != 2) fail(ErrorKind::ParseError, "cell vector must be [a, b]");
      out.values.push_back(detail::as_number(v[0], "component"));
      out.values.push_back(detail::as_number(v[1], "component"));
    } else {
      out.values.push_back(detail::as_number(v, "value"));
    }
  }
  return out;
}

inline ScalarField as_scalar_field(const FieldData& d) {
  if (d.kind != FieldKind::Scalar) fail(ErrorKind::ParseError, "expected a scalar field");
  return ScalarField{d.values};
}

template <typename Tag>
CellField<Tag> as_cell_field(const TriMesh& mesh, const FieldData& d, FieldKind want) {
  if (d.kind != want) fail(ErrorKind::ParseError, "expected a " + std::string(to_string(want)) + " field");
  CellField<Tag> out = CellField<Tag>::zeros(mesh);
  std::copy(d.values.begin(), d.values.end(), out.data().begin());
  return out;
}

inline VectorField as_vector_field(const TriMesh& mesh, const FieldData& d) {
  return as_cell_field<VectorFieldTag>(mesh, d, FieldKind::Vector);
}

inline OneForm as_one_form(const TriMesh& mesh, const FieldData& d) {
  return as_cell_field<OneFormTag>(mesh, d, FieldKind::OneForm);
}

inline EdgeForm as_edge_form(const FieldData& d) {
  if (d.kind != FieldKind::EdgeForm) fail(ErrorKind::ParseError, "expected an edge_form field");
  return EdgeForm{d.values};
}

// ---------------------------------------------------------------------------
// Molecules
// ---------------------------------------------------------------------------

inline Json to_json(const Molecule& mu) {
  Json atoms = Json::array();
  for (const Atom& a : mu.atoms) atoms.push_back({a.vertex, a.coefficient});
  Json j;
  j["atoms"] = std::move(atoms);
  return j;
}

inline Molecule molecule_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"atoms"}, "molecule");
  Molecule mu;
  for (const Json& a : detail::as_array(detail::require_key(j, "atoms", "molecule"), "atoms")) {
    if (!a.is_array() || a.size() != 2) fail(ErrorKind::ParseError, "atom must be [vertex, coefficient]");
    mu.atoms.push_back({detail::as_int(a[0], "vertex"), detail::as_number(a[1], "coefficient")});
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline Json to_json(const TriMesh& mesh, const FreeNormReport& r) {
  auto opt = [](const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); };
  Json j;
  j["method"] = to_string(r.method);
  j["dual_value"] = opt(r.dual_value);
  j["primal_graph_value"] = opt(r.primal_graph_value);
  j["primal_field_value"] = opt(r.primal_field_value);
  j["duality_gap"] = opt(r.duality_gap);
  j["field_lower_bound"] = opt(r.field_lower_bound);
  j["optimal_potential"] = r.optimal_potential ? Json(r.optimal_potential->values) : Json(nullptr);
  j["optimal_flow"] = r.optimal_flow ? Json(*r.optimal_flow) : Json(nullptr);
  if (r.optimal_field) {
    Json cells = Json::array();
    for (int t = 0; t < r.optimal_field->cell_count(); ++t) {
      cells.push_back({r.optimal_field->get(t).x, r.optimal_field->get(t).y});
    }
    j["optimal_field"] = std::move(cells);
  } else {
    j["optimal_field"] = nullptr;
  }
  // Optimal flows are generally not unique; only the values are.
  j["flow_unique"] = false;
  Json diag;
  diag["dual_lp_iterations"] = r.dual_lp_iterations;
  diag["graph_iterations"] = r.graph_iterations;
  diag["field_iterations"] = r.field_iterations;
  diag["flow_feasibility"] = r.flow_feasibility;
  diag["field_divergence_residual"] = r.field_divergence_residual;
  j["diagnostics"] = std::move(diag);
  j["mesh_hash"] = mesh_hash(mesh);
  return j;
}

inline FreeNormReport free_norm_report_from_json(const TriMesh& mesh, const Json& j) {
  detail::reject_unknown_keys(j,
                              {"method", "dual_value", "primal_graph_value", "primal_field_value",
                               "duality_gap", "field_lower_bound", "optimal_potential", "optimal_flow",
                               "optimal_field", "flow_unique", "diagnostics", "mesh_hash", "molecule"},
                              "report");
  if (j.contains("mesh_hash") && j["mesh_hash"] != mesh_hash(mesh)) {
    fail(ErrorKind::ParseError, "report was written for a different mesh");
  }
  auto opt = [&](std::string_view key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return detail::as_number(j[key], key);
  };
  FreeNormReport r;
  const Json& method = detail::require_key(j, "method", "report");
  if (!method.is_string()) fail(ErrorKind::ParseError, "method must be a string");
  try {
    r.method = norm_method_from_string(method.get<std::string>());
  } catch (const Error& e) {
    fail(ErrorKind::ParseError, e.detail());
  }
  r.dual_value = opt("dual_value");
  r.primal_graph_value = opt("primal_graph_value");
  r.primal_field_value = opt("primal_field_value");
  r.duality_gap = opt("duality_gap");
  r.field_lower_bound = opt("field_lower_bound");
  if (j.contains("optimal_potential") && !j["optimal_potential"].is_null()) {
    r.optimal_potential = ScalarField{detail::number_list(j["optimal_potential"], "optimal_potential")};
  }
  if (j.contains("optimal_flow") && !j["optimal_flow"].is_null()) {
    r.optimal_flow = detail::number_list(j["optimal_flow"], "optimal_flow");
  }
  if (j.contains("optimal_field") && !j["optimal_field"].is_null()) {
    VectorField g = VectorField::zeros(mesh);
    const Json& cells = detail::as_array(j["optimal_field"], "optimal_field");
    if (static_cast<int>(cells.size()) != g.cell_count()) fail(ErrorKind::ParseError, "optimal_field size");
    for (int t = 0; t < g.cell_count(); ++t) {
      const Json& c = cells[t];
      if (!c.is_array() || c.size() != 2) fail(ErrorKind::ParseError, "cell vector must be [a, b]");
      g.set(t, {detail::as_number(c[0], "component"), detail::as_number(c[1], "component")});
    }
    r.optimal_field = std::move(g);
  }
  if (j.contains("diagnostics")) {
    const Json& d = j["diagnostics"];
    detail::reject_unknown_keys(d,
                                {"dual_lp_iterations", "graph_iterations", "field_iterations",
                                 "flow_feasibility", "field_divergence_residual"},
                                "diagnostics");
    if (d.contains("dual_lp_iterations")) r.dual_lp_iterations = detail::as_int(d["dual_lp_iterations"], "iterations");
    if (d.contains("graph_iterations")) r.graph_iterations = detail::as_int(d["graph_iterations"], "iterations");
    if (d.contains("field_iterations")) r.field_iterations = detail::as_int(d["field_iterations"], "iterations");
    if (d.contains("flow_feasibility")) r.flow_feasibility = detail::as_number(d["flow_feasibility"], "residual");
    if (d.contains("field_divergence_residual")) {
      r.field_divergence_residual = detail::as_number(d["field_divergence_residual"], "residual");
    }
  }
  return r;
}

inline Json to_json(const ExperimentReport& r) {
  Json j;
  j["kind"] = r.kind;
  j["passed"] = r.passed;
  j["columns"] = r.columns;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json jr = Json::array();
    for (double x : row) jr.push_back(detail::number_or_null(x));
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  Json summary = Json::object();
  for (const auto& [key, value] : r.summary) summary[key] = detail::number_or_null(value);
  j["summary"] = std::move(summary);
  j["notes"] = r.notes;
  return j;
}

inline ExperimentReport experiment_report_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"kind", "passed", "columns", "rows", "summary", "notes"}, "report");
  ExperimentReport r;
  const Json& kind = detail::require_key(j, "kind", "report");
  const Json& passed = detail::require_key(j, "passed", "report");
  if (!kind.is_string() || !passed.is_boolean()) fail(ErrorKind::ParseError, "malformed report header");
  r.kind = kind.get<std::string>();
  r.passed = passed.get<bool>();
  for (const Json& c : detail::as_array(detail::require_key(j, "columns", "report"), "columns")) {
    if (!c.is_string()) fail(ErrorKind::ParseError, "column names must be strings");
    r.columns.push_back(c.get<std::string>());
  }
  for (const Json& row : detail::as_array(detail::require_key(j, "rows", "report"), "rows")) {
    std::vector<double> values;
    for (const Json& x : detail::as_array(row, "row")) values.push_back(detail::number_from_nullable(x, "cell"));
    if (values.size() != r.columns.size()) fail(ErrorKind::ParseError, "row width mismatch");
    r.rows.push_back(std::move(values));
  }
  if (j.contains("summary")) {
    if (!j["summary"].is_object()) fail(ErrorKind::ParseError, "summary must be an object");
    for (const auto& [key, value] : j["summary"].items()) {
      r.summary.emplace_back(key, detail::number_from_nullable(value, key));
    }
  }
  if (j.contains("notes")) {
    for (const Json& n : detail::as_array(j["notes"], "notes")) {
      if (!n.is_string()) fail(ErrorKind::ParseError, "notes must be strings");
      r.notes.push_back(n.get<std::string>());
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Shortest round-trip representation; empty for missing or non-finite values.
inline std::string csv_number(std::optional<double> x) {
  if (!x || !std::isfinite(*x)) return "";
  return Json(*x).dump();
}

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const ExperimentReport& r) {
  std::string out;
  for (std::size_t c = 0; c < r.columns.size(); ++c) out += (c ? "," : "") + csv_escape(r.columns[c]);
  out += "\n";
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + csv_number(row[c]);
    out += "\n";
  }
  return out;
}

inline std::string to_csv(const FreeNormReport& r) {
  std::string out = "method,dual_value,primal_graph_value,primal_field_value,duality_gap\n";
  out += std::string(to_string(r.method)) + "," + csv_number(r.dual_value) + "," +
         csv_number(r.primal_graph_value) + "," + csv_number(r.primal_field_value) + "," +
         csv_number(r.duality_gap) + "\n";
  return out;
}

inline Json error_envelope(ErrorKind kind, std::string_view message) {
  Json inner;
  inner["kind"] = to_string(kind);
  inner["message"] = message;
  Json j;
  j["error"] = std::move(inner);
  return j;
}

}  // namespace freeflow

#endif  // FREEFLOW_IO_HPP
