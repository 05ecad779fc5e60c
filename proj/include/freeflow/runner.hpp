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

#ifndef FREEFLOW_RUNNER_HPP
#define FREEFLOW_RUNNER_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "freeflow/currents.hpp"
#include "freeflow/experiments.hpp"
#include "freeflow/freenorm.hpp"
#include "freeflow/io.hpp"
#include "freeflow/primitives.hpp"

namespace freeflow {

/// One invocation of a subcommand. Paths are used as given.
struct RunConfig {
  std::string command;  // gen-mesh validate-mesh calc check-currents free-norm experiment
  // inputs
  std::string mesh;
  std::string molecule;
  std::string field;
  std::string form;
  std::string config;
  // selectors
  std::string op;          // calc: grad | div | norms
  std::string experiment;  // cutoff | extension | weakstar | refine
  std::string method = "all";
  // gen-mesh
  std::string kind;
  PrimitiveParams primitive;
  // numerics
  double tol = kDefaultCurrentTolerance;
  FieldSolverParams field_params;
  std::uint64_t seed = 42;
  // output
  std::string out;
  std::string format = "json";
};

struct RunResult {
  int exit_code = 0;
  /// The artifact (or error envelope) as text.
  std::string output;
  // batch summary fields
  std::string status = "pass";
  std::optional<double> value;
  std::optional<double> gap;
  std::string message;
};

namespace detail {

inline void check_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorKind::InvalidParams, std::string(what) + " must be positive");
}

inline void validate(const RunConfig& c) {
  check_positive(c.tol, "tol");
  check_positive(c.field_params.tol, "field tol");
  check_positive(c.field_params.step, "step");
  check_positive(c.field_params.gap_tol, "gap_tol");
  if (c.field_params.max_iter < 1) fail(ErrorKind::InvalidParams, "max_iter must be positive");
  if (c.format != "json" && c.format != "csv") fail(ErrorKind::InvalidParams, "format must be json or csv");
}

inline std::string require_path(const std::string& p, const char* what) {
  if (p.empty()) fail(ErrorKind::InvalidParams, std::string("missing --") + what);
  return p;
}

inline std::string get_string(const Json& j, const char* what) {
  if (!j.is_string()) fail(ErrorKind::ParseError, std::string(what) + " must be a string");
  return j.get<std::string>();
}

}  // namespace detail

/// Reads a RunConfig from a JSON object (batch manifest entries). Unknown keys
/// are rejected.
inline RunConfig run_config_from_json(const Json& j) {
  detail::reject_unknown_keys(
      j,
      {"command", "mesh", "molecule", "field", "form", "config", "op", "experiment", "method", "kind",
       "level", "nx", "ny", "width", "height", "radius", "r_inner", "r_outer", "n_radial", "n_angular",
       "major_radius", "minor_radius", "n", "length", "alternate_diagonals", "base_vertex", "tol",
       "max_iter", "step", "field_tol", "gap_tol", "seed", "out", "format"},
      "run config");
  RunConfig c;
  c.command = detail::get_string(detail::require_key(j, "command", "run config"), "command");
  auto str = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = detail::get_string(j[key], key);
  };
  auto integer = [&](const char* key, std::optional<int>& dst) {
    if (j.contains(key)) dst = detail::as_int(j[key], key);
  };
  auto real = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key)) dst = detail::as_number(j[key], key);
  };
  str("mesh", c.mesh);
  str("molecule", c.molecule);
  str("field", c.field);
  str("form", c.form);
  str("config", c.config);
  str("op", c.op);
  str("experiment", c.experiment);
  str("method", c.method);
  str("kind", c.kind);
  str("out", c.out);
  str("format", c.format);
  integer("level", c.primitive.level);
  integer("nx", c.primitive.nx);
  integer("ny", c.primitive.ny);
  real("width", c.primitive.width);
  real("height", c.primitive.height);
  real("radius", c.primitive.radius);
  real("r_inner", c.primitive.r_inner);
  real("r_outer", c.primitive.r_outer);
  integer("n_radial", c.primitive.n_radial);
  integer("n_angular", c.primitive.n_angular);
  real("major_radius", c.primitive.major_radius);
  real("minor_radius", c.primitive.minor_radius);
  integer("n", c.primitive.n);
  real("length", c.primitive.length);
  integer("base_vertex", c.primitive.base_vertex);
  if (j.contains("alternate_diagonals")) {
    if (!j["alternate_diagonals"].is_boolean()) fail(ErrorKind::ParseError, "alternate_diagonals must be boolean");
    c.primitive.alternate_diagonals = j["alternate_diagonals"].get<bool>();
  }
  if (j.contains("tol")) c.tol = detail::as_number(j["tol"], "tol");
  if (j.contains("max_iter")) c.field_params.max_iter = detail::as_int(j["max_iter"], "max_iter");
  if (j.contains("step")) c.field_params.step = detail::as_number(j["step"], "step");
  if (j.contains("field_tol")) c.field_params.tol = detail::as_number(j["field_tol"], "field_tol");
  if (j.contains("gap_tol")) c.field_params.gap_tol = detail::as_number(j["gap_tol"], "gap_tol");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail(ErrorKind::ParseError, "seed must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  detail::validate(c);
  return c;
}

// ---------------------------------------------------------------------------
// Experiment configuration files
// ---------------------------------------------------------------------------

inline CutoffExperimentConfig cutoff_config_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"experiment", "length", "per_unit", "ks"}, "cutoff config");
  CutoffExperimentConfig c;
  if (j.contains("length")) c.length = detail::as_number(j["length"], "length");
  if (j.contains("per_unit")) c.per_unit = detail::as_int(j["per_unit"], "per_unit");
  if (j.contains("ks")) c.ks = detail::number_list(j["ks"], "ks");
  detail::check_positive(c.length, "length");
  if (c.per_unit < 1) fail(ErrorKind::InvalidParams, "per_unit must be positive");
  for (double k : c.ks) detail::check_positive(k, "k");
  return c;
}

inline ExtensionExperimentConfig extension_config_from_json(const Json& j) {
  detail::reject_unknown_keys(j, {"experiment", "n_radial", "n_angular", "region_inner", "region_outer"},
                              "extension config");
  ExtensionExperimentConfig c;
  if (j.contains("n_radial")) c.n_radial = detail::as_int(j["n_radial"], "n_radial");
  if (j.contains("n_angular")) c.n_angular = detail::as_int(j["n_angular"], "n_angular");
  if (j.contains("region_inner")) c.region_inner = detail::as_number(j["region_inner"], "region_inner");
  if (j.contains("region_outer")) c.region_outer = detail::as_number(j["region_outer"], "region_outer");
  return c;
}

inline WeakstarExperimentConfig weakstar_config_from_json(const Json& j, std::uint64_t seed) {
  detail::reject_unknown_keys(
      j, {"experiment", "kind", "level", "sequence", "field", "steps", "radius", "start_fraction", "seed"},
      "weakstar config");
  WeakstarExperimentConfig c;
  c.seed = seed;
  if (j.contains("kind")) c.kind = detail::get_string(j["kind"], "kind");
  if (j.contains("level")) c.level = detail::as_int(j["level"], "level");
  if (j.contains("sequence")) c.sequence = detail::get_string(j["sequence"], "sequence");
  if (j.contains("field")) c.field = detail::get_string(j["field"], "field");
  if (j.contains("steps")) c.steps = detail::as_int(j["steps"], "steps");
  if (j.contains("radius")) c.radius = detail::as_number(j["radius"], "radius");
  if (j.contains("start_fraction")) c.start_fraction = detail::as_number(j["start_fraction"], "start_fraction");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail(ErrorKind::ParseError, "seed must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

inline RefinementConfig refinement_config_from_json(const Json& j, const FieldSolverParams& defaults) {
  detail::reject_unknown_keys(j, {"experiment", "kind", "levels", "atoms", "field", "max_iter", "field_tol",
                                  "step", "gap_tol"},
                              "refine config");
  RefinementConfig c;
  c.field_params = defaults;
  if (j.contains("kind")) c.kind = primitive_kind_from_string(detail::get_string(j["kind"], "kind"));
  if (j.contains("levels")) {
    c.levels.clear();
    for (const Json& l : detail::as_array(j["levels"], "levels")) c.levels.push_back(detail::as_int(l, "level"));
  }
  if (j.contains("atoms")) {
    c.atoms.clear();
    for (const Json& a : detail::as_array(j["atoms"], "atoms")) {
      if (!a.is_array() || a.size() != 4) fail(ErrorKind::ParseError, "placed atom must be [x, y, z, coefficient]");
      c.atoms.push_back({{detail::as_number(a[0], "x"), detail::as_number(a[1], "y"), detail::as_number(a[2], "z")},
                         detail::as_number(a[3], "coefficient")});
    }
  }
  if (j.contains("field")) {
    if (!j["field"].is_boolean()) fail(ErrorKind::ParseError, "field must be boolean");
    c.field = j["field"].get<bool>();
  }
  if (j.contains("max_iter")) c.field_params.max_iter = detail::as_int(j["max_iter"], "max_iter");
  if (j.contains("field_tol")) c.field_params.tol = detail::as_number(j["field_tol"], "field_tol");
  if (j.contains("step")) c.field_params.step = detail::as_number(j["step"], "step");
  if (j.contains("gap_tol")) c.field_params.gap_tol = detail::as_number(j["gap_tol"], "gap_tol");
  return c;
}

inline ExperimentReport run_experiment(const std::string& name, const Json& config, const RunConfig& rc) {
  if (config.contains("experiment") && config["experiment"] != name) {
    fail(ErrorKind::InvalidParams, "config is for experiment '" + detail::get_string(config["experiment"], "experiment") + "'");
  }
  if (name == "cutoff") return run_cutoff_experiment(cutoff_config_from_json(config));
  if (name == "extension") return run_extension_experiment(extension_config_from_json(config));
  if (name == "weakstar") return run_weakstar_experiment(weakstar_config_from_json(config, rc.seed));
  if (name == "refine") return refinement_study(refinement_config_from_json(config, rc.field_params));
  fail(ErrorKind::InvalidParams, "unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------------------
// Running one command
// ---------------------------------------------------------------------------

/// Parsed meshes shared between batch entries, keyed by content hash.
class MeshCache {
 public:
  std::shared_ptr<const TriMesh> load(const std::string& path) {
    const std::string text = read_text_file(path);
    TriMesh mesh = mesh_from_json(parse_json(text, path));
    // positions are not part of the hash, so key on both
    const std::string key = mesh_hash(mesh) + (mesh.positions() ? sha256_hex(text) : std::string());
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      return it->second;
    }
    auto ptr = std::make_shared<const TriMesh>(std::move(mesh));
    entries_.emplace(key, ptr);
    return ptr;
  }

  int hits() const {
    std::lock_guard<std::mutex> lock(mu_);
    return hits_;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const TriMesh>> entries_;
  int hits_ = 0;
};

namespace detail {

inline std::string render(const Json& j) { return dump_json(j); }

inline RunResult run_unchecked(const RunConfig& c, MeshCache& cache) {
  validate(c);
  RunResult res;
  auto load_mesh = [&] { return cache.load(require_path(c.mesh, "mesh")); };

  if (c.command == "gen-mesh") {
    if (c.kind.empty()) fail(ErrorKind::InvalidParams, "missing --kind");
    const TriMesh mesh = generate_primitive(primitive_kind_from_string(c.kind), c.primitive);
    res.output = render(mesh_to_json(mesh));
    return res;
  }
  if (c.command == "validate-mesh") {
    const auto mesh = load_mesh();
    Json j;
    j["valid"] = true;
    j["dimension"] = mesh->dimension();
    j["vertices"] = mesh->vertex_count();
    j["edges"] = mesh->edge_count();
    j["faces"] = mesh->face_count();
    j["euler_characteristic"] = mesh->euler_characteristic();
    j["closed"] = mesh->is_closed();
    j["boundary_edges"] = mesh->boundary_edges().size();
    j["betti1"] = betti1(*mesh);
    int degenerate = 0;
    for (FaceId t = 0; t < mesh->face_count(); ++t) degenerate += mesh->face(t).degenerate ? 1 : 0;
    j["degenerate_faces"] = degenerate;
    j["mesh_hash"] = mesh_hash(*mesh);
    res.output = render(j);
    return res;
  }
  if (c.command == "calc") {
    const auto mesh = load_mesh();
    const FieldData data = field_from_json(*mesh, parse_json(read_text_file(require_path(c.field, "field")), c.field));
    if (c.op == "grad") {
      res.output = render(to_json(*mesh, gradient(*mesh, as_scalar_field(data))));
    } else if (c.op == "div") {
      res.output = render(to_json(*mesh, divergence(*mesh, as_vector_field(*mesh, data))));
    } else if (c.op == "norms") {
      Json j;
      j["kind"] = to_string(data.kind);
      if (data.kind == FieldKind::Scalar) {
        const ScalarField f = as_scalar_field(data);
        j["lip_edgewise"] = lip_constant(*mesh, f, LipMode::Edgewise);
        j["lip_pairwise_geodesic"] = lip_constant(*mesh, f, LipMode::PairwiseGeodesic);
      } else if (data.kind == FieldKind::Vector) {
        const VectorField g = as_vector_field(*mesh, data);
        j["l1"] = l1_norm(*mesh, g);
        j["linf"] = linf_norm(*mesh, g);
      } else if (data.kind == FieldKind::OneForm) {
        const OneForm g = as_one_form(*mesh, data);
        j["l1"] = l1_norm(*mesh, g);
        j["linf"] = linf_norm(*mesh, g);
      } else {
        fail(ErrorKind::InvalidParams, "norms need a scalar, vector or one_form field");
      }
      res.output = render(j);
    } else {
      fail(ErrorKind::InvalidParams, "calc op must be grad, div or norms");
    }
    return res;
  }
  if (c.command == "check-currents") {
    const auto mesh = load_mesh();
    const FieldData data = field_from_json(*mesh, parse_json(read_text_file(require_path(c.form, "form")), c.form));
    const CurrentClass cls = classify(*mesh, as_edge_form(data), c.tol);
    Json j;
    j["kind"] = to_string(cls.kind);
    j["closedness_residual"] = cls.closedness_residual;
    j["exactness_residual"] = cls.exactness_residual;
    j["tolerance"] = c.tol;
    j["betti1"] = mesh->dimension() == 2 ? Json(betti1(*mesh)) : Json(nullptr);
    j["witness_potential"] = cls.witness_potential ? Json(cls.witness_potential->values) : Json(nullptr);
    res.output = render(j);
    return res;
  }
  if (c.command == "free-norm") {
    const auto mesh = load_mesh();
    const Molecule raw =
        molecule_from_json(parse_json(read_text_file(require_path(c.molecule, "molecule")), c.molecule));
    for (const Atom& a : raw.atoms) {
      if (a.vertex < 0 || a.vertex >= mesh->vertex_count()) fail(ErrorKind::InvalidParams, "atom vertex out of range");
    }
    const Molecule mu = canonicalize(raw, mesh->base_vertex());
    const FreeNormReport rep = free_norm(*mesh, mu, norm_method_from_string(c.method), c.field_params);
    if (c.format == "csv") {
      res.output = to_csv(rep);
    } else {
      Json j = to_json(*mesh, rep);
      j["molecule"] = to_json(mu)["atoms"];
      res.output = render(j);
    }
    res.value = rep.dual_value ? rep.dual_value : rep.primal_graph_value ? rep.primal_graph_value : rep.primal_field_value;
    res.gap = rep.duality_gap;
    if (rep.duality_gap && std::fabs(*rep.duality_gap) > 1e-6 * std::max(1.0, *res.value)) {
      res.status = "fail";
      res.exit_code = 2;
    }
    return res;
  }
  if (c.command == "experiment") {
    if (c.experiment.empty()) fail(ErrorKind::InvalidParams, "missing experiment name");
    const Json config = c.config.empty() ? Json::object()
                                         : parse_json(read_text_file(c.config), c.config);
    const ExperimentReport rep = run_experiment(c.experiment, config, c);
    res.output = c.format == "csv" ? to_csv(rep) : render(to_json(rep));
    if (!rep.passed) {
      res.status = "fail";
      res.exit_code = 2;
    }
    if (!rep.rows.empty() && rep.rows.back().size() > 1) res.value = rep.rows.back()[1];
    return res;
  }
  fail(ErrorKind::InvalidParams, "unknown command '" + c.command + "'");
}

}  // namespace detail

/// Runs one command. Errors become an error envelope with exit code 1;
/// experiments (and free-norm duality checks) that miss their criterion exit 2.
/// The artifact is written to config.out when set.
inline RunResult run(const RunConfig& config, MeshCache& cache) {
  RunResult res;
  try {
    res = detail::run_unchecked(config, cache);
  } catch (const Error& e) {
    res = RunResult{};
    res.exit_code = 1;
    res.status = "error";
    res.message = e.what();
    res.output = dump_json(error_envelope(e.kind(), e.detail()));
    return res;
  } catch (const std::exception& e) {
    res = RunResult{};
    res.exit_code = 1;
    res.status = "error";
    res.message = e.what();
    res.output = dump_json(error_envelope(ErrorKind::SolverFailure, e.what()));
    return res;
  }
  if (!config.out.empty()) {
    try {
      write_text_file(config.out, res.output);
    } catch (const Error& e) {
      res.exit_code = 1;
      res.status = "error";
      res.message = e.what();
      res.output = dump_json(error_envelope(e.kind(), e.detail()));
    }
  }
  return res;
}

inline RunResult run(const RunConfig& config) {
  MeshCache cache;
  return run(config, cache);
}

// ---------------------------------------------------------------------------
// Batch
// ---------------------------------------------------------------------------

inline constexpr const char* kBatchHeader = "entry,command,mesh,molecule,method,value,gap,status,wall_seconds,message\n";

/// Worker count: FREEFLOW_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
inline int batch_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("FREEFLOW_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<int>(std::min<long>(v, n));
  }
  return n;
}

struct BatchResult {
  std::string csv;
  int failures = 0;
  int errors = 0;
  int cache_hits = 0;
};

/// Runs every entry of a manifest {"entries": [RunConfig...]}. Relative paths
/// are resolved against `base_dir`. A bad entry yields an error row; the other
/// entries are unaffected.
inline BatchResult batch(const Json& manifest, const std::filesystem::path& base_dir = {}) {
  detail::reject_unknown_keys(manifest, {"entries"}, "manifest");
  const Json& entries = detail::as_array(detail::require_key(manifest, "entries", "manifest"), "entries");
  const std::size_t n = entries.size();
  std::vector<std::string> rows(n);
  std::vector<int> status(n, 0);
  MeshCache cache;

  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative() && !base_dir.empty()) p = (base_dir / p).string();
  };
  auto run_entry = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c;
    RunResult r;
    try {
      c = run_config_from_json(entries[i]);
      if (c.command == "batch") fail(ErrorKind::InvalidParams, "nested batch");
      for (std::string* p : {&c.mesh, &c.molecule, &c.field, &c.form, &c.config, &c.out}) resolve(*p);
      r = run(c, cache);
    } catch (const Error& e) {
      r.exit_code = 1;
      r.status = "error";
      r.message = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string mesh = entries[i].is_object() && entries[i].contains("mesh") && entries[i]["mesh"].is_string()
                                 ? entries[i]["mesh"].get<std::string>()
                                 : std::string();
    const std::string mol = entries[i].is_object() && entries[i].contains("molecule") && entries[i]["molecule"].is_string()
                                ? entries[i]["molecule"].get<std::string>()
                                : std::string();
    std::string what = c.command;
    if (c.command == "experiment") what += ":" + c.experiment;
    rows[i] = std::to_string(i) + "," + csv_escape(what) + "," + csv_escape(mesh) + "," + csv_escape(mol) + "," +
              csv_escape(c.command == "free-norm" ? c.method : std::string()) + "," + csv_number(r.value) + "," +
              csv_number(r.gap) + "," + r.status + "," + csv_number(secs) + "," + csv_escape(r.message) + "\n";
    status[i] = r.exit_code;
  };

  const int threads = std::min<int>(batch_threads(), static_cast<int>(std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) run_entry(i);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  BatchResult out;
  out.csv = kBatchHeader;
  for (std::size_t i = 0; i < n; ++i) {
    out.csv += rows[i];
    if (status[i] == 2) ++out.failures;
    if (status[i] == 1) ++out.errors;
  }
  out.cache_hits = cache.hits();
  return out;
}

}  // namespace freeflow

#endif  // FREEFLOW_RUNNER_HPP
