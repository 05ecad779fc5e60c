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

// freeflow command-line front end.
//
// Exit status: 0 success, 1 error (a JSON error envelope is printed),
// 2 when an experiment or duality check misses its criterion.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "freeflow/freeflow.hpp"

namespace {

void add_output(CLI::App* cmd, freeflow::RunConfig& c) {
  cmd->add_option("--out,-o", c.out, "Write the result here instead of stdout");
}

void add_format(CLI::App* cmd, freeflow::RunConfig& c) {
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

void add_mesh(CLI::App* cmd, freeflow::RunConfig& c) {
  cmd->add_option("--mesh,-m", c.mesh, "Mesh JSON file")->required();
}

template <typename T>
void add_optional(CLI::App* cmd, const std::string& name, std::optional<T>& dst, const std::string& help) {
  cmd->add_option_function<T>(name, [&dst](const T& v) { dst = v; }, help);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace freeflow;
  CLI::App app{"Lipschitz-free norms, flows and currents on triangle meshes and metric graphs"};
  app.require_subcommand(1);
  RunConfig c;
  std::string manifest;

  auto* gen = app.add_subcommand("gen-mesh", "Generate a primitive mesh as JSON");
  gen->add_option("--kind", c.kind,
                  "flat_rect | icosphere | annulus | torus | poincare_disk_patch | circle_graph | interval_graph")
      ->required();
  add_optional(gen, "--level", c.primitive.level, "Refinement level");
  add_optional(gen, "--nx", c.primitive.nx, "Cells along x (flat_rect, torus)");
  add_optional(gen, "--ny", c.primitive.ny, "Cells along y (flat_rect, torus)");
  add_optional(gen, "--width", c.primitive.width, "Width (flat_rect, torus)");
  add_optional(gen, "--height", c.primitive.height, "Height (flat_rect, torus)");
  add_optional(gen, "--radius", c.primitive.radius, "Radius (icosphere, poincare_disk_patch chart)");
  add_optional(gen, "--r-inner", c.primitive.r_inner, "Inner radius (annulus; 0 gives a disk)");
  add_optional(gen, "--r-outer", c.primitive.r_outer, "Outer radius (annulus)");
  add_optional(gen, "--n-radial", c.primitive.n_radial, "Radial rings (annulus)");
  add_optional(gen, "--n-angular", c.primitive.n_angular, "Angular segments (annulus)");
  add_optional(gen, "--major-radius", c.primitive.major_radius, "Embedded torus major radius");
  add_optional(gen, "--minor-radius", c.primitive.minor_radius, "Embedded torus minor radius");
  add_optional(gen, "--n", c.primitive.n, "Edge count (graphs)");
  add_optional(gen, "--length", c.primitive.length, "Total length (graphs)");
  add_optional(gen, "--base-vertex", c.primitive.base_vertex, "Base vertex id");
  gen->add_flag("--alternate-diagonals", c.primitive.alternate_diagonals, "Alternate diagonals (flat_rect)");
  add_output(gen, c);

  auto* validate = app.add_subcommand("validate-mesh", "Validate a mesh file and print its summary");
  add_mesh(validate, c);
  add_output(validate, c);

  auto* calc = app.add_subcommand("calc", "Gradient, divergence or norms of a field");
  calc->add_option("op", c.op, "grad | div | norms")->required()->check(CLI::IsMember({"grad", "div", "norms"}));
  add_mesh(calc, c);
  calc->add_option("--field,-f", c.field, "Field JSON file")->required();
  add_output(calc, c);

  auto* currents = app.add_subcommand("check-currents", "Classify an edge 1-form as exact, closed or neither");
  add_mesh(currents, c);
  currents->add_option("--form", c.form, "Edge form JSON file")->required();
  currents->add_option("--tol", c.tol, "Residual tolerance (positive)");
  add_output(currents, c);

  auto* norm = app.add_subcommand("free-norm", "Free norm of a molecule by the dual and primal solvers");
  add_mesh(norm, c);
  norm->add_option("--molecule", c.molecule, "Molecule JSON file")->required();
  norm->add_option("--method", c.method, "dual | graph | field | all")
      ->check(CLI::IsMember({"dual", "graph", "field", "all"}));
  norm->add_option("--max-iter", c.field_params.max_iter, "Field solver iteration limit");
  norm->add_option("--step", c.field_params.step, "Field solver initial penalty");
  norm->add_option("--field-tol", c.field_params.tol, "Field solver divergence tolerance");
  norm->add_option("--gap-tol", c.field_params.gap_tol, "Field solver relative gap target");
  add_format(norm, c);
  add_output(norm, c);

  auto* exp = app.add_subcommand("experiment", "Run a numerical experiment");
  exp->add_option("name", c.experiment, "cutoff | extension | weakstar | refine")
      ->required()
      ->check(CLI::IsMember({"cutoff", "extension", "weakstar", "refine"}));
  exp->add_option("--config,-c", c.config, "Experiment config JSON (defaults when omitted)");
  exp->add_option("--seed", c.seed, "Random seed");
  add_format(exp, c);
  add_output(exp, c);

  auto* bat = app.add_subcommand("batch", "Run a manifest of commands and print a CSV summary");
  bat->add_option("manifest", manifest, "Manifest JSON {\"entries\": [...]}")->required();
  add_output(bat, c);
  bat->footer("Entries use the long option names as keys, e.g. "
              "{\"command\": \"free-norm\", \"mesh\": \"m.json\", \"molecule\": \"mu.json\"}. "
              "FREEFLOW_THREADS caps the number of worker threads.");

  CLI11_PARSE(app, argc, argv);

  if (bat->parsed()) {
    try {
      const Json m = parse_json(read_text_file(manifest), manifest);
      const BatchResult r = batch(m, std::filesystem::path(manifest).parent_path());
      if (c.out.empty()) {
        std::cout << r.csv;
      } else {
        write_text_file(c.out, r.csv);
      }
      if (r.errors > 0) return 1;
      return r.failures > 0 ? 2 : 0;
    } catch (const Error& e) {
      std::cout << dump_json(error_envelope(e.kind(), e.detail()));
      return 1;
    }
  }

  c.command = app.get_subcommands().front()->get_name();
  const RunResult r = run(c);
  if (c.out.empty() || r.exit_code == 1) std::cout << r.output;
  if (r.exit_code == 1) std::cerr << r.message << "\n";
  return r.exit_code;
}
