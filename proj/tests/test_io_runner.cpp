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

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "oracles.hpp"

using namespace freeflow;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("freeflow_test_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string samples(const std::string& name) { return std::string(FREEFLOW_SAMPLES_DIR) + "/" + name; }

struct Shell {
  int status;
  std::string out;
};

Shell sh(const std::string& args) {
  const std::string cmd = std::string(FREEFLOW_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

void write_mesh(const std::string& path, const TriMesh& m) { write_text_file(path, dump_json(mesh_to_json(m))); }

}  // namespace

TEST(Io, MeshRoundTrip) {
  for (const TriMesh& m : {oracle::make(PrimitiveKind::Icosphere, 1), oracle::make(PrimitiveKind::Torus),
                           oracle::make(PrimitiveKind::CircleGraph)}) {
    const Json j = mesh_to_json(m);
    const TriMesh back = mesh_from_json(parse_json(dump_json(j)));
    EXPECT_EQ(mesh_to_json(back), j);
    EXPECT_EQ(mesh_hash(back), mesh_hash(m));
  }
}

TEST(Io, HashIgnoresPositionsButNotLengths) {
  const TriMesh m = oracle::make(PrimitiveKind::FlatRect, 1);
  MeshInput in = m.to_input();
  const TriMesh bare = build_mesh(in);
  EXPECT_EQ(mesh_hash(bare), mesh_hash(m));
  in.edges[0].length *= 1.0001;
  EXPECT_NE(mesh_hash(build_mesh(in)), mesh_hash(m));
  EXPECT_NE(mesh_hash(m.with_base_vertex(1)), mesh_hash(m));
  // Known digest of the empty string.
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Io, FieldRoundTrips) {
  std::mt19937_64 rng(1);
  const TriMesh m = oracle::make(PrimitiveKind::Icosphere, 1);
  const ScalarField f = oracle::random_scalar(m, rng);
  const VectorField g = oracle::random_vector(m, rng);
  const EdgeForm w = d0(m, f);
  EXPECT_EQ(as_scalar_field(field_from_json(m, parse_json(dump_json(to_json(m, f))))).values, f.values);
  const VectorField g2 = as_vector_field(m, field_from_json(m, parse_json(dump_json(to_json(m, g)))));
  EXPECT_TRUE(std::equal(g.data().begin(), g.data().end(), g2.data().begin()));
  EXPECT_EQ(as_edge_form(field_from_json(m, parse_json(dump_json(to_json(m, w))))).values, w.values);
  const OneForm df = gradient(m, f);
  EXPECT_EQ(to_json(m, as_one_form(m, field_from_json(m, to_json(m, df)))), to_json(m, df));
}

TEST(Io, FieldForAnotherMeshIsRejected) {
  const TriMesh a = oracle::make(PrimitiveKind::Icosphere, 0);
  const TriMesh b = a.with_base_vertex(3);
  const Json j = to_json(a, ScalarField::zeros(a));
  try {
    field_from_json(b, j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  }
  Json wrong_kind = j;
  wrong_kind["kind"] = "tensor";
  EXPECT_THROW(field_from_json(a, wrong_kind), Error);
  Json short_values = j;
  short_values["values"].erase(0);
  EXPECT_THROW(field_from_json(a, short_values), Error);
  EXPECT_THROW(as_vector_field(a, field_from_json(a, j)), Error);
}

TEST(Io, UnknownKeysAndMalformedInput) {
  Json m = mesh_to_json(oracle::make(PrimitiveKind::Icosphere, 0));
  m["colour"] = "blue";
  EXPECT_THROW(mesh_from_json(m), Error);
  EXPECT_THROW(molecule_from_json(parse_json(R"({"atoms": [[1]]})")), Error);
  EXPECT_THROW(molecule_from_json(parse_json(R"({"atoms": [], "extra": 1})")), Error);
  try {
    parse_json("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  }
  EXPECT_THROW(run_config_from_json(parse_json(R"({"command": "free-norm", "bogus": 1})")), Error);
  EXPECT_THROW(run_config_from_json(parse_json(R"({"command": "check-currents", "tol": -1})")), Error);
}

TEST(Io, MoleculeRoundTrip) {
  const Molecule mu{{{3, 1.5}, {7, -0.25}}};
  EXPECT_EQ(molecule_from_json(parse_json(dump_json(to_json(mu)))), mu);
}

TEST(Io, FreeNormReportRoundTrip) {
  const TriMesh m = oracle::make(PrimitiveKind::FlatRect, 2);
  const FreeNormReport r = free_norm(m, {{{5, 1.0}, {12, -1.0}}}, NormMethod::All);
  const Json j = to_json(m, r);
  const FreeNormReport back = free_norm_report_from_json(m, parse_json(dump_json(j)));
  EXPECT_EQ(to_json(m, back), j);
  EXPECT_THROW(free_norm_report_from_json(m.with_base_vertex(2), j), Error);
}

TEST(Io, ExperimentReportRoundTripKeepsMissingValues) {
  ExperimentReport r;
  r.kind = "refine";
  r.columns = {"a", "b"};
  r.rows = {{1.0, std::numeric_limits<double>::quiet_NaN()}, {0.1, 2e-17}};
  r.summary = {{"x", 3.0}};
  r.notes = {"n"};
  r.passed = true;
  const Json j = to_json(r);
  EXPECT_TRUE(j["rows"][0][1].is_null());
  const ExperimentReport back = experiment_report_from_json(parse_json(dump_json(j)));
  EXPECT_EQ(to_json(back), j);
  EXPECT_TRUE(std::isnan(back.rows[0][1]));
  EXPECT_EQ(back.rows[1][1], 2e-17);
}

TEST(Io, CsvEscapingAndNumbers) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_number(0.1), "0.1");
  EXPECT_EQ(csv_number(std::nullopt), "");
  EXPECT_EQ(std::stod(csv_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Runner, FreeNormOnBundledSample) {
  RunConfig c;
  c.command = "free-norm";
  c.mesh = samples("flat_rect_l2.json");
  c.molecule = samples("dipole.json");
  const RunResult r = run(c);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Json j = parse_json(r.output);
  EXPECT_TRUE(j.contains("duality_gap"));
  EXPECT_LE(std::fabs(j["duality_gap"].get<double>()), 1e-6);
  EXPECT_NEAR(j["dual_value"].get<double>(), 0.5, 1e-12);
}

TEST(Runner, InvalidMeshGivesEnvelope) {
  RunConfig c;
  c.command = "validate-mesh";
  c.mesh = samples("bad_mesh.json");
  const RunResult r = run(c);
  EXPECT_EQ(r.exit_code, 1);
  const Json j = parse_json(r.output);
  EXPECT_EQ(j["error"]["kind"], "TriangleInequalityViolated");
  c.mesh = samples("missing.json");
  EXPECT_EQ(parse_json(run(c).output)["error"]["kind"], "ParseError");
}

TEST(Runner, RunsAreDeterministic) {
  RunConfig c;
  c.command = "free-norm";
  c.mesh = samples("flat_rect_l2.json");
  c.molecule = samples("dipole.json");
  EXPECT_EQ(run(c).output, run(c).output);
  RunConfig e;
  e.command = "experiment";
  e.experiment = "weakstar";
  e.config = samples("weakstar_random.json");
  EXPECT_EQ(run(e).output, run(e).output);
}

TEST(Runner, CalcAndCurrents) {
  TempDir tmp;
  const TriMesh m = oracle::make(PrimitiveKind::Annulus);
  write_mesh(tmp.file("m.json"), m);
  write_text_file(tmp.file("w.json"), dump_json(to_json(m, angular_form(m))));
  RunConfig c;
  c.command = "check-currents";
  c.mesh = tmp.file("m.json");
  c.form = tmp.file("w.json");
  RunResult r = run(c);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(parse_json(r.output)["kind"], "closed_not_exact");
  EXPECT_EQ(parse_json(r.output)["betti1"], 1);

  ScalarField f = ScalarField::zeros(m);
  for (VertexId v = 0; v < m.vertex_count(); ++v) f[v] = (*m.positions())[v].x;
  write_text_file(tmp.file("f.json"), dump_json(to_json(m, f)));
  RunConfig g;
  g.command = "calc";
  g.op = "grad";
  g.mesh = tmp.file("m.json");
  g.field = tmp.file("f.json");
  g.out = tmp.file("df.json");
  r = run(g);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const FieldData df = field_from_json(m, parse_json(read_text_file(g.out)));
  EXPECT_EQ(df.kind, FieldKind::OneForm);
  g.op = "norms";
  g.out.clear();
  EXPECT_NEAR(parse_json(run(g).output)["lip_edgewise"].get<double>(), 1.0, 1e-12);
  g.op = "div";
  EXPECT_EQ(parse_json(run(g).output)["error"]["kind"], "ParseError");
}

TEST(Runner, ExperimentFailureExitsTwo) {
  TempDir tmp;
  // Two equal scales can never give a strictly decreasing column.
  write_text_file(tmp.file("c.json"), R"({"length": 8, "per_unit": 4, "ks": [1, 1]})");
  RunConfig c;
  c.command = "experiment";
  c.experiment = "cutoff";
  c.config = tmp.file("c.json");
  const RunResult r = run(c);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(r.status, "fail");
}

TEST(Batch, EmptyManifestGivesHeaderOnly) {
  const BatchResult r = batch(parse_json(R"({"entries": []})"));
  EXPECT_EQ(r.csv, kBatchHeader);
  EXPECT_EQ(r.errors, 0);
}

TEST(Batch, BundledManifestRunsThreeEntries) {
  const BatchResult r = batch(parse_json(read_text_file(samples("batch.json"))), FREEFLOW_SAMPLES_DIR);
  EXPECT_EQ(r.errors, 0);
  EXPECT_EQ(r.failures, 0);
  std::istringstream in(r.csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    ASSERT_GE(cells.size(), 8u);
    EXPECT_EQ(cells[1], "free-norm");
    EXPECT_LE(std::fabs(std::stod(cells[6])), 1e-6);
    EXPECT_EQ(cells[7], "pass");
  }
  EXPECT_EQ(rows, 3);
  EXPECT_GE(r.cache_hits, 1);
}

TEST(Batch, BadEntryDoesNotAffectOthers) {
  const Json m = parse_json(R"({"entries": [
    {"command": "free-norm", "mesh": "flat_rect_l2.json", "molecule": "dipole.json"},
    {"command": "free-norm", "mesh": "nowhere.json", "molecule": "dipole.json"},
    {"command": "free-norm", "mesh": "flat_rect_l2.json", "molecule": "dipole.json", "method": "dual"}
  ]})");
  const BatchResult r = batch(m, FREEFLOW_SAMPLES_DIR);
  EXPECT_EQ(r.errors, 1);
  std::istringstream in(r.csv);
  std::string header, a, b, c;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  std::getline(in, c);
  EXPECT_NE(a.find(",pass,"), std::string::npos);
  EXPECT_NE(b.find(",error,"), std::string::npos);
  EXPECT_NE(c.find(",pass,"), std::string::npos);
}

TEST(Cli, HelpDocumentsSubcommands) {
  const Shell s = sh("--help");
  EXPECT_EQ(s.status, 0);
  for (const char* sub : {"gen-mesh", "validate-mesh", "calc", "check-currents", "free-norm", "experiment", "batch"}) {
    EXPECT_NE(s.out.find(sub), std::string::npos) << sub;
  }
  EXPECT_NE(sh("free-norm --help").out.find("--method"), std::string::npos);
}

TEST(Cli, GenerateValidateAndSolve) {
  TempDir tmp;
  Shell s = sh("gen-mesh --kind icosphere --level 1 -o " + tmp.file("s.json"));
  ASSERT_EQ(s.status, 0);
  s = sh("validate-mesh --mesh " + tmp.file("s.json"));
  ASSERT_EQ(s.status, 0);
  const Json v = parse_json(s.out);
  EXPECT_EQ(v["faces"], 80);
  EXPECT_EQ(v["euler_characteristic"], 2);
  write_text_file(tmp.file("mu.json"), R"({"atoms": [[20, 1.0], [30, -2.0]]})");
  s = sh("free-norm --mesh " + tmp.file("s.json") + " --molecule " + tmp.file("mu.json") +
         " --method graph --format csv");
  ASSERT_EQ(s.status, 0);
  EXPECT_EQ(s.out.rfind("method,dual_value", 0), 0u);
}

TEST(Cli, ErrorsExitOneWithEnvelope) {
  const Shell s = sh("validate-mesh --mesh " + samples("bad_mesh.json"));
  EXPECT_EQ(s.status, 1);
  EXPECT_EQ(parse_json(s.out)["error"]["kind"], "TriangleInequalityViolated");
  EXPECT_NE(sh("free-norm --mesh x.json").status, 0);
}

TEST(Cli, ReportsAreByteIdentical) {
  TempDir tmp;
  const std::string args = "free-norm --mesh " + samples("flat_rect_l2.json") + " --molecule " + samples("dipole.json");
  ASSERT_EQ(sh(args + " -o " + tmp.file("a.json")).status, 0);
  ASSERT_EQ(sh(args + " -o " + tmp.file("b.json")).status, 0);
  EXPECT_EQ(read_text_file(tmp.file("a.json")), read_text_file(tmp.file("b.json")));
}

TEST(Cli, BatchHonoursThreadCap) {
  const Shell s = sh("batch " + samples("batch.json"));
  EXPECT_EQ(s.status, 0);
  EXPECT_EQ(std::count(s.out.begin(), s.out.end(), '\n'), 4);
  setenv("FREEFLOW_THREADS", "1", 1);
  EXPECT_EQ(batch_threads(), 1);
  const Shell capped = sh("batch " + samples("batch.json"));
  EXPECT_EQ(capped.status, 0);
  EXPECT_EQ(std::count(capped.out.begin(), capped.out.end(), '\n'), 4);
  setenv("FREEFLOW_THREADS", "zero", 1);
  EXPECT_GE(batch_threads(), 1);
  unsetenv("FREEFLOW_THREADS");
}
