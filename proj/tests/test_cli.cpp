#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "support.hpp"

using namespace trajq;
namespace fs = std::filesystem;

namespace {

json oracle_manifest() {
  return json::parse(R"({
    "seed": 7,
    "grid": {"n_assets": [2], "n_steps": [2, 3], "budget": [3], "encodings": ["binary"]},
    "generator": {"perm_cost_min": 0.01},
    "solver": {"name": "oracle"},
    "alphas": [0, 1, 2],
    "instances": 3,
    "perturbations": 4
  })");
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

int run_tool(const std::string& args) {
  const std::string cmd = std::string(TRAJQ_TOOL) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("manifest parsing") {
  const auto m = manifest_from_json(oracle_manifest());
  CHECK(m.cells.size() == 2);
  CHECK(m.cells[0].key() == "N2_T2_K3_binary");
  CHECK(m.seed == 7);
  CHECK(m.instances == 3);
  json no_seed = oracle_manifest();
  no_seed.erase("seed");
  CHECK_THROWS_AS(manifest_from_json(no_seed), ValidationError);
  json bad_solver = oracle_manifest();
  bad_solver["solver"]["name"] = "qaoa";
  CHECK_THROWS_AS(validate(manifest_from_json(bad_solver)), ValidationError);
  GridCell c;
  c.max_holding = 2;
  CHECK(c.key() == "N2_T3_K3_Kp2_binary");
}

TEST_CASE("overrides take precedence") {
  auto m = manifest_from_json(oracle_manifest());
  Overrides o;
  o.seed = 99;
  o.alphas = {0.5};
  o.encoding = "unary";
  apply_overrides(m, o);
  CHECK(m.seed == 99);
  CHECK(m.alphas == std::vector<double>{0.5});
  for (const auto& c : m.cells) CHECK(c.encoding == EncodingKind::unary);
}

TEST_CASE("gen is deterministic") {
  const auto m = manifest_from_json(oracle_manifest());
  const fs::path a = test::scratch_dir("gen_a"), b = test::scratch_dir("gen_b");
  const auto fa = cmd_gen(m, a);
  const auto fb = cmd_gen(m, b);
  REQUIRE(fa.size() == 6);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].filename() == fb[i].filename());
    CHECK(slurp(fa[i]) == slurp(fb[i]));
    CHECK_NOTHROW(validate(problem_from_json(read_json_file(fa[i]))));
  }
  CHECK(slurp(fa[0]) != slurp(fa[1]));
}

TEST_CASE("compile reports size and density") {
  const fs::path dir = test::scratch_dir("compile");
  GeneratorParams g = test::family(2, 3, 3);
  write_json_file(dir / "p.json", to_json(random_instance(g, 1)));
  std::ostringstream log;
  cmd_compile(dir / "p.json", EncodingKind::binary, dir / "q.json", log);
  CHECK(log.str() == "vars=12 density=0.52\n");
  const QuadraticProgram qp = qubo_from_json(read_json_file(dir / "q.json"));
  CHECK(qp.dimension() == 12);

  g.n_steps = 2;
  write_json_file(dir / "u.json", to_json(random_instance(g, 1)));
  std::ostringstream ulog;
  cmd_compile(dir / "u.json", EncodingKind::unary, dir / "uq.json", ulog);
  CHECK(ulog.str().rfind("vars=12 ", 0) == 0);

  write_text_file(dir / "bad.json", "{\"n_assets\": 2,");
  std::ostringstream blog;
  CHECK_THROWS_AS(cmd_compile(dir / "bad.json", EncodingKind::binary, dir / "x.json", blog), ValidationError);
}

TEST_CASE("tool exit codes") {
  const fs::path dir = test::scratch_dir("exit");
  write_text_file(dir / "bad.json", "{not json");
  CHECK(run_tool("compile " + (dir / "bad.json").string() + " --encoding binary --out " +
                 (dir / "o.json").string()) == kExitValidation);
  write_json_file(dir / "p.json", to_json(random_instance(test::family(2, 2, 3), 3)));
  CHECK(run_tool("compile " + (dir / "p.json").string() + " --encoding binary --out " +
                 (dir / "q.json").string()) == kExitOk);
  CHECK(run_tool("compile " + (dir / "p.json").string() + " --encoding gray --out " + (dir / "q2.json").string()) ==
        kExitValidation);
  CHECK(run_tool("solve " + (dir / "q.json").string() + " --solver exhaustive --out " +
                 (dir / "s.json").string()) == kExitOk);
  write_json_file(dir / "big.json", to_json(random_instance(test::family(3, 3, 7), 3)));
  CHECK(run_tool("compile " + (dir / "big.json").string() + " --encoding binary --out " +
                 (dir / "bq.json").string()) == kExitOk);
  CHECK(run_tool("solve " + (dir / "bq.json").string() + " --solver exhaustive --out " +
                 (dir / "bs.json").string()) == kExitGuard);
}

TEST_CASE("solve") {
  const fs::path dir = test::scratch_dir("solve");
  write_json_file(dir / "p.json", to_json(random_instance(test::family(2, 2, 3), 4)));
  std::ostringstream log;
  cmd_compile(dir / "p.json", EncodingKind::binary, dir / "q.json", log);

  SolveOptions opt;
  opt.seed = 5;
  opt.anneal.reads = 100;
  opt.anneal.sweeps = 200;
  const json ex = cmd_solve(dir / "q.json", "exhaustive", opt, dir / "ex.json", log);
  const json sa = cmd_solve(dir / "q.json", "sa", opt, dir / "sa.json", log);
  CHECK(sa.at("energy").get<double>() == doctest::Approx(ex.at("energy").get<double>()));
  CHECK(ex.at("feasible").get<bool>());
  CHECK(fs::exists(dir / "ex.samples.jsonl"));

  const json sa2 = cmd_solve(dir / "q.json", "sa", opt, dir / "sa2.json", log);
  CHECK(slurp(dir / "sa.samples.jsonl") == slurp(dir / "sa2.samples.jsonl"));

  opt.pipeline.reads = 1000;
  opt.pipeline.gauges = 5;
  opt.pipeline.sweeps = 100;
  opt.pipeline.pilot_reads = 20;
  const json pl = cmd_solve(dir / "q.json", "pipeline", opt, dir / "pl.json", log);
  CHECK(pl.at("diagnostics").at("reads_per_gauge") == json::array({200, 200, 200, 200, 200}));
  CHECK(pl.at("energy").get<double>() >= ex.at("energy").get<double>() - 1e-9);

  CHECK_THROWS_AS(cmd_solve(dir / "q.json", "qaoa", opt, dir / "x.json", log), ValidationError);
}

TEST_CASE("benchmark is reproducible and resumable") {
  const auto m = manifest_from_json(oracle_manifest());
  const fs::path a = test::scratch_dir("bench_a"), b = test::scratch_dir("bench_b");
  std::ostringstream log;
  const auto ra = cmd_benchmark(m, a, 1, log);
  REQUIRE(ra.size() == 2);
  for (const auto& r : ra) {
    REQUIRE(r.status == "ok");
    CHECK(r.row->s_values[0].second == 100.0);
  }
  cmd_benchmark(m, b, 2, log);
  CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
  CHECK(slurp(a / "results.dat") == slurp(b / "results.dat"));

  const std::string first = slurp(a / "results.csv");
  std::ostringstream relog;
  cmd_benchmark(m, a, 1, relog);
  CHECK(relog.str().find("cached") != std::string::npos);
  CHECK(relog.str().find("start") == std::string::npos);
  CHECK(slurp(a / "results.csv") == first);

  const Report rep = cmd_report(a / "results.csv", b);
  CHECK(rep.text == slurp(a / "results.txt"));
}

TEST_CASE("cell seeds depend on the cell") {
  GridCell a, b;
  b.n_steps = 4;
  CHECK(cell_seed(1, a) != cell_seed(1, b));
  CHECK(cell_seed(1, a) == cell_seed(1, a));
  CHECK(cell_seed(1, a) != cell_seed(2, a));
}
