#include <iostream>

#include <CLI11.hpp>

#include "trajq/cli.hpp"

namespace fs = std::filesystem;
using namespace trajq;

namespace {

struct Args {
  std::string input;
  std::string out;
  std::string encoding;
  std::string solver = "sa";
  std::string slack = "binary";
  std::string hardware;
  std::uint64_t seed = 0;
  int jobs = 1;
  int reads = 0;
  int gauges = 0;
  int sweeps = 0;
  double chain_strength = 0.0;
  double epsilon = -1.0;
  std::vector<double> alphas;
};

void add_overrides(CLI::App* cmd, Args& a) {
  cmd->add_option("--reads", a.reads, "Reads per query")->check(CLI::PositiveNumber);
  cmd->add_option("--gauges", a.gauges, "Gauges per query (pipeline)")->check(CLI::PositiveNumber);
  cmd->add_option("--sweeps", a.sweeps, "Sweeps per read")->check(CLI::PositiveNumber);
  cmd->add_option("--chain-strength", a.chain_strength,
                  "Chain coupling as a multiple of the largest logical coefficient")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--epsilon", a.epsilon, "Relative coefficient noise")->check(CLI::NonNegativeNumber);
  cmd->add_option("--hardware", a.hardware, "Chimera fixture JSON")->check(CLI::ExistingFile);
}

Overrides overrides(const Args& a, const CLI::App* cmd) {
  Overrides o;
  if (cmd->count("--seed")) o.seed = a.seed;
  if (a.reads) o.reads = a.reads;
  if (a.gauges) o.gauges = a.gauges;
  if (a.sweeps) o.sweeps = a.sweeps;
  if (a.chain_strength > 0) o.chain_strength = a.chain_strength;
  if (a.epsilon >= 0) o.epsilon = a.epsilon;
  o.alphas = a.alphas;
  if (!a.hardware.empty()) o.hardware = a.hardware;
  if (!a.encoding.empty()) o.encoding = a.encoding;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory QUBO compiler, samplers and success-rate benchmark"};
  app.require_subcommand(1);
  Args a;

  auto* gen = app.add_subcommand("gen", "Generate problem instances from a manifest");
  gen->add_option("manifest", a.input, "Experiment manifest")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", a.out, "Output directory")->required();
  gen->add_option("--seed", a.seed, "Master seed (overrides the manifest)");

  auto* comp = app.add_subcommand("compile", "Compile a problem instance to a QUBO artifact");
  comp->add_option("spec", a.input, "Problem instance JSON")->required()->check(CLI::ExistingFile);
  comp->add_option("--encoding", a.encoding, "binary | unary | sequential | modified | partition")->required();
  comp->add_option("--slack", a.slack, "Slack encoding for liquidate mode: binary | unary");
  comp->add_option("--out", a.out, "Output artifact")->required();

  auto* solve = app.add_subcommand("solve", "Solve a QUBO artifact");
  solve->add_option("qubo", a.input, "QUBO artifact")->required()->check(CLI::ExistingFile);
  solve->add_option("--solver", a.solver, "exhaustive | sa | pipeline")
      ->check(CLI::IsMember({"exhaustive", "sa", "pipeline"}));
  solve->add_option("--seed", a.seed, "Solver seed");
  solve->add_option("--out", a.out, "Solution file")->required();
  add_overrides(solve, a);

  auto* bench = app.add_subcommand("benchmark", "Run a manifest grid and write results tables");
  bench->add_option("manifest", a.input, "Experiment manifest")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", a.out, "Output directory")->required();
  bench->add_option("--seed", a.seed, "Master seed (overrides the manifest)");
  bench->add_option("--jobs", a.jobs, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--alpha", a.alphas, "Perturbation level in percent (repeatable)");
  bench->add_option("--encoding", a.encoding, "Replace the encoding of every cell");
  add_overrides(bench, a);

  auto* report = app.add_subcommand("report", "Rebuild text and .dat tables from results.csv");
  report->add_option("results", a.input, "results.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--out", a.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) {
      auto m = load_manifest(a.input);
      apply_overrides(m, overrides(a, gen));
      const auto files = cmd_gen(m, a.out);
      std::cout << "wrote " << files.size() << " instances to " << a.out << "\n";
    } else if (*comp) {
      CompileOptions opt;
      opt.slack = parse_slack_encoding(a.slack);
      cmd_compile(a.input, parse_encoding(a.encoding), a.out, std::cout, opt);
    } else if (*solve) {
      SolveOptions opt;
      opt.seed = a.seed;
      ExperimentManifest tmp;
      tmp.cells = {GridCell{}};
      tmp.solver.name = a.solver;
      tmp.seed = a.seed;
      apply_overrides(tmp, overrides(a, solve));
      opt.anneal = tmp.solver.anneal;
      opt.pipeline = tmp.solver.pipeline;
      opt.hardware = tmp.hardware;
      cmd_solve(a.input, a.solver, opt, a.out, std::cout);
    } else if (*bench) {
      auto m = load_manifest(a.input);
      apply_overrides(m, overrides(a, bench));
      const auto res = cmd_benchmark(m, a.out, a.jobs, std::cout);
      int failed = 0;
      for (const auto& r : res) failed += r.status != "ok";
      std::cout << res.size() - failed << " cells ok, " << failed << " failed; results in " << a.out << "\n";
    } else if (*report) {
      const fs::path out = a.out.empty() ? fs::path(a.input).parent_path() : fs::path(a.out);
      std::cout << cmd_report(a.input, out).text;
    }
  } catch (const std::exception& e) {
    std::cerr << "trajq: " << e.what() << "\n";
    return exit_code(e);
  }
  return kExitOk;
}
