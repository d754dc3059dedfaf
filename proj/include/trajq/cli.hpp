#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trajq/io.hpp"
#include "trajq/metrics.hpp"

namespace trajq {

// Process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitGuard = 3;
constexpr int kExitIo = 4;

struct GridCell {
  int n_assets = 2;
  int n_steps = 3;
  int budget = 3;
  int max_holding = -1;  // negative: budget
  EncodingKind encoding = EncodingKind::binary;

  // "N2_T3_K3_binary" (with "_Kp<K'>" when K' differs from K).
  std::string key() const;
  bool operator==(const GridCell&) const = default;
};

struct SolverSettings {
  std::string name = "oracle";  // oracle | exhaustive | sa | pipeline
  AnnealConfig anneal;
  PipelineConfig pipeline;
};

struct ExperimentManifest {
  std::vector<GridCell> cells;
  GeneratorParams generator;
  CompileOptions compile;
  SolverSettings solver;
  ChimeraGraph hardware = chimera(8);
  std::vector<double> alphas = {0.0, 1.0, 2.0};
  int instances = 20;
  int perturbations = 100;
  PerturbationMode mode = PerturbationMode::eigen;
  bool nested = true;
  int reference_reads = 100'000;  // oracle fallback above the exhaustive guard
  std::uint64_t seed = 0;
  std::string source_hash;  // hash of the manifest bytes
};

// Relative hardware fixture paths resolve against base_dir.
ExperimentManifest manifest_from_json(const json& doc, const std::filesystem::path& base_dir = {});
ExperimentManifest load_manifest(const std::filesystem::path& path);
void validate(const ExperimentManifest& manifest);

// Command-line values that take precedence over the manifest or config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> reads;
  std::optional<int> gauges;
  std::optional<int> sweeps;
  std::optional<double> chain_strength;
  std::optional<double> epsilon;
  std::vector<double> alphas;
  std::optional<std::filesystem::path> hardware;
  std::optional<std::string> encoding;
};

void apply_overrides(ExperimentManifest& manifest, const Overrides& o);

std::uint64_t cell_seed(std::uint64_t master, const GridCell& cell);
ProblemFamily family_for(const ExperimentManifest& manifest, const GridCell& cell);
QuboSolver make_solver(const SolverSettings& settings, const ChimeraGraph& hardware);

std::vector<std::filesystem::path> cmd_gen(const ExperimentManifest& manifest, const std::filesystem::path& out_dir);

// Prints "vars=<n> density=<d>" to log.
json cmd_compile(const std::filesystem::path& spec_file, EncodingKind encoding, const std::filesystem::path& out_file,
                 std::ostream& log, const CompileOptions& options = {});

struct SolveOptions {
  std::uint64_t seed = 0;
  AnnealConfig anneal;
  PipelineConfig pipeline;
  ChimeraGraph hardware = chimera(8);
};

// Writes out_file and <out_file stem>.samples.jsonl next to it.
json cmd_solve(const std::filesystem::path& qubo_file, const std::string& solver, const SolveOptions& options,
               const std::filesystem::path& out_file, std::ostream& log);

struct CellResult {
  GridCell cell;
  std::string status;  // "ok" or "failed"
  std::string error;
  std::optional<ExperimentRow> row;
};

// out_dir/results.{csv,txt,dat}, out_dir/cells/<hash>.json, out_dir/status.json,
// out_dir/benchmark.log (the only file with timestamps).
std::vector<CellResult> cmd_benchmark(const ExperimentManifest& manifest, const std::filesystem::path& out_dir,
                                      int jobs, std::ostream& log);

// Rebuilds results.txt and results.dat from a results.csv.
Report cmd_report(const std::filesystem::path& results_csv, const std::filesystem::path& out_dir);

int exit_code(const std::exception& e);

}  // namespace trajq
