#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajq/hardware.hpp"
#include "trajq/model.hpp"
#include "trajq/qubo.hpp"

namespace trajq {

enum class Vartype { binary, spin };

struct Sample {
  std::vector<std::int8_t> state;  // 0/1 bits or -1/+1 spins, per SampleSet::vartype
  double energy = 0.0;
  int count = 1;
  int gauge = 0;
  bool feasible = true;
  bool operator==(const Sample&) const = default;
};

struct SampleSet {
  Vartype vartype = Vartype::binary;
  std::vector<Sample> records;
  int reads = 0;
  int sweeps = 0;
  std::uint64_t seed = 0;
  double wall_time_ms = 0.0;  // excluded from equality and serialization order

  // Lowest energy; among equal energies the first record.
  const Sample& best() const;
  // Lowest-energy feasible record, or best() if none is feasible.
  const Sample& best_feasible() const;
  std::vector<double> energies() const;  // one entry per read (counts expanded)
  // One record per distinct (state, gauge), sorted by energy then state.
  SampleSet aggregated() const;
  bool same_samples(const SampleSet& o) const;
};

SampleSet merge(const SampleSet& a, const SampleSet& b);

// Exhaustive guards. TRAJQ_GUARD_OVERRIDE (set and not "0") lifts them.
constexpr long long kIntegerGuard = 10'000'000;
constexpr int kQuboGuard = 26;
bool guard_override();

struct IntegerOptimum {
  Trajectory trajectory;
  double value = 0.0;
  long long enumerated = 0;
};

// Feasible columns for one step, lexicographic.
std::vector<std::vector<int>> feasible_columns(const ProblemSpec& spec);
IntegerOptimum exhaustive_integer(const ProblemSpec& spec);

struct QuboOptimum {
  Bits bits;
  double energy = 0.0;
};

QuboOptimum exhaustive_qubo(const QuadraticProgram& qp);

struct AnnealSchedule {
  double beta_min = 0.0;  // <= 0: estimated
  double beta_max = 0.0;  // <= 0: estimated
  double initial_acceptance = 0.8;
  double final_acceptance = 0.01;
};

struct AnnealConfig {
  int reads = 1000;
  int sweeps = 1000;
  std::uint64_t seed = 0;
  AnnealSchedule schedule;
};

// Resolved (beta_min, beta_max) for a model.
std::pair<double, double> beta_range(const IsingModel& ising, const AnnealSchedule& schedule);

// Read i starts from its own generator seeded with seed ^ i. Spin states.
SampleSet simulated_annealing(const IsingModel& ising, const AnnealConfig& config, int gauge = 0);
// Bit states, energies from evaluate(), feasibility from the program layout.
SampleSet simulated_annealing(const QuadraticProgram& qp, const AnnealConfig& config);

struct PipelineConfig {
  int reads = 1000;
  int gauges = 5;
  int sweeps = 1000;
  std::uint64_t seed = 0;
  // Multiples of the largest absolute logical Ising coefficient.
  std::vector<double> chain_strengths = {1.0};
  NoiseModel noise;  // noise.seed is ignored; per-gauge seeds derive from seed
  int embedding_candidates = 3;  // greedy candidates besides the clique embedding
  bool clique_candidate = true;
  int embedding_top = 2;         // ranked candidates taken into the pilot sweep
  int pilot_reads = 100;
  double elite_fraction = 0.02;
  GreedyEmbeddingOptions greedy;
};

void validate(const PipelineConfig& config);

struct PipelineDiagnostics {
  int qubits = 0;
  int max_chain = 0;
  double chain_strength = 0.0;  // absolute, logical scale
  double range_scale = 1.0;     // from the noise model's rescaling
  std::vector<int> reads_per_gauge;
  std::vector<double> gauge_best;  // best logical energy per gauge
  int broken_chains = 0;           // summed over reads
  int tie_breaks = 0;
  std::size_t candidates = 0;
  std::vector<double> pilot_scores;  // pi-elite per (embedding, strength) pilot
};

struct PipelineResult {
  Trajectory trajectory;
  Bits bits;
  double energy = 0.0;
  bool feasible = false;
  SampleSet samples;  // logical bit states, energies from evaluate()
  Embedding embedding;
  PipelineDiagnostics diagnostics;
};

// SA seed used for gauge g; gauge 0 is always the identity gauge.
std::uint64_t pipeline_gauge_seed(std::uint64_t seed, int gauge);

std::vector<Embedding> candidate_embeddings(const IsingModel& logical, const ChimeraGraph& graph,
                                            const PipelineConfig& config);

PipelineResult annealer_pipeline(const QuadraticProgram& qp, const ChimeraGraph& graph,
                                 const PipelineConfig& config);

}  // namespace trajq
