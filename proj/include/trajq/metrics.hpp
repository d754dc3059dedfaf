#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "trajq/encoding.hpp"
#include "trajq/model.hpp"
#include "trajq/qubo.hpp"
#include "trajq/rng.hpp"

namespace trajq {

enum class PerturbationMode { eigen, entrywise };

std::string to_string(PerturbationMode m);
PerturbationMode parse_perturbation_mode(const std::string& s);

// lambda_i -> lambda_i + Normal(0, (alpha/100 |lambda_i|)^2) in the eigenbasis of Q
// (entrywise mode: Q_ij -> Q_ij + Normal(0, (alpha/100 |Q_ij|)^2), symmetric).
QuadraticProgram perturb_spectrum(const QuadraticProgram& qp, double alpha, Rng& rng,
                                  PerturbationMode mode = PerturbationMode::eigen);

// Holds one set of standard-normal draws per perturbation index and scales
// them by alpha, so ranges for different alpha share their randomness.
class SpectrumPerturber {
 public:
  SpectrumPerturber(const QuadraticProgram& qp, int n_perturbations, std::uint64_t seed,
                    PerturbationMode mode = PerturbationMode::eigen);

  int size() const { return static_cast<int>(draws_.size()); }
  QuadraticProgram perturbed(int k, double alpha) const;

 private:
  QuadraticProgram qp_;
  PerturbationMode mode_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  std::vector<Eigen::VectorXd> draws_;  // eigen: n values; entrywise: n(n+1)/2 values
};

// Optimal energy of a program.
using QuboOracle = std::function<double(const QuadraticProgram&)>;

// exhaustive_qubo within its guard, otherwise simulated annealing with
// reference_reads reads as the high-confidence reference.
QuboOracle default_oracle(int reference_reads = 100'000, int sweeps = 1000, std::uint64_t seed = 0);

struct EnergyRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const;  // with tolerance 1e-9 * max(1, |lo|, |hi|)
};

EnergyRange optimal_range(const SpectrumPerturber& perturber, double alpha, const QuboOracle& oracle);

bool success_within_alpha(const QuadraticProgram& qp, double candidate_value, double alpha, int n_perturbations,
                          const QuboOracle& oracle, std::uint64_t seed,
                          PerturbationMode mode = PerturbationMode::eigen);

struct ProblemFamily {
  GeneratorParams generator;
  EncodingKind encoding = EncodingKind::binary;
  CompileOptions compile;
};

struct SolverOutcome {
  Bits bits;
  double energy = 0.0;
  bool feasible = true;
  int qubits = 0;  // 0 when the solver does not embed
  int max_chain = 0;
};

using QuboSolver = std::function<SolverOutcome(const QuadraticProgram&, std::uint64_t seed)>;

QuboSolver oracle_solver();

struct SuccessOptions {
  int n_perturbations = 100;
  PerturbationMode mode = PerturbationMode::eigen;
  // true: one set of draws scaled by alpha, and the range for alpha also covers
  // the optima at every smaller listed alpha and the unperturbed optimum.
  // false: independent draws per alpha, raw ranges.
  bool nested = true;
  QuboOracle oracle;   // empty: default_oracle()
};

struct ExperimentRow {
  int n_assets = 0;
  int n_steps = 0;
  int budget = 0;
  EncodingKind encoding = EncodingKind::binary;
  long long variables = 0;
  double density = 0.0;
  int qubits = 0;
  int chain = 0;
  std::vector<std::pair<double, double>> s_values;  // (alpha, percent)
  int instances = 0;
};

struct SuccessDetail {
  ExperimentRow row;
  std::vector<std::vector<char>> success;  // [instance][alpha index]
  std::vector<double> candidate_energies;
  std::vector<double> optimal_energies;
};

SuccessDetail success_rate_detail(const ProblemFamily& family, const QuboSolver& solver,
                                  const std::vector<double>& alphas, int n_instances, std::uint64_t seed,
                                  const SuccessOptions& options = {});
ExperimentRow success_rate(const ProblemFamily& family, const QuboSolver& solver, const std::vector<double>& alphas,
                           int n_instances, std::uint64_t seed, const SuccessOptions& options = {});

// Instance i of a family uses this generator seed.
std::uint64_t instance_seed(std::uint64_t seed, int instance);

struct Report {
  std::string csv;
  std::string text;
  std::string dat;
};

Report build_report(std::vector<ExperimentRow> rows);
std::vector<ExperimentRow> parse_report_csv(const std::string& csv);
std::string alpha_label(double alpha);

}  // namespace trajq
