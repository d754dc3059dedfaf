#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trajq/encoding.hpp"
#include "trajq/model.hpp"

namespace trajq {

using Spins = std::vector<std::int8_t>;

enum class VariableKind { holding, partition, slack };
enum class SlackEncoding { binary, unary };

std::string to_string(VariableKind k);
std::string to_string(SlackEncoding k);
SlackEncoding parse_slack_encoding(const std::string& s);

struct VariableRole {
  VariableKind kind = VariableKind::holding;
  int asset = -1;      // holding only
  int step = 0;        // zero-based
  int bit = 0;         // bit index d, or partition index p
  int weight = 0;      // f(d) for holding/slack bits
  bool operator==(const VariableRole&) const = default;
};

// What is needed to decode and judge a bitstring without the original spec.
struct ProblemLayout {
  int n_assets = 0;
  int n_steps = 0;
  int budget = 0;
  int max_holding = 0;
  TradeMode trade_mode = TradeMode::rebalance;
  EncodingScheme scheme;
  SlackEncoding slack_encoding = SlackEncoding::binary;
  std::vector<int> slack_weights;
  bool operator==(const ProblemLayout&) const = default;
};

// Energy = x'Qx + offset, minimized. Linear terms live on the diagonal.
struct QuadraticProgram {
  Eigen::MatrixXd matrix;
  double offset = 0.0;
  std::vector<VariableRole> variable_map;  // empty for programs not produced by compile
  std::optional<ProblemLayout> layout;
  std::string source_hash;  // provenance of the input artifact
  std::uint64_t seed = 0;

  int dimension() const { return static_cast<int>(matrix.rows()); }
};

// Energy = offset + h's + sum_{i<j} J_ij s_i s_j with J symmetric, zero diagonal.
struct IsingModel {
  Eigen::VectorXd h;
  Eigen::MatrixXd J;
  double offset = 0.0;

  int size() const { return static_cast<int>(h.size()); }
};

struct CompileOptions {
  SlackEncoding slack = SlackEncoding::binary;
};

QuadraticProgram compile(const ProblemSpec& spec, const EncodingScheme& scheme,
                         const CompileOptions& options = {});

struct DecodedSolution {
  Trajectory trajectory;
  std::vector<int> slack;    // liquidate mode, one per step
  int malformed_steps = 0;   // partition steps without exactly one hot bit
};

DecodedSolution decode_details(const QuadraticProgram& qp, std::span<const std::uint8_t> bits);
Trajectory decode_solution(const QuadraticProgram& qp, std::span<const std::uint8_t> bits);

// Feasibility judged from the layout alone; false for malformed partition states.
bool is_feasible_bits(const QuadraticProgram& qp, std::span<const std::uint8_t> bits);

// Bit vector whose decode is traj (canonical per-entry encodings, zero slack
// chosen to close the liquidation gap when possible).
Bits encode_trajectory(const QuadraticProgram& qp, const Trajectory& traj);

double evaluate(const QuadraticProgram& qp, std::span<const std::uint8_t> bits);
double density(const QuadraticProgram& qp);
void check_symmetric(const QuadraticProgram& qp, double tol = 1e-12);

IsingModel qubo_to_ising(const QuadraticProgram& qp);
QuadraticProgram ising_to_qubo(const IsingModel& ising);
double ising_energy(const IsingModel& ising, std::span<const std::int8_t> spins);

Spins bits_to_spins(std::span<const std::uint8_t> bits);
Bits spins_to_bits(std::span<const std::int8_t> spins);

// Largest |h_i| or |J_ij|.
double max_abs_coefficient(const IsingModel& ising);

}  // namespace trajq
