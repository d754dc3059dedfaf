#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "trajq/qubo.hpp"

namespace trajq {

using Edge = std::pair<int, int>;  // always first < second

// Chimera topology with s x s unit cells. Qubit index
// ((row * s + col) * 2 + u) * 4 + k, u = 0 for the vertical half, u = 1 for
// the horizontal half. Vertical qubits couple down a column, horizontal
// qubits along a row.
class ChimeraGraph {
 public:
  ChimeraGraph() = default;
  ChimeraGraph(int side, std::set<int> inactive_qubits = {}, std::set<Edge> inactive_couplers = {});

  int side() const { return side_; }
  int total_qubits() const { return 8 * side_ * side_; }
  int qubit_count() const;  // active qubits
  bool active(int q) const { return active_[q] != 0; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int q) const { return adj_[q]; }
  bool has_edge(int a, int b) const;
  const std::set<int>& inactive_qubits() const { return inactive_qubits_; }
  const std::set<Edge>& inactive_couplers() const { return inactive_couplers_; }

  int qubit(int row, int col, int u, int k) const { return ((row * side_ + col) * 2 + u) * 4 + k; }

 private:
  int side_ = 0;
  std::set<int> inactive_qubits_;
  std::set<Edge> inactive_couplers_;
  std::vector<char> active_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
};

ChimeraGraph chimera(int side, const std::set<int>& inactive_qubits = {},
                     const std::set<Edge>& inactive_couplers = {});

// Largest complete graph with a clique embedding: 4s + 1.
int max_clique_size(int side);

struct Embedding {
  std::vector<std::vector<int>> chains;  // logical variable -> physical qubits

  int variables() const { return static_cast<int>(chains.size()); }
  int max_chain_length() const;
  int qubit_count() const;
  double chain_length_variance() const;
  bool operator==(const Embedding&) const = default;
};

std::vector<Edge> logical_edges(const IsingModel& ising);
std::vector<Edge> logical_edges(const QuadraticProgram& qp);
std::vector<Edge> complete_edges(int n);

bool chains_disjoint(const Embedding& emb);
bool chains_connected(const Embedding& emb, const ChimeraGraph& graph);
bool covers_edges(const Embedding& emb, const ChimeraGraph& graph, const std::vector<Edge>& edges);
// Throws EmbeddingError naming the first violated property.
void verify_embedding(const Embedding& emb, const ChimeraGraph& graph, const std::vector<Edge>& edges);

Embedding clique_embedding(int n_vars, const ChimeraGraph& graph);

struct GreedyEmbeddingOptions {
  std::uint64_t seed = 0;
  int tries = 8;
  int rounds = 40;         // overlap-resolving rounds per try
  int shrink_rounds = 4;   // overlap-free rounds after a valid embedding is found
};

// Randomized heuristic. Even tries grow chains: each variable is placed at the
// qubit minimizing the summed weighted distance to its placed neighbours, with
// overlaps allowed but increasingly penalized until they vanish. Odd tries
// start from a randomly placed clique template. Every try then drops
// redundant qubits and re-routes chains that can be shortened.
Embedding greedy_embedding(int n_vars, const std::vector<Edge>& edges, const ChimeraGraph& graph,
                           const GreedyEmbeddingOptions& options = {});

struct EmbeddedProblem {
  IsingModel model;         // over compact indices 0..qubits.size()-1
  std::vector<int> qubits;  // compact index -> hardware qubit
  Embedding chains;         // chains over compact indices
  double chain_strength = 0.0;
  // Energy of the chain couplers in any chain-aligned state (-strength * intra-chain edges).
  double chain_constant = 0.0;
};

// Compact indices follow chain order, so an all-singleton embedding keeps the
// logical numbering.
EmbeddedProblem embed_problem(const IsingModel& ising, const Embedding& emb, const ChimeraGraph& graph,
                              double chain_strength);

struct NoiseModel {
  double epsilon = 0.03;
  double coupler_lo = -1.0, coupler_hi = 1.0;
  double field_lo = -2.0, field_hi = 2.0;
  bool gaussian = false;
  std::uint64_t seed = 0;
};

void validate(const NoiseModel& noise);
// Uniform factor in (0, 1] that brings every coefficient into range.
double range_scale(const IsingModel& ising, const NoiseModel& noise);
IsingModel apply_noise(const IsingModel& ising, const NoiseModel& noise);

Spins random_gauge(int n, std::uint64_t seed);
IsingModel gauge_transform(const IsingModel& ising, std::span<const std::int8_t> gauge);
Spins apply_gauge(std::span<const std::int8_t> spins, std::span<const std::int8_t> gauge);

struct UnembedResult {
  Bits bits;
  int broken_chains = 0;
  std::vector<int> tie_variables;  // chains decided by the coin flip
};

UnembedResult unembed(std::span<const std::int8_t> spins, const Embedding& emb, std::uint64_t seed);

std::vector<std::size_t> rank_embeddings(const std::vector<Embedding>& candidates);

double pi_elite_score(std::span<const double> energies, double elite_fraction);

}  // namespace trajq
