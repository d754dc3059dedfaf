#include "trajq/hardware.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "trajq/errors.hpp"
#include "trajq/rng.hpp"

namespace trajq {

ChimeraGraph::ChimeraGraph(int side, std::set<int> inactive_qubits, std::set<Edge> inactive_couplers)
    : side_(side), inactive_qubits_(std::move(inactive_qubits)) {
  if (side < 1) throw ValidationError("chimera side must be positive");
  const int n = total_qubits();
  for (int q : inactive_qubits_)
    if (q < 0 || q >= n) throw ValidationError("inactive qubit index out of range");
  for (auto [a, b] : inactive_couplers)
    inactive_couplers_.insert({std::min(a, b), std::max(a, b)});
  active_.assign(n, 1);
  for (int q : inactive_qubits_) active_[q] = 0;
  adj_.assign(n, {});

  auto link = [&](int a, int b) {
    const Edge e{std::min(a, b), std::max(a, b)};
    if (!active_[a] || !active_[b] || inactive_couplers_.count(e)) return;
    edges_.push_back(e);
  };
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) link(qubit(r, c, 0, k), qubit(r, c, 1, l));
        if (r + 1 < side) link(qubit(r, c, 0, k), qubit(r + 1, c, 0, k));
        if (c + 1 < side) link(qubit(r, c, 1, k), qubit(r, c + 1, 1, k));
      }
  std::sort(edges_.begin(), edges_.end());
  for (auto [a, b] : edges_) {
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
  for (auto& v : adj_) std::sort(v.begin(), v.end());
}

int ChimeraGraph::qubit_count() const {
  return static_cast<int>(std::count(active_.begin(), active_.end(), 1));
}

bool ChimeraGraph::has_edge(int a, int b) const {
  if (a < 0 || b < 0 || a >= total_qubits() || b >= total_qubits()) return false;
  const auto& n = adj_[a];
  return std::binary_search(n.begin(), n.end(), b);
}

ChimeraGraph chimera(int side, const std::set<int>& inactive_qubits, const std::set<Edge>& inactive_couplers) {
  return ChimeraGraph(side, inactive_qubits, inactive_couplers);
}

int max_clique_size(int side) {
  if (side < 1) throw ValidationError("chimera side must be positive");
  return 4 * side + 1;
}

int Embedding::max_chain_length() const {
  std::size_t m = 0;
  for (const auto& c : chains) m = std::max(m, c.size());
  return static_cast<int>(m);
}

int Embedding::qubit_count() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.size();
  return static_cast<int>(n);
}

double Embedding::chain_length_variance() const {
  if (chains.empty()) return 0.0;
  const double mean = static_cast<double>(qubit_count()) / chains.size();
  double acc = 0.0;
  for (const auto& c : chains) acc += (c.size() - mean) * (c.size() - mean);
  return acc / chains.size();
}

std::vector<Edge> logical_edges(const IsingModel& ising) {
  std::vector<Edge> out;
  for (int i = 0; i < ising.size(); ++i)
    for (int j = i + 1; j < ising.size(); ++j)
      if (ising.J(i, j) != 0.0) out.emplace_back(i, j);
  return out;
}

std::vector<Edge> logical_edges(const QuadraticProgram& qp) {
  std::vector<Edge> out;
  for (int i = 0; i < qp.dimension(); ++i)
    for (int j = i + 1; j < qp.dimension(); ++j)
      if (qp.matrix(i, j) != 0.0 || qp.matrix(j, i) != 0.0) out.emplace_back(i, j);
  return out;
}

std::vector<Edge> complete_edges(int n) {
  std::vector<Edge> out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

bool chains_disjoint(const Embedding& emb) {
  std::set<int> seen;
  for (const auto& c : emb.chains)
    for (int q : c)
      if (!seen.insert(q).second) return false;
  return true;
}

bool chains_connected(const Embedding& emb, const ChimeraGraph& g) {
  for (const auto& c : emb.chains) {
    if (c.empty()) return false;
    for (int q : c)
      if (q < 0 || q >= g.total_qubits() || !g.active(q)) return false;
    std::set<int> members(c.begin(), c.end()), reached{c.front()};
    std::vector<int> stack{c.front()};
    while (!stack.empty()) {
      const int q = stack.back();
      stack.pop_back();
      for (int p : g.neighbors(q))
        if (members.count(p) && reached.insert(p).second) stack.push_back(p);
    }
    if (reached.size() != members.size()) return false;
  }
  return true;
}

bool covers_edges(const Embedding& emb, const ChimeraGraph& g, const std::vector<Edge>& edges) {
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= emb.variables() || j >= emb.variables()) return false;
    bool found = false;
    for (int p : emb.chains[i]) {
      for (int q : emb.chains[j])
        if (g.has_edge(p, q)) {
          found = true;
          break;
        }
      if (found) break;
    }
    if (!found) return false;
  }
  return true;
}

void verify_embedding(const Embedding& emb, const ChimeraGraph& g, const std::vector<Edge>& edges) {
  if (!chains_disjoint(emb)) throw EmbeddingError("embedding chains overlap");
  if (!chains_connected(emb, g)) throw EmbeddingError("embedding chain is empty, inactive, or disconnected");
  if (!covers_edges(emb, g, edges)) throw EmbeddingError("embedding misses a logical coupling");
}

Embedding clique_embedding(int n_vars, const ChimeraGraph& g) {
  const int s = g.side();
  if (n_vars < 0) throw ValidationError("variable count must be non-negative");
  if (n_vars > max_clique_size(s))
    throw EmbeddingError("K_" + std::to_string(n_vars) + " exceeds clique capacity " +
                         std::to_string(max_clique_size(s)) + " of chimera(" + std::to_string(s) + ")");
  Embedding emb;
  if (n_vars == 0) return emb;
  if (n_vars <= 4 * s) {
    // Block a, position k: column a down to row a, then row a out to column s'-1.
    const int sp = (n_vars + 3) / 4;
    for (int a = 0; a < sp; ++a)
      for (int k = 0; k < 4; ++k) {
        std::vector<int> chain;
        for (int r = 0; r <= a; ++r) chain.push_back(g.qubit(r, a, 0, k));
        for (int c = a; c < sp; ++c) chain.push_back(g.qubit(a, c, 1, k));
        emb.chains.push_back(std::move(chain));
      }
  } else {
    // Same pattern shifted one row down, freeing the row-0 horizontal line
    // k = 3 for the extra variable. The last column keeps its full vertical
    // lines with row-0 corners, except k = 3 which stays purely vertical.
    for (int a = 0; a + 1 < s; ++a)
      for (int k = 0; k < 4; ++k) {
        std::vector<int> chain;
        for (int r = 0; r <= a + 1; ++r) chain.push_back(g.qubit(r, a, 0, k));
        for (int c = a; c < s; ++c) chain.push_back(g.qubit(a + 1, c, 1, k));
        emb.chains.push_back(std::move(chain));
      }
    for (int k = 0; k < 4; ++k) {
      std::vector<int> chain;
      for (int r = 0; r < s; ++r) chain.push_back(g.qubit(r, s - 1, 0, k));
      if (k != 3) chain.push_back(g.qubit(0, s - 1, 1, k));
      emb.chains.push_back(std::move(chain));
    }
    std::vector<int> extra;
    for (int c = 0; c < s; ++c) extra.push_back(g.qubit(0, c, 1, 3));
    emb.chains.push_back(std::move(extra));
  }
  emb.chains.resize(n_vars);
  try {
    verify_embedding(emb, g, complete_edges(n_vars));
  } catch (const EmbeddingError&) {
    throw EmbeddingError("inactive qubits or couplers block the clique embedding");
  }
  return emb;
}

EmbeddedProblem embed_problem(const IsingModel& ising, const Embedding& emb, const ChimeraGraph& g,
                              double chain_strength) {
  if (emb.variables() != ising.size()) throw EmbeddingError("embedding size does not match problem");
  if (!(chain_strength > 0)) throw ValidationError("chain strength must be positive");
  verify_embedding(emb, g, logical_edges(ising));

  EmbeddedProblem out;
  out.chain_strength = chain_strength;
  std::vector<int> compact(g.total_qubits(), -1);
  for (const auto& c : emb.chains) {
    std::vector<int> local;
    for (int q : c) {
      compact[q] = static_cast<int>(out.qubits.size());
      local.push_back(compact[q]);
      out.qubits.push_back(q);
    }
    out.chains.chains.push_back(std::move(local));
  }
  const int n = static_cast<int>(out.qubits.size());
  IsingModel& m = out.model;
  m.h = Eigen::VectorXd::Zero(n);
  m.J = Eigen::MatrixXd::Zero(n, n);
  m.offset = ising.offset;

  for (int i = 0; i < ising.size(); ++i) {
    const double share = ising.h[i] / static_cast<double>(emb.chains[i].size());
    for (int q : emb.chains[i]) m.h[compact[q]] += share;
  }
  for (int i = 0; i < ising.size(); ++i)
    for (int j = i + 1; j < ising.size(); ++j) {
      if (ising.J(i, j) == 0.0) continue;
      Edge best{-1, -1};
      for (int p : emb.chains[i])
        for (int q : emb.chains[j])
          if (g.has_edge(p, q)) {
            const Edge e{std::min(p, q), std::max(p, q)};
            if (best.first < 0 || e < best) best = e;
          }
      const int a = compact[best.first], b = compact[best.second];
      m.J(a, b) += ising.J(i, j);
      m.J(b, a) += ising.J(i, j);
    }
  int intra = 0;
  for (const auto& c : emb.chains)
    for (std::size_t x = 0; x < c.size(); ++x)
      for (std::size_t y = x + 1; y < c.size(); ++y)
        if (g.has_edge(c[x], c[y])) {
          const int a = compact[c[x]], b = compact[c[y]];
          m.J(a, b) -= chain_strength;
          m.J(b, a) -= chain_strength;
          ++intra;
        }
  out.chain_constant = -chain_strength * intra;
  return out;
}

void validate(const NoiseModel& nm) {
  if (!(nm.epsilon >= 0 && nm.epsilon <= 1)) throw ValidationError("epsilon must lie in [0, 1]");
  if (!(nm.coupler_lo < 0 && nm.coupler_hi > 0 && nm.field_lo < 0 && nm.field_hi > 0))
    throw ValidationError("coefficient ranges must contain zero in their interior");
}

double range_scale(const IsingModel& m, const NoiseModel& nm) {
  double f = 1.0;
  auto fit = [&f](double v, double lo, double hi) {
    if (v > hi) f = std::min(f, hi / v);
    if (v < lo) f = std::min(f, lo / v);
  };
  for (int i = 0; i < m.size(); ++i) {
    fit(m.h[i], nm.field_lo, nm.field_hi);
    for (int j = i + 1; j < m.size(); ++j) fit(m.J(i, j), nm.coupler_lo, nm.coupler_hi);
  }
  return f;
}

IsingModel apply_noise(const IsingModel& in, const NoiseModel& nm) {
  validate(nm);
  IsingModel m = in;
  const double f = range_scale(in, nm);
  if (f < 1.0) {
    m.h *= f;
    m.J *= f;
    m.offset *= f;
  }
  if (nm.epsilon == 0.0) return m;
  Rng rng = make_rng(nm.seed);
  const double field_w = nm.epsilon * 0.5 * (nm.field_hi - nm.field_lo);
  const double coupler_w = nm.epsilon * 0.5 * (nm.coupler_hi - nm.coupler_lo);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double width) { return nm.gaussian ? width * normal(rng) : width * unit(rng); };
  for (int i = 0; i < m.size(); ++i)
    if (m.h[i] != 0.0) m.h[i] += draw(field_w);
  for (int i = 0; i < m.size(); ++i)
    for (int j = i + 1; j < m.size(); ++j)
      if (m.J(i, j) != 0.0) {
        m.J(i, j) += draw(coupler_w);
        m.J(j, i) = m.J(i, j);
      }
  return m;
}

Spins random_gauge(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  Spins g(n);
  for (auto& v : g) v = coin(rng) ? 1 : -1;
  return g;
}

IsingModel gauge_transform(const IsingModel& in, std::span<const std::int8_t> g) {
  if (static_cast<int>(g.size()) != in.size()) throw ShapeError("gauge length mismatch");
  IsingModel m = in;
  for (int i = 0; i < m.size(); ++i) {
    m.h[i] *= g[i];
    for (int j = 0; j < m.size(); ++j) m.J(i, j) *= g[i] * g[j];
  }
  return m;
}

Spins apply_gauge(std::span<const std::int8_t> spins, std::span<const std::int8_t> g) {
  if (spins.size() != g.size()) throw ShapeError("gauge length mismatch");
  Spins out(spins.size());
  for (std::size_t i = 0; i < spins.size(); ++i) out[i] = static_cast<std::int8_t>(spins[i] * g[i]);
  return out;
}

UnembedResult unembed(std::span<const std::int8_t> spins, const Embedding& emb, std::uint64_t seed) {
  UnembedResult r;
  r.bits.resize(emb.variables());
  Rng rng = make_rng(seed);
  std::bernoulli_distribution coin(0.5);
  for (int v = 0; v < emb.variables(); ++v) {
    int up = 0;
    for (int q : emb.chains[v]) {
      if (q < 0 || q >= static_cast<int>(spins.size())) throw ShapeError("spin state does not cover chain");
      up += spins[q] > 0 ? 1 : -1;
    }
    if (std::abs(up) != static_cast<int>(emb.chains[v].size())) ++r.broken_chains;
    if (up == 0) {
      r.tie_variables.push_back(v);
      r.bits[v] = coin(rng) ? 1 : 0;
    } else {
      r.bits[v] = up > 0 ? 1 : 0;
    }
  }
  return r;
}

std::vector<std::size_t> rank_embeddings(const std::vector<Embedding>& cands) {
  if (cands.empty()) throw ValidationError("no embeddings to rank");
  const std::size_t n = cands.size();
  std::vector<std::array<double, 3>> m(n);
  for (std::size_t i = 0; i < n; ++i)
    m[i] = {static_cast<double>(cands[i].max_chain_length()), static_cast<double>(cands[i].qubit_count()),
            cands[i].chain_length_variance()};
  std::vector<double> score(n, 0.0);
  for (int k = 0; k < 3; ++k) {
    double lo = m[0][k], hi = m[0][k];
    for (const auto& row : m) {
      lo = std::min(lo, row[k]);
      hi = std::max(hi, row[k]);
    }
    if (hi > lo)
      for (std::size_t i = 0; i < n; ++i) score[i] += (m[i][k] - lo) / (hi - lo);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  return order;
}

double pi_elite_score(std::span<const double> energies, double fraction) {
  if (energies.empty()) throw ValidationError("no energies to score");
  if (!(fraction > 0 && fraction <= 1)) throw ValidationError("elite fraction must lie in (0, 1]");
  std::vector<double> e(energies.begin(), energies.end());
  std::sort(e.begin(), e.end());
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(e.size()) - 1e-9)), 1, e.size());
  return std::accumulate(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / static_cast<double>(k);
}

}  // namespace trajq
