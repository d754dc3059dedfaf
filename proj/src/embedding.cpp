#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>

#include "trajq/errors.hpp"
#include "trajq/hardware.hpp"
#include "trajq/rng.hpp"

namespace trajq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class ChainPlacer {
 public:
  ChainPlacer(int n_vars, const std::vector<Edge>& edges, const ChimeraGraph& g, Rng& rng)
      : g_(g), rng_(rng), nbrs_(n_vars), chains_(n_vars), usage_(g.total_qubits(), 0) {
    for (auto [i, j] : edges) {
      nbrs_[i].push_back(j);
      nbrs_[j].push_back(i);
    }
    for (int q = 0; q < g.total_qubits(); ++q)
      if (g.active(q)) active_.push_back(q);
  }

  int variables() const { return static_cast<int>(chains_.size()); }
  const std::vector<std::vector<int>>& chains() const { return chains_; }
  const std::vector<int>& neighbors(int v) const { return nbrs_[v]; }

  void release(int v) {
    for (int q : chains_[v]) --usage_[q];
    chains_[v].clear();
  }

  void assign(int v, std::vector<int> chain) {
    release(v);
    claim(v, std::move(chain));
  }

  bool overlap_free() const {
    return std::all_of(usage_.begin(), usage_.end(), [](int u) { return u <= 1; });
  }

  // Rips up v and re-places it. With penalty = inf, qubits owned by other
  // chains are unusable; returns false (and restores v) if no placement exists.
  bool place(int v, double penalty) {
    const std::vector<int> old = chains_[v];
    release(v);
    std::vector<int> placed;
    for (int u : nbrs_[v])
      if (!chains_[u].empty()) placed.push_back(u);

    std::vector<int> chain;
    if (placed.empty()) {
      chain = {free_qubit(penalty)};
      if (chain[0] < 0) {
        claim(v, old);
        return false;
      }
    } else {
      const int n = g_.total_qubits();
      std::vector<double> total(n, 0.0);
      std::vector<std::vector<int>> parents(placed.size());
      for (std::size_t k = 0; k < placed.size(); ++k) {
        std::vector<double> dist;
        search(chains_[placed[k]], penalty, dist, parents[k]);
        for (int q = 0; q < n; ++q) total[q] += dist[q];
      }
      int root = -1;
      double best = kInf;
      std::vector<int> ties;
      for (int q : active_) {
        const double c = total[q] + weight(q, penalty);
        if (c < best) {
          best = c;
          ties = {q};
        } else if (c == best && c < kInf) {
          ties.push_back(q);
        }
      }
      if (ties.empty()) {
        claim(v, old);
        return false;
      }
      root = ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng_)];
      std::vector<char> in_chain(n, 0);
      chain.push_back(root);
      in_chain[root] = 1;
      for (std::size_t k = 0; k < placed.size(); ++k) {
        const auto& owner = chains_[placed[k]];
        int q = root;
        while (std::find(owner.begin(), owner.end(), q) == owner.end()) {
          const int p = parents[k][q];
          if (p < 0 || std::find(owner.begin(), owner.end(), p) != owner.end()) break;
          if (!in_chain[p]) {
            in_chain[p] = 1;
            chain.push_back(p);
          }
          q = p;
        }
      }
      prune(v, chain);
    }
    claim(v, chain);
    return true;
  }

 private:
  double weight(int q, double penalty) const {
    if (usage_[q] == 0) return 1.0;
    if (penalty == kInf) return kInf;
    double w = 1.0;
    for (int k = 0; k < usage_[q]; ++k) w *= penalty;
    return w;
  }

  // dist[q]: cheapest total weight of the qubits strictly between the source
  // chain and q; parent[q] the next qubit towards the source.
  void search(const std::vector<int>& sources, double penalty, std::vector<double>& dist,
              std::vector<int>& parent) const {
    const int n = g_.total_qubits();
    dist.assign(n, kInf);
    parent.assign(n, -1);
    std::vector<double> exit(n, kInf);  // cost of leaving q towards a neighbour
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (int s : sources) {
      exit[s] = 0.0;
      dist[s] = 0.0;
      heap.push({0.0, s});
    }
    while (!heap.empty()) {
      const auto [e, q] = heap.top();
      heap.pop();
      if (e > exit[q]) continue;
      for (int p : g_.neighbors(q)) {
        if (e < dist[p] && exit[p] != 0.0) {
          dist[p] = e;
          parent[p] = q;
          const double w = weight(p, penalty);
          if (e + w < exit[p]) {
            exit[p] = e + w;
            heap.push({exit[p], p});
          }
        }
      }
    }
    for (int s : sources) dist[s] = 0.0;
  }

  int free_qubit(double penalty) {
    std::vector<int> best;
    double bw = kInf;
    for (int q : active_) {
      const double w = weight(q, penalty);
      if (w < bw) {
        bw = w;
        best = {q};
      } else if (w == bw && w < kInf) {
        best.push_back(q);
      }
    }
    if (best.empty()) return -1;
    return best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng_)];
  }

  // Drops leaf qubits that are not the only contact with some neighbour chain.
  void prune(int v, std::vector<int>& chain) const {
    bool changed = true;
    while (changed && chain.size() > 1) {
      changed = false;
      for (std::size_t i = 0; i < chain.size(); ++i) {
        const int q = chain[i];
        int inner = 0;
        for (int p : g_.neighbors(q))
          if (std::find(chain.begin(), chain.end(), p) != chain.end()) ++inner;
        if (inner != 1) continue;
        bool needed = false;
        for (int u : nbrs_[v]) {
          if (chains_[u].empty()) continue;
          bool other = false;
          for (int c : chain)
            if (c != q && touches(c, chains_[u])) {
              other = true;
              break;
            }
          if (!other) {
            needed = true;
            break;
          }
        }
        if (needed) continue;
        chain.erase(chain.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }

  bool touches(int q, const std::vector<int>& chain) const {
    for (int c : chain)
      if (c == q || g_.has_edge(q, c)) return true;
    return false;
  }

  void claim(int v, std::vector<int> chain) {
    for (int q : chain) ++usage_[q];
    chains_[v] = std::move(chain);
  }

  const ChimeraGraph& g_;
  Rng& rng_;
  std::vector<std::vector<int>> nbrs_;
  std::vector<std::vector<int>> chains_;
  std::vector<int> usage_;
  std::vector<int> active_;
};

bool better(const Embedding& a, const Embedding& b) {
  if (a.max_chain_length() != b.max_chain_length()) return a.max_chain_length() < b.max_chain_length();
  return a.qubit_count() < b.qubit_count();
}

// Breadth-first order from a random start so most variables have a placed
// neighbour when they are first embedded.
std::vector<int> placement_order(const ChainPlacer& placer, Rng& rng) {
  const int n = placer.variables();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<char> seen(n, 0);
  std::vector<int> order;
  for (int start : perm) {
    if (seen[start]) continue;
    seen[start] = 1;
    std::queue<int> q;
    q.push(start);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      order.push_back(v);
      for (int u : placer.neighbors(v))
        if (!seen[u]) {
          seen[u] = 1;
          q.push(u);
        }
    }
  }
  return order;
}

// Clique embedding on a minimal virtual sub-grid, moved to a random offset
// with random transpose, reflections and line permutations, and a random
// variable-to-chain assignment.
std::optional<std::vector<std::vector<int>>> template_chains(int n, const ChimeraGraph& g, Rng& rng) {
  const int s = g.side();
  if (n > max_clique_size(s)) return std::nullopt;
  const int sv = n <= 4 * s ? std::max(1, (n + 3) / 4) : s;
  const ChimeraGraph virt = chimera(sv);
  const Embedding base = clique_embedding(n, virt);
  auto pick = [&](int hi) { return std::uniform_int_distribution<int>(0, hi)(rng); };
  const int r0 = pick(s - sv), c0 = pick(s - sv);
  const bool transpose = pick(1), flip_r = pick(1), flip_c = pick(1);
  std::array<std::array<int, 4>, 2> perm{};
  for (auto& p : perm) {
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
  }
  std::vector<int> slot(n);
  std::iota(slot.begin(), slot.end(), 0);
  std::shuffle(slot.begin(), slot.end(), rng);
  std::vector<std::vector<int>> chains(n);
  for (int v = 0; v < n; ++v)
    for (int q : base.chains[slot[v]]) {
      const int k = q % 4, u = (q / 4) % 2, cell = q / 8;
      int r = cell / sv, c = cell % sv;
      if (flip_r) r = sv - 1 - r;
      if (flip_c) c = sv - 1 - c;
      int uu = u;
      if (transpose) {
        std::swap(r, c);
        uu = 1 - u;
      }
      const int p = g.qubit(r + r0, c + c0, uu, perm[uu][k]);
      if (!g.active(p)) return std::nullopt;
      chains[v].push_back(p);
    }
  return chains;
}

bool connected_chain(const std::vector<int>& chain, const ChimeraGraph& g) {
  if (chain.empty()) return false;
  std::vector<char> seen(chain.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < chain.size(); ++j)
      if (!seen[j] && g.has_edge(chain[i], chain[j])) {
        seen[j] = 1;
        ++reached;
        stack.push_back(j);
      }
  }
  return reached == chain.size();
}

bool chains_touch(const std::vector<int>& a, const std::vector<int>& b, const ChimeraGraph& g) {
  for (int p : a)
    for (int q : b)
      if (g.has_edge(p, q)) return true;
  return false;
}

// Drops qubits whose removal keeps the chain connected and every logical edge covered.
void prune_chains(std::vector<std::vector<int>>& chains, const std::vector<std::vector<int>>& nbrs,
                  const ChimeraGraph& g, Rng& rng) {
  const int n = static_cast<int>(chains.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    std::shuffle(order.begin(), order.end(), rng);
    for (int v : order) {
      std::vector<int> qs = chains[v];
      std::shuffle(qs.begin(), qs.end(), rng);
      for (int q : qs) {
        if (chains[v].size() < 2) break;
        std::vector<int> trial;
        for (int p : chains[v])
          if (p != q) trial.push_back(p);
        if (!connected_chain(trial, g)) continue;
        bool ok = true;
        for (int u : nbrs[v])
          if (!chains_touch(trial, chains[u], g)) {
            ok = false;
            break;
          }
        if (!ok) continue;
        chains[v] = std::move(trial);
        changed = true;
      }
    }
  }
}

}  // namespace

Embedding greedy_embedding(int n_vars, const std::vector<Edge>& edges, const ChimeraGraph& g,
                           const GreedyEmbeddingOptions& opt) {
  if (n_vars < 0) throw ValidationError("variable count must be non-negative");
  for (auto [i, j] : edges)
    if (i < 0 || j < 0 || i >= n_vars || j >= n_vars || i == j) throw ValidationError("edge index out of range");
  if (n_vars == 0) return {};
  if (n_vars > g.qubit_count()) throw EmbeddingError("more variables than active qubits");

  std::vector<std::vector<int>> nbrs(n_vars);
  for (auto [i, j] : edges) {
    nbrs[i].push_back(j);
    nbrs[j].push_back(i);
  }
  std::optional<Embedding> best;
  for (int attempt = 0; attempt < std::max(1, opt.tries); ++attempt) {
    Rng rng = make_rng(derive_seed(opt.seed, static_cast<std::uint64_t>(attempt)));
    ChainPlacer placer(n_vars, edges, g, rng);
    std::vector<int> order(n_vars);
    std::iota(order.begin(), order.end(), 0);

    // Odd tries start from a pruned clique template, even tries grow chains from scratch.
    std::optional<std::vector<std::vector<int>>> seeded;
    if (attempt % 2 == 1) seeded = template_chains(n_vars, g, rng);
    if (seeded) {
      for (int v = 0; v < n_vars; ++v) placer.assign(v, (*seeded)[v]);
    } else {
      for (int v : placement_order(placer, rng)) placer.place(v, 2.0);
      double penalty = 2.0;
      for (int round = 0; round < opt.rounds && !placer.overlap_free(); ++round) {
        penalty = std::min(penalty * 2.0, 1e12);
        std::shuffle(order.begin(), order.end(), rng);
        for (int v : order) placer.place(v, penalty);
      }
      if (!placer.overlap_free()) continue;
    }

    auto chains = placer.chains();
    prune_chains(chains, nbrs, g, rng);
    for (int v = 0; v < n_vars; ++v) placer.assign(v, chains[v]);
    for (int round = 0; round < opt.shrink_rounds; ++round) {
      std::shuffle(order.begin(), order.end(), rng);
      for (int v : order) {
        const std::vector<int> old = placer.chains()[v];
        if (placer.place(v, kInf) && placer.chains()[v].size() > old.size()) placer.assign(v, old);
      }
    }
    chains = placer.chains();
    prune_chains(chains, nbrs, g, rng);
    Embedding cur{std::move(chains)};
    for (auto& c : cur.chains) std::sort(c.begin(), c.end());
    if (!chains_disjoint(cur) || !chains_connected(cur, g) || !covers_edges(cur, g, edges)) continue;
    if (!best || better(cur, *best)) best = std::move(cur);
  }
  if (!best)
    throw EmbeddingError("greedy embedding found no overlap-free placement after " +
                         std::to_string(std::max(1, opt.tries)) + " tries");
  return *best;
}

}  // namespace trajq
