#include <doctest.h>

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "support.hpp"

using namespace trajq;

namespace {

// Chimera edges from cell coordinates, without the library's indexing helpers.
std::set<Edge> coordinate_edges(int s) {
  std::set<Edge> out;
  auto id = [s](int r, int c, int u, int k) { return ((r * s + c) * 2 + u) * 4 + k; };
  auto add = [&](int a, int b) { out.insert({std::min(a, b), std::max(a, b)}); };
  for (int r = 0; r < s; ++r)
    for (int c = 0; c < s; ++c)
      for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) add(id(r, c, 0, k), id(r, c, 1, l));
        if (r + 1 < s) add(id(r, c, 0, k), id(r + 1, c, 0, k));
        if (c + 1 < s) add(id(r, c, 1, k), id(r, c + 1, 1, k));
      }
  return out;
}

struct Verdict {
  bool disjoint = true, connected = true, covered = true;
};

Verdict check(const Embedding& e, const ChimeraGraph& g, const std::vector<Edge>& edges) {
  Verdict v;
  std::map<int, int> owner;
  for (int i = 0; i < e.variables(); ++i)
    for (int q : e.chains[i])
      if (!owner.emplace(q, i).second) v.disjoint = false;
  for (const auto& chain : e.chains) {
    if (chain.empty()) {
      v.connected = false;
      continue;
    }
    std::set<int> members(chain.begin(), chain.end()), seen = {chain.front()};
    std::queue<int> todo;
    todo.push(chain.front());
    while (!todo.empty()) {
      const int q = todo.front();
      todo.pop();
      for (int p : members)
        if (!seen.count(p) && g.has_edge(q, p)) seen.insert(p), todo.push(p);
    }
    if (seen.size() != members.size()) v.connected = false;
    for (int q : chain)
      if (!g.active(q)) v.connected = false;
  }
  for (auto [a, b] : edges) {
    bool hit = false;
    for (int p : e.chains[a])
      for (int q : e.chains[b]) hit = hit || g.has_edge(p, q);
    if (!hit) v.covered = false;
  }
  return v;
}

IsingModel qubo_ising_on(int n, const std::vector<Edge>& edges, Rng& rng) {
  IsingModel m = test::random_ising(n, rng, 0.0);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto [a, b] : edges) m.J(a, b) = m.J(b, a) = u(rng);
  return m;
}

Spins spins_of(std::uint64_t c, int n) {
  Spins s(n);
  for (int i = 0; i < n; ++i) s[i] = ((c >> i) & 1) ? 1 : -1;
  return s;
}

}  // namespace

TEST_CASE("chimera sizes") {
  CHECK(chimera(4).qubit_count() == 128);
  CHECK(chimera(4).edges().size() == 352);
  CHECK(chimera(1).qubit_count() == 8);
  CHECK(chimera(1).edges().size() == 16);
  CHECK(chimera(12).qubit_count() == 1152);
  CHECK_THROWS_AS(chimera(0), ValidationError);
}

TEST_CASE("chimera edges match the cell-coordinate construction") {
  for (int s = 1; s <= 5; ++s) {
    const auto g = chimera(s);
    const std::set<Edge> lib(g.edges().begin(), g.edges().end());
    CHECK(lib == coordinate_edges(s));
  }
}

TEST_CASE("chimera degree bounds") {
  const auto g = chimera(4);
  for (int q = 0; q < g.total_qubits(); ++q) CHECK(g.neighbors(q).size() <= 6);
  for (int k = 0; k < 4; ++k)
    for (int u = 0; u < 2; ++u) CHECK(g.neighbors(g.qubit(0, 0, u, k)).size() <= 5);
}

TEST_CASE("inactive qubits and couplers") {
  const auto g = chimera(2, {0}, {{8, 12}});
  CHECK(g.qubit_count() == 31);
  CHECK_FALSE(g.active(0));
  CHECK(g.neighbors(0).empty());
  CHECK_FALSE(g.has_edge(4, 0));
  CHECK_FALSE(g.has_edge(8, 12));
  CHECK(g.has_edge(8, 13));
}

TEST_CASE("max_clique_size") {
  CHECK(max_clique_size(12) == 49);
  CHECK(max_clique_size(4) == 17);
  CHECK(max_clique_size(1) == 5);
}

TEST_CASE("clique_embedding") {
  const auto g1 = chimera(1);
  const Embedding e5 = clique_embedding(5, g1);
  CHECK(e5.variables() == 5);
  CHECK(e5.max_chain_length() <= 2);
  CHECK(e5.qubit_count() <= 8);
  for (int s = 1; s <= 6; ++s) {
    const auto g = chimera(s);
    for (int v : {1, 2, 4 * s - 1, 4 * s, 4 * s + 1}) {
      if (v < 1) continue;
      const Embedding e = clique_embedding(v, g);
      const Verdict ok = check(e, g, complete_edges(v));
      CHECK(ok.disjoint);
      CHECK(ok.connected);
      CHECK(ok.covered);
      CHECK(e.max_chain_length() <= (v + 3) / 4 + 1);
    }
    CHECK_THROWS_AS(clique_embedding(4 * s + 2, g), EmbeddingError);
  }
  std::set<int> dead;
  const Embedding nine = clique_embedding(9, chimera(2));
  for (int q : nine.chains[0]) dead.insert(q);
  CHECK_THROWS_AS(clique_embedding(9, chimera(2, dead)), EmbeddingError);
}

TEST_CASE("embedding predicates agree with the test-side checker") {
  const auto g = chimera(2);
  const auto edges = complete_edges(6);
  Rng rng = make_rng(5);
  const Embedding base = clique_embedding(6, g);
  for (int trial = 0; trial < 200; ++trial) {
    Embedding e = base;
    std::uniform_int_distribution<int> var(0, 5), qubit(0, g.total_qubits() - 1), op(0, 2);
    switch (op(rng)) {
      case 0:
        e.chains[var(rng)].push_back(qubit(rng));
        break;
      case 1: {
        auto& c = e.chains[var(rng)];
        if (c.size() > 1) c.erase(c.begin() + std::uniform_int_distribution<int>(0, int(c.size()) - 1)(rng));
        break;
      }
      default:
        std::swap(e.chains[var(rng)], e.chains[var(rng)]);
    }
    const Verdict v = check(e, g, edges);
    CHECK(chains_disjoint(e) == v.disjoint);
    CHECK(chains_connected(e, g) == v.connected);
    CHECK(covers_edges(e, g, edges) == v.covered);
    if (v.disjoint && v.connected && v.covered)
      CHECK_NOTHROW(verify_embedding(e, g, edges));
    else
      CHECK_THROWS_AS(verify_embedding(e, g, edges), EmbeddingError);
  }
}

TEST_CASE("greedy_embedding") {
  SUBCASE("hardware-native graph gets unit chains") {
    std::vector<Edge> k44;
    for (int a = 0; a < 4; ++a)
      for (int b = 4; b < 8; ++b) k44.push_back({a, b});
    const auto g = chimera(2);
    const Embedding e = greedy_embedding(8, k44, g, {3});
    CHECK(e.max_chain_length() == 1);
    CHECK_NOTHROW(verify_embedding(e, g, k44));
  }
  SUBCASE("K5 on one cell stays within the clique bound") {
    const auto g = chimera(1);
    const Embedding e = greedy_embedding(5, complete_edges(5), g, {1});
    CHECK_NOTHROW(verify_embedding(e, g, complete_edges(5)));
    CHECK(e.max_chain_length() <= clique_embedding(5, g).max_chain_length() + 1);
  }
  SUBCASE("seed-deterministic") {
    const auto s = random_instance(test::family(2, 3, 3), 0);
    const auto edges = logical_edges(compile(s, build_encoding(EncodingKind::binary, 3)));
    const auto g = chimera(8);
    CHECK(greedy_embedding(12, edges, g, {9}) == greedy_embedding(12, edges, g, {9}));
  }
  SUBCASE("too many variables fails loudly") {
    CHECK_THROWS_AS(greedy_embedding(9, complete_edges(9), chimera(1), {1}), EmbeddingError);
  }
}

TEST_CASE("12-variable trajectory problems embed with short chains") {
  const auto g = chimera(8);
  int short_chains = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto s = random_instance(test::family(2, 3, 3), seed);
    const auto edges = logical_edges(compile(s, build_encoding(EncodingKind::binary, 3)));
    GreedyEmbeddingOptions opt;
    opt.seed = static_cast<std::uint64_t>(seed);
    const Embedding e = greedy_embedding(12, edges, g, opt);
    CHECK_NOTHROW(verify_embedding(e, g, edges));
    short_chains += e.max_chain_length() <= 4;
  }
  CHECK(short_chains * 2 >= seeds);
}

TEST_CASE("embed_problem") {
  Rng rng = make_rng(7);
  SUBCASE("unit chains reproduce the logical model") {
    const auto g = chimera(1);
    std::vector<Edge> edges;
    for (int a = 0; a < 4; ++a)
      for (int b = 4; b < 8; ++b) edges.push_back({a, b});
    const IsingModel m = qubo_ising_on(8, edges, rng);
    Embedding e;
    for (int q = 0; q < 8; ++q) e.chains.push_back({q});
    const auto ep = embed_problem(m, e, g, 1.0);
    CHECK(ep.model.h == m.h);
    CHECK(ep.model.J == m.J);
    CHECK(ep.chain_constant == 0.0);
  }
  SUBCASE("two-qubit chain gap is twice the chain strength") {
    IsingModel m;
    m.h = Eigen::VectorXd::Zero(1);
    m.J = Eigen::MatrixXd::Zero(1, 1);
    const Embedding e{{{0, 4}}};
    const auto ep = embed_problem(m, e, chimera(1), 0.75);
    const Spins aligned = {1, 1}, broken = {1, -1};
    CHECK(ising_energy(ep.model, broken) - ising_energy(ep.model, aligned) == doctest::Approx(1.5));
  }
  SUBCASE("aligned states keep logical energies") {
    const auto g = chimera(2);
    const IsingModel m = test::random_ising(6, rng);
    const auto ep = embed_problem(m, clique_embedding(6, g), g, 2.0);
    const int nq = static_cast<int>(ep.qubits.size());
    for (std::uint64_t c = 0; c < 64; ++c) {
      const Spins logical = spins_of(c, 6);
      Spins phys(nq);
      for (int v = 0; v < 6; ++v)
        for (int q : ep.chains.chains[v]) phys[q] = logical[v];
      CHECK(ising_energy(ep.model, phys) - ep.chain_constant ==
            doctest::Approx(ising_energy(m, logical)).epsilon(1e-12));
    }
  }
  SUBCASE("invalid embeddings are refused") {
    const IsingModel m = test::random_ising(6, rng);
    Embedding e = clique_embedding(6, chimera(2));
    e.chains[1] = e.chains[0];
    CHECK_THROWS_AS(embed_problem(m, e, chimera(2), 1.0), EmbeddingError);
  }
}

TEST_CASE("apply_noise") {
  Rng rng = make_rng(3);
  NoiseModel zero;
  zero.epsilon = 0.0;
  IsingModel m = test::random_ising(6, rng);
  m.h *= 0.5;
  const IsingModel same = apply_noise(m, zero);
  CHECK(same.h == m.h);
  CHECK(same.J == m.J);

  IsingModel big = m;
  big.J *= 2.0 / big.J.cwiseAbs().maxCoeff();
  big.h.setConstant(0.1);
  CHECK(range_scale(big, zero) == doctest::Approx(0.5));
  const IsingModel scaled = apply_noise(big, zero);
  CHECK((scaled.J - 0.5 * big.J).cwiseAbs().maxCoeff() < 1e-15);
  const IsingModel again = apply_noise(scaled, zero);
  CHECK((again.J - scaled.J).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((again.h - scaled.h).cwiseAbs().maxCoeff() < 1e-15);

  NoiseModel eps;
  eps.epsilon = 0.03;
  IsingModel tiny;
  tiny.h = Eigen::VectorXd::Constant(10, 0.5);
  tiny.J = Eigen::MatrixXd::Zero(10, 10);
  for (int i = 0; i + 1 < 10; ++i) tiny.J(i, i + 1) = tiny.J(i + 1, i) = 0.25;
  double worst_h = 0.0, worst_j = 0.0;
  for (int k = 0; k < 10000; ++k) {
    eps.seed = static_cast<std::uint64_t>(k);
    const IsingModel noisy = apply_noise(tiny, eps);
    worst_h = std::max(worst_h, (noisy.h - tiny.h).cwiseAbs().maxCoeff());
    worst_j = std::max(worst_j, (noisy.J - tiny.J).cwiseAbs().maxCoeff());
    CHECK(noisy.J(0, 2) == 0.0);
  }
  CHECK(worst_h <= 0.03 * 2.0);
  CHECK(worst_j <= 0.03 * 1.0);
  CHECK(worst_j > 0.9 * 0.03);

  NoiseModel bad;
  bad.epsilon = 1.5;
  CHECK_THROWS_AS(apply_noise(tiny, bad), ValidationError);
}

TEST_CASE("gauge transforms") {
  Rng rng = make_rng(4);
  const IsingModel m = test::random_ising(8, rng);
  const Spins ones(8, 1);
  const IsingModel id = gauge_transform(m, ones);
  CHECK(id.h == m.h);
  CHECK(id.J == m.J);
  const Spins g = random_gauge(8, 77);
  const IsingModel twice = gauge_transform(gauge_transform(m, g), g);
  CHECK(twice.h == m.h);
  CHECK(twice.J == m.J);

  auto a = test::ising_spectrum(m), b = test::ising_spectrum(gauge_transform(m, g));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
  for (std::uint64_t c = 0; c < 256; ++c) {
    const Spins s = spins_of(c, 8);
    CHECK(ising_energy(gauge_transform(m, g), apply_gauge(s, g)) == ising_energy(m, s));
  }
  CHECK_THROWS_AS(gauge_transform(m, Spins(3, 1)), ShapeError);
  CHECK(random_gauge(8, 77) == g);
}

TEST_CASE("unembed") {
  const Embedding e{{{0, 1, 2}, {3, 4}}};
  const Spins aligned = {-1, -1, -1, 1, 1};
  auto r = unembed(aligned, e, 1);
  CHECK(r.bits == Bits{0, 1});
  CHECK(r.broken_chains == 0);
  const Spins mixed = {1, 1, -1, 1, -1};
  r = unembed(mixed, e, 1);
  CHECK(r.bits[0] == 1);
  CHECK(r.broken_chains == 2);
  CHECK(r.tie_variables == std::vector<int>{1});
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(unembed(mixed, e, seed).bits == unembed(mixed, e, seed).bits);
  std::set<int> outcomes;
  for (std::uint64_t seed = 0; seed < 64; ++seed) outcomes.insert(unembed(mixed, e, seed).bits[1]);
  CHECK(outcomes.size() == 2);
}

TEST_CASE("rank_embeddings") {
  const Embedding single{{{0}}};
  CHECK(rank_embeddings({single}) == std::vector<std::size_t>{0});
  // b has a longer max chain, more qubits and a larger variance.
  Embedding a, b;
  for (int i = 0; i < 10; ++i) a.chains.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  b = a;
  b.chains[0] = {100, 101, 102, 103, 104};
  CHECK(rank_embeddings({b, a}).front() == 1);
  CHECK(rank_embeddings({a, b}).front() == 0);
  CHECK(rank_embeddings({a, a, a}) == std::vector<std::size_t>{0, 1, 2});
  CHECK_THROWS_AS(rank_embeddings({}), ValidationError);
}

TEST_CASE("pi_elite_score") {
  const std::vector<double> e = {4, 2, 3, 1};
  CHECK(pi_elite_score(e, 0.5) == doctest::Approx(1.5));
  CHECK(pi_elite_score(e, 1.0) == doctest::Approx(2.5));
  const std::vector<double> flat(50, -3.0);
  CHECK(pi_elite_score(flat, 0.02) == -3.0);
  CHECK_THROWS_AS(pi_elite_score(std::vector<double>{}, 0.5), ValidationError);
  CHECK_THROWS_AS(pi_elite_score(e, 0.0), ValidationError);
}
